#include "ruq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "numeric.hpp"
#include "ruq/cpa.hpp"
#include "ruq/detail/rng.hpp"
#include "ruq/evalsuite.hpp"
#include "ruq/unchead.hpp"

namespace ruq {

void SynthSpec::validate() const {
  if (n < 2) throw ValidationError("synth spec needs n >= 2");
  if (d == 0) throw ValidationError("synth spec needs d >= 1");
  if (num_classes < 2) throw ValidationError("synth spec needs K >= 2");
  if (clusters == 0 || clusters > num_classes) {
    throw ValidationError("infeasible spec: need 1 <= clusters <= K, got " +
                          std::to_string(clusters) + " clusters for K = " +
                          std::to_string(num_classes));
  }
  if (noise_low <= 0.0 || noise_high < noise_low) {
    throw ValidationError("need 0 < noise_low <= noise_high");
  }
  if (high_fraction < 0.0 || high_fraction > 1.0) {
    throw ValidationError("high_fraction must lie in [0, 1]");
  }
  if (loss_slope <= 0.0) throw ValidationError("loss_fn must be increasing (slope > 0)");
  if (loss_intercept < 0.0) throw ValidationError("loss_intercept must be non-negative");
  if (jitter_amplitude < 0.0) throw ValidationError("jitter_amplitude must be non-negative");
  if (kind == LabelKind::segmask && (mask_height == 0 || mask_width < 2)) {
    throw ValidationError("segmask spec needs mask_height >= 1 and mask_width >= 2");
  }
}

SynthSpec planted_preset(std::uint64_t seed) {
  SynthSpec spec;  // defaults are the planted preset
  spec.seed = seed;
  return spec;
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  detail::Rng rng(spec.seed);

  // Cluster centers: random directions at a fixed norm.
  std::vector<std::vector<double>> centers(spec.clusters, std::vector<double>(spec.d));
  for (auto& center : centers) {
    double sq = 0.0;
    for (double& v : center) {
      v = rng.normal();
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    for (double& v : center) v = v / norm * spec.separation;
  }

  SynthDataset out;
  out.embeddings.count = spec.n;
  out.embeddings.dim = spec.d;
  out.embeddings.data.resize(spec.n * spec.d);
  out.embeddings.ids.reserve(spec.n);
  out.truth.noise_scale.resize(spec.n);
  out.truth.high_noise.resize(spec.n);

  const bool distinct_scales = spec.noise_high > spec.noise_low;
  std::vector<std::size_t> cluster_of(spec.n);
  std::vector<double> g_norm(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t k = static_cast<std::size_t>(rng.below(spec.clusters));
    const bool high = rng.next_double() < spec.high_fraction;
    const double sigma = high ? spec.noise_high : spec.noise_low;
    cluster_of[i] = k;
    out.truth.noise_scale[i] = sigma;
    out.truth.high_noise[i] = (distinct_scales && high) ? 1 : 0;

    double sq = 0.0;
    float* row = out.embeddings.data.data() + i * spec.d;
    for (std::size_t j = 0; j < spec.d; ++j) {
      const double g = rng.normal();
      sq += g * g;
      row[j] = static_cast<float>(centers[k][j] + sigma * g);
    }
    g_norm[i] = std::sqrt(sq);
    out.embeddings.ids.push_back(std::to_string(i));
  }

  // Labels from cluster membership: the cluster's own class plus a
  // co-occurring neighbor class.
  if (spec.kind == LabelKind::multilabel) {
    out.multilabel.count = spec.n;
    out.multilabel.num_classes = spec.num_classes;
    out.multilabel.labels.assign(spec.n * spec.num_classes, 0);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t k = cluster_of[i];
      out.multilabel.labels[i * spec.num_classes + k] = 1;
      out.multilabel.labels[i * spec.num_classes + (k + 1) % spec.num_classes] = 1;
    }
  } else {
    out.segmask.count = spec.n;
    out.segmask.num_classes = spec.num_classes;
    out.segmask.height = spec.mask_height;
    out.segmask.width = spec.mask_width;
    out.segmask.masks.resize(spec.n * spec.mask_height * spec.mask_width);
    for (std::size_t i = 0; i < spec.n; ++i) {
      const std::size_t k = cluster_of[i];
      const auto co = static_cast<std::uint16_t>((k + 1) % spec.num_classes);
      // Vertical split at a per-sample position in [0.4w, 0.6w).
      std::size_t split = static_cast<std::size_t>(
          static_cast<double>(spec.mask_width) * (0.4 + 0.2 * rng.next_double()));
      split = std::clamp<std::size_t>(split, 1, spec.mask_width - 1);
      std::uint16_t* mask = out.segmask.masks.data() + i * spec.mask_height * spec.mask_width;
      for (std::size_t r = 0; r < spec.mask_height; ++r) {
        for (std::size_t c = 0; c < spec.mask_width; ++c) {
          mask[r * spec.mask_width + c] = c < split ? static_cast<std::uint16_t>(k) : co;
        }
      }
    }
  }

  // Loss: monotone in the drawn noise scale, plus a small jitter that is a
  // standardized function of the realized noise magnitude. The jitter breaks
  // loss ties without ever flipping the group order, and because it is a
  // function of the embedding's distance to its cluster center it remains
  // learnable from the representation itself.
  const double range = spec.loss_slope * (spec.noise_high - spec.noise_low);
  const double jitter_scale =
      spec.jitter_amplitude *
      (range > 0.0 ? range
                   : std::max(1.0, spec.loss_intercept + spec.loss_slope * spec.noise_low));
  double mean_norm = detail::pairwise_sum(g_norm) / static_cast<double>(spec.n);
  double var = 0.0;
  for (double v : g_norm) var += (v - mean_norm) * (v - mean_norm);
  const double sd = std::sqrt(var / static_cast<double>(spec.n));

  out.losses.values.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double base = spec.loss_intercept + spec.loss_slope * out.truth.noise_scale[i];
    double z = sd > 1e-12 ? (g_norm[i] - mean_norm) / sd : 0.0;
    z = std::clamp(z, -3.0, 3.0);
    out.losses.values[i] = std::max(0.0, base + jitter_scale * (z / 6.0));
  }

  out.embeddings.validate();
  out.losses.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Naive oracle: nested-loop nearest neighbor + from-scratch formulas.

namespace {

std::size_t naive_nn(const EmbeddingSet& e, std::size_t i, Metric metric) {
  const std::size_t n = e.count;
  const std::size_t d = e.dim;
  std::size_t best_j = n;
  double best_cos = -1e300;
  double best_d2 = 1e300;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    if (metric == Metric::cosine) {
      double na = 0.0, nb = 0.0;
      const float* a = e.row(i);
      const float* b = e.row(j);
      for (std::size_t k = 0; k < d; ++k) na += double(a[k]) * double(a[k]);
      for (std::size_t k = 0; k < d; ++k) nb += double(b[k]) * double(b[k]);
      na = std::sqrt(na);
      nb = std::sqrt(nb);
      if (na == 0.0 || nb == 0.0) {
        throw ValidationError("zero-norm row under cosine metric");
      }
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (double(a[k]) / na) * (double(b[k]) / nb);
      if (s > best_cos) {
        best_cos = s;
        best_j = j;
      }
    } else {
      double d2 = 0.0;
      const float* a = e.row(i);
      const float* b = e.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = double(a[k]) - double(b[k]);
        d2 += diff * diff;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best_j = j;
      }
    }
  }
  return best_j;
}

double naive_hd(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::sqrt(a[i]) - std::sqrt(b[i]);
    acc += diff * diff;
  }
  const double hd = std::sqrt(0.5 * acc);
  return hd > 1.0 ? 1.0 : hd;
}

std::vector<double> naive_fractions(const SegMaskSet& set, std::size_t sample, std::size_t r0,
                                    std::size_t r1, std::size_t c0, std::size_t c1) {
  std::vector<std::size_t> counts(set.num_classes, 0);
  std::size_t total = 0;
  const std::uint16_t* m = set.mask(sample);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      ++counts[m[r * set.width + c]];
      ++total;
    }
  }
  std::vector<double> out(set.num_classes);
  for (std::size_t k = 0; k < set.num_classes; ++k) {
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  }
  return out;
}

std::uint16_t naive_majority(const SegMaskSet& set, std::size_t sample, std::size_t r0,
                             std::size_t r1, std::size_t c0, std::size_t c1) {
  std::vector<std::size_t> counts(set.num_classes, 0);
  const std::uint16_t* m = set.mask(sample);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) ++counts[m[r * set.width + c]];
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return static_cast<std::uint16_t>(best);
}

void finish_oracle(LAVector& out, std::size_t n) {
  std::size_t excluded = 0;
  for (auto v : out.included) excluded += v == 0;
  if (2 * excluded > n) {
    throw ValidationError("more than half of the samples have empty class vectors");
  }
}

}  // namespace

LAVector oracle_la(const MultiLabelSet& labels, const EmbeddingSet& embeddings, Metric metric,
                   LAKind kind, std::size_t p) {
  if (la_kind_for_segmentation(kind)) {
    throw ValidationError("oracle_la: multilabel overload got a segmentation kind");
  }
  if (labels.count != embeddings.count) {
    throw ValidationError("count mismatch between labels and embeddings");
  }
  const std::size_t n = labels.count;
  const std::size_t kk = labels.num_classes;
  LAVector out;
  out.kind = kind;
  out.p = p;
  out.values.assign(n, 0.0);
  out.included.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = naive_nn(embeddings, i, metric);
    const std::uint8_t* c = labels.row(i);
    const std::uint8_t* cs = labels.row(j);
    std::size_t own = 0, common = 0;
    for (std::size_t q = 0; q < kk; ++q) {
      if (c[q]) ++own;
      if (c[q] && cs[q]) ++common;
    }
    if (own == 0) {
      out.included[i] = 0;
      continue;
    }
    switch (kind) {
      case LAKind::one: out.values[i] = common > 0 ? 1.0 : 0.0; break;
      case LAKind::all: out.values[i] = common == own ? 1.0 : 0.0; break;
      case LAKind::pct:
        out.values[i] = static_cast<double>(common) / static_cast<double>(own);
        break;
      default: break;
    }
  }
  finish_oracle(out, n);
  return out;
}

LAVector oracle_la(const SegMaskSet& labels, const EmbeddingSet& embeddings, Metric metric,
                   LAKind kind, std::size_t p) {
  if (!la_kind_for_segmentation(kind)) {
    throw ValidationError("oracle_la: segmask overload got a multilabel kind");
  }
  if (labels.count != embeddings.count) {
    throw ValidationError("count mismatch between labels and embeddings");
  }
  const std::size_t n = labels.count;
  LAVector out;
  out.kind = kind;
  out.p = p;
  out.values.assign(n, 0.0);
  out.included.assign(n, 1);

  const std::size_t cell_h = labels.height / p;
  const std::size_t cell_w = labels.width / p;
  if (kind == LAKind::patches || kind == LAKind::patches_pd) {
    if (labels.height < p || labels.width < p) {
      throw ValidationError("patch grid larger than mask side");
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = naive_nn(embeddings, i, metric);
    switch (kind) {
      case LAKind::seg_all: {
        std::vector<std::uint8_t> pres_i(labels.num_classes, 0), pres_j(labels.num_classes, 0);
        const std::uint16_t* mi = labels.mask(i);
        const std::uint16_t* mj = labels.mask(j);
        for (std::size_t q = 0; q < labels.height * labels.width; ++q) {
          pres_i[mi[q]] = 1;
          pres_j[mj[q]] = 1;
        }
        bool all_present = true;
        for (std::size_t q = 0; q < labels.num_classes; ++q) {
          if (pres_i[q] && !pres_j[q]) all_present = false;
        }
        out.values[i] = all_present ? 1.0 : 0.0;
        break;
      }
      case LAKind::patches: {
        bool equal = true;
        for (std::size_t a = 0; a < p && equal; ++a) {
          for (std::size_t b = 0; b < p && equal; ++b) {
            const std::size_t r0 = a * cell_h;
            const std::size_t r1 = a + 1 == p ? labels.height : (a + 1) * cell_h;
            const std::size_t c0 = b * cell_w;
            const std::size_t c1 = b + 1 == p ? labels.width : (b + 1) * cell_w;
            if (naive_majority(labels, i, r0, r1, c0, c1) !=
                naive_majority(labels, j, r0, r1, c0, c1)) {
              equal = false;
            }
          }
        }
        out.values[i] = equal ? 1.0 : 0.0;
        break;
      }
      case LAKind::pd: {
        const auto pi = naive_fractions(labels, i, 0, labels.height, 0, labels.width);
        const auto pj = naive_fractions(labels, j, 0, labels.height, 0, labels.width);
        out.values[i] = 1.0 - naive_hd(pi, pj);
        break;
      }
      case LAKind::patches_pd: {
        double acc = 0.0;
        for (std::size_t a = 0; a < p; ++a) {
          for (std::size_t b = 0; b < p; ++b) {
            const std::size_t r0 = a * cell_h;
            const std::size_t r1 = a + 1 == p ? labels.height : (a + 1) * cell_h;
            const std::size_t c0 = b * cell_w;
            const std::size_t c1 = b + 1 == p ? labels.width : (b + 1) * cell_w;
            acc += naive_hd(naive_fractions(labels, i, r0, r1, c0, c1),
                            naive_fractions(labels, j, r0, r1, c0, c1));
          }
        }
        out.values[i] = 1.0 - acc / static_cast<double>(p * p);
        break;
      }
      default: break;
    }
  }
  finish_oracle(out, n);
  return out;
}

// ---------------------------------------------------------------------------
// Selftest suites

namespace {

EmbeddingSet random_embeddings(detail::Rng& rng, std::size_t n, std::size_t d) {
  EmbeddingSet e;
  e.count = n;
  e.dim = d;
  e.data.resize(n * d);
  for (auto& v : e.data) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < n; ++i) e.ids.push_back(std::to_string(i));
  return e;
}

SelftestResult selftest_retrieval(detail::Rng& rng) {
  SelftestResult r{"retrieval-oracle", true, ""};
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(127);
    const std::size_t d = 1 + rng.below(32);
    const Metric metric = rep % 2 == 0 ? Metric::cosine : Metric::euclidean;
    const auto e = random_embeddings(rng, n, d);
    const auto fast = nearest_neighbors(e, metric);
    const auto slow = nearest_neighbors_bruteforce(e, metric);
    if (fast.nn != slow.nn) {
      r.passed = false;
      r.detail = "nearest neighbor mismatch at rep " + std::to_string(rep);
      return r;
    }
  }
  r.detail = "200 random sets, exact index equality";
  return r;
}

SelftestResult selftest_cpa_binary(detail::Rng& rng) {
  SelftestResult r{"cpa-binary-reduction", true, ""};
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> pred(n), y(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rep % 3 == 0 ? std::floor(rng.uniform(0, 6)) / 3.0 : rng.next_double();
      y[i] = rng.next_double() < 0.5 ? 0.0 : 1.0;
      (y[i] == 0.0 ? has0 : has1) = true;
    }
    if (!has0) y[0] = 0.0;
    if (!has1) y[n - 1] = 1.0;
    worst = std::max(worst, std::abs(cpa(pred, y) - auroc(pred, y)));
  }
  r.passed = worst <= 1e-12;
  r.detail = "500 instances, max |cpa - auroc| = " + std::to_string(worst);
  return r;
}

SelftestResult selftest_cpa_oracle(detail::Rng& rng) {
  SelftestResult r{"cpa-oracle", true, ""};
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng.below(48);
    std::vector<double> pred(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = std::floor(rng.uniform(0, 8)) / 4.0;  // ties in the predictor
      y[i] = std::floor(rng.uniform(0, 5));           // ties in the outcome
    }
    bool constant = true;
    for (std::size_t i = 1; i < n; ++i) constant = constant && y[i] == y[0];
    if (constant) y[0] += 1.0;
    worst = std::max(worst, std::abs(cpa(pred, y) - cpa_bruteforce(pred, y)));
  }
  r.passed = worst <= 1e-12;
  r.detail = "200 instances with ties, max |cpa - brute| = " + std::to_string(worst);
  return r;
}

SelftestResult selftest_la_oracle(detail::Rng& rng) {
  SelftestResult r{"la-oracle", true, ""};
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(63);
    const Metric metric = rep % 2 == 0 ? Metric::cosine : Metric::euclidean;
    const auto e = random_embeddings(rng, n, 1 + rng.below(8));
    const auto nb = nearest_neighbors(e, metric);
    if (rep % 2 == 0) {
      MultiLabelSet labels;
      labels.count = n;
      labels.num_classes = 2 + rng.below(5);
      labels.labels.assign(n * labels.num_classes, 0);
      for (std::size_t i = 0; i < n; ++i) {
        bool any = false;
        for (std::size_t k = 0; k < labels.num_classes; ++k) {
          const bool bit = rng.next_double() < 0.35;
          labels.labels[i * labels.num_classes + k] = bit;
          any = any || bit;
        }
        if (!any && i < (n + 1) / 2) {
          labels.labels[i * labels.num_classes + rng.below(labels.num_classes)] = 1;
        }
      }
      for (LAKind kind : {LAKind::one, LAKind::all, LAKind::pct}) {
        const auto fast = dataset_la(labels, nb, kind);
        const auto slow = oracle_la(labels, e, metric, kind);
        for (std::size_t i = 0; i < n; ++i) {
          const bool ok = fast.included[i] == slow.included[i] &&
                          (kind == LAKind::pct
                               ? std::abs(fast.values[i] - slow.values[i]) <= 1e-12
                               : fast.values[i] == slow.values[i]);
          if (!ok) {
            r.passed = false;
            r.detail = std::string("multilabel mismatch, kind ") + to_string(kind);
            return r;
          }
        }
      }
    } else {
      SegMaskSet masks;
      masks.count = n;
      masks.num_classes = 2 + rng.below(5);
      masks.height = 4 + rng.below(9);
      masks.width = 4 + rng.below(9);
      masks.masks.resize(n * masks.height * masks.width);
      for (auto& px : masks.masks) {
        px = static_cast<std::uint16_t>(rng.below(masks.num_classes));
      }
      const std::size_t p = 1 + rng.below(std::min(masks.height, masks.width));
      for (LAKind kind :
           {LAKind::seg_all, LAKind::patches, LAKind::pd, LAKind::patches_pd}) {
        const auto fast = dataset_la(masks, nb, kind, p);
        const auto slow = oracle_la(masks, e, metric, kind, p);
        for (std::size_t i = 0; i < n; ++i) {
          const bool binary = kind == LAKind::seg_all || kind == LAKind::patches;
          const bool ok = binary ? fast.values[i] == slow.values[i]
                                 : std::abs(fast.values[i] - slow.values[i]) <= 1e-12;
          if (!ok) {
            r.passed = false;
            r.detail = std::string("segmask mismatch, kind ") + to_string(kind);
            return r;
          }
        }
      }
    }
  }
  r.detail = "100 random instances, all seven kinds";
  return r;
}

double pair_loss_at(const HeadParams& params, std::span<const float> e1,
                    std::span<const float> e2, double l1, double l2, double margin) {
  const double u1 = forward(params, e1);
  const double u2 = forward(params, e2);
  return ranking_loss(u1, u2, l1, l2, margin).loss;
}

SelftestResult selftest_gradients(detail::Rng& rng) {
  SelftestResult r{"gradient-check", true, ""};
  double worst = 0.0;
  int done = 0;
  int attempts = 0;
  while (done < 100 && attempts < 1000) {
    ++attempts;
    HeadConfig cfg;
    cfg.input_dim = 2 + rng.below(5);
    cfg.unc_width = 3 + rng.below(8);
    cfg.seed = rng.next_u64();
    HeadParams params = init_head(cfg);
    for (auto* t : {&params.w1, &params.b1, &params.w2, &params.b2, &params.w3, &params.b3}) {
      for (double& v : *t) v += 0.3 * rng.normal();
    }
    std::vector<float> e1(cfg.input_dim), e2(cfg.input_dim);
    for (auto& v : e1) v = static_cast<float>(rng.normal());
    for (auto& v : e2) v = static_cast<float>(rng.normal());
    const double l1 = rng.next_double();
    const double l2 = done % 5 == 4 ? l1 : rng.next_double();  // exercise tied pairs
    const double margin = 0.1;

    // Stay away from the hinge kink so central differences are valid.
    const double u1 = forward(params, std::span<const float>(e1));
    const double u2 = forward(params, std::span<const float>(e2));
    const int ind = l1 > l2 ? 1 : -1;
    const double slack = margin - ind * (u1 - u2);
    if (std::abs(slack) < 1e-3) continue;

    HeadGradients grads = HeadGradients::zeros_like(params);
    ranking_loss_grad(params, e1, e2, l1, l2, margin, grads);

    const double h = 1e-5;
    std::vector<std::vector<double>*> tensors = {&params.w1, &params.b1, &params.w2,
                                                 &params.b2, &params.w3, &params.b3};
    std::vector<const std::vector<double>*> gtensors = {&grads.w1, &grads.b1, &grads.w2,
                                                        &grads.b2, &grads.w3, &grads.b3};
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      auto& tensor = *tensors[t];
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        const double keep = tensor[i];
        tensor[i] = keep + h;
        const double up = pair_loss_at(params, e1, e2, l1, l2, margin);
        tensor[i] = keep - h;
        const double down = pair_loss_at(params, e1, e2, l1, l2, margin);
        tensor[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double an = (*gtensors[t])[i];
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
      }
    }
    ++done;
  }
  r.passed = done == 100 && worst <= 1e-4;
  r.detail = std::to_string(done) + " configurations, max relative error = " +
             std::to_string(worst);
  return r;
}

SelftestResult selftest_discard(detail::Rng& rng) {
  SelftestResult r{"discard-oracle", true, ""};
  const std::size_t n = 500;
  LossVector losses;
  losses.values.resize(n);
  for (auto& v : losses.values) v = rng.uniform(0.1, 10.0);  // positive, so u = l is valid
  UncertaintyVector u;
  u.values = losses.values;
  const auto curve = discard_test(u, losses, 200);
  double plain = 0.0;
  for (double v : losses.values) plain += v;
  plain /= static_cast<double>(n);
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < curve.mean_loss.size(); ++i) {
    monotone = monotone && curve.mean_loss[i] >= curve.mean_loss[i + 1];
  }
  r.passed = monotone && curve.mf == 1.0 && std::abs(curve.mean_loss[0] - plain) <= 1e-12;
  r.detail = "mf = " + std::to_string(curve.mf) +
             ", |curve[0] - mean| = " + std::to_string(std::abs(curve.mean_loss[0] - plain));
  return r;
}

}  // namespace

std::vector<SelftestResult> run_selftests(std::uint64_t seed) {
  detail::Rng rng(seed);
  std::vector<SelftestResult> results;
  results.push_back(selftest_retrieval(rng));
  results.push_back(selftest_cpa_binary(rng));
  results.push_back(selftest_cpa_oracle(rng));
  results.push_back(selftest_la_oracle(rng));
  results.push_back(selftest_gradients(rng));
  results.push_back(selftest_discard(rng));
  return results;
}

}  // namespace ruq
