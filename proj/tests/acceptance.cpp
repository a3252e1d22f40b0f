// Acceptance suite: runs every top-level verification criterion at its
// pinned tolerance and prints one pass/fail line per criterion. Exits with
// the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <future>
#include <numeric>
#include <string>
#include <vector>

#include "ruq/cpa.hpp"
#include "ruq/detail/rng.hpp"
#include "ruq/evalsuite.hpp"
#include "ruq/lametrics.hpp"
#include "ruq/retrieval.hpp"
#include "ruq/synth.hpp"
#include "ruq/unchead.hpp"

using namespace ruq;
using clock_type = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: CPA reduces to AUROC on binary outcomes.

Outcome criterion_binary_reduction() {
  const auto t0 = clock_type::now();
  detail::Rng rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> pred(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rep % 3 == 0 ? std::floor(rng.uniform(0, 6)) / 3.0 : rng.next_double();
      y[i] = rng.next_double() < 0.5 ? 0.0 : 1.0;
    }
    y[0] = 0.0;
    y[n - 1] = 1.0;
    worst = std::max(worst, std::abs(cpa(pred, y) - auroc(pred, y)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0,
          fmt("max |cpa - auroc| = %.3g over 500 instances, %.2f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 2: CPA equals its brute-force oracle, including ties.

Outcome criterion_cpa_oracle() {
  const auto t0 = clock_type::now();
  detail::Rng rng(202);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng.below(48);
    std::vector<double> pred(n), outcome(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = std::floor(rng.uniform(0, 8)) / 4.0;  // predictor ties
      outcome[i] = std::floor(rng.uniform(0, 5));     // outcome ties
    }
    bool constant = true;
    for (double v : outcome) constant = constant && v == outcome[0];
    if (constant) outcome[0] += 1.0;
    worst = std::max(worst, std::abs(cpa(pred, outcome) - cpa_bruteforce(pred, outcome)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 5.0,
          fmt("max |cpa - brute force| = %.3g over 200 instances, %.2f s", worst, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 3: hand-computed metric values reproduce.

Outcome criterion_hand_values() {
  std::vector<std::string> bad;

  const std::vector<std::uint8_t> c = {1, 1, 0};
  const std::vector<std::uint8_t> cs = {1, 0, 1};
  if (pct_la(c, cs) != 0.5) bad.push_back("pct_la");

  const std::vector<double> half = {0.5, 0.5};
  const std::vector<double> point = {1.0, 0.0};
  if (std::abs(hellinger(half, point) - 0.5411961) > 1e-6) bad.push_back("hellinger");

  // Half class0/half class1 against all class0: 1 - HD of the fractions.
  SegMaskSet masks;
  masks.count = 2;
  masks.num_classes = 2;
  masks.height = 2;
  masks.width = 2;
  masks.masks = {0, 0, 1, 1, 0, 0, 0, 0};
  const double pd = pd_la(mask_view(masks, 0), mask_view(masks, 1));
  if (std::abs(pd - 0.4588039) > 1e-6) bad.push_back("pd_la");

  const std::vector<double> pred = {0.1, 0.4, 0.35, 0.8};
  const std::vector<double> y = {0, 0, 1, 1};
  if (auroc(pred, y) != 0.75) bad.push_back("auroc");

  const std::vector<double> cpred = {2, 1, 3};
  const std::vector<double> cout = {1, 2, 3};
  if (cpa(cpred, cout) != 0.75) bad.push_back("cpa");

  if (!bad.empty()) {
    std::string detail = "mismatched:";
    for (const auto& b : bad) detail += " " + b;
    return {false, detail};
  }
  return {true, "pct_la, hellinger, pd_la, auroc, cpa all match their hand values"};
}

// ---------------------------------------------------------------------------
// Criterion 4: implication chain one >= pct >= all on random class vectors.

Outcome criterion_ordering_law() {
  detail::Rng rng(404);
  const int reps = 100000;
  for (int rep = 0; rep < reps; ++rep) {
    const std::size_t k = 2 + rng.below(9);
    std::vector<std::uint8_t> a(k), b(k);
    for (auto& v : a) v = rng.next_double() < 0.4 ? 1 : 0;
    for (auto& v : b) v = rng.next_double() < 0.4 ? 1 : 0;
    if (std::accumulate(a.begin(), a.end(), 0) == 0) a[rng.below(k)] = 1;

    const int one = one_la(a, b);
    const double pct = pct_la(a, b);
    const int all = all_la(a, b);
    const bool ok = one >= pct && pct >= all && (all != 1 || pct == 1.0) &&
                    (pct != 1.0 || one == 1) && (one != 0 || pct == 0.0) &&
                    (pct != 0.0 || all == 0);
    if (!ok) {
      return {false, fmt("violation at rep %d", rep)};
    }
  }
  return {true, fmt("no violations over %d random pairs", reps)};
}

// ---------------------------------------------------------------------------
// Criterion 5: analytic ranking-loss gradients match central differences.

Outcome criterion_gradient_check() {
  const auto t0 = clock_type::now();
  detail::Rng rng(505);
  const double h = 1e-5;
  double worst = 0.0;
  int done = 0, active_count = 0, inactive_count = 0;
  int attempts = 0;
  while (done < 100 && attempts < 2000) {
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
    const double l2 = done % 5 == 4 ? l1 : rng.next_double();
    const double margin = 0.1;

    const double u1 = forward(params, std::span<const float>(e1));
    const double u2 = forward(params, std::span<const float>(e2));
    const int ind = l1 > l2 ? 1 : -1;
    const double slack = margin - ind * (u1 - u2);
    if (std::abs(slack) < 1e-3) continue;  // keep the kink outside the FD stencil
    (slack > 0 ? active_count : inactive_count) += 1;

    HeadGradients g = HeadGradients::zeros_like(params);
    ranking_loss_grad(params, e1, e2, l1, l2, margin, g);

    std::vector<std::vector<double>*> tensors = {&params.w1, &params.b1, &params.w2,
                                                 &params.b2, &params.w3, &params.b3};
    std::vector<const std::vector<double>*> grads = {&g.w1, &g.b1, &g.w2,
                                                     &g.b2, &g.w3, &g.b3};
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      for (std::size_t i = 0; i < tensors[t]->size(); ++i) {
        double& slot = (*tensors[t])[i];
        const double keep = slot;
        slot = keep + h;
        const double up =
            ranking_loss(forward(params, std::span<const float>(e1)),
                         forward(params, std::span<const float>(e2)), l1, l2, margin)
                .loss;
        slot = keep - h;
        const double dn =
            ranking_loss(forward(params, std::span<const float>(e1)),
                         forward(params, std::span<const float>(e2)), l1, l2, margin)
                .loss;
        slot = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = (*grads[t])[i];
        worst =
            std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
      }
    }
    ++done;
  }
  const double secs = seconds_since(t0);
  return {done == 100 && worst <= 1e-4 && secs < 10.0,
          fmt("max relative error = %.3g over %d configs (%d active / %d inactive), %.2f s",
              worst, done, active_count, inactive_count, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 6: training is invariant to affine loss rescaling.

Outcome criterion_loss_scale_invariance() {
  auto spec = planted_preset(606);
  spec.n = 256;
  spec.d = 8;
  const SynthDataset data = generate(spec);

  LossVector rescaled;
  rescaled.values.reserve(data.losses.values.size());
  for (double v : data.losses.values) rescaled.values.push_back(2.0 * v + 3.0);

  HeadConfig cfg;
  cfg.input_dim = spec.d;
  cfg.unc_width = 16;
  cfg.epochs = 30;
  cfg.warmup_epochs = 10;
  cfg.batch_size = 128;
  cfg.seed = 606;

  const TrainResult a = train_head(data.embeddings, data.losses, cfg);
  const TrainResult b = train_head(data.embeddings, rescaled, cfg);
  const bool logs_equal = a.log.mean_loss == b.log.mean_loss && a.log.lr == b.log.lr &&
                          a.log.pair_agreement == b.log.pair_agreement;
  const bool params_equal = a.params.w1 == b.params.w1 && a.params.b1 == b.params.b1 &&
                            a.params.w2 == b.params.w2 && a.params.b2 == b.params.b2 &&
                            a.params.w3 == b.params.w3 && a.params.b3 == b.params.b3;
  return {logs_equal && params_equal,
          logs_equal ? "training under L and 2L+3 is bit-identical"
                     : "trajectories diverged under rescaling"};
}

// ---------------------------------------------------------------------------
// Criterion 7: planted-signal recovery, seed-averaged, plus shuffled control.
// Criterion 11 reuses the per-seed artifacts.

struct PlantedSeedResult {
  double la_cpa = 0.0;
  double mf = 0.0;
  double control_la_cpa = 0.0;
  double p_noisy_greater = 0.0;
};

PlantedSeedResult run_planted_seed(std::uint64_t seed) {
  const SynthSpec spec = planted_preset(seed);
  const SynthDataset data = generate(spec);

  HeadConfig cfg;
  cfg.unc_width = 64;
  cfg.epochs = 200;
  cfg.warmup_epochs = 50;
  cfg.batch_size = 256;
  cfg.base_lr = 1e-3;
  cfg.final_lr = 1e-7;
  cfg.seed = seed;

  PlantedSeedResult out;

  const TrainResult trained = train_head(data.embeddings, data.losses, cfg);
  const UncertaintyVector u = score_uncertainties(trained.params, data.embeddings);
  const NeighborIndex nb = nearest_neighbors(data.embeddings, Metric::cosine);
  const LAVector la = dataset_la(data.multilabel, nb, LAKind::pct);
  out.la_cpa = la_cpa(u.values, la).value_or(0.5);
  out.mf = discard_test(u, data.losses, 200).mf;

  UncertaintyVector u_low, u_high;
  for (std::size_t i = 0; i < u.count(); ++i) {
    (data.truth.high_noise[i] ? u_high : u_low).values.push_back(u.values[i]);
  }
  out.p_noisy_greater = noise_shift(u_low, u_high).p_noisy_greater;

  LossVector shuffled = data.losses;
  detail::Rng perm(seed * 777 + 3);
  perm.shuffle(shuffled.values);
  const TrainResult control = train_head(data.embeddings, shuffled, cfg);
  const UncertaintyVector cu = score_uncertainties(control.params, data.embeddings);
  out.control_la_cpa = la_cpa(cu.values, la).value_or(0.5);
  return out;
}

std::vector<PlantedSeedResult> g_planted;  // filled by criterion 7, read by 11

Outcome criterion_planted_recovery() {
  const auto t0 = clock_type::now();
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::future<PlantedSeedResult>> jobs;
  jobs.reserve(seeds.size());
  for (auto s : seeds) {
    jobs.push_back(std::async(std::launch::async, run_planted_seed, s));
  }
  g_planted.clear();
  for (auto& j : jobs) g_planted.push_back(j.get());

  double cpa_mean = 0, mf_mean = 0, control_mean = 0;
  for (const auto& r : g_planted) {
    cpa_mean += r.la_cpa;
    mf_mean += r.mf;
    control_mean += r.control_la_cpa;
  }
  cpa_mean /= static_cast<double>(g_planted.size());
  mf_mean /= static_cast<double>(g_planted.size());
  control_mean /= static_cast<double>(g_planted.size());

  const double secs = seconds_since(t0);
  const bool pass = cpa_mean >= 0.8 && mf_mean >= 0.8 && control_mean >= 0.45 &&
                    control_mean <= 0.55 && secs < 180.0;
  return {pass, fmt("pct-LA-CPA = %.4f, MF = %.4f, shuffled control = %.4f (5 seeds), %.1f s",
                    cpa_mean, mf_mean, control_mean, secs)};
}

// ---------------------------------------------------------------------------
// Criterion 8: discard test against the identity oracle u = loss.

Outcome criterion_discard_oracle() {
  detail::Rng rng(808);
  const std::size_t n = 1000;
  LossVector losses;
  losses.values.resize(n);
  for (auto& v : losses.values) v = rng.uniform(0.05, 12.0);
  UncertaintyVector u;
  u.values = losses.values;

  const DiscardCurve curve = discard_test(u, losses, 200);
  bool non_increasing = true;
  for (std::size_t i = 0; i + 1 < curve.mean_loss.size(); ++i) {
    non_increasing = non_increasing && curve.mean_loss[i] >= curve.mean_loss[i + 1];
  }
  double plain_sum = 0.0;
  for (double v : losses.values) plain_sum += v;
  const double plain_mean = plain_sum / static_cast<double>(n);
  const double head_gap = std::abs(curve.mean_loss[0] - plain_mean);

  const bool pass = non_increasing && curve.mf == 1.0 && head_gap <= 1e-12;
  return {pass, fmt("MF = %.3f, |curve[0] - mean| = %.3g, non-increasing = %s", curve.mf,
                    head_gap, non_increasing ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// Criterion 9: learning-rate schedule constants, exactly.

Outcome criterion_schedule_constants() {
  HeadConfig cfg;
  cfg.input_dim = 4;
  cfg.epochs = 1000;
  cfg.warmup_epochs = 50;
  cfg.base_lr = 1e-4;
  cfg.final_lr = 1e-8;
  const bool pass = lr_at_epoch(0, cfg) == 1e-4 && lr_at_epoch(49, cfg) == 1e-4 &&
                    lr_at_epoch(999, cfg) == 1e-8;
  return {pass, fmt("lr(0) = %g, lr(49) = %g, lr(999) = %g", lr_at_epoch(0, cfg),
                    lr_at_epoch(49, cfg), lr_at_epoch(999, cfg))};
}

// ---------------------------------------------------------------------------
// Criterion 10: positivity under stress and end-to-end determinism.

Outcome criterion_positivity_determinism() {
  detail::Rng rng(1010);
  HeadConfig cfg;
  cfg.input_dim = 6;
  cfg.unc_width = 10;
  cfg.seed = 1;
  HeadParams params = init_head(cfg);
  std::vector<float> x(cfg.input_dim);
  std::size_t checked = 0;
  for (int rep = 0; rep < 100000; ++rep) {
    if (rep % 5000 == 0) {
      for (auto* t : {&params.w1, &params.b1, &params.w2, &params.b2, &params.w3, &params.b3}) {
        for (double& v : *t) v = 3.0 * rng.normal();
      }
    }
    for (auto& v : x) v = static_cast<float>(10.0 * rng.normal());
    if (!(forward(params, std::span<const float>(x)) > 0.0)) {
      return {false, fmt("non-positive output at rep %d", rep)};
    }
    ++checked;
  }

  auto spec = planted_preset(1010);
  spec.n = 256;
  spec.d = 8;
  const SynthDataset data = generate(spec);
  HeadConfig tcfg;
  tcfg.input_dim = 8;
  tcfg.unc_width = 16;
  tcfg.epochs = 25;
  tcfg.warmup_epochs = 5;
  tcfg.batch_size = 128;
  tcfg.seed = 99;
  const TrainResult a = train_head(data.embeddings, data.losses, tcfg);
  const TrainResult b = train_head(data.embeddings, data.losses, tcfg);
  const bool identical = a.params.w1 == b.params.w1 && a.params.b1 == b.params.b1 &&
                         a.params.w2 == b.params.w2 && a.params.b2 == b.params.b2 &&
                         a.params.w3 == b.params.w3 && a.params.b3 == b.params.b3 &&
                         a.log.mean_loss == b.log.mean_loss;
  const auto ua = score_uncertainties(a.params, data.embeddings);
  const auto ub = score_uncertainties(b.params, data.embeddings);
  const bool scores_identical = ua.values == ub.values;

  return {checked == 100000 && identical && scores_identical,
          fmt("%zu positive forwards; repeated training bit-identical = %s", checked,
              identical && scores_identical ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// Criterion 11: trained uncertainties shift upward on the noisy group.

Outcome criterion_noise_shift() {
  if (g_planted.empty()) {
    return {false, "planted runs unavailable (criterion 7 did not run)"};
  }
  double mean_p = 0.0;
  double min_p = 1.0;
  for (const auto& r : g_planted) {
    mean_p += r.p_noisy_greater;
    min_p = std::min(min_p, r.p_noisy_greater);
  }
  mean_p /= static_cast<double>(g_planted.size());
  return {mean_p >= 0.7,
          fmt("P(u_noisy > u_clean) = %.4f mean, %.4f min over 5 seeds", mean_p, min_p)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "CPA binary reduction", criterion_binary_reduction},
      {2, "CPA oracle equivalence", criterion_cpa_oracle},
      {3, "hand-value metric suite", criterion_hand_values},
      {4, "LA ordering law", criterion_ordering_law},
      {5, "ranking-loss gradient check", criterion_gradient_check},
      {6, "loss-scale invariance", criterion_loss_scale_invariance},
      {7, "planted-signal recovery", criterion_planted_recovery},
      {8, "discard test oracle", criterion_discard_oracle},
      {9, "schedule constants", criterion_schedule_constants},
      {10, "positivity and determinism", criterion_positivity_determinism},
      {11, "noise-shift direction", criterion_noise_shift},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s (%s)\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  } else {
    std::printf("acceptance: %d of %zu criteria FAILED\n", failures, criteria.size());
  }
  return failures;
}
