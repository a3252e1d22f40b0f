#include "ruq/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binfile.hpp"
#include "csv.hpp"
#include "numeric.hpp"
#include "ruq/detail/parallel.hpp"

namespace ruq {

namespace {

// Re-tags ValidationErrors with the pipeline stage that raised them.
template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError("eval/" + name, e.what());
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool is_csv_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv";
}

}  // namespace

void UncertaintyVector::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("non-finite uncertainty at index " + std::to_string(i));
    }
    if (values[i] <= 0.0) {
      throw ValidationError("non-positive uncertainty at index " + std::to_string(i));
    }
  }
}

UncertaintyVector load_uncertainties(const std::filesystem::path& path) {
  UncertaintyVector out;
  if (is_csv_path(path)) {
    const auto lines = detail::read_text_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto vals = detail::parse_csv_numbers(lines[i], path, i + 1);
      if (vals.size() != 1) {
        throw ValidationError("uncertainty CSV expects one value per line: " + path.string() +
                              ":" + std::to_string(i + 1));
      }
      out.values.push_back(vals[0]);
    }
  } else {
    const auto c = detail::load_container(path);
    if (c.header.contains("kind") && c.header["kind"] != "uncertainty") {
      throw ValidationError("expected an \"uncertainty\" container in " + path.string());
    }
    const std::size_t n = detail::header_size_field(c.header, "n", path);
    detail::check_payload_size(c.payload.size(), n * 8, path);
    out.values.resize(n);
    std::memcpy(out.values.data(), c.payload.data(), n * 8);
    if (c.header.contains("source") && c.header["source"].is_string()) {
      out.source = c.header["source"].get<std::string>();
    }
  }
  out.validate();
  return out;
}

void save_uncertainties(const UncertaintyVector& u, const std::filesystem::path& path) {
  u.validate();
  if (is_csv_path(path)) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + path.string());
    for (double v : u.values) out << detail::format_double(v) << '\n';
    return;
  }
  nlohmann::json header{
      {"kind", "uncertainty"}, {"n", u.count()}, {"dtype", "f64"}, {"source", u.source}};
  detail::save_container(path, header, u.values.data(), u.values.size() * 8);
}

UncertaintyVector score_uncertainties(const HeadParams& params, const EmbeddingSet& embeddings,
                                      unsigned threads) {
  embeddings.validate();
  if (embeddings.dim != params.input_dim) {
    throw ValidationError("input dimension mismatch: head expects " +
                          std::to_string(params.input_dim) + ", embeddings have " +
                          std::to_string(embeddings.dim));
  }
  UncertaintyVector out;
  out.values.resize(embeddings.count);
  detail::parallel_for(0, embeddings.count, threads, [&](std::size_t i) {
    out.values[i] = forward(params, std::span<const float>(embeddings.row(i), embeddings.dim));
  });
  out.validate();
  return out;
}

DiscardCurve discard_test(const UncertaintyVector& uncertainties, const LossVector& losses,
                          std::size_t n_fractions) {
  uncertainties.validate();
  losses.validate();
  const std::size_t n = uncertainties.count();
  if (n != losses.count()) {
    throw ValidationError("uncertainty/loss length mismatch: " + std::to_string(n) + " vs " +
                          std::to_string(losses.count()));
  }
  if (n_fractions < 2) throw ValidationError("need at least 2 discard fractions");
  if (n < n_fractions) {
    throw ValidationError("need n >= n_fractions (" + std::to_string(n) + " < " +
                          std::to_string(n_fractions) + ")");
  }

  // Most uncertain first; ties broken by sample index for determinism.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (uncertainties.values[a] != uncertainties.values[b]) {
      return uncertainties.values[a] > uncertainties.values[b];
    }
    return a < b;
  });
  std::vector<double> sorted_loss(n);
  for (std::size_t i = 0; i < n; ++i) sorted_loss[i] = losses.values[order[i]];

  DiscardCurve curve;
  curve.fractions.resize(n_fractions);
  curve.mean_loss.resize(n_fractions);
  for (std::size_t i = 0; i < n_fractions; ++i) {
    curve.fractions[i] = static_cast<double>(i) / static_cast<double>(n_fractions);
    const std::size_t discard = (i * n + n_fractions - 1) / n_fractions;  // ceil(i*n/Nf)
    const std::span<const double> remaining(sorted_loss.data() + discard, n - discard);
    curve.mean_loss[i] =
        detail::pairwise_sum(remaining) / static_cast<double>(remaining.size());
  }

  std::size_t non_increasing = 0;
  for (std::size_t i = 0; i + 1 < n_fractions; ++i) {
    if (curve.mean_loss[i] >= curve.mean_loss[i + 1]) ++non_increasing;
  }
  curve.mf = static_cast<double>(non_increasing) / static_cast<double>(n_fractions - 1);
  return curve;
}

LossVector max_pixel_loss_aggregate(const PixelLossMaps& maps) {
  maps.validate();
  LossVector out;
  out.values.resize(maps.count);
  const std::size_t px = maps.height * maps.width;
  for (std::size_t i = 0; i < maps.count; ++i) {
    const double* m = maps.map(i);
    double best = m[0];
    for (std::size_t j = 1; j < px; ++j) best = std::max(best, m[j]);
    out.values[i] = best;
  }
  return out;
}

LossVector mean_pixel_loss_aggregate(const PixelLossMaps& maps) {
  maps.validate();
  LossVector out;
  out.values.resize(maps.count);
  const std::size_t px = maps.height * maps.width;
  for (std::size_t i = 0; i < maps.count; ++i) {
    const std::span<const double> m(maps.map(i), px);
    out.values[i] = detail::pairwise_sum(m) / static_cast<double>(px);
  }
  return out;
}

UncertaintyMap localized_uncertainty(const HeadParams& params, const TokenGrid& grid) {
  if (grid.dim != params.input_dim) {
    throw ValidationError("token dimension " + std::to_string(grid.dim) +
                          " does not match head input dimension " +
                          std::to_string(params.input_dim));
  }
  UncertaintyMap map;
  map.rows = grid.rows;
  map.cols = grid.cols;
  map.patch_px = grid.patch_px;
  map.values.resize(grid.rows * grid.cols);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      map.values[r * grid.cols + c] =
          forward(params, std::span<const float>(grid.token(r, c), grid.dim));
    }
  }
  return map;
}

ShiftSummary noise_shift(const UncertaintyVector& clean, const UncertaintyVector& noisy) {
  if (clean.count() == 0 || noisy.count() == 0) {
    throw ValidationError("noise_shift requires two non-empty uncertainty sets");
  }
  ShiftSummary s;
  s.clean_count = clean.count();
  s.noisy_count = noisy.count();
  s.clean_mean = detail::pairwise_sum(clean.values) / static_cast<double>(clean.count());
  s.noisy_mean = detail::pairwise_sum(noisy.values) / static_cast<double>(noisy.count());
  s.mean_diff = s.noisy_mean - s.clean_mean;
  s.clean_median = median_of(clean.values);
  s.noisy_median = median_of(noisy.values);
  s.median_diff = s.noisy_median - s.clean_median;

  // Mann-Whitney over all cross pairs, phrased as the AUROC of separating
  // noisy from clean by the uncertainty value.
  std::vector<double> pred;
  std::vector<double> label;
  pred.reserve(clean.count() + noisy.count());
  label.reserve(pred.capacity());
  for (double v : clean.values) {
    pred.push_back(v);
    label.push_back(0.0);
  }
  for (double v : noisy.values) {
    pred.push_back(v);
    label.push_back(1.0);
  }
  s.p_noisy_greater = auroc(pred, label);
  s.shifted = s.p_noisy_greater > 0.5;
  return s;
}

std::string shift_histogram_csv(const UncertaintyVector& clean, const UncertaintyVector& noisy,
                                std::size_t bins) {
  if (clean.count() == 0 || noisy.count() == 0) {
    throw ValidationError("histogram requires two non-empty uncertainty sets");
  }
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  double lo = clean.values[0], hi = clean.values[0];
  for (const auto* set : {&clean.values, &noisy.values}) {
    for (double v : *set) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo == hi) hi = lo + 1.0;  // all values equal: one degenerate bin range
  const double width = (hi - lo) / static_cast<double>(bins);

  std::vector<std::size_t> clean_counts(bins, 0), noisy_counts(bins, 0);
  const auto bin_of = [&](double v) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    return b >= bins ? bins - 1 : b;  // the max lands in the last bin
  };
  for (double v : clean.values) ++clean_counts[bin_of(v)];
  for (double v : noisy.values) ++noisy_counts[bin_of(v)];

  std::string out = "bin_lo,bin_hi,clean_count,noisy_count\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out += detail::format_double(lo + width * static_cast<double>(b));
    out += ',';
    out += detail::format_double(lo + width * static_cast<double>(b + 1));
    out += ',';
    out += std::to_string(clean_counts[b]);
    out += ',';
    out += std::to_string(noisy_counts[b]);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run spec / report

RunSpec RunSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open run spec: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text, path.parent_path());
}

RunSpec RunSpec::from_json_text(const std::string& text,
                                const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run spec JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("run spec must be a JSON object");

  const auto resolve = [&](const std::string& key) -> std::filesystem::path {
    if (!j.contains(key)) return {};
    if (!j[key].is_string()) {
      throw ValidationError("run spec field \"" + key + "\" must be a string path");
    }
    std::filesystem::path p = j[key].get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return p;
  };

  RunSpec spec;
  spec.embeddings = resolve("embeddings");
  spec.labels = resolve("labels");
  spec.losses = resolve("losses");
  spec.head = resolve("head");
  spec.uncertainties = resolve("uncertainties");
  spec.noisy_embeddings = resolve("noisy_embeddings");
  if (spec.embeddings.empty()) throw ValidationError("run spec is missing \"embeddings\"");
  if (spec.labels.empty()) throw ValidationError("run spec is missing \"labels\"");
  if (spec.head.empty() == spec.uncertainties.empty()) {
    throw ValidationError("run spec needs exactly one of \"head\" or \"uncertainties\"");
  }
  if (!j.contains("label_kind") || !j["label_kind"].is_string()) {
    throw ValidationError("run spec is missing \"label_kind\"");
  }
  spec.label_kind = label_kind_from_string(j["label_kind"].get<std::string>());
  if (j.contains("metrics")) {
    if (!j["metrics"].is_array()) throw ValidationError("\"metrics\" must be an array");
    for (const auto& m : j["metrics"]) {
      spec.metrics.push_back(la_kind_from_string(m.get<std::string>()));
    }
  }
  spec.p = j.value("p", std::size_t{3});
  spec.metric = metric_from_string(j.value("metric", std::string("cosine")));
  spec.fractions = j.value("fractions", std::size_t{200});
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.threads = j.value("threads", 1u);
  return spec;
}

EvalReport evaluate(const RunSpec& spec) {
  const EmbeddingSet embeddings =
      stage("embeddings", [&] { return load_embeddings(spec.embeddings); });

  const LabelSet labels =
      stage("labels", [&] { return load_labels(spec.labels, spec.label_kind); });
  stage("labels", [&] {
    if (spec.label_kind == LabelKind::multilabel) {
      check_aligned(embeddings, std::get<MultiLabelSet>(labels));
    } else {
      check_aligned(embeddings, std::get<SegMaskSet>(labels));
    }
    return 0;
  });

  UncertaintyVector uncertainties;
  std::optional<LoadedHead> head;
  if (!spec.head.empty()) {
    head = stage("head", [&] { return load_head(spec.head); });
    uncertainties = stage("score", [&] {
      return score_uncertainties(head->params, embeddings, spec.threads);
    });
  } else {
    uncertainties = stage("uncertainties", [&] {
      auto u = load_uncertainties(spec.uncertainties);
      if (u.count() != embeddings.count) {
        throw ValidationError("count mismatch: " + std::to_string(u.count()) +
                              " uncertainties vs " + std::to_string(embeddings.count) +
                              " embeddings");
      }
      return u;
    });
  }

  const NeighborIndex neighbors = stage(
      "neighbors", [&] { return nearest_neighbors(embeddings, spec.metric, spec.threads); });

  std::vector<LAKind> kinds = spec.metrics;
  if (kinds.empty()) {
    kinds = spec.label_kind == LabelKind::multilabel
                ? std::vector<LAKind>{LAKind::one, LAKind::all, LAKind::pct}
                : std::vector<LAKind>{LAKind::seg_all, LAKind::patches, LAKind::pd,
                                      LAKind::patches_pd};
  }

  EvalReport report;
  for (LAKind kind : kinds) {
    const std::string tag = std::string("la:") + to_string(kind);
    const LAVector la = stage(tag, [&] {
      return spec.label_kind == LabelKind::multilabel
                 ? dataset_la(std::get<MultiLabelSet>(labels), neighbors, kind, spec.p)
                 : dataset_la(std::get<SegMaskSet>(labels), neighbors, kind, spec.p);
    });
    MetricReport mr;
    mr.kind = kind;
    mr.p = spec.p;
    mr.la_mean = la.mean();
    mr.excluded = la.excluded_count();
    mr.la_cpa = stage(std::string("cpa:") + to_string(kind),
                      [&] { return la_cpa(uncertainties.values, la); });
    report.metrics.push_back(mr);
  }

  if (!spec.losses.empty()) {
    const LossVector losses = stage("losses", [&] {
      auto l = load_loss(spec.losses);
      check_aligned(embeddings, l);
      return l;
    });
    report.discard =
        stage("discard", [&] { return discard_test(uncertainties, losses, spec.fractions); });
  }

  if (!spec.noisy_embeddings.empty()) {
    if (!head.has_value()) {
      throw ValidationError("eval/shift",
                            "noisy_embeddings requires a head file to score them");
    }
    const EmbeddingSet noisy =
        stage("shift", [&] { return load_embeddings(spec.noisy_embeddings); });
    const UncertaintyVector u_noisy = stage(
        "shift", [&] { return score_uncertainties(head->params, noisy, spec.threads); });
    report.shift = stage("shift", [&] { return noise_shift(uncertainties, u_noisy); });
  }

  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["metrics"] = nlohmann::json::array();
  for (const auto& m : metrics) {
    nlohmann::json entry{{"kind", to_string(m.kind)},
                         {"p", m.p},
                         {"la_mean", m.la_mean},
                         {"excluded", m.excluded}};
    if (m.la_cpa.has_value()) {
      entry["la_cpa"] = *m.la_cpa;
    } else {
      entry["la_cpa"] = nullptr;
    }
    j["metrics"].push_back(entry);
  }
  if (discard.has_value()) {
    j["discard"] = {{"fractions", discard->fractions},
                    {"mean_loss", discard->mean_loss},
                    {"mf", discard->mf}};
  } else {
    j["discard"] = nullptr;
  }
  if (shift.has_value()) {
    j["shift"] = {{"clean_count", shift->clean_count},
                  {"noisy_count", shift->noisy_count},
                  {"clean_mean", shift->clean_mean},
                  {"noisy_mean", shift->noisy_mean},
                  {"mean_diff", shift->mean_diff},
                  {"clean_median", shift->clean_median},
                  {"noisy_median", shift->noisy_median},
                  {"median_diff", shift->median_diff},
                  {"p_noisy_greater", shift->p_noisy_greater},
                  {"shifted", shift->shifted}};
  } else {
    j["shift"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::metrics_csv() const {
  std::string out = "kind,p,la_mean,la_cpa,excluded\n";
  for (const auto& m : metrics) {
    out += to_string(m.kind);
    out += ',';
    out += std::to_string(m.p);
    out += ',';
    out += detail::format_double(m.la_mean);
    out += ',';
    out += m.la_cpa.has_value() ? detail::format_double(*m.la_cpa) : std::string("undefined");
    out += ',';
    out += std::to_string(m.excluded);
    out += '\n';
  }
  return out;
}

std::string discard_curve_csv(const DiscardCurve& curve) {
  std::string out = "fraction,mean_loss\n";
  for (std::size_t i = 0; i < curve.fractions.size(); ++i) {
    out += detail::format_double(curve.fractions[i]);
    out += ',';
    out += detail::format_double(curve.mean_loss[i]);
    out += '\n';
  }
  return out;
}

}  // namespace ruq
