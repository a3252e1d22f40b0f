#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ruq/cpa.hpp"
#include "ruq/datamodel.hpp"
#include "ruq/lametrics.hpp"
#include "ruq/retrieval.hpp"
#include "ruq/unchead.hpp"

namespace ruq {

struct UncertaintyVector {
  std::vector<double> values;  // > 0, finite
  std::string source;          // head identifier

  std::size_t count() const { return values.size(); }
  void validate() const;
};

UncertaintyVector load_uncertainties(const std::filesystem::path& path);
void save_uncertainties(const UncertaintyVector& u, const std::filesystem::path& path);

// values[i] = forward(params, e_i). Deterministic; parallelizes over rows.
UncertaintyVector score_uncertainties(const HeadParams& params, const EmbeddingSet& embeddings,
                                      unsigned threads = 1);

// Discard test: sort by uncertainty descending (ties by index), drop the
// ceil(i*n/n_fractions) most uncertain samples at step i and record the mean
// loss of the remainder. mf is the fraction of adjacent steps where the
// curve does not increase.
struct DiscardCurve {
  std::vector<double> fractions;  // strictly increasing, in [0, 1)
  std::vector<double> mean_loss;
  double mf = 0.0;
};

DiscardCurve discard_test(const UncertaintyVector& uncertainties, const LossVector& losses,
                          std::size_t n_fractions = 200);

// Per-sample aggregation of pixel loss maps into a LossVector.
LossVector max_pixel_loss_aggregate(const PixelLossMaps& maps);
LossVector mean_pixel_loss_aggregate(const PixelLossMaps& maps);

// Per-token uncertainty map: each token is fed independently through the
// trained head; the spatial layout is preserved.
struct UncertaintyMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_px = 16;
  std::vector<double> values;  // rows * cols, all > 0

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

UncertaintyMap localized_uncertainty(const HeadParams& params, const TokenGrid& grid);

// Distribution comparison between a clean and a noisy uncertainty set.
// p_noisy_greater is the Mann-Whitney estimate of P(u_noisy > u_clean) with
// 0.5 credit for ties.
struct ShiftSummary {
  std::size_t clean_count = 0;
  std::size_t noisy_count = 0;
  double clean_mean = 0.0;
  double noisy_mean = 0.0;
  double mean_diff = 0.0;  // noisy - clean
  double clean_median = 0.0;
  double noisy_median = 0.0;
  double median_diff = 0.0;
  double p_noisy_greater = 0.5;
  bool shifted = false;  // p_noisy_greater > 0.5
};

ShiftSummary noise_shift(const UncertaintyVector& clean, const UncertaintyVector& noisy);

// Raw histogram of the two uncertainty distributions over shared
// equal-width bins, as CSV (bin_lo,bin_hi,clean_count,noisy_count) for
// external plotting.
std::string shift_histogram_csv(const UncertaintyVector& clean, const UncertaintyVector& noisy,
                                std::size_t bins = 32);

// Declarative description of one evaluation run, loadable from JSON.
// Relative paths resolve against the spec file's directory.
struct RunSpec {
  std::filesystem::path embeddings;
  std::filesystem::path labels;
  LabelKind label_kind = LabelKind::multilabel;
  std::filesystem::path losses;             // optional; enables the discard test
  std::filesystem::path head;               // either head or uncertainties required
  std::filesystem::path uncertainties;
  std::filesystem::path noisy_embeddings;   // optional; enables the shift summary
  std::vector<LAKind> metrics;              // empty = all kinds valid for label_kind
  std::size_t p = 3;
  Metric metric = Metric::cosine;
  std::size_t fractions = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  static RunSpec from_json_file(const std::filesystem::path& path);
  static RunSpec from_json_text(const std::string& text,
                                const std::filesystem::path& base_dir);
};

struct MetricReport {
  LAKind kind;
  std::size_t p = 3;
  double la_mean = 0.0;
  std::optional<double> la_cpa;  // nullopt = undefined (constant LA)
  std::size_t excluded = 0;
};

struct EvalReport {
  std::vector<MetricReport> metrics;
  std::optional<DiscardCurve> discard;
  std::optional<ShiftSummary> shift;

  std::string to_json() const;     // deterministic, byte-stable across reruns
  std::string metrics_csv() const; // one row per metric kind
};

std::string discard_curve_csv(const DiscardCurve& curve);

// Binds retrieval -> lametrics -> cpa -> discard into one run. Errors are
// tagged with the stage that raised them.
EvalReport evaluate(const RunSpec& spec);

}  // namespace ruq
