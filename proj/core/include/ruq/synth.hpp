#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ruq/datamodel.hpp"
#include "ruq/lametrics.hpp"
#include "ruq/retrieval.hpp"

namespace ruq {

// Synthetic dataset with a planted, analytically known uncertainty signal:
// class-conditional Gaussian clusters whose per-sample noise scale is drawn
// from {noise_low, noise_high}, and a task loss that increases monotonically
// with the noise scale. High-noise samples drift away from their cluster, so
// their nearest neighbor degrades while their loss rises - exactly the
// signal a loss-predicting head should recover.
struct SynthSpec {
  std::size_t n = 2000;
  std::size_t d = 16;
  std::size_t num_classes = 8;
  std::size_t clusters = 8;  // <= num_classes
  LabelKind kind = LabelKind::multilabel;
  std::size_t mask_height = 24;  // segmask only
  std::size_t mask_width = 24;
  double separation = 8.0;    // cluster center norm
  double noise_low = 1.0;
  double noise_high = 4.0;
  double high_fraction = 0.5;  // probability of drawing the high noise scale
  // loss_fn(scale) = loss_intercept + loss_slope * scale, slope > 0
  double loss_slope = 1.0;
  double loss_intercept = 0.0;
  double jitter_amplitude = 0.01;  // tie-break jitter, fraction of loss range
  std::uint64_t seed = 0;

  void validate() const;
};

// The planted preset used throughout the verification suites.
SynthSpec planted_preset(std::uint64_t seed);

struct GroundTruth {
  std::vector<double> noise_scale;        // per-sample sigma
  std::vector<std::uint8_t> high_noise;   // 1 = drawn from noise_high
  std::optional<double> analytic_la_cpa;  // unset: not derivable for this generator
};

struct SynthDataset {
  EmbeddingSet embeddings;
  MultiLabelSet multilabel;  // populated when spec.kind == multilabel
  SegMaskSet segmask;        // populated when spec.kind == segmask
  LossVector losses;
  GroundTruth truth;
};

SynthDataset generate(const SynthSpec& spec);

// Naive re-implementation of the dataset-level LA@1 pipeline: nested-loop
// nearest neighbor plus from-scratch metric formulas, sharing no code with
// the retrieval or lametrics modules. Differential-testing oracle.
LAVector oracle_la(const MultiLabelSet& labels, const EmbeddingSet& embeddings, Metric metric,
                   LAKind kind, std::size_t p = 3);
LAVector oracle_la(const SegMaskSet& labels, const EmbeddingSet& embeddings, Metric metric,
                   LAKind kind, std::size_t p = 3);

// Oracle-equivalence suites runnable from the CLI selftest command.
struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelftestResult> run_selftests(std::uint64_t seed = 1234);

}  // namespace ruq
