#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ruq/datamodel.hpp"

namespace ruq {

// Training objective for the head. The margin-ranking objective is the
// default; the plain squared-error loss regression is kept for comparison.
enum class Objective { ranking, l2 };

Objective objective_from_string(const std::string& s);
const char* to_string(Objective o);

struct HeadConfig {
  std::size_t input_dim = 0;
  std::size_t unc_width = 512;
  double margin = 0.1;
  std::size_t epochs = 1000;
  std::size_t warmup_epochs = 50;
  double base_lr = 1e-4;
  double final_lr = 1e-8;
  double weight_decay = 0.1;
  double beta1 = 0.8;
  double beta2 = 0.95;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  double leaky_slope = 0.01;
  Objective objective = Objective::ranking;
  bool skip_tied_pairs = false;

  void validate() const;
};

// Two-hidden-layer MLP with LeakyReLU hidden activations and a Softplus
// output, so emitted uncertainties are always positive. Weight matrices are
// stored row-major with the input index first: w1 is input_dim x width.
struct HeadParams {
  std::size_t input_dim = 0;
  std::size_t width = 0;
  double leaky_slope = 0.01;
  std::vector<double> w1, b1;  // input_dim x width, width
  std::vector<double> w2, b2;  // width x width, width
  std::vector<double> w3, b3;  // width, 1

  void check_finite() const;  // throws on NaN/Inf anywhere
};

// Gradient accumulator with the same tensor shapes as HeadParams.
struct HeadGradients {
  std::vector<double> w1, b1, w2, b2, w3, b3;

  static HeadGradients zeros_like(const HeadParams& params);
  void set_zero();
  void scale(double s);
};

// AdamW first/second moments, one pair of buffers per parameter tensor.
struct AdamWState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;

  static AdamWState zeros_like(const HeadParams& params);
};

struct TrainingLog {
  std::vector<double> mean_loss;        // per-epoch mean objective value
  std::vector<double> lr;               // learning rate used that epoch
  std::vector<double> pair_agreement;   // fraction of pairs ordered with margin met
};

struct TrainResult {
  HeadParams params;
  TrainingLog log;
};

// Glorot-style uniform init, fully determined by config.seed. Biases zero.
HeadParams init_head(const HeadConfig& config);

// u = softplus(w3 . lrelu(W2^T lrelu(W1^T e + b1) + b2) + b3) > 0.
double forward(const HeadParams& params, std::span<const float> input);
double forward(const HeadParams& params, std::span<const double> input);

// Margin ranking hinge: loss = max(0, margin - ind * (u1 - u2)) with
// ind = +1 when l1 > l2 and -1 otherwise (ties included).
struct RankingLoss {
  double loss = 0.0;
  int indicator = -1;
  bool active = false;  // true when the hinge is in its linear region
};
RankingLoss ranking_loss(double u1, double u2, double l1, double l2, double margin);

// Exact gradient of ranking_loss w.r.t. all parameters for one pair;
// overwrites `out` and returns the pair loss. Zero everywhere when the
// hinge is inactive.
double ranking_loss_grad(const HeadParams& params, std::span<const float> e1,
                         std::span<const float> e2, double l1, double l2, double margin,
                         HeadGradients& out);

// Constant base_lr through the warmup epochs, then cosine decay reaching
// final_lr exactly at the last epoch.
double lr_at_epoch(std::size_t epoch, const HeadConfig& config);

// One decoupled-weight-decay Adam step: param -= lr*wd*param first, then the
// bias-corrected moment update with eps = 1e-8. Throws on non-finite
// gradients.
void adamw_step(HeadParams& params, const HeadGradients& grads, AdamWState& state, double lr,
                const HeadConfig& config);

// Full training loop: seeded shuffle per epoch, fixed-size batches, one
// uniformly drawn distinct in-batch partner per element, one adamw_step per
// batch on the mean pair gradient. Deterministic for a fixed (seed, config,
// data) triple.
TrainResult train_head(const EmbeddingSet& embeddings, const LossVector& losses,
                       const HeadConfig& config);

// Head file: JSON manifest with the config and tensor directory, then the
// f64 tensor payloads. Round-trips bit-exactly.
void save_head(const HeadParams& params, const HeadConfig& config,
               const std::filesystem::path& path);

struct LoadedHead {
  HeadParams params;
  HeadConfig config;
};
LoadedHead load_head(const std::filesystem::path& path);

}  // namespace ruq
