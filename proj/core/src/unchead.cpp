#include "ruq/unchead.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "binfile.hpp"
#include "numeric.hpp"
#include "ruq/detail/rng.hpp"

namespace ruq {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using ConstMatMap = Eigen::Map<const Mat>;
using MatMap = Eigen::Map<Mat>;
using ConstVecMap = Eigen::Map<const Vec>;
using VecMap = Eigen::Map<Vec>;

double lrelu(double x, double slope) { return x > 0.0 ? x : slope * x; }
double lrelu_deriv(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

void check_input_dim(const HeadParams& params, std::size_t got) {
  if (got != params.input_dim) {
    throw ValidationError("input dimension mismatch: head expects " +
                          std::to_string(params.input_dim) + ", got " + std::to_string(got));
  }
}

}  // namespace

Objective objective_from_string(const std::string& s) {
  if (s == "ranking") return Objective::ranking;
  if (s == "l2") return Objective::l2;
  throw ValidationError("unknown objective \"" + s + "\" (expected ranking or l2)");
}

const char* to_string(Objective o) { return o == Objective::ranking ? "ranking" : "l2"; }

void HeadConfig::validate() const {
  if (input_dim == 0) throw ValidationError("input_dim must be positive");
  if (unc_width == 0) throw ValidationError("unc_width must be positive");
  if (margin <= 0.0) throw ValidationError("margin must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (final_lr <= 0.0 || final_lr > base_lr) {
    throw ValidationError("need 0 < final_lr <= base_lr");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ValidationError("betas must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw ValidationError("weight_decay must be non-negative");
  if (batch_size < 2) throw ValidationError("batch_size must be at least 2");
  if (leaky_slope < 0.0) throw ValidationError("leaky_slope must be non-negative");
}

void HeadParams::check_finite() const {
  for (const auto* t : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    for (double v : *t) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("non-finite head parameter encountered");
      }
    }
  }
}

HeadGradients HeadGradients::zeros_like(const HeadParams& p) {
  HeadGradients g;
  g.w1.assign(p.w1.size(), 0.0);
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2.assign(p.b2.size(), 0.0);
  g.w3.assign(p.w3.size(), 0.0);
  g.b3.assign(p.b3.size(), 0.0);
  return g;
}

void HeadGradients::set_zero() {
  for (auto* t : {&w1, &b1, &w2, &b2, &w3, &b3}) std::fill(t->begin(), t->end(), 0.0);
}

void HeadGradients::scale(double s) {
  for (auto* t : {&w1, &b1, &w2, &b2, &w3, &b3}) {
    for (double& v : *t) v *= s;
  }
}

AdamWState AdamWState::zeros_like(const HeadParams& p) {
  AdamWState s;
  for (const auto* t : {&p.w1, &p.b1, &p.w2, &p.b2, &p.w3, &p.b3}) {
    s.m.emplace_back(t->size(), 0.0);
    s.v.emplace_back(t->size(), 0.0);
  }
  return s;
}

HeadParams init_head(const HeadConfig& config) {
  config.validate();
  const std::size_t d = config.input_dim;
  const std::size_t w = config.unc_width;
  HeadParams p;
  p.input_dim = d;
  p.width = w;
  p.leaky_slope = config.leaky_slope;
  p.w1.resize(d * w);
  p.b1.assign(w, 0.0);
  p.w2.resize(w * w);
  p.b2.assign(w, 0.0);
  p.w3.resize(w);
  p.b3.assign(1, 0.0);

  detail::Rng rng(config.seed);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(d + w));
  const double lim2 = std::sqrt(6.0 / static_cast<double>(w + w));
  const double lim3 = std::sqrt(6.0 / static_cast<double>(w + 1));
  for (double& v : p.w1) v = rng.uniform(-lim1, lim1);
  for (double& v : p.w2) v = rng.uniform(-lim2, lim2);
  for (double& v : p.w3) v = rng.uniform(-lim3, lim3);
  return p;
}

// ---------------------------------------------------------------------------
// Scalar forward / backward

namespace {

struct ScalarTrace {
  std::vector<double> z1, a1, z2, a2;
  double y = 0.0;
  double u = 0.0;
};

void scalar_forward(const HeadParams& p, const double* x, ScalarTrace& t) {
  const std::size_t d = p.input_dim;
  const std::size_t w = p.width;
  t.z1.assign(p.b1.begin(), p.b1.end());
  for (std::size_t k = 0; k < d; ++k) {
    const double xk = x[k];
    const double* row = p.w1.data() + k * w;
    for (std::size_t j = 0; j < w; ++j) t.z1[j] += xk * row[j];
  }
  t.a1.resize(w);
  for (std::size_t j = 0; j < w; ++j) t.a1[j] = lrelu(t.z1[j], p.leaky_slope);

  t.z2.assign(p.b2.begin(), p.b2.end());
  for (std::size_t k = 0; k < w; ++k) {
    const double ak = t.a1[k];
    const double* row = p.w2.data() + k * w;
    for (std::size_t j = 0; j < w; ++j) t.z2[j] += ak * row[j];
  }
  t.a2.resize(w);
  for (std::size_t j = 0; j < w; ++j) t.a2[j] = lrelu(t.z2[j], p.leaky_slope);

  double y = p.b3[0];
  for (std::size_t j = 0; j < w; ++j) y += t.a2[j] * p.w3[j];
  t.y = y;
  t.u = detail::softplus(y);
}

// Backward for one sample: du is dLoss/du at the head output; accumulates
// into g.
void scalar_backward(const HeadParams& p, const double* x, const ScalarTrace& t, double du,
                     HeadGradients& g) {
  const std::size_t d = p.input_dim;
  const std::size_t w = p.width;
  const double dy = du * detail::logistic(t.y);

  std::vector<double> da2(w), dz2(w), da1(w, 0.0), dz1(w);
  for (std::size_t j = 0; j < w; ++j) {
    g.w3[j] += t.a2[j] * dy;
    da2[j] = dy * p.w3[j];
    dz2[j] = da2[j] * lrelu_deriv(t.z2[j], p.leaky_slope);
  }
  g.b3[0] += dy;

  for (std::size_t k = 0; k < w; ++k) {
    const double ak = t.a1[k];
    const double* row = p.w2.data() + k * w;
    double* grow = g.w2.data() + k * w;
    double acc = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      grow[j] += ak * dz2[j];
      acc += row[j] * dz2[j];
    }
    da1[k] = acc;
  }
  for (std::size_t j = 0; j < w; ++j) {
    g.b2[j] += dz2[j];
    dz1[j] = da1[j] * lrelu_deriv(t.z1[j], p.leaky_slope);
  }

  for (std::size_t k = 0; k < d; ++k) {
    const double xk = x[k];
    double* grow = g.w1.data() + k * w;
    for (std::size_t j = 0; j < w; ++j) grow[j] += xk * dz1[j];
  }
  for (std::size_t j = 0; j < w; ++j) g.b1[j] += dz1[j];
}

std::vector<double> to_double(std::span<const float> x) {
  return std::vector<double>(x.begin(), x.end());
}

}  // namespace

double forward(const HeadParams& params, std::span<const double> input) {
  check_input_dim(params, input.size());
  ScalarTrace t;
  scalar_forward(params, input.data(), t);
  return t.u;
}

double forward(const HeadParams& params, std::span<const float> input) {
  const auto x = to_double(input);
  return forward(params, std::span<const double>(x));
}

RankingLoss ranking_loss(double u1, double u2, double l1, double l2, double margin) {
  RankingLoss r;
  r.indicator = l1 > l2 ? 1 : -1;
  const double z = margin - static_cast<double>(r.indicator) * (u1 - u2);
  r.active = z > 0.0;
  r.loss = r.active ? z : 0.0;
  return r;
}

double ranking_loss_grad(const HeadParams& params, std::span<const float> e1,
                         std::span<const float> e2, double l1, double l2, double margin,
                         HeadGradients& out) {
  check_input_dim(params, e1.size());
  check_input_dim(params, e2.size());
  out.set_zero();
  const auto x1 = to_double(e1);
  const auto x2 = to_double(e2);
  ScalarTrace t1, t2;
  scalar_forward(params, x1.data(), t1);
  scalar_forward(params, x2.data(), t2);
  const RankingLoss r = ranking_loss(t1.u, t2.u, l1, l2, margin);
  if (r.active) {
    scalar_backward(params, x1.data(), t1, -static_cast<double>(r.indicator), out);
    scalar_backward(params, x2.data(), t2, +static_cast<double>(r.indicator), out);
  }
  return r.loss;
}

double lr_at_epoch(std::size_t epoch, const HeadConfig& config) {
  if (epoch >= config.epochs) {
    throw ValidationError("epoch " + std::to_string(epoch) + " out of range [0, " +
                          std::to_string(config.epochs) + ")");
  }
  if (epoch < config.warmup_epochs) return config.base_lr;
  if (config.epochs - 1 <= config.warmup_epochs) return config.final_lr;
  const double span = static_cast<double>(config.epochs - 1 - config.warmup_epochs);
  const double t = static_cast<double>(epoch - config.warmup_epochs) / span;
  if (t >= 1.0) return config.final_lr;
  constexpr double kPi = 3.14159265358979323846;
  return config.final_lr +
         0.5 * (config.base_lr - config.final_lr) * (1.0 + std::cos(kPi * t));
}

namespace {

void adamw_update_tensor(std::vector<double>& p, const std::vector<double>& g,
                         std::vector<double>& m, std::vector<double>& v, double lr,
                         const HeadConfig& cfg, std::uint64_t step, const char* name) {
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  constexpr double kEps = 1e-8;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw std::runtime_error("non-finite gradient in tensor " + std::string(name) +
                               " at index " + std::to_string(i) + " (step " +
                               std::to_string(step) + ")");
    }
    p[i] -= lr * cfg.weight_decay * p[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + kEps);
  }
}

}  // namespace

void adamw_step(HeadParams& params, const HeadGradients& grads, AdamWState& state, double lr,
                const HeadConfig& config) {
  if (grads.w1.size() != params.w1.size() || grads.w2.size() != params.w2.size() ||
      grads.w3.size() != params.w3.size()) {
    throw ValidationError("gradient shape does not match parameters");
  }
  state.step += 1;
  adamw_update_tensor(params.w1, grads.w1, state.m[0], state.v[0], lr, config, state.step, "w1");
  adamw_update_tensor(params.b1, grads.b1, state.m[1], state.v[1], lr, config, state.step, "b1");
  adamw_update_tensor(params.w2, grads.w2, state.m[2], state.v[2], lr, config, state.step, "w2");
  adamw_update_tensor(params.b2, grads.b2, state.m[3], state.v[3], lr, config, state.step, "b2");
  adamw_update_tensor(params.w3, grads.w3, state.m[4], state.v[4], lr, config, state.step, "w3");
  adamw_update_tensor(params.b3, grads.b3, state.m[5], state.v[5], lr, config, state.step, "b3");
}

// ---------------------------------------------------------------------------
// Batched training

namespace {

struct BatchTrace {
  Mat x, z1, a1, z2, a2;
  Vec y, u;
};

void batch_forward(const HeadParams& p, const EmbeddingSet& e,
                   const std::vector<std::size_t>& rows, BatchTrace& t) {
  const auto b = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(p.input_dim);
  const auto w = static_cast<Eigen::Index>(p.width);
  const double slope = p.leaky_slope;

  t.x.resize(b, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const float* r = e.row(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < d; ++k) t.x(i, k) = static_cast<double>(r[k]);
  }

  ConstMatMap w1(p.w1.data(), d, w);
  ConstMatMap w2(p.w2.data(), w, w);
  ConstVecMap w3(p.w3.data(), w);
  ConstVecMap b1(p.b1.data(), w);
  ConstVecMap b2(p.b2.data(), w);

  t.z1.noalias() = t.x * w1;
  t.z1.rowwise() += b1.transpose();
  t.a1 = t.z1.unaryExpr([slope](double x) { return lrelu(x, slope); });
  t.z2.noalias() = t.a1 * w2;
  t.z2.rowwise() += b2.transpose();
  t.a2 = t.z2.unaryExpr([slope](double x) { return lrelu(x, slope); });
  t.y.noalias() = t.a2 * w3;
  t.y.array() += p.b3[0];
  t.u = t.y.unaryExpr([](double x) { return detail::softplus(x); });
}

void batch_backward(const HeadParams& p, const BatchTrace& t, const Vec& du,
                    HeadGradients& g) {
  const auto d = static_cast<Eigen::Index>(p.input_dim);
  const auto w = static_cast<Eigen::Index>(p.width);
  const double slope = p.leaky_slope;

  ConstMatMap w2(p.w2.data(), w, w);
  ConstVecMap w3(p.w3.data(), w);
  MatMap gw1(g.w1.data(), d, w);
  MatMap gw2(g.w2.data(), w, w);
  VecMap gw3(g.w3.data(), w);
  VecMap gb1(g.b1.data(), w);
  VecMap gb2(g.b2.data(), w);

  const Vec dy =
      du.array() * t.y.unaryExpr([](double x) { return detail::logistic(x); }).array();
  gw3.noalias() += t.a2.transpose() * dy;
  g.b3[0] += dy.sum();

  Mat dz2 = dy * w3.transpose();
  dz2.array() *= t.z2.unaryExpr([slope](double x) { return lrelu_deriv(x, slope); }).array();
  gw2.noalias() += t.a1.transpose() * dz2;
  gb2.noalias() += dz2.colwise().sum().transpose();

  Mat dz1 = dz2 * w2.transpose();
  dz1.array() *= t.z1.unaryExpr([slope](double x) { return lrelu_deriv(x, slope); }).array();
  gw1.noalias() += t.x.transpose() * dz1;
  gb1.noalias() += dz1.colwise().sum().transpose();
}

}  // namespace

TrainResult train_head(const EmbeddingSet& embeddings, const LossVector& losses,
                       const HeadConfig& config_in) {
  HeadConfig cfg = config_in;
  if (cfg.input_dim == 0) cfg.input_dim = embeddings.dim;
  cfg.validate();
  embeddings.validate();
  losses.validate();
  check_aligned(embeddings, losses);
  if (cfg.input_dim != embeddings.dim) {
    throw ValidationError("config input_dim " + std::to_string(cfg.input_dim) +
                          " does not match embedding dim " + std::to_string(embeddings.dim));
  }
  const std::size_t n = embeddings.count;
  if (n == 0) throw ValidationError("empty dataset");
  if (n < cfg.batch_size) {
    throw ValidationError("need n >= batch_size (" + std::to_string(n) + " < " +
                          std::to_string(cfg.batch_size) + ")");
  }

  TrainResult result;
  result.params = init_head(cfg);
  HeadParams& params = result.params;
  AdamWState state = AdamWState::zeros_like(params);
  HeadGradients grads = HeadGradients::zeros_like(params);

  // Decorrelated stream for shuffles and pair draws; init_head consumed the
  // raw seed already.
  detail::Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  result.log.mean_loss.reserve(cfg.epochs);
  result.log.lr.reserve(cfg.epochs);
  result.log.pair_agreement.reserve(cfg.epochs);

  BatchTrace t1, t2;
  std::vector<std::size_t> side1, side2;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);
    rng.shuffle(perm);

    double loss_sum = 0.0;
    std::size_t pair_count = 0;
    std::size_t agree_count = 0;

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      if (b < 2 && cfg.objective == Objective::ranking) continue;

      side1.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                   perm.begin() + static_cast<std::ptrdiff_t>(start + b));

      if (cfg.objective == Objective::ranking) {
        // Each element gets one uniformly drawn distinct in-batch partner.
        side2.resize(b);
        for (std::size_t i = 0; i < b; ++i) {
          std::size_t j = static_cast<std::size_t>(rng.below(b - 1));
          if (j >= i) ++j;
          side2[i] = side1[j];
        }

        batch_forward(params, embeddings, side1, t1);
        batch_forward(params, embeddings, side2, t2);

        Vec du1 = Vec::Zero(static_cast<Eigen::Index>(b));
        Vec du2 = Vec::Zero(static_cast<Eigen::Index>(b));
        std::size_t kept = 0;
        double batch_loss = 0.0;
        std::size_t batch_agree = 0;
        for (std::size_t i = 0; i < b; ++i) {
          const double l1 = losses.values[side1[i]];
          const double l2 = losses.values[side2[i]];
          if (cfg.skip_tied_pairs && l1 == l2) continue;
          const RankingLoss r = ranking_loss(t1.u(static_cast<Eigen::Index>(i)),
                                             t2.u(static_cast<Eigen::Index>(i)), l1, l2,
                                             cfg.margin);
          ++kept;
          batch_loss += r.loss;
          batch_agree += r.active ? 0 : 1;
          if (r.active) {
            du1(static_cast<Eigen::Index>(i)) = -static_cast<double>(r.indicator);
            du2(static_cast<Eigen::Index>(i)) = +static_cast<double>(r.indicator);
          }
        }
        if (kept == 0) continue;

        const double inv = 1.0 / static_cast<double>(kept);
        du1 *= inv;
        du2 *= inv;
        grads.set_zero();
        batch_backward(params, t1, du1, grads);
        batch_backward(params, t2, du2, grads);
        adamw_step(params, grads, state, lr, cfg);

        loss_sum += batch_loss;
        pair_count += kept;
        agree_count += batch_agree;
      } else {
        batch_forward(params, embeddings, side1, t1);
        Vec du(static_cast<Eigen::Index>(b));
        double batch_loss = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          const double diff =
              t1.u(static_cast<Eigen::Index>(i)) - losses.values[side1[i]];
          batch_loss += diff * diff;
          du(static_cast<Eigen::Index>(i)) = 2.0 * diff / static_cast<double>(b);
        }
        grads.set_zero();
        batch_backward(params, t1, du, grads);
        adamw_step(params, grads, state, lr, cfg);
        loss_sum += batch_loss;
        pair_count += b;
      }
    }

    if (pair_count == 0) {
      throw ValidationError("no trainable pairs in epoch " + std::to_string(epoch));
    }
    const double mean_loss = loss_sum / static_cast<double>(pair_count);
    if (!std::isfinite(mean_loss)) {
      throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
    }
    result.log.mean_loss.push_back(mean_loss);
    result.log.lr.push_back(lr);
    result.log.pair_agreement.push_back(
        cfg.objective == Objective::ranking
            ? static_cast<double>(agree_count) / static_cast<double>(pair_count)
            : 0.0);
  }

  params.check_finite();
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json config_to_json(const HeadConfig& c) {
  return nlohmann::json{{"input_dim", c.input_dim},
                        {"unc_width", c.unc_width},
                        {"margin", c.margin},
                        {"epochs", c.epochs},
                        {"warmup_epochs", c.warmup_epochs},
                        {"base_lr", c.base_lr},
                        {"final_lr", c.final_lr},
                        {"weight_decay", c.weight_decay},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"batch_size", c.batch_size},
                        {"seed", c.seed},
                        {"leaky_slope", c.leaky_slope},
                        {"objective", to_string(c.objective)},
                        {"skip_tied_pairs", c.skip_tied_pairs}};
}

HeadConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& path) {
  HeadConfig c;
  try {
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.unc_width = j.at("unc_width").get<std::size_t>();
    c.margin = j.at("margin").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.warmup_epochs = j.at("warmup_epochs").get<std::size_t>();
    c.base_lr = j.at("base_lr").get<double>();
    c.final_lr = j.at("final_lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.objective = objective_from_string(j.at("objective").get<std::string>());
    c.skip_tied_pairs = j.at("skip_tied_pairs").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad head config in " + path.string() + ": " + e.what());
  }
  return c;
}

struct TensorEntry {
  const char* name;
  const std::vector<double>* data;
};

std::vector<TensorEntry> tensor_list(const HeadParams& p) {
  return {{"w1", &p.w1}, {"b1", &p.b1}, {"w2", &p.w2},
          {"b2", &p.b2}, {"w3", &p.w3}, {"b3", &p.b3}};
}

}  // namespace

void save_head(const HeadParams& params, const HeadConfig& config,
               const std::filesystem::path& path) {
  params.check_finite();
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<double> payload;
  std::size_t offset = 0;
  for (const auto& t : tensor_list(params)) {
    tensors.push_back({{"name", t.name}, {"offset", offset}, {"count", t.data->size()}});
    payload.insert(payload.end(), t.data->begin(), t.data->end());
    offset += t.data->size();
  }
  nlohmann::json header{{"kind", "head"},
                        {"dtype", "f64"},
                        {"config", config_to_json(config)},
                        {"leaky_slope", params.leaky_slope},
                        {"tensors", tensors}};
  detail::save_container(path, header, payload.data(), payload.size() * 8);
}

LoadedHead load_head(const std::filesystem::path& path) {
  const auto c = detail::load_container(path);
  if (!c.header.contains("kind") || c.header["kind"] != "head") {
    throw ValidationError("not a head file: " + path.string());
  }
  LoadedHead out;
  out.config = config_from_json(c.header.at("config"), path);
  const std::size_t d = out.config.input_dim;
  const std::size_t w = out.config.unc_width;
  out.params.input_dim = d;
  out.params.width = w;
  out.params.leaky_slope = c.header.value("leaky_slope", out.config.leaky_slope);

  const std::size_t total = d * w + w + w * w + w + w + 1;
  detail::check_payload_size(c.payload.size(), total * 8, path);
  std::vector<double> payload(total);
  std::memcpy(payload.data(), c.payload.data(), c.payload.size());

  const std::vector<std::pair<const char*, std::vector<double>*>> dst = {
      {"w1", &out.params.w1}, {"b1", &out.params.b1}, {"w2", &out.params.w2},
      {"b2", &out.params.b2}, {"w3", &out.params.w3}, {"b3", &out.params.b3}};
  if (!c.header.contains("tensors") || !c.header["tensors"].is_array() ||
      c.header["tensors"].size() != dst.size()) {
    throw ValidationError("bad tensor directory in " + path.string());
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& entry = c.header["tensors"][i];
    if (entry.at("name") != dst[i].first) {
      throw ValidationError("unexpected tensor order in " + path.string());
    }
    const std::size_t off = entry.at("offset").get<std::size_t>();
    const std::size_t count = entry.at("count").get<std::size_t>();
    if (off + count > total) {
      throw ValidationError("tensor section out of bounds in " + path.string());
    }
    dst[i].second->assign(payload.begin() + static_cast<std::ptrdiff_t>(off),
                          payload.begin() + static_cast<std::ptrdiff_t>(off + count));
  }
  if (out.params.w1.size() != d * w || out.params.w2.size() != w * w ||
      out.params.w3.size() != w || out.params.b1.size() != w ||
      out.params.b2.size() != w || out.params.b3.size() != 1) {
    throw ValidationError("tensor shapes do not match config in " + path.string());
  }
  out.params.check_finite();
  return out;
}

}  // namespace ruq
