#include "ruq/cpa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace ruq {

namespace {

void check_scored_pairs(std::span<const double> predictor, std::span<const double> outcome) {
  if (predictor.size() != outcome.size()) {
    throw ValidationError("predictor/outcome length mismatch: " +
                          std::to_string(predictor.size()) + " vs " +
                          std::to_string(outcome.size()));
  }
  if (predictor.size() < 2) {
    throw ValidationError("need at least 2 scored pairs");
  }
  for (std::size_t i = 0; i < predictor.size(); ++i) {
    if (!std::isfinite(predictor[i]) || !std::isfinite(outcome[i])) {
      throw ValidationError("non-finite value at index " + std::to_string(i));
    }
  }
}

// Indices sorted by predictor ascending. Equal-predictor runs are handled as
// tie groups by the sweeps below.
std::vector<std::size_t> order_by_predictor(std::span<const double> predictor) {
  std::vector<std::size_t> order(predictor.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return predictor[a] < predictor[b]; });
  return order;
}

// Mann-Whitney U for the labeling is_positive over a predictor-sorted order:
// sum over positives of (#negatives strictly below + 0.5 * #negatives tied).
template <typename IsPositive>
double mann_whitney_u(std::span<const double> predictor,
                      const std::vector<std::size_t>& order, const IsPositive& is_positive,
                      std::size_t& n_pos, std::size_t& n_neg) {
  double u = 0.0;
  double negs_below = 0.0;
  n_pos = 0;
  n_neg = 0;
  std::size_t i = 0;
  const std::size_t n = order.size();
  while (i < n) {
    std::size_t j = i;
    std::size_t group_pos = 0, group_neg = 0;
    while (j < n && predictor[order[j]] == predictor[order[i]]) {
      if (is_positive(order[j])) {
        ++group_pos;
      } else {
        ++group_neg;
      }
      ++j;
    }
    u += static_cast<double>(group_pos) *
         (negs_below + 0.5 * static_cast<double>(group_neg));
    negs_below += static_cast<double>(group_neg);
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  return u;
}

}  // namespace

double auroc(std::span<const double> predictor, std::span<const double> binary_outcome) {
  check_scored_pairs(predictor, binary_outcome);
  for (std::size_t i = 0; i < binary_outcome.size(); ++i) {
    if (binary_outcome[i] != 0.0 && binary_outcome[i] != 1.0) {
      throw ValidationError("outcome is not binary at index " + std::to_string(i));
    }
  }
  const auto order = order_by_predictor(predictor);
  std::size_t n_pos = 0, n_neg = 0;
  const double u = mann_whitney_u(
      predictor, order, [&](std::size_t k) { return binary_outcome[k] == 1.0; }, n_pos, n_neg);
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("outcome has a single class; AUROC undefined");
  }
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double cpa(std::span<const double> predictor, std::span<const double> outcome) {
  check_scored_pairs(predictor, outcome);
  std::vector<double> thresholds(outcome.begin(), outcome.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  if (thresholds.size() < 2) {
    throw ValidationError("outcome is constant; CPA undefined");
  }
  const auto order = order_by_predictor(predictor);
  // CPA = sum_c w_c * AUC_c / sum_c w_c with w_c = n_c^- * n_c^+ and
  // w_c * AUC_c = U_c, so only the per-threshold U values are needed.
  double sum_u = 0.0;
  double sum_w = 0.0;
  for (std::size_t c = 1; c < thresholds.size(); ++c) {
    const double theta = thresholds[c];
    std::size_t n_pos = 0, n_neg = 0;
    const double u = mann_whitney_u(
        predictor, order, [&](std::size_t k) { return outcome[k] >= theta; }, n_pos, n_neg);
    sum_u += u;
    sum_w += static_cast<double>(n_pos) * static_cast<double>(n_neg);
  }
  return sum_u / sum_w;
}

double cpa_bruteforce(std::span<const double> predictor, std::span<const double> outcome) {
  check_scored_pairs(predictor, outcome);
  std::vector<double> thresholds(outcome.begin(), outcome.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  if (thresholds.size() < 2) {
    throw ValidationError("outcome is constant; CPA undefined");
  }
  const std::size_t n = predictor.size();
  double weighted = 0.0;
  double total_weight = 0.0;
  for (std::size_t c = 1; c < thresholds.size(); ++c) {
    // Materialize the derived binary problem ...
    std::vector<double> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = outcome[i] >= thresholds[c] ? 1.0 : 0.0;
    // ... and score it by exhaustive pair counting.
    double u = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] != 1.0) continue;
      ++n_pos;
      for (std::size_t j = 0; j < n; ++j) {
        if (label[j] != 0.0) continue;
        if (predictor[i] > predictor[j]) {
          u += 1.0;
        } else if (predictor[i] == predictor[j]) {
          u += 0.5;
        }
      }
    }
    n_neg = n - n_pos;
    const double auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    const double w = static_cast<double>(n_pos) * static_cast<double>(n_neg);
    weighted += w * auc;
    total_weight += w;
  }
  return weighted / total_weight;
}

std::optional<double> la_cpa(std::span<const double> uncertainty, const LAVector& la) {
  if (uncertainty.size() != la.count()) {
    throw ValidationError("uncertainty/LA length mismatch: " +
                          std::to_string(uncertainty.size()) + " vs " +
                          std::to_string(la.count()));
  }
  std::vector<double> pred;
  std::vector<double> outcome;
  pred.reserve(la.count());
  outcome.reserve(la.count());
  for (std::size_t i = 0; i < la.count(); ++i) {
    if (!la.included[i]) continue;
    pred.push_back(uncertainty[i]);
    outcome.push_back(1.0 - la.values[i]);
  }
  if (pred.size() < 2) return std::nullopt;
  const bool constant =
      std::all_of(outcome.begin(), outcome.end(), [&](double v) { return v == outcome[0]; });
  if (constant) return std::nullopt;
  return cpa(pred, outcome);
}

}  // namespace ruq
