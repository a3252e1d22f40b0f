#pragma once

#include <optional>
#include <span>

#include "ruq/lametrics.hpp"

namespace ruq {

// Probability of concordance with 0.5 credit for predictor ties
// (Mann-Whitney convention). outcome entries must be 0 or 1 with both
// classes present. O(n log n).
double auroc(std::span<const double> predictor, std::span<const double> binary_outcome);

// Coefficient of predictive ability: the outcome's m unique values induce
// m-1 binarizations 1{y >= z_{c+1}}; CPA is the average of their AUROCs
// weighted by w_c = (#below) * (#at-or-above), i.e. the number of outcome
// pairs each threshold separates. Reduces exactly to auroc for binary
// outcomes. Requires at least two distinct outcome values. O(m n + n log n).
double cpa(std::span<const double> predictor, std::span<const double> outcome);

// Literal construction: materializes every derived binary problem and scores
// it with a quadratic pair-counting AUROC. Differential-testing oracle.
double cpa_bruteforce(std::span<const double> predictor, std::span<const double> outcome);

// CPA of uncertainty against 1 - LA over the included samples, so that high
// uncertainty predicting low label agreement scores high. nullopt when the
// LA values are constant (the score is undefined, not a number).
std::optional<double> la_cpa(std::span<const double> uncertainty, const LAVector& la);

}  // namespace ruq
