#include "ruq/retrieval.hpp"

#include <cmath>
#include <limits>

#include "ruq/detail/parallel.hpp"

namespace ruq {

namespace {

// Sequential accumulation everywhere: the optimized path and the brute-force
// oracle must agree bit for bit so that argmax tie-breaking is identical.
double dot_seq(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

double sq_dist_seq(const float* a, const float* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = static_cast<double>(a[k]) - static_cast<double>(b[k]);
    s += diff * diff;
  }
  return s;
}

std::vector<double> normalize_row(const float* r, std::size_t d, std::size_t row_index) {
  double sq = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    sq += static_cast<double>(r[k]) * static_cast<double>(r[k]);
  }
  const double norm = std::sqrt(sq);
  if (norm == 0.0) {
    throw ValidationError("zero-norm row " + std::to_string(row_index) +
                          " under cosine metric");
  }
  std::vector<double> unit(d);
  for (std::size_t k = 0; k < d; ++k) unit[k] = static_cast<double>(r[k]) / norm;
  return unit;
}

}  // namespace

Metric metric_from_string(const std::string& s) {
  if (s == "cosine") return Metric::cosine;
  if (s == "euclidean") return Metric::euclidean;
  throw ValidationError("unknown metric \"" + s + "\" (expected cosine or euclidean)");
}

const char* to_string(Metric m) { return m == Metric::cosine ? "cosine" : "euclidean"; }

NeighborIndex nearest_neighbors(const EmbeddingSet& e, Metric metric, unsigned threads) {
  e.validate();
  const std::size_t n = e.count;
  const std::size_t d = e.dim;
  NeighborIndex out;
  out.nn.resize(n);
  out.similarity.resize(n);

  if (metric == Metric::cosine) {
    std::vector<std::vector<double>> unit(n);
    for (std::size_t i = 0; i < n; ++i) unit[i] = normalize_row(e.row(i), d, i);
    detail::parallel_for(0, n, threads, [&](std::size_t i) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_j = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double s = dot_seq(unit[i].data(), unit[j].data(), d);
        if (s > best) {
          best = s;
          best_j = j;
        }
      }
      out.nn[i] = static_cast<std::uint32_t>(best_j);
      out.similarity[i] = best;
    });
  } else {
    detail::parallel_for(0, n, threads, [&](std::size_t i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_j = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d2 = sq_dist_seq(e.row(i), e.row(j), d);
        if (d2 < best) {
          best = d2;
          best_j = j;
        }
      }
      out.nn[i] = static_cast<std::uint32_t>(best_j);
      out.similarity[i] = -std::sqrt(best);
    });
  }
  return out;
}

NeighborIndex nearest_neighbors_bruteforce(const EmbeddingSet& e, Metric metric) {
  e.validate();
  const std::size_t n = e.count;
  const std::size_t d = e.dim;
  NeighborIndex out;
  out.nn.resize(n);
  out.similarity.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    double best_cos = -std::numeric_limits<double>::infinity();
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_j = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (metric == Metric::cosine) {
        const auto ui = normalize_row(e.row(i), d, i);
        const auto uj = normalize_row(e.row(j), d, j);
        const double s = dot_seq(ui.data(), uj.data(), d);
        if (s > best_cos) {
          best_cos = s;
          best_j = j;
        }
      } else {
        const double d2 = sq_dist_seq(e.row(i), e.row(j), d);
        if (d2 < best_d2) {
          best_d2 = d2;
          best_j = j;
        }
      }
    }
    out.nn[i] = static_cast<std::uint32_t>(best_j);
    out.similarity[i] = metric == Metric::cosine ? best_cos : -std::sqrt(best_d2);
  }
  return out;
}

}  // namespace ruq
