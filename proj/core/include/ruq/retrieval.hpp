#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ruq/datamodel.hpp"

namespace ruq {

enum class Metric { cosine, euclidean };

Metric metric_from_string(const std::string& s);
const char* to_string(Metric m);

// Each sample's nearest neighbor in representation space, self excluded.
// similarity is the cosine similarity under Metric::cosine and the negated
// euclidean distance under Metric::euclidean, so larger always means closer.
struct NeighborIndex {
  std::vector<std::uint32_t> nn;
  std::vector<double> similarity;

  std::size_t count() const { return nn.size(); }
};

// nn[i] = argmax_{j != i} sim(e_i, e_j); ties broken by smallest index j.
// Cosine requires every row to have a nonzero norm. Parallelizes over query
// rows; the result is independent of the thread count.
NeighborIndex nearest_neighbors(const EmbeddingSet& e, Metric metric, unsigned threads = 1);

// Plain O(n^2) pair scan with per-pair recomputation and no caching.
// Differential-testing oracle; must match nearest_neighbors exactly.
NeighborIndex nearest_neighbors_bruteforce(const EmbeddingSet& e, Metric metric);

}  // namespace ruq
