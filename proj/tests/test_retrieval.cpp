#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "ruq/retrieval.hpp"
#include "test_util.hpp"

using namespace ruq;

namespace {

EmbeddingSet random_embeddings(std::mt19937& gen, std::size_t n, std::size_t d) {
  std::normal_distribution<float> normal(0.f, 1.f);
  EmbeddingSet e;
  e.count = n;
  e.dim = d;
  e.data.resize(n * d);
  for (auto& v : e.data) v = normal(gen);
  for (std::size_t i = 0; i < n; ++i) e.ids.push_back(std::to_string(i));
  return e;
}

}  // namespace

TEST_CASE("cosine example from a three-point set") {
  const EmbeddingSet e = make_embeddings({{1.f, 0.f}, {0.9f, 0.1f}, {0.f, 1.f}});
  const auto nn = nearest_neighbors(e, Metric::cosine);
  CHECK(nn.nn == std::vector<std::uint32_t>{1, 0, 1});
}

TEST_CASE("identical rows are mutual nearest neighbors with similarity 1") {
  const EmbeddingSet e = make_embeddings({{0.5f, 0.5f}, {0.5f, 0.5f}, {-1.f, 0.f}});
  const auto nn = nearest_neighbors(e, Metric::cosine);
  CHECK(nn.nn[0] == 1);
  CHECK(nn.nn[1] == 0);
  CHECK(nn.similarity[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("n = 2 pairs up under both metrics") {
  const EmbeddingSet e = make_embeddings({{1.f, 2.f}, {-3.f, 4.f}});
  for (auto metric : {Metric::cosine, Metric::euclidean}) {
    const auto nn = nearest_neighbors(e, metric);
    CHECK(nn.nn == std::vector<std::uint32_t>{1, 0});
  }
}

TEST_CASE("ties break to the smallest index") {
  // Rows 1 and 2 are identical, both equally close to row 0.
  const EmbeddingSet e = make_embeddings({{1.f, 0.f}, {0.f, 1.f}, {0.f, 1.f}});
  for (auto metric : {Metric::cosine, Metric::euclidean}) {
    const auto nn = nearest_neighbors(e, metric);
    CHECK(nn.nn[0] == 1);
  }
}

TEST_CASE("zero-norm row is rejected under cosine only") {
  const EmbeddingSet e = make_embeddings({{0.f, 0.f}, {1.f, 1.f}});
  CHECK_THROWS_WITH_AS(nearest_neighbors(e, Metric::cosine), doctest::Contains("zero-norm"),
                       ValidationError);
  CHECK_NOTHROW(nearest_neighbors(e, Metric::euclidean));
}

TEST_CASE("oracle equivalence on 200 random sets") {
  std::mt19937 gen(101);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + gen() % 127;
    const std::size_t d = 1 + gen() % 32;
    const auto e = random_embeddings(gen, n, d);
    const Metric metric = rep % 2 == 0 ? Metric::cosine : Metric::euclidean;
    const auto fast = nearest_neighbors(e, metric);
    const auto slow = nearest_neighbors_bruteforce(e, metric);
    REQUIRE(fast.nn == slow.nn);
  }
}

TEST_CASE("result is independent of the thread count") {
  std::mt19937 gen(55);
  const auto e = random_embeddings(gen, 257, 9);
  for (auto metric : {Metric::cosine, Metric::euclidean}) {
    const auto one = nearest_neighbors(e, metric, 1);
    const auto four = nearest_neighbors(e, metric, 4);
    CHECK(one.nn == four.nn);
    CHECK(one.similarity == four.similarity);
  }
}

TEST_CASE("cosine is invariant to positive row scaling") {
  std::mt19937 gen(202);
  std::uniform_real_distribution<float> scale(0.1f, 12.f);
  const auto e = random_embeddings(gen, 64, 8);
  const auto base = nearest_neighbors(e, Metric::cosine);
  EmbeddingSet scaled = e;
  for (std::size_t i = 0; i < scaled.count; ++i) {
    const float s = scale(gen);
    for (std::size_t j = 0; j < scaled.dim; ++j) scaled.data[i * scaled.dim + j] *= s;
  }
  const auto after = nearest_neighbors(scaled, Metric::cosine);
  CHECK(base.nn == after.nn);
}

TEST_CASE("euclidean is invariant to a common translation") {
  std::mt19937 gen(303);
  std::normal_distribution<float> normal(0.f, 1.f);
  const auto e = random_embeddings(gen, 64, 8);
  const auto base = nearest_neighbors(e, Metric::euclidean);
  std::vector<float> shift(e.dim);
  for (auto& v : shift) v = normal(gen);
  EmbeddingSet moved = e;
  for (std::size_t i = 0; i < moved.count; ++i) {
    for (std::size_t j = 0; j < moved.dim; ++j) moved.data[i * moved.dim + j] += shift[j];
  }
  const auto after = nearest_neighbors(moved, Metric::euclidean);
  CHECK(base.nn == after.nn);
}

TEST_CASE("metric string parsing") {
  CHECK(metric_from_string("cosine") == Metric::cosine);
  CHECK(metric_from_string("euclidean") == Metric::euclidean);
  CHECK_THROWS_AS(metric_from_string("manhattan"), ValidationError);
}
