#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "ruq/evalsuite.hpp"
#include "ruq/synth.hpp"
#include "test_util.hpp"

using namespace ruq;

namespace {

HeadParams zero_head(std::size_t d, std::size_t w) {
  HeadConfig cfg;
  cfg.input_dim = d;
  cfg.unc_width = w;
  HeadParams p = init_head(cfg);
  for (auto* t : {&p.w1, &p.b1, &p.w2, &p.b2, &p.w3, &p.b3}) {
    std::fill(t->begin(), t->end(), 0.0);
  }
  return p;
}

// A head whose output is increasing in input coordinate 0: every hidden unit
// passes x0 through, the second layer averages, the output sums.
HeadParams coordinate_head(std::size_t d, std::size_t w) {
  HeadParams p = zero_head(d, w);
  for (std::size_t j = 0; j < w; ++j) p.w1[0 * w + j] = 1.0;
  for (std::size_t k = 0; k < w; ++k) {
    for (std::size_t j = 0; j < w; ++j) p.w2[k * w + j] = 1.0 / static_cast<double>(w);
  }
  std::fill(p.w3.begin(), p.w3.end(), 1.0);
  return p;
}

}  // namespace

TEST_CASE("score_uncertainties") {
  EmbeddingSet e = make_embeddings({{1.f, 2.f}, {3.f, -1.f}, {0.f, 0.5f}});
  const HeadParams zero = zero_head(2, 8);

  SUBCASE("zero head emits ln 2 everywhere") {
    const auto u = score_uncertainties(zero, e);
    for (double v : u.values) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
  SUBCASE("matches per-sample forward calls exactly") {
    HeadConfig cfg;
    cfg.input_dim = 2;
    cfg.unc_width = 8;
    cfg.seed = 77;
    const HeadParams p = init_head(cfg);
    const auto u = score_uncertainties(p, e);
    for (std::size_t i = 0; i < e.count; ++i) {
      CHECK(u.values[i] == forward(p, std::span<const float>(e.row(i), e.dim)));
    }
  }
  SUBCASE("permuting rows permutes values identically") {
    HeadConfig cfg;
    cfg.input_dim = 2;
    cfg.unc_width = 8;
    cfg.seed = 78;
    const HeadParams p = init_head(cfg);
    const auto base = score_uncertainties(p, e);
    EmbeddingSet perm = make_embeddings({{0.f, 0.5f}, {1.f, 2.f}, {3.f, -1.f}});
    const auto permuted = score_uncertainties(p, perm);
    CHECK(permuted.values[0] == base.values[2]);
    CHECK(permuted.values[1] == base.values[0]);
    CHECK(permuted.values[2] == base.values[1]);
  }
  SUBCASE("thread count does not change the result") {
    HeadConfig cfg;
    cfg.input_dim = 2;
    cfg.unc_width = 8;
    cfg.seed = 79;
    const HeadParams p = init_head(cfg);
    CHECK(score_uncertainties(p, e, 1).values == score_uncertainties(p, e, 3).values);
  }
  SUBCASE("dimension mismatch is rejected") {
    const HeadParams p = zero_head(5, 8);
    CHECK_THROWS_AS(score_uncertainties(p, e), ValidationError);
  }
}

TEST_CASE("discard test") {
  SUBCASE("perfectly aligned uncertainty gives a non-increasing curve and MF 1") {
    LossVector l;
    UncertaintyVector u;
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> uni(0.1, 9.0);
    for (int i = 0; i < 400; ++i) l.values.push_back(uni(gen));
    u.values = l.values;
    const auto curve = discard_test(u, l, 100);
    CHECK(curve.mf == 1.0);
    for (std::size_t i = 0; i + 1 < curve.mean_loss.size(); ++i) {
      REQUIRE(curve.mean_loss[i] >= curve.mean_loss[i + 1]);
    }
    double mean = 0;
    for (double v : l.values) mean += v;
    mean /= static_cast<double>(l.values.size());
    CHECK(std::abs(curve.mean_loss[0] - mean) <= 1e-12);
    CHECK(curve.fractions[0] == 0.0);
  }
  SUBCASE("anti-aligned uncertainty gives a non-decreasing curve and MF 0") {
    LossVector l;
    l.values = {4.0, 3.0, 2.0, 1.0};
    UncertaintyVector u;
    u.values = {1.0, 2.0, 3.0, 4.0};
    const auto curve = discard_test(u, l, 4);
    CHECK(curve.mf == 0.0);
    for (std::size_t i = 0; i + 1 < curve.mean_loss.size(); ++i) {
      REQUIRE(curve.mean_loss[i] <= curve.mean_loss[i + 1]);
    }
  }
  SUBCASE("hand curve 3,2,2,1 has MF 1 because equality counts") {
    // Losses in descending-uncertainty order: 6,2,3,1 produce remaining
    // means 3, 2, 2, 1.
    LossVector l;
    l.values = {6.0, 2.0, 3.0, 1.0};
    UncertaintyVector u;
    u.values = {4.0, 3.0, 2.0, 1.0};
    const auto curve = discard_test(u, l, 4);
    CHECK(curve.mean_loss[0] == doctest::Approx(3.0));
    CHECK(curve.mean_loss[1] == doctest::Approx(2.0));
    CHECK(curve.mean_loss[2] == doctest::Approx(2.0));
    CHECK(curve.mean_loss[3] == doctest::Approx(1.0));
    CHECK(curve.mf == 1.0);
  }
  SUBCASE("uncertainty ties break by sample index") {
    LossVector l;
    l.values = {1.0, 9.0, 5.0, 5.0};
    UncertaintyVector u;
    u.values = {2.0, 2.0, 2.0, 2.0};
    // All tied: discard order is 0,1,2,3.
    const auto curve = discard_test(u, l, 4);
    CHECK(curve.mean_loss[1] == doctest::Approx((9.0 + 5.0 + 5.0) / 3.0));
    CHECK(curve.mean_loss[3] == doctest::Approx(5.0));
  }
  SUBCASE("validation") {
    LossVector l;
    l.values = {1.0, 2.0};
    UncertaintyVector u;
    u.values = {1.0, 2.0};
    CHECK_THROWS_WITH_AS(discard_test(u, l, 5), doctest::Contains("n >= n_fractions"),
                         ValidationError);
    CHECK_THROWS_AS(discard_test(u, l, 1), ValidationError);
    UncertaintyVector mismatched;
    mismatched.values = {1.0};
    CHECK_THROWS_AS(discard_test(mismatched, l, 2), ValidationError);
  }
}

TEST_CASE("pixel loss aggregation") {
  PixelLossMaps maps;
  maps.count = 2;
  maps.height = 2;
  maps.width = 2;
  maps.values = {2.5, 2.5, 2.5, 2.5, 9.0, 0.0, 0.0, 0.0};

  const LossVector mx = max_pixel_loss_aggregate(maps);
  const LossVector mn = mean_pixel_loss_aggregate(maps);
  CHECK(mx.values[0] == 2.5);  // uniform map: max == mean
  CHECK(mn.values[0] == 2.5);
  CHECK(mx.values[1] == 9.0);  // single hot pixel
  CHECK(mn.values[1] == doctest::Approx(2.25));

  std::mt19937 gen(3);
  std::uniform_real_distribution<double> uni(0.0, 5.0);
  PixelLossMaps random_maps;
  random_maps.count = 20;
  random_maps.height = 3;
  random_maps.width = 5;
  for (std::size_t i = 0; i < 20 * 15; ++i) random_maps.values.push_back(uni(gen));
  const auto rmax = max_pixel_loss_aggregate(random_maps);
  const auto rmean = mean_pixel_loss_aggregate(random_maps);
  for (std::size_t i = 0; i < 20; ++i) REQUIRE(rmax.values[i] >= rmean.values[i]);
}

TEST_CASE("localized uncertainty maps") {
  const std::size_t d = 4;
  TokenGridSet grids;
  grids.count = 1;
  grids.rows = 2;
  grids.cols = 3;
  grids.dim = d;
  grids.patch_px = 16;
  grids.tokens.resize(2 * 3 * d);

  SUBCASE("identical tokens give a constant map") {
    for (std::size_t t = 0; t < 6; ++t) {
      for (std::size_t k = 0; k < d; ++k) grids.tokens[t * d + k] = 0.5f;
    }
    HeadConfig cfg;
    cfg.input_dim = d;
    cfg.unc_width = 8;
    cfg.seed = 5;
    const HeadParams p = init_head(cfg);
    const auto map = localized_uncertainty(p, grids.grid(0));
    CHECK(map.rows == 2);
    CHECK(map.cols == 3);
    CHECK(map.patch_px == 16);
    for (double v : map.values) CHECK(v == map.values[0]);
  }
  SUBCASE("entries equal individual forward calls and the hot token is argmax") {
    std::mt19937 gen(8);
    std::uniform_real_distribution<float> uni(-1.f, 1.f);
    for (auto& v : grids.tokens) v = uni(gen);
    // Make token (1,2) carry the largest coordinate 0 by a wide margin.
    grids.tokens[(1 * 3 + 2) * d + 0] = 50.f;
    const HeadParams p = coordinate_head(d, 6);
    const auto map = localized_uncertainty(p, grids.grid(0));
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < map.values.size(); ++i) {
      if (map.values[i] > map.values[argmax]) argmax = i;
      const std::size_t r = i / 3, c = i % 3;
      CHECK(map.values[i] ==
            forward(p, std::span<const float>(grids.grid(0).token(r, c), d)));
    }
    CHECK(argmax == 1 * 3 + 2);
  }
  SUBCASE("transposing the grid transposes the map") {
    std::mt19937 gen(9);
    std::uniform_real_distribution<float> uni(-1.f, 1.f);
    for (auto& v : grids.tokens) v = uni(gen);
    TokenGridSet tr;
    tr.count = 1;
    tr.rows = 3;
    tr.cols = 2;
    tr.dim = d;
    tr.patch_px = 16;
    tr.tokens.resize(grids.tokens.size());
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t k = 0; k < d; ++k) {
          tr.tokens[(c * 2 + r) * d + k] = grids.tokens[(r * 3 + c) * d + k];
        }
      }
    }
    HeadConfig cfg;
    cfg.input_dim = d;
    cfg.unc_width = 8;
    cfg.seed = 6;
    const HeadParams p = init_head(cfg);
    const auto a = localized_uncertainty(p, grids.grid(0));
    const auto b = localized_uncertainty(p, tr.grid(0));
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < 3; ++c) REQUIRE(a.at(r, c) == b.at(c, r));
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    const HeadParams p = zero_head(d + 1, 4);
    CHECK_THROWS_WITH_AS(localized_uncertainty(p, grids.grid(0)),
                         doctest::Contains("dimension"), ValidationError);
  }
}

TEST_CASE("noise shift") {
  UncertaintyVector clean;
  clean.values = {1.0, 2.0, 3.0, 4.0};

  SUBCASE("+1 shift larger than the spread gives P = 1") {
    UncertaintyVector narrow;
    narrow.values = {1.0, 1.2, 1.5};
    UncertaintyVector noisy;
    for (double v : narrow.values) noisy.values.push_back(v + 1.0);
    const auto s = noise_shift(narrow, noisy);
    CHECK(s.p_noisy_greater == 1.0);
    CHECK(s.shifted);
    CHECK(s.mean_diff == doctest::Approx(1.0));
    CHECK(s.median_diff == doctest::Approx(1.0));
  }
  SUBCASE("+1 shift with overlapping supports counts cross pairs") {
    UncertaintyVector noisy;
    for (double v : clean.values) noisy.values.push_back(v + 1.0);
    const auto s = noise_shift(clean, noisy);
    // Pairs won: 1.5 + 2.5 + 3.5 + 4 of 16, with ties at 2,3,4 half-credited.
    CHECK(s.p_noisy_greater == doctest::Approx(11.5 / 16.0));
    CHECK(s.shifted);
    CHECK(s.mean_diff == doctest::Approx(1.0));
  }
  SUBCASE("disjoint supports give P = 1 exactly") {
    UncertaintyVector noisy;
    noisy.values = {5.0, 6.0, 7.0};
    const auto s = noise_shift(clean, noisy);
    CHECK(s.p_noisy_greater == 1.0);
    CHECK(s.shifted);
    CHECK(s.clean_count == 4);
    CHECK(s.noisy_count == 3);
  }
  SUBCASE("identical distributions sit at exactly 0.5") {
    const auto s = noise_shift(clean, clean);
    CHECK(s.p_noisy_greater == 0.5);
    CHECK(!s.shifted);
    CHECK(s.mean_diff == 0.0);
  }
  SUBCASE("antisymmetry without ties") {
    UncertaintyVector a, b;
    std::mt19937 gen(12);
    std::uniform_real_distribution<double> uni(0.1, 5.0);
    for (int i = 0; i < 37; ++i) a.values.push_back(uni(gen));
    for (int i = 0; i < 41; ++i) b.values.push_back(uni(gen));
    const double pab = noise_shift(a, b).p_noisy_greater;
    const double pba = noise_shift(b, a).p_noisy_greater;
    CHECK(pab == doctest::Approx(1.0 - pba).epsilon(1e-12));
  }
  SUBCASE("empty side is rejected") {
    UncertaintyVector empty;
    CHECK_THROWS_AS(noise_shift(clean, empty), ValidationError);
  }
}

TEST_CASE("shift histogram covers both sets with shared bins") {
  UncertaintyVector clean, noisy;
  clean.values = {1.0, 1.5, 2.0, 2.5};
  noisy.values = {3.0, 3.5, 4.0};
  const std::string csv = shift_histogram_csv(clean, noisy, 3);
  // Range [1, 4] in 3 bins: clean lands in [1,2) and [2,3), noisy in [3,4].
  CHECK(csv == "bin_lo,bin_hi,clean_count,noisy_count\n"
               "1,2,2,0\n"
               "2,3,2,0\n"
               "3,4,0,3\n");

  // Every sample is counted exactly once regardless of bin count.
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> uni(0.1, 9.0);
  UncertaintyVector a, b;
  for (int i = 0; i < 57; ++i) a.values.push_back(uni(gen));
  for (int i = 0; i < 43; ++i) b.values.push_back(uni(gen));
  const std::string big = shift_histogram_csv(a, b, 16);
  std::size_t clean_total = 0, noisy_total = 0, pos = big.find('\n') + 1;
  while (pos < big.size()) {
    const std::size_t end = big.find('\n', pos);
    const std::string line = big.substr(pos, end - pos);
    const auto c1 = line.rfind(',');
    const auto c2 = line.rfind(',', c1 - 1);
    noisy_total += std::stoul(line.substr(c1 + 1));
    clean_total += std::stoul(line.substr(c2 + 1, c1 - c2 - 1));
    pos = end + 1;
  }
  CHECK(clean_total == 57);
  CHECK(noisy_total == 43);
}

namespace {

struct EvalFixture {
  TempDir tmp{"evalsuite"};
  std::filesystem::path spec_path;

  EvalFixture() {
    auto spec = planted_preset(11);
    spec.n = 160;
    spec.d = 8;
    const SynthDataset data = generate(spec);
    save_embeddings(data.embeddings, tmp.path / "emb.bin");
    save_labels(data.multilabel, tmp.path / "labels.bin");
    save_loss(data.losses, tmp.path / "loss.bin");
    UncertaintyVector ideal;
    ideal.values = data.losses.values;
    ideal.source = "ideal";
    save_uncertainties(ideal, tmp.path / "unc.bin");

    spec_path = tmp.path / "run.json";
    std::ofstream(spec_path) << R"({
      "embeddings": "emb.bin",
      "labels": "labels.bin",
      "label_kind": "multilabel",
      "losses": "loss.bin",
      "uncertainties": "unc.bin",
      "metrics": ["one", "all", "pct"],
      "fractions": 40
    })";
  }
};

}  // namespace

TEST_CASE("evaluate end to end on a planted set") {
  EvalFixture fx;
  const RunSpec spec = RunSpec::from_json_file(fx.spec_path);
  const EvalReport report = evaluate(spec);

  REQUIRE(report.metrics.size() == 3);
  CHECK(report.metrics[0].kind == LAKind::one);
  CHECK(report.metrics[2].kind == LAKind::pct);
  // Ideal uncertainties (the losses themselves) must align with LA failure.
  REQUIRE(report.metrics[2].la_cpa.has_value());
  CHECK(*report.metrics[2].la_cpa > 0.7);
  REQUIRE(report.discard.has_value());
  CHECK(report.discard->mf == 1.0);
  CHECK(!report.shift.has_value());

  SUBCASE("rerunning produces a byte-identical report") {
    const EvalReport again = evaluate(spec);
    CHECK(again.to_json() == report.to_json());
    CHECK(again.metrics_csv() == report.metrics_csv());
    CHECK(discard_curve_csv(*again.discard) == discard_curve_csv(*report.discard));
  }
  SUBCASE("csv serializations are well formed") {
    CHECK(report.metrics_csv().starts_with("kind,p,la_mean,la_cpa,excluded\n"));
    CHECK(discard_curve_csv(*report.discard).starts_with("fraction,mean_loss\n"));
  }
}

TEST_CASE("evaluate tags stage errors") {
  EvalFixture fx;
  RunSpec spec = RunSpec::from_json_file(fx.spec_path);

  SUBCASE("missing label file names the stage and the file") {
    spec.labels = fx.tmp.path / "nope.bin";
    try {
      evaluate(spec);
      FAIL("expected a ValidationError");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("eval/labels") != std::string::npos);
      CHECK(msg.find("nope.bin") != std::string::npos);
    }
  }
  SUBCASE("count mismatch is tagged with the offending stage") {
    UncertaintyVector short_u;
    short_u.values = {1.0, 2.0, 3.0};
    save_uncertainties(short_u, fx.tmp.path / "short.bin");
    spec.uncertainties = fx.tmp.path / "short.bin";
    CHECK_THROWS_WITH_AS(evaluate(spec), doctest::Contains("eval/uncertainties"),
                         ValidationError);
  }
}

TEST_CASE("evaluate scores noisy embeddings and reports the shift") {
  TempDir tmp("eval_shift");
  // Coordinate-0-sensitive head: clean samples get small first coordinates,
  // noisy ones large, so the shift must come out close to 1.
  const std::size_t d = 4;
  const HeadParams head = coordinate_head(d, 6);
  HeadConfig cfg;
  cfg.input_dim = d;
  cfg.unc_width = 6;
  save_head(head, cfg, tmp.path / "head.bin");

  std::mt19937 gen(41);
  std::uniform_real_distribution<float> lo(-1.f, 0.f), hi(4.f, 6.f), other(-1.f, 1.f);
  EmbeddingSet clean, noisy;
  clean.count = noisy.count = 40;
  clean.dim = noisy.dim = d;
  for (std::size_t i = 0; i < 40; ++i) {
    clean.data.push_back(lo(gen));
    noisy.data.push_back(hi(gen));
    for (std::size_t k = 1; k < d; ++k) {
      clean.data.push_back(other(gen));
      noisy.data.push_back(other(gen));
    }
    clean.ids.push_back("c" + std::to_string(i));
    noisy.ids.push_back("n" + std::to_string(i));
  }
  save_embeddings(clean, tmp.path / "clean.bin");
  save_embeddings(noisy, tmp.path / "noisy.bin");
  MultiLabelSet labels;
  labels.count = 40;
  labels.num_classes = 2;
  for (std::size_t i = 0; i < 40; ++i) {
    labels.labels.push_back(1);
    labels.labels.push_back(gen() % 2);
  }
  save_labels(labels, tmp.path / "labels.bin");

  RunSpec spec;
  spec.embeddings = tmp.path / "clean.bin";
  spec.labels = tmp.path / "labels.bin";
  spec.label_kind = LabelKind::multilabel;
  spec.head = tmp.path / "head.bin";
  spec.noisy_embeddings = tmp.path / "noisy.bin";
  spec.metrics = {LAKind::one};

  const EvalReport report = evaluate(spec);
  REQUIRE(report.shift.has_value());
  CHECK(report.shift->p_noisy_greater > 0.9);
  CHECK(report.shift->shifted);

  // Without a head there is nothing to score the noisy set with.
  UncertaintyVector u;
  u.values.assign(40, 1.0);
  save_uncertainties(u, tmp.path / "u.bin");
  spec.head.clear();
  spec.uncertainties = tmp.path / "u.bin";
  CHECK_THROWS_WITH_AS(evaluate(spec), doctest::Contains("requires a head"), ValidationError);
}

TEST_CASE("run spec parsing") {
  TempDir tmp("runspec");
  SUBCASE("defaults") {
    const auto spec = RunSpec::from_json_text(
        R"({"embeddings":"e.bin","labels":"l.bin","label_kind":"segmask","head":"h.bin"})",
        tmp.path);
    CHECK(spec.p == 3);
    CHECK(spec.fractions == 200);
    CHECK(spec.metric == Metric::cosine);
    CHECK(spec.metrics.empty());
    CHECK(spec.embeddings == tmp.path / "e.bin");
  }
  SUBCASE("head and uncertainties are mutually exclusive") {
    CHECK_THROWS_WITH_AS(
        RunSpec::from_json_text(
            R"({"embeddings":"e","labels":"l","label_kind":"multilabel","head":"h","uncertainties":"u"})",
            tmp.path),
        doctest::Contains("exactly one"), ValidationError);
    CHECK_THROWS_AS(RunSpec::from_json_text(
                        R"({"embeddings":"e","labels":"l","label_kind":"multilabel"})",
                        tmp.path),
                    ValidationError);
  }
  SUBCASE("malformed json is a validation error") {
    CHECK_THROWS_WITH_AS(RunSpec::from_json_text("{oops", tmp.path),
                         doctest::Contains("malformed run spec"), ValidationError);
  }
}

TEST_CASE("uncertainty vector io") {
  TempDir tmp("unc_io");
  UncertaintyVector u;
  u.values = {0.5, 1.25, 3.75};
  u.source = "head-7";
  const auto path = tmp.path / "u.bin";
  save_uncertainties(u, path);
  const auto back = load_uncertainties(path);
  CHECK(back.values == u.values);
  CHECK(back.source == "head-7");

  UncertaintyVector bad;
  bad.values = {1.0, 0.0};
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("non-positive"), ValidationError);
}
