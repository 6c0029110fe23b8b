#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mui/analysis/analysis.hpp"
#include "mui/csv.hpp"
#include "mui/error.hpp"
#include "mui/trace/binary.hpp"

using namespace mui;
using namespace mui::analysis;

namespace {

ExperimentConfig tiny(const std::filesystem::path& out) {
  ExperimentConfig c;
  c.toy = fixture::small_config(1);
  c.train_steps = 20;
  c.suites = {"copy", "reverse"};
  c.suite_size = 12;
  c.out_dir = out;
  return c;
}

std::vector<SampleKeys> synthetic_pool(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SampleKeys> pool;
  const char* tags[] = {"copy", "reverse", "sort"};
  for (std::size_t i = 0; i < n; ++i) {
    SampleKeys s;
    s.sample.sample_id = "p" + std::to_string(i);
    s.sample.capability_tag = tags[i % 3];
    s.sample.response_tokens.assign(1 + rng.below(6), 1);
    s.sample.correct = rng.below(2) == 0;
    std::set<trace::UnitId> u;
    for (int k = 0; k < 3; ++k) u.insert({std::uint32_t(i % 3), std::uint32_t(rng.below(40))});
    s.keys.units.assign(u.begin(), u.end());
    pool.push_back(s);
  }
  return pool;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("published tables reproduce") {
  const auto r = reproduce_tables(MUI_DATA_DIR);
  std::size_t checked = 0;
  for (const auto& c : r.pur)
    if (c.recomputed_pur) {
      ++checked;
      CHECK(std::abs(*c.recomputed_pur - c.published_pur) <= 0.15);
    }
  CHECK(checked >= 40);
  for (const auto& c : r.correlations) {
    CAPTURE(c.statistic + " " + c.dataset);
    CHECK(std::abs(c.accuracy_based - c.published_accuracy) <= 0.1);
    CHECK(std::abs(c.pur_based - c.published_pur) <= 0.1);
  }
  const auto dir = fixture::temp_dir("repro");
  write_reproduction(dir, r);
  CHECK(csv::read(dir / "ranking_check.csv").rows.size() >= r.correlations.size());
}

TEST_CASE("report") {
  const auto dir = fixture::temp_dir("report");
  SUBCASE("no points gives empty axes") {
    report(dir, {});
    const auto svg = trace::read_file(dir / "scatter.svg");
    CHECK(svg.size() > 0);
    CHECK_FALSE(std::filesystem::exists(dir / "fit.csv"));
  }
  SUBCASE("points and fitted curve") {
    std::vector<metrics::EvalPoint> p{{"a", "d", 20, 15}, {"b", "d", 40, 13}, {"c", "d", 80, 10.5}};
    report(dir, p);
    const auto f = csv::read(dir / "fit.csv");
    REQUIRE(f.rows.size() == 1);
    const auto svg = render_svg(p, metrics::fit_utility(p));
    CHECK(svg.find("class=\"fit\"") != std::string::npos);
    CHECK(svg.rfind("<circle", 0) == std::string::npos);
    std::size_t circles = 0;
    for (auto pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
    CHECK(circles == 3);
  }
}

TEST_CASE("load_points accepts both column conventions") {
  const auto dir = fixture::temp_dir("points");
  csv::write(dir / "a.csv", {"label", "dataset", "P", "MUI"}, {{"x", "d", "50", "5"}});
  csv::write(dir / "b.csv", {"model", "dataset", "accuracy", "mui"}, {{"x", "d", "50", "5"}});
  CHECK(load_points(dir / "a.csv") == load_points(dir / "b.csv"));
  csv::write(dir / "c.csv", {"model", "dataset", "accuracy", "mui"}, {{"x", "d", "fifty", "5"}});
  CHECK_THROWS_AS(load_points(dir / "c.csv"), Error);
}

TEST_CASE("pipeline") {
  const auto d1 = fixture::temp_dir("pipe1"), d2 = fixture::temp_dir("pipe2");
  const auto r = run_pipeline(tiny(d1));
  run_pipeline(tiny(d2));
  REQUIRE(r.points.size() == 3);
  double best = 0;
  for (const auto& p : r.points) {
    CHECK(p.mui > 0.0);
    CHECK(p.mui < 100.0);
    if (p.dataset != "all") best = std::max(best, p.mui);
  }
  CHECK(r.points.back().dataset == "all");
  CHECK(r.points.back().mui >= best);
  for (const auto& e : std::filesystem::directory_iterator(d1))
    if (e.path().extension() == ".csv") CHECK(trace::read_file(e.path()) == trace::read_file(d2 / e.path().filename()));
}

TEST_CASE("mask sweep with k = 0 is the baseline") {
  const auto model = toy::init_toy(fixture::small_config(2));
  MaskSweepSpec s;
  s.k_grid = {0, 1};
  s.selection_size = 6;
  s.eval_size = 10;
  s.random_repetitions = 2;
  const auto rows = mask_sweep(s, model);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows)
    if (r.k == 0) {
      CHECK(r.selected_accuracy == r.base_accuracy);
      CHECK(r.random_mean == r.base_accuracy);
      CHECK(r.mask_size == 0);
    }
  s.k_grid = {2, 1};
  CHECK_THROWS_AS(mask_sweep(s, model), Error);
}

TEST_CASE("random units are distinct and in range") {
  const auto c = fixture::small_config();
  const auto u = random_units(c, 50, 3);
  CHECK(std::set<trace::UnitId>(u.begin(), u.end()).size() == 50);
  for (const auto& x : u) CHECK((x.layer < c.layers && x.index < c.ffn_width));
}

TEST_CASE("diversity curves grow with the sample count") {
  const auto pool = synthetic_pool(120, 4);
  const std::vector<std::uint32_t> widths{40, 40, 40};
  DiversitySpec s;
  s.groups = {{"copy", {"copy"}}, {"mixed", {"copy", "reverse", "sort"}}};
  s.sizes = {10, 20, 40};
  s.trials = 3;
  s.length_strata = true;
  s.correctness_strata = true;
  const auto r = diversity_curves(s, pool, widths);
  REQUIRE(r.cells.size() == 6);
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t i = 1; i < 3; ++i)
      for (std::size_t t = 0; t < 3; ++t)
        CHECK(r.cells[g * 3 + i].trial_mui[t] >= r.cells[g * 3 + i - 1].trial_mui[t]);
  CHECK(r.cells[5].mean_mui >= r.cells[2].mean_mui);
  CHECK(r.tests.size() == 2);
  const auto dir = fixture::temp_dir("div");
  write_diversity_csv(dir / "d.csv", r);
  CHECK(csv::read(dir / "d.csv").rows.size() == 6);
}

TEST_CASE("correctness ablation") {
  const auto pool = synthetic_pool(60, 6);
  const std::vector<std::uint32_t> widths{40, 40, 40};
  SUBCASE("identical classes") {
    const auto r = correctness_ablation(pool, pool, 10, 4, 1, widths);
    CHECK(r.mui_correct == r.mui_incorrect);
    CHECK(r.test.p_value == doctest::Approx(1.0));
    CHECK(r.verdict == "no significant difference");
  }
  SUBCASE("split by flag") {
    const auto r = correctness_ablation(pool, 8, 3, 1, widths);
    CHECK(r.mui_correct.size() == 3);
  }
  SUBCASE("too few samples") {
    CHECK_THROWS_AS(correctness_ablation(pool, 100, 3, 1, widths), Error);
  }
}

}
