#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mui/error.hpp"
#include "mui/metrics/metrics.hpp"
#include "mui/random.hpp"
#include "oracles.hpp"

using namespace mui;
using namespace mui::metrics;
using selection::KeySet;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("MUI") {
  const std::vector<std::uint32_t> w{4, 4};
  CHECK(metrics::mui(std::vector<KeySet>{}, w) == 0.0);
  std::vector<KeySet> ks{{"a", {{0, 1}, {1, 2}}}, {"b", {{0, 1}, {1, 3}}}};
  CHECK(metrics::mui(ks, w) == 37.5);
  ks[0].units.push_back({1, 4});
  CHECK(code_of([&] { metrics::mui(ks, w); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("MUI equals a bitmap union on random key sets") {
  Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    std::vector<std::uint32_t> widths(1 + rng.below(4));
    for (auto& x : widths) x = static_cast<std::uint32_t>(1 + rng.below(20));
    std::vector<KeySet> ks(rng.below(6));
    std::vector<std::vector<trace::UnitId>> raw;
    for (auto& k : ks) {
      std::set<trace::UnitId> u;
      for (std::size_t j = rng.below(10); j > 0; --j) {
        const auto l = static_cast<std::uint32_t>(rng.below(widths.size()));
        u.insert(trace::UnitId{l, static_cast<std::uint32_t>(rng.below(widths[l]))});
      }
      k.units.assign(u.begin(), u.end());
      raw.push_back(k.units);
    }
    CHECK(metrics::mui(ks, widths) == doctest::Approx(oracle::mui_bitmap(raw, widths)).epsilon(1e-12));
  }
}

TEST_CASE("PUR") {
  CHECK(pur(11.9, 6.0) == doctest::Approx(4.858).epsilon(1e-3));
  CHECK(std::round(pur(84.5, 2.3) * 10) / 10 == 55.7);
  CHECK(pur(42.0, 7.0, {0.0}) == 42.0);
  CHECK(code_of([] { pur(50, 0); }) == ErrorCode::kUndefined);
}

TEST_CASE("utility fit") {
  const double A = -3.534, B = 26.049;
  SUBCASE("two points interpolate") {
    std::vector<EvalPoint> p{{"", "", 1.0, 26.049}, {"", "", std::numbers::e, 22.515}};
    const auto f = fit_utility(p);
    CHECK(f.a == doctest::Approx(A).epsilon(1e-12));
    CHECK(f.b == doctest::Approx(B).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0));
  }
  SUBCASE("planted coefficients") {
    std::vector<EvalPoint> p;
    for (double x : {5.0, 12.5, 30.0, 47.0, 66.0, 91.0}) p.push_back({"", "", x, A * std::log(x) + B});
    const auto f = fit_utility(p);
    CHECK(std::abs(f.a - A) < 1e-9);
    CHECK(std::abs(f.b - B) < 1e-9);
    CHECK(f.n_points == 6);
  }
  SUBCASE("extrapolation") {
    const UtilityFit f{A, B, 1.0, 2};
    CHECK(std::abs(extrapolate(f, 100) - 9.77) <= 0.01);
    CHECK(extrapolate(f, 1) == B);
    CHECK(extrapolate(f, std::numbers::e) == doctest::Approx(A + B));
  }
  SUBCASE("errors") {
    CHECK(code_of([] { fit_utility(std::vector<EvalPoint>{{"", "", 1, 1}}); }) == ErrorCode::kInsufficientData);
    CHECK(code_of([] { fit_utility(std::vector<EvalPoint>{{"", "", 3, 1}, {"", "", 3, 2}}); }) ==
          ErrorCode::kSingularFit);
    CHECK(code_of([] { fit_utility(std::vector<EvalPoint>{{"", "", 0, 1}, {"", "", 3, 2}}); }) ==
          ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("directions") {
  auto dir = [](double p1, double m1, double p2, double m2) {
    return classify_direction({"a", "d", p1, m1}, {"b", "d", p2, m2}).kind;
  };
  CHECK(dir(16.4, 1.0, 34.1, 2.0) == DirectionKind::kAccumulating);
  CHECK(dir(25.8, 4.3, 23.0, 5.1) == DirectionKind::kCoarsening);
  CHECK(dir(71.3, 17.7, 56.8, 14.5) == DirectionKind::kCollapsing);
  CHECK(dir(50, 5, 60, 4) == DirectionKind::kEvolving);
  CHECK(dir(50, 5, 50.4, 3) == DirectionKind::kStationary);
  CHECK(dir(50, 5, 60, 5.04) == DirectionKind::kStationary);
  CHECK(std::string(to_string(DirectionKind::kEvolving)) == "Evolving");
  CHECK(code_of([] { classify_direction({"a", "x", 1, 1}, {"b", "y", 2, 2}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("ranking") {
  CHECK(rank_by(std::vector<double>{3, 1, 2}) == std::vector<double>{1, 3, 2});
  CHECK(rank_by(std::vector<double>{2, 2}) == std::vector<double>{1.5, 1.5});
  CHECK(rank_by(std::vector<double>{3, 1, 2}, false) == std::vector<double>{3, 1, 2});
}

}
