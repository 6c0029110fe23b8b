#include <cmath>

#include "doctest.h"
#include "mui/error.hpp"
#include "mui/random.hpp"
#include "mui/stats/stats.hpp"
#include "oracles.hpp"

using namespace mui;
using namespace mui::stats;

namespace {

std::vector<double> iota9() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("average ranks") {
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman and kendall") {
  const auto r = iota9();
  auto rev = r;
  std::reverse(rev.begin(), rev.end());
  auto swap = r;
  std::swap(swap[3], swap[4]);
  CHECK(spearman(r, r).percent() == doctest::Approx(100.0));
  CHECK(spearman(r, rev).percent() == doctest::Approx(-100.0));
  CHECK(std::round(spearman(r, swap).percent() * 10) / 10 == 98.3);
  CHECK(kendall(r, r).percent() == doctest::Approx(100.0));
  CHECK(kendall(r, swap).coefficient == doctest::Approx(1.0 - 2.0 / 36.0));
  CHECK(std::round(kendall(r, swap).percent() * 10) / 10 == 94.4);
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(pearson(x, std::vector<double>{3, 5, 7, 9}).percent() == doctest::Approx(100.0));
  CHECK(pearson(x, std::vector<double>{-1, -2, -3, -4}).percent() == doctest::Approx(-100.0));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 1, 1, 1}), Error);
  Rng rng(3);
  std::vector<double> a(20), b(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + rng.normal();
  }
  // two-pass oracle in long double
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < 20; ++i) ma += a[i], mb += b[i];
  ma /= 20, mb /= 20;
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(std::abs(pearson(a, b).coefficient - double(sab / std::sqrt(saa * sbb))) < 1e-12);
}

TEST_CASE("mann-whitney") {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const auto r = mann_whitney_u(a, b);
  CHECK(r.u == 0.0);
  CHECK(r.exact);
  CHECK(r.p_value == doctest::Approx(0.1));
  const auto same = mann_whitney_u(a, a);
  CHECK(same.u == 4.5);
  CHECK(same.p_value == doctest::Approx(1.0));
  CHECK(verdict(0.2) == "no significant difference");
  CHECK(verdict(0.01) == "significant difference");
  SUBCASE("exact p matches subset enumeration with ties") {
    Rng rng(9);
    for (int it = 0; it < 40; ++it) {
      std::vector<double> x(1 + rng.below(6)), y(1 + rng.below(6));
      for (auto& v : x) v = double(rng.below(5));
      for (auto& v : y) v = double(rng.below(5));
      CHECK(mann_whitney_exact_p(x, y) == doctest::Approx(oracle::mw_exact(x, y)).epsilon(1e-12));
    }
  }
  SUBCASE("large samples use the normal approximation") {
    std::vector<double> x(20), y(20);
    for (int i = 0; i < 20; ++i) x[i] = i, y[i] = i + 30;
    const auto big = mann_whitney_u(x, y);
    CHECK_FALSE(big.exact);
    CHECK(big.p_value < 1e-6);
  }
}

TEST_CASE("variance and mean") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(mean(v) == 2.5);
  CHECK(population_variance(v) == 1.25);
}

}
