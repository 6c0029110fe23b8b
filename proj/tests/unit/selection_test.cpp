#include "doctest.h"
#include "fixtures.hpp"
#include "mui/error.hpp"
#include "oracles.hpp"
#include "random_matrix.hpp"

using namespace mui;
using namespace mui::selection;
using attribution::Aggregation;
using attribution::dense_cell;

namespace {

std::vector<std::uint32_t> pick(std::vector<double> s, SelectionPolicy p) {
  return select_token(dense_cell(s), p, static_cast<std::uint32_t>(s.size()));
}

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("effective k") {
  CHECK(effective_k(LayerTopPermille{0.001}, 11008) == 11);
  CHECK(effective_k(LayerTopPermille{0.001}, 256) == 1);
  CHECK(effective_k(LayerTopPermille{0.01}, 500) == 5);
  CHECK(effective_k(LayerTopK{3}, 10) == 3);
}

TEST_CASE("per-token rules") {
  CHECK(pick({0.1, 0.9, 0.5}, LayerTopK{1}) == std::vector<std::uint32_t>{1});
  CHECK(pick({0.1, 0.9, 0.5}, LayerTopK{7}) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(pick({4, 2, 3.9}, TopScore{0.95}) == std::vector<std::uint32_t>{0, 2});
  CHECK(pick({-1, -2}, TopScore{0.5}).empty());
  CHECK(pick({1, 2, 2, 0}, LayerTopK{1}) == std::vector<std::uint32_t>{1});
  CHECK_THROWS_AS(pick({1, 2}, GlobalTopK{1}), Error);
}

TEST_CASE("policy validation and text form") {
  CHECK_THROWS_AS(validate_policy(LayerTopK{0}), Error);
  CHECK_THROWS_AS(validate_policy(TopScore{1.5}), Error);
  CHECK_THROWS_AS(validate_policy(LayerTopPermille{0.0}), Error);
  for (const char* s : {"topk:3", "permille:0.001", "global:5", "topscore:0.9"})
    CHECK(describe(parse_policy(s)) == s);
  CHECK_THROWS_AS(parse_policy("topk:0"), Error);
  CHECK_THROWS_AS(parse_policy("best:1"), Error);
  CHECK(parse_scope("pooled") == Scope::kPooledQuantile);
}

TEST_CASE("sample-level selection") {
  attribution::ScoreMatrix m;
  m.width = 4;
  m.layers = {0};
  m.tokens = 2;
  m.cells = {dense_cell(std::vector<double>{0, 5, 0, 0}), dense_cell(std::vector<double>{0, 0, 0, 5})};
  CHECK(select_sample(m, LayerTopK{1}, Scope::kPerTokenUnion, Aggregation::kTokenLevel).units ==
        std::vector<trace::UnitId>{{0, 1}, {0, 3}});
  auto one = m;
  one.tokens = 1;
  one.cells.resize(1);
  CHECK(select_sample(one, LayerTopK{2}, Scope::kPerTokenUnion, Aggregation::kTokenLevel).units ==
        select_sample(one, LayerTopK{2}, Scope::kPooledQuantile, Aggregation::kTokenLevel).units);
}

TEST_CASE("brute-force oracle on random instances") {
  Rng rng(1234);
  for (int it = 0; it < 300; ++it) {
    const auto m = fixture::random_scores(rng);
    const auto p = fixture::random_policy(rng, m.width);
    for (auto scope : {Scope::kPerTokenUnion, Scope::kPooledQuantile})
      for (auto agg : {Aggregation::kTokenLevel, Aggregation::kResponseSum}) {
        CAPTURE(it);
        CAPTURE(describe(p));
        CHECK(select_sample(m, p, scope, agg).units == oracle::select(m, p, scope, agg));
      }
  }
}

TEST_CASE("keyset JSONL round trip") {
  std::vector<KeySet> ks{{"a", {{0, 1}, {2, 3}}, "topk:1", Scope::kPerTokenUnion},
                         {"b,\"q\"", {}, "permille:0.001", Scope::kPooledQuantile}};
  const auto dir = fixture::temp_dir("keysets");
  write_keysets(dir / "k.jsonl", ks);
  CHECK(read_keysets(dir / "k.jsonl") == ks);
}

}
