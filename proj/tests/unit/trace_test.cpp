#include "doctest.h"
#include "fixtures.hpp"
#include "mui/error.hpp"
#include "mui/trace/binary.hpp"
#include "mui/trace/trace_io.hpp"

using namespace mui;
using namespace mui::trace;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kIo;
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("empty trace set round-trips") {
  TraceSet t;
  t.model_id = "m";
  t.width = 4;
  t.layers = {0, 1};
  const auto bytes = encode_trace(t);
  const auto back = decode_trace(bytes);
  CHECK(back.samples.empty());
  CHECK(back == t);
}

TEST_CASE("one sample RAW round-trip is field-equal and deterministic") {
  auto t = fixture::raw_trace(1, 1, 2, 4, 1);
  t.samples[0].sample.domain_tag = "algebra";
  t.samples[0].sample.correct = true;
  const auto dir = fixture::temp_dir("trace_rt");
  write_trace(dir / "a.muit", t);
  write_trace(dir / "b.muit", t);
  CHECK(read_file(dir / "a.muit") == read_file(dir / "b.muit"));
  const auto back = read_trace(dir / "a.muit");
  CHECK(back == t);
  CHECK(back.samples[0].records[1].activations == t.samples[0].records[1].activations);
}

TEST_CASE("SCORED and residual traces round-trip") {
  auto t = fixture::raw_trace(2, 3, 2, 6, 2);
  t.mode = TraceMode::kScored;
  t.m_store = 3;
  t.has_residual = true;
  t.d_model = 2;
  for (auto& s : t.samples)
    for (auto& r : s.records) {
      r.activations.clear();
      r.entries = {{4, 2.5f}, {0, 1.0f}, {5, -0.5f}};
      r.residual = {0.25f, -1.0f};
    }
  CHECK(validate_trace(t).empty());
  CHECK(decode_trace(encode_trace(t)) == t);
}

TEST_CASE("negative cases") {
  const auto t = fixture::raw_trace(3, 2, 2, 4, 2);
  auto bytes = encode_trace(t);
  SUBCASE("bad magic") {
    auto b = bytes;
    std::copy_n("XXXX", 4, b.begin());
    CHECK(code_of([&] { decode_trace(b); }) == ErrorCode::kFormat);
  }
  SUBCASE("truncated mid-record") {
    std::vector<std::uint8_t> b(bytes.begin(), bytes.begin() + bytes.size() / 2);
    const auto c = code_of([&] { decode_trace(b); });
    CHECK((c == ErrorCode::kTruncated || c == ErrorCode::kChecksumMismatch));
  }
  SUBCASE("flipped payload byte") {
    auto b = bytes;
    b[b.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(decode_trace(b), Error);
  }
  SUBCASE("invalid trace is not written") {
    auto bad = t;
    bad.samples[0].records[0].activations.pop_back();
    const auto dir = fixture::temp_dir("trace_bad");
    CHECK(code_of([&] { write_trace(dir / "x.muit", bad); }) == ErrorCode::kInvalidArgument);
    CHECK_FALSE(std::filesystem::exists(dir / "x.muit"));
  }
}

TEST_CASE("validate_trace reports violations") {
  const auto good = fixture::raw_trace(4, 2, 2, 4, 2);
  CHECK(validate_trace(good).empty());
  SUBCASE("short activation row") {
    auto t = good;
    t.samples[1].records[2].activations.pop_back();
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::kShape);
  }
  SUBCASE("unsorted SCORED entries") {
    auto t = good;
    t.mode = TraceMode::kScored;
    t.m_store = 2;
    for (auto& s : t.samples)
      for (auto& r : s.records) {
        r.activations.clear();
        r.entries = {{1, 3.0f}, {2, 1.0f}};
      }
    CHECK(validate_trace(t).empty());
    std::swap(t.samples[0].records[0].entries[0], t.samples[0].records[0].entries[1]);
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::kOrdering);
  }
  SUBCASE("token id outside vocabulary") {
    auto t = good;
    t.samples[0].sample.response_tokens[0] = 500;
    CHECK(validate_trace(t).empty());
    CHECK(validate_trace(t, 259).size() == 1);
  }
  SUBCASE("non-finite activation") {
    auto t = good;
    t.samples[0].records[0].activations[0] = std::numeric_limits<float>::quiet_NaN();
    const auto v = validate_trace(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::kNonFinite);
  }
}

TEST_CASE("snapshot round-trips and detects tampering") {
  const auto dir = fixture::temp_dir("snap");
  SUBCASE("zeros") {
    ModelSnapshot s;
    s.layers = 1;
    s.d_model = 2;
    s.ffn_width = 3;
    s.vocab = 4;
    s.w_in = {Matrix(3, 2)};
    s.w_out = {Matrix(2, 3)};
    s.w_unembed = Matrix(4, 2);
    s.model_id = compute_model_id(s);
    write_snapshot(dir / "z.musm", s);
    CHECK(read_snapshot(dir / "z.musm") == s);
  }
  SUBCASE("random, bit exact; tampered weight") {
    auto s = fixture::random_snapshot(11);
    s.extensions.push_back({"ABCD", {1, 2, 3}});
    s.model_id = compute_model_id(s);
    write_snapshot(dir / "r.musm", s);
    const auto back = read_snapshot(dir / "r.musm");
    CHECK(back == s);
    CHECK(compute_model_id(back) == s.model_id);
    auto tampered = s;
    tampered.w_out[1].data[2] += 1.0f;
    // keep the declared id of the original so the stored hash no longer matches
    auto b = encode_snapshot(tampered);
    write_file(dir / "t.musm", b);
    CHECK(code_of([&] { read_snapshot(dir / "t.musm"); }) == ErrorCode::kHashMismatch);
  }
  SUBCASE("shape mismatch") {
    auto s = fixture::random_snapshot(12);
    s.w_in[0] = Matrix(2, 2);
    CHECK(code_of([&] { check_snapshot_shapes(s); }) == ErrorCode::kShapeMismatch);
  }
}

TEST_CASE("length classes split at half of the longest response") {
  std::vector<TaskSample> s(3);
  s[0].response_tokens = {1, 2, 3, 4};
  s[1].response_tokens = {1, 2};
  s[2].response_tokens = {1, 2, 3};
  const auto c = length_classes(s);
  CHECK(c == std::vector<LengthClass>{LengthClass::kLong, LengthClass::kShort, LengthClass::kLong});
}

}
