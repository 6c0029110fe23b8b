#include "mui/trace/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "mui/error.hpp"
#include "mui/trace/binary.hpp"

namespace mui::trace {
namespace {

constexpr std::string_view kTraceMagic = "MUIT";
constexpr std::string_view kSnapshotMagic = "MUSM";

bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string loc(const SampleTrace& s, std::size_t r) {
  return "sample '" + s.sample.sample_id + "' record " + std::to_string(r);
}

void put_tokens(ByteWriter& w, const std::vector<std::uint32_t>& tokens) {
  w.u64(tokens.size());
  for (auto t : tokens) w.u32(t);
}

std::vector<std::uint32_t> get_tokens(ByteReader& r) {
  const auto n = r.count(4);
  std::vector<std::uint32_t> out(n);
  for (auto& t : out) t = r.u32();
  return out;
}

void put_matrix(ByteWriter& w, const Matrix& m) { w.f32s(m.data); }

Matrix get_matrix(ByteReader& r, std::uint32_t rows, std::uint32_t cols) {
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  r.f32s(m.data, std::size_t(rows) * cols);
  return m;
}

void encode_snapshot_body(ByteWriter& w, const ModelSnapshot& s) {
  w.u32(s.layers);
  w.u32(s.d_model);
  w.u32(s.ffn_width);
  w.u32(s.vocab);
  w.u8(static_cast<std::uint8_t>(s.act_fn));
  for (std::uint32_t l = 0; l < s.layers; ++l) {
    put_matrix(w, s.w_in[l]);
    put_matrix(w, s.w_out[l]);
  }
  put_matrix(w, s.w_unembed);
  w.u32(static_cast<std::uint32_t>(s.extensions.size()));
  for (const auto& ext : s.extensions) {
    if (ext.tag.size() != 4) throw Error(ErrorCode::kInvalidArgument, "extension tag must be 4 bytes");
    w.raw({reinterpret_cast<const std::uint8_t*>(ext.tag.data()), 4});
    w.u64(ext.bytes.size());
    w.raw(ext.bytes);
  }
}

}  // namespace

std::vector<Violation> validate_trace(const TraceSet& t, std::optional<std::uint32_t> vocab) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind k, std::string where, std::string what) {
    out.push_back({k, std::move(where), std::move(what)});
  };

  for (std::size_t i = 1; i < t.layers.size(); ++i)
    if (t.layers[i] <= t.layers[i - 1]) add(ViolationKind::kHeader, "header", "layer ids not strictly ascending");
  if (t.has_residual != (t.d_model > 0))
    add(ViolationKind::kHeader, "header", "d_model must be nonzero iff residuals are present");
  if (t.mode == TraceMode::kRaw && t.width == 0) add(ViolationKind::kHeader, "header", "RAW trace with zero width");

  const std::size_t L = t.layers.size();
  for (const auto& s : t.samples) {
    const std::string where = "sample '" + s.sample.sample_id + "'";
    if (s.sample.response_tokens.empty()) add(ViolationKind::kCount, where, "empty response");
    if (vocab) {
      bool bad = false;
      for (auto tok : s.sample.prompt_tokens) bad |= tok >= *vocab;
      for (auto tok : s.sample.response_tokens) bad |= tok >= *vocab;
      if (bad) add(ViolationKind::kRange, where, "token id >= vocab");
    }
    const std::size_t expected = s.sample.response_tokens.size() * L;
    if (s.records.size() != expected) {
      add(ViolationKind::kCount, where,
          "expected " + std::to_string(expected) + " records, found " + std::to_string(s.records.size()));
    }
    for (std::size_t r = 0; r < s.records.size(); ++r) {
      const auto& rec = s.records[r];
      if (L > 0 && (rec.token_pos != r / L || rec.layer != t.layers[r % L]))
        add(ViolationKind::kOrdering, loc(s, r), "record (token, layer) out of order");
      if (t.mode == TraceMode::kRaw) {
        if (rec.activations.size() != t.width)
          add(ViolationKind::kShape, loc(s, r),
              "activation length " + std::to_string(rec.activations.size()) + " != width " +
                  std::to_string(t.width));
        if (!rec.entries.empty()) add(ViolationKind::kShape, loc(s, r), "RAW record carries scored entries");
        if (!all_finite(rec.activations)) add(ViolationKind::kNonFinite, loc(s, r), "non-finite activation");
      } else {
        if (!rec.activations.empty()) add(ViolationKind::kShape, loc(s, r), "SCORED record carries activations");
        if (rec.entries.size() > t.m_store) add(ViolationKind::kCount, loc(s, r), "more entries than m_store");
        std::set<std::uint32_t> seen;
        bool sorted = true;
        bool finite = true;
        bool range = true;
        for (std::size_t e = 0; e < rec.entries.size(); ++e) {
          const auto& en = rec.entries[e];
          finite &= std::isfinite(en.score);
          range &= t.width == 0 || en.index < t.width;
          if (!seen.insert(en.index).second) add(ViolationKind::kOrdering, loc(s, r), "duplicate entry index");
          if (e > 0) {
            const auto& prev = rec.entries[e - 1];
            sorted &= prev.score > en.score || (prev.score == en.score && prev.index < en.index);
          }
        }
        if (!sorted) add(ViolationKind::kOrdering, loc(s, r), "entries not sorted by descending score");
        if (!finite) add(ViolationKind::kNonFinite, loc(s, r), "non-finite score");
        if (!range) add(ViolationKind::kRange, loc(s, r), "entry index >= width");
      }
      if (t.has_residual) {
        if (rec.residual.size() != t.d_model) add(ViolationKind::kShape, loc(s, r), "residual length != d_model");
        if (!all_finite(rec.residual)) add(ViolationKind::kNonFinite, loc(s, r), "non-finite residual");
      } else if (!rec.residual.empty()) {
        add(ViolationKind::kShape, loc(s, r), "residual present but trace declares none");
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_trace(const TraceSet& t) {
  ByteWriter w;
  w.str(t.model_id);
  w.u8(static_cast<std::uint8_t>(t.mode));
  w.u8(static_cast<std::uint8_t>(t.unit_kind));
  w.u8(t.has_residual ? 1 : 0);
  w.u8(0);
  w.u32(t.m_store);
  w.u32(t.width);
  w.u32(t.d_model);
  w.u64(t.layers.size());
  for (auto l : t.layers) w.u32(l);
  w.u64(t.samples.size());
  for (const auto& s : t.samples) {
    const auto& ts = s.sample;
    w.str(ts.sample_id);
    w.str(ts.capability_tag);
    w.u8(ts.domain_tag ? 1 : 0);
    if (ts.domain_tag) w.str(*ts.domain_tag);
    put_tokens(w, ts.prompt_tokens);
    put_tokens(w, ts.response_tokens);
    w.u8(ts.correct ? (*ts.correct ? 1 : 0) : 2);
    w.u64(s.records.size());
    for (const auto& rec : s.records) {
      w.u32(rec.token_pos);
      w.u32(rec.layer);
      if (t.mode == TraceMode::kRaw) {
        w.f32s(rec.activations);
      } else {
        w.u64(rec.entries.size());
        for (const auto& e : rec.entries) {
          w.u32(e.index);
          w.f32(e.score);
        }
      }
      if (t.has_residual) w.f32s(rec.residual);
    }
  }
  return frame(kTraceMagic, kTraceVersion, w.bytes());
}

TraceSet decode_trace(std::span<const std::uint8_t> file) {
  ByteReader r(unframe(file, kTraceMagic, kTraceVersion));
  TraceSet t;
  t.model_id = r.str();
  const auto mode = r.u8();
  const auto kind = r.u8();
  const auto resid = r.u8();
  r.u8();
  if (mode > 1 || kind > 1 || resid > 1) throw Error(ErrorCode::kFormat, "bad trace header flags");
  t.mode = static_cast<TraceMode>(mode);
  t.unit_kind = static_cast<UnitKind>(kind);
  t.has_residual = resid == 1;
  t.m_store = r.u32();
  t.width = r.u32();
  t.d_model = r.u32();
  t.layers.resize(r.count(4));
  for (auto& l : t.layers) l = r.u32();
  const auto n_samples = r.count(1);
  t.samples.reserve(n_samples);
  for (std::uint64_t i = 0; i < n_samples; ++i) {
    SampleTrace s;
    s.sample.sample_id = r.str();
    s.sample.capability_tag = r.str();
    if (r.u8() == 1) s.sample.domain_tag = r.str();
    s.sample.prompt_tokens = get_tokens(r);
    s.sample.response_tokens = get_tokens(r);
    const auto c = r.u8();
    if (c > 2) throw Error(ErrorCode::kFormat, "bad correctness flag");
    if (c != 2) s.sample.correct = c == 1;
    const auto n_records = r.count(8);
    s.records.resize(n_records);
    for (auto& rec : s.records) {
      rec.token_pos = r.u32();
      rec.layer = r.u32();
      if (t.mode == TraceMode::kRaw) {
        r.f32s(rec.activations, t.width);
      } else {
        rec.entries.resize(r.count(8));
        for (auto& e : rec.entries) {
          e.index = r.u32();
          e.score = r.f32();
        }
      }
      if (t.has_residual) r.f32s(rec.residual, t.d_model);
    }
    t.samples.push_back(std::move(s));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, "trailing bytes in trace payload");
  return t;
}

std::size_t write_trace(const std::filesystem::path& path, const TraceSet& traces) {
  const auto violations = validate_trace(traces);
  if (!violations.empty())
    throw Error(ErrorCode::kInvalidArgument,
                std::to_string(violations.size()) + " trace violation(s), first: " + violations.front().location +
                    ": " + violations.front().message);
  const auto bytes = encode_trace(traces);
  write_file(path, bytes);
  return bytes.size();
}

TraceSet read_trace(const std::filesystem::path& path) { return decode_trace(read_file(path)); }

std::string compute_model_id(const ModelSnapshot& s) {
  check_snapshot_shapes(s);
  ByteWriter w;
  encode_snapshot_body(w, s);
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(w.bytes())));
  return buf;
}

void check_snapshot_shapes(const ModelSnapshot& s) {
  auto shape = [](const Matrix& m, std::uint32_t r, std::uint32_t c) {
    return m.rows == r && m.cols == c && m.data.size() == std::size_t(r) * c;
  };
  if (s.w_in.size() != s.layers || s.w_out.size() != s.layers)
    throw Error(ErrorCode::kShapeMismatch, "per-layer matrix count != layers");
  for (std::uint32_t l = 0; l < s.layers; ++l) {
    if (!shape(s.w_in[l], s.ffn_width, s.d_model)) throw Error(ErrorCode::kShapeMismatch, "w_in shape");
    if (!shape(s.w_out[l], s.d_model, s.ffn_width)) throw Error(ErrorCode::kShapeMismatch, "w_out shape");
  }
  if (!shape(s.w_unembed, s.vocab, s.d_model)) throw Error(ErrorCode::kShapeMismatch, "w_unembed shape");
}

std::vector<std::uint8_t> encode_snapshot(const ModelSnapshot& s) {
  check_snapshot_shapes(s);
  ByteWriter w;
  w.str(s.model_id);
  encode_snapshot_body(w, s);
  return frame(kSnapshotMagic, kSnapshotVersion, w.bytes());
}

ModelSnapshot decode_snapshot(std::span<const std::uint8_t> file) {
  ByteReader r(unframe(file, kSnapshotMagic, kSnapshotVersion));
  ModelSnapshot s;
  s.model_id = r.str();
  s.layers = r.u32();
  s.d_model = r.u32();
  s.ffn_width = r.u32();
  s.vocab = r.u32();
  const auto act = r.u8();
  if (act > 2) throw Error(ErrorCode::kFormat, "bad activation id");
  s.act_fn = static_cast<ActFn>(act);
  const std::size_t per_layer = 8ull * s.ffn_width * s.d_model;
  if (per_layer != 0 && s.layers > r.remaining() / per_layer)
    throw Error(ErrorCode::kTruncated, "layer count exceeds payload");
  for (std::uint32_t l = 0; l < s.layers; ++l) {
    s.w_in.push_back(get_matrix(r, s.ffn_width, s.d_model));
    s.w_out.push_back(get_matrix(r, s.d_model, s.ffn_width));
  }
  s.w_unembed = get_matrix(r, s.vocab, s.d_model);
  const auto n_ext = r.u32();
  for (std::uint32_t i = 0; i < n_ext; ++i) {
    ExtensionSection ext;
    auto tag = r.raw(4);
    ext.tag.assign(tag.begin(), tag.end());
    const auto n = r.count(1);
    auto body = r.raw(n);
    ext.bytes.assign(body.begin(), body.end());
    s.extensions.push_back(std::move(ext));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, "trailing bytes in snapshot payload");
  return s;
}

std::size_t write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot) {
  const auto bytes = encode_snapshot(snapshot);
  write_file(path, bytes);
  return bytes.size();
}

ModelSnapshot read_snapshot(const std::filesystem::path& path) {
  auto s = decode_snapshot(read_file(path));
  const auto id = compute_model_id(s);
  if (id != s.model_id) throw Error(ErrorCode::kHashMismatch, "stored " + s.model_id + ", computed " + id);
  return s;
}

}  // namespace mui::trace
