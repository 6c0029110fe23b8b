#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mui::trace {

enum class UnitKind : std::uint8_t { kNeuron = 0, kFeature = 1 };
enum class TraceMode : std::uint8_t { kRaw = 0, kScored = 1 };
enum class ActFn : std::uint8_t { kReLU = 0, kSiLU = 1, kGeLU = 2 };
enum class LengthClass { kShort, kLong };

const char* to_string(UnitKind kind);
const char* to_string(TraceMode mode);
const char* to_string(ActFn fn);

// Identity of one FFN neuron or SAE feature. Ordered by (layer, index).
struct UnitId {
  std::uint32_t layer = 0;
  std::uint32_t index = 0;

  auto operator<=>(const UnitId&) const = default;
};

// Dense row-major float32 matrix.
struct Matrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::uint32_t r, std::uint32_t c) : rows(r), cols(c), data(std::size_t(r) * c, 0.0f) {}

  float& operator()(std::uint32_t r, std::uint32_t c) { return data[std::size_t(r) * cols + c]; }
  float operator()(std::uint32_t r, std::uint32_t c) const { return data[std::size_t(r) * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

// Opaque tagged payload carried inside a snapshot container (e.g. "TOYW").
struct ExtensionSection {
  std::string tag;  // exactly four ASCII characters
  std::vector<std::uint8_t> bytes;

  bool operator==(const ExtensionSection&) const = default;
};

// Attribution-relevant weights of an instrumented model.
//   w_in[l]  : ffn_width x d_model
//   w_out[l] : d_model x ffn_width
//   w_unembed: vocab x d_model
struct ModelSnapshot {
  std::string model_id;
  std::uint32_t layers = 0;
  std::uint32_t d_model = 0;
  std::uint32_t ffn_width = 0;
  std::uint32_t vocab = 0;
  ActFn act_fn = ActFn::kSiLU;
  std::vector<Matrix> w_in;
  std::vector<Matrix> w_out;
  Matrix w_unembed;
  std::vector<ExtensionSection> extensions;

  bool operator==(const ModelSnapshot&) const = default;
};

struct TaskSample {
  std::string sample_id;
  std::string capability_tag;
  std::optional<std::string> domain_tag;
  std::vector<std::uint32_t> prompt_tokens;
  std::vector<std::uint32_t> response_tokens;
  std::optional<bool> correct;

  bool operator==(const TaskSample&) const = default;
};

struct ScoredEntry {
  std::uint32_t index = 0;
  float score = 0.0f;

  bool operator==(const ScoredEntry&) const = default;
};

// One (response token, layer) record. Exactly one of `activations` (RAW) or
// `entries` (SCORED) is populated, matching the owning trace's mode.
struct TokenLayerRecord {
  std::uint32_t token_pos = 0;
  std::uint32_t layer = 0;
  std::vector<float> activations;
  std::vector<ScoredEntry> entries;
  std::vector<float> residual;

  bool operator==(const TokenLayerRecord&) const = default;
};

// Records are ordered token-major, then by position in TraceSet::layers.
struct SampleTrace {
  TaskSample sample;
  std::vector<TokenLayerRecord> records;

  bool operator==(const SampleTrace&) const = default;

  const TokenLayerRecord& record(std::size_t token_pos, std::size_t layer_slot,
                                 std::size_t layer_count) const {
    return records[token_pos * layer_count + layer_slot];
  }
};

struct TraceSet {
  std::string model_id;
  TraceMode mode = TraceMode::kRaw;
  UnitKind unit_kind = UnitKind::kNeuron;
  std::uint32_t m_store = 256;
  std::uint32_t width = 0;    // N for neurons, D for features
  std::uint32_t d_model = 0;  // residual width; 0 when residuals are absent
  bool has_residual = false;
  std::vector<std::uint32_t> layers;  // instrumented layer ids, ascending
  std::vector<SampleTrace> samples;

  bool operator==(const TraceSet&) const = default;
};

// Long iff the response is longer than half of the longest response in the set.
std::vector<LengthClass> length_classes(const std::vector<TaskSample>& samples);

}  // namespace mui::trace
