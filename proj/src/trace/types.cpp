#include "mui/trace/types.hpp"

#include <algorithm>

namespace mui::trace {

const char* to_string(UnitKind kind) { return kind == UnitKind::kNeuron ? "neuron" : "feature"; }

const char* to_string(TraceMode mode) { return mode == TraceMode::kRaw ? "raw" : "scored"; }

const char* to_string(ActFn fn) {
  switch (fn) {
    case ActFn::kReLU: return "relu";
    case ActFn::kSiLU: return "silu";
    case ActFn::kGeLU: return "gelu";
  }
  return "?";
}

std::vector<LengthClass> length_classes(const std::vector<TaskSample>& samples) {
  std::size_t longest = 0;
  for (const auto& s : samples) longest = std::max(longest, s.response_tokens.size());
  std::vector<LengthClass> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    out.push_back(2 * s.response_tokens.size() > longest ? LengthClass::kLong : LengthClass::kShort);
  return out;
}

}  // namespace mui::trace
