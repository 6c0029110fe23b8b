#pragma once

#include <span>
#include <vector>

#include "mui/toy/toy_model.hpp"
#include "mui/trace/types.hpp"

namespace mui::toy {

enum class Decoding { kFreeRunning, kForcedReference };

struct CaptureOptions {
  trace::TraceMode mode = trace::TraceMode::kRaw;
  Decoding decoding = Decoding::kFreeRunning;
  bool residuals = false;
  std::uint32_t m_store = 256;   // SCORED mode only
  std::size_t extra_tokens = 1;  // FreeRunning budget beyond the reference length
};

struct CaptureResult {
  trace::TraceSet traces;
  std::size_t skipped = 0;  // samples dropped for context overflow
};

// One record per (response token, layer), taken at the position of the last
// token before that response token. FreeRunning replaces the response with
// the model's greedy output and sets `correct` by exact match against the
// sample's response; ForcedReference teacher-forces the given response.
// SCORED mode stores the top-m_store vocabulary-projection scores.
CaptureResult trace_capture(const ToyModel& model, std::span<const trace::TaskSample> samples,
                            const CaptureOptions& options);

}  // namespace mui::toy
