#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mui/trace/types.hpp"

namespace mui::trace {

inline constexpr std::uint32_t kTraceVersion = 1;
inline constexpr std::uint32_t kSnapshotVersion = 1;

enum class ViolationKind { kShape, kOrdering, kCount, kRange, kNonFinite, kHeader };

struct Violation {
  ViolationKind kind;
  std::string location;
  std::string message;
};

// Reports every invariant violation; never throws. `vocab` enables the
// token-id range check when the owning snapshot is known.
std::vector<Violation> validate_trace(const TraceSet& traces,
                                      std::optional<std::uint32_t> vocab = std::nullopt);

std::vector<std::uint8_t> encode_trace(const TraceSet& traces);
TraceSet decode_trace(std::span<const std::uint8_t> file);

// Throws ErrorCode::kInvalidArgument (nothing written) if validation fails.
std::size_t write_trace(const std::filesystem::path& path, const TraceSet& traces);
TraceSet read_trace(const std::filesystem::path& path);

// Hash over the serialized weights and extension sections.
std::string compute_model_id(const ModelSnapshot& snapshot);

std::vector<std::uint8_t> encode_snapshot(const ModelSnapshot& snapshot);
ModelSnapshot decode_snapshot(std::span<const std::uint8_t> file);
std::size_t write_snapshot(const std::filesystem::path& path, const ModelSnapshot& snapshot);
// Recomputes the model id; a mismatch raises ErrorCode::kHashMismatch.
ModelSnapshot read_snapshot(const std::filesystem::path& path);

// Throws kShapeMismatch when matrix shapes disagree with the declared dims.
void check_snapshot_shapes(const ModelSnapshot& snapshot);

}  // namespace mui::trace
