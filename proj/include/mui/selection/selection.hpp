#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mui/attribution/attribution.hpp"
#include "mui/trace/types.hpp"

namespace mui::selection {

struct LayerTopK {
  std::uint32_t k = 1;
};
struct LayerTopPermille {
  double ratio = 0.001;
};
struct GlobalTopK {
  std::uint32_t k = 1;
};
struct TopScore {
  double fraction = 0.9;
};

using SelectionPolicy = std::variant<LayerTopK, LayerTopPermille, GlobalTopK, TopScore>;

enum class Scope { kPerTokenUnion, kPooledQuantile };

// Throws ErrorCode::kInvalidArgument when hyperparameters are out of range.
void validate_policy(const SelectionPolicy& policy);

// "topk:K", "permille:R", "global:K", "topscore:F"; parse accepts the same.
std::string describe(const SelectionPolicy& policy);
SelectionPolicy parse_policy(std::string_view text);
const char* to_string(Scope scope);
Scope parse_scope(std::string_view text);

// LayerTopPermille -> max(1, floor(width * ratio)); LayerTopK/GlobalTopK -> k;
// TopScore -> 0 (not a count rule).
std::uint32_t effective_k(const SelectionPolicy& policy, std::uint32_t width);

// Indices selected from one (token, layer) cell, ascending. GlobalTopK spans
// layers and is only available through select_sample.
std::vector<std::uint32_t> select_token(std::span<const attribution::ScoreEntry> cell, const SelectionPolicy& policy,
                                        std::uint32_t width);

struct KeySet {
  std::string sample_id;
  std::vector<trace::UnitId> units;  // ascending
  std::string policy;
  Scope scope = Scope::kPerTokenUnion;

  bool operator==(const KeySet&) const = default;
};

KeySet select_sample(const attribution::ScoreMatrix& matrix, const SelectionPolicy& policy, Scope scope,
                     attribution::Aggregation aggregation, std::string sample_id = {});

void write_keysets(const std::filesystem::path& path, std::span<const KeySet> keysets);
std::vector<KeySet> read_keysets(const std::filesystem::path& path);

}  // namespace mui::selection
