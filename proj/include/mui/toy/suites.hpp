#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mui/toy/toy_model.hpp"
#include "mui/trace/types.hpp"

namespace mui::toy {

enum class SuiteKind { kCopy, kReverse, kModAdd, kSort, kMajority };

const char* suite_name(SuiteKind kind);
const char* suite_capability(SuiteKind kind);
std::optional<SuiteKind> parse_suite_kind(std::string_view name);

struct SuiteItem {
  std::string id;
  std::string capability_tag;
  std::vector<std::uint32_t> prompt_tokens;     // BOS + prompt bytes
  std::vector<std::uint32_t> reference_tokens;  // answer bytes, no EOS
};

struct TaskSuite {
  std::string name;
  std::string capability_tag;
  std::uint64_t seed = 0;
  std::vector<SuiteItem> items;

  std::size_t size() const { return items.size(); }
};

TaskSuite make_suite(SuiteKind kind, std::size_t size, std::uint64_t seed);

std::vector<std::uint32_t> encode_text(std::string_view text, bool with_bos);
std::string decode_text(std::span<const std::uint32_t> tokens);

// JSONL rows {id, prompt, reference, capability_tag}; prompt text excludes BOS.
void write_suite_jsonl(const std::filesystem::path& path, const TaskSuite& suite);
TaskSuite read_suite_jsonl(const std::filesystem::path& path, std::string name);

struct EvalResult {
  std::string suite;
  double accuracy = 0.0;  // percent
  std::vector<bool> correct;

  bool operator==(const EvalResult&) const = default;
};

EvalResult accuracy_from_flags(std::string suite, std::vector<bool> correct);

// Exact match of the greedy continuation (stopped at EOS) against the reference.
EvalResult evaluate(const ToyModel& model, const TaskSuite& suite);

// Samples whose response is the reference followed by EOS.
std::vector<trace::TaskSample> to_samples(const TaskSuite& suite);

}  // namespace mui::toy
