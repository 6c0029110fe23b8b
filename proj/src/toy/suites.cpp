#include "mui/toy/suites.hpp"

#include <algorithm>
#include <fstream>
#include "json.hpp"

#include "mui/error.hpp"
#include "mui/random.hpp"

namespace mui::toy {
namespace {

constexpr std::string_view kLetters = "abcdefghijklmnop";
// Transform suites use fixed-length words so the answer position maps to a
// fixed prompt offset.
constexpr std::size_t kWordLength = 4;

std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len, std::string_view alphabet) {
  const std::size_t n = min_len + rng.below(max_len - min_len + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}

struct PromptAnswer {
  std::string prompt;
  std::string answer;
};

PromptAnswer make_item(SuiteKind kind, Rng& rng) {
  switch (kind) {
    case SuiteKind::kCopy: {
      auto w = random_word(rng, kWordLength, kWordLength, kLetters);
      return {"copy: " + w, w};
    }
    case SuiteKind::kReverse: {
      auto w = random_word(rng, kWordLength, kWordLength, kLetters);
      return {"rev: " + w, std::string(w.rbegin(), w.rend())};
    }
    case SuiteKind::kModAdd: {
      const auto a = rng.below(10);
      const auto b = rng.below(10);
      return {"add: " + std::to_string(a) + "+" + std::to_string(b), std::to_string((a + b) % 10)};
    }
    case SuiteKind::kSort: {
      auto w = random_word(rng, kWordLength, kWordLength, kLetters);
      auto s = w;
      std::sort(s.begin(), s.end());
      return {"sort: " + w, s};
    }
    case SuiteKind::kMajority: {
      auto w = random_word(rng, 3, 7, "ab");
      if (w.size() % 2 == 0) w.push_back('a' + static_cast<char>(rng.below(2)));
      const auto na = std::count(w.begin(), w.end(), 'a');
      return {"maj: " + w, 2 * na > static_cast<long>(w.size()) ? "a" : "b"};
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown suite kind");
}

}  // namespace

const char* suite_name(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::kCopy: return "copy";
    case SuiteKind::kReverse: return "reverse";
    case SuiteKind::kModAdd: return "modadd";
    case SuiteKind::kSort: return "sort";
    case SuiteKind::kMajority: return "majority";
  }
  return "?";
}

const char* suite_capability(SuiteKind kind) {
  switch (kind) {
    case SuiteKind::kCopy:
    case SuiteKind::kReverse:
    case SuiteKind::kSort: return "transform";
    case SuiteKind::kModAdd: return "math";
    case SuiteKind::kMajority: return "general";
  }
  return "?";
}

std::optional<SuiteKind> parse_suite_kind(std::string_view name) {
  for (auto k : {SuiteKind::kCopy, SuiteKind::kReverse, SuiteKind::kModAdd, SuiteKind::kSort, SuiteKind::kMajority})
    if (name == suite_name(k)) return k;
  return std::nullopt;
}

std::vector<std::uint32_t> encode_text(std::string_view text, bool with_bos) {
  std::vector<std::uint32_t> out;
  out.reserve(text.size() + 1);
  if (with_bos) out.push_back(kBos);
  for (unsigned char c : text) out.push_back(c);
  return out;
}

std::string decode_text(std::span<const std::uint32_t> tokens) {
  std::string out;
  for (auto t : tokens)
    if (t < 256) out.push_back(static_cast<char>(t));
  return out;
}

TaskSuite make_suite(SuiteKind kind, std::size_t size, std::uint64_t seed) {
  TaskSuite suite;
  suite.name = suite_name(kind);
  suite.capability_tag = suite_capability(kind);
  suite.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    auto [prompt, answer] = make_item(kind, rng);
    suite.items.push_back({suite.name + "-" + std::to_string(seed) + "-" + std::to_string(i), suite.capability_tag,
                           encode_text(prompt, true), encode_text(answer, false)});
  }
  return suite;
}

void write_suite_jsonl(const std::filesystem::path& path, const TaskSuite& suite) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  for (const auto& item : suite.items) {
    nlohmann::ordered_json row;
    row["id"] = item.id;
    row["prompt"] = decode_text(item.prompt_tokens);
    row["reference"] = decode_text(item.reference_tokens);
    row["capability_tag"] = item.capability_tag;
    out << row.dump() << '\n';
  }
}

TaskSuite read_suite_jsonl(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  TaskSuite suite;
  suite.name = std::move(name);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
      SuiteItem item{row.at("id").get<std::string>(), row.at("capability_tag").get<std::string>(),
                     encode_text(row.at("prompt").get<std::string>(), true),
                     encode_text(row.at("reference").get<std::string>(), false)};
      suite.items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
  }
  if (!suite.items.empty()) suite.capability_tag = suite.items.front().capability_tag;
  return suite;
}

EvalResult accuracy_from_flags(std::string suite, std::vector<bool> correct) {
  EvalResult r;
  r.suite = std::move(suite);
  const auto hits = std::count(correct.begin(), correct.end(), true);
  r.accuracy = correct.empty() ? 0.0 : 100.0 * double(hits) / double(correct.size());
  r.correct = std::move(correct);
  return r;
}

EvalResult evaluate(const ToyModel& model, const TaskSuite& suite) {
  std::vector<bool> flags;
  flags.reserve(suite.size());
  for (const auto& item : suite.items) {
    auto out = generate(model, item.prompt_tokens, item.reference_tokens.size() + 1);
    flags.push_back(!out.empty() && out.back() == kEos &&
                    std::equal(out.begin(), out.end() - 1, item.reference_tokens.begin(),
                               item.reference_tokens.end()));
  }
  return accuracy_from_flags(suite.name, std::move(flags));
}

std::vector<trace::TaskSample> to_samples(const TaskSuite& suite) {
  std::vector<trace::TaskSample> out;
  out.reserve(suite.size());
  for (const auto& item : suite.items) {
    trace::TaskSample s;
    s.sample_id = item.id;
    s.capability_tag = item.capability_tag;
    s.domain_tag = suite.name;
    s.prompt_tokens = item.prompt_tokens;
    s.response_tokens = item.reference_tokens;
    s.response_tokens.push_back(kEos);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mui::toy
