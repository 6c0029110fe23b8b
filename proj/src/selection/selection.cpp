#include "mui/selection/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mui/error.hpp"

namespace mui::selection {
namespace {

using attribution::ScoreEntry;

struct Candidate {
  std::uint32_t layer;
  std::uint32_t index;
  double score;
};

// Higher score first, then lower (layer, index).
bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.layer != b.layer) return a.layer < b.layer;
  return a.index < b.index;
}

std::vector<Candidate> top_n(std::vector<Candidate> c, std::size_t n) {
  n = std::min(n, c.size());
  std::partial_sort(c.begin(), c.begin() + n, c.end(), ranks_before);
  c.resize(n);
  return c;
}

double parse_number(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorCode::kInvalidArgument, "bad number '" + std::string(s) + "' in policy");
  return v;
}

}  // namespace

void validate_policy(const SelectionPolicy& policy) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LayerTopK> || std::is_same_v<P, GlobalTopK>) {
          if (p.k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
        } else if constexpr (std::is_same_v<P, LayerTopPermille>) {
          if (!(p.ratio > 0.0 && p.ratio <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "ratio must be in (0, 1]");
        } else {
          if (!(p.fraction > 0.0 && p.fraction <= 1.0))
            throw Error(ErrorCode::kInvalidArgument, "fraction must be in (0, 1]");
        }
      },
      policy);
}

std::string describe(const SelectionPolicy& policy) {
  auto num = [](double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  return std::visit(
      [&](const auto& p) -> std::string {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LayerTopK>) return "topk:" + std::to_string(p.k);
        else if constexpr (std::is_same_v<P, LayerTopPermille>) return "permille:" + num(p.ratio);
        else if constexpr (std::is_same_v<P, GlobalTopK>) return "global:" + std::to_string(p.k);
        else return "topscore:" + num(p.fraction);
      },
      policy);
}

SelectionPolicy parse_policy(std::string_view text) {
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  SelectionPolicy p;
  if (name == "permille") {
    p = LayerTopPermille{arg.empty() ? 0.001 : parse_number(arg)};
  } else if (arg.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "policy '" + std::string(text) + "' needs a parameter");
  } else if (name == "topk" || name == "global") {
    const double k = parse_number(arg);
    if (k < 1 || k != std::floor(k) || k > 4294967295.0)
      throw Error(ErrorCode::kInvalidArgument, "k must be a positive integer");
    if (name == "topk") p = LayerTopK{static_cast<std::uint32_t>(k)};
    else p = GlobalTopK{static_cast<std::uint32_t>(k)};
  } else if (name == "topscore") {
    p = TopScore{parse_number(arg)};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown policy '" + std::string(text) + "'");
  }
  validate_policy(p);
  return p;
}

const char* to_string(Scope scope) { return scope == Scope::kPerTokenUnion ? "token_union" : "pooled"; }

Scope parse_scope(std::string_view text) {
  if (text == "token_union") return Scope::kPerTokenUnion;
  if (text == "pooled") return Scope::kPooledQuantile;
  throw Error(ErrorCode::kInvalidArgument, "unknown scope '" + std::string(text) + "'");
}

std::uint32_t effective_k(const SelectionPolicy& policy, std::uint32_t width) {
  if (const auto* p = std::get_if<LayerTopK>(&policy)) return p->k;
  if (const auto* p = std::get_if<GlobalTopK>(&policy)) return p->k;
  if (const auto* p = std::get_if<LayerTopPermille>(&policy)) {
    // The small epsilon keeps exact products such as 500 * 0.01 from flooring to 4.
    const double k = std::floor(double(width) * p->ratio + 1e-9);
    return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(k));
  }
  return 0;
}

std::vector<std::uint32_t> select_token(std::span<const ScoreEntry> cell, const SelectionPolicy& policy,
                                        std::uint32_t width) {
  validate_policy(policy);
  if (std::holds_alternative<GlobalTopK>(policy))
    throw Error(ErrorCode::kInvalidArgument, "GlobalTopK selects across layers; use select_sample");
  std::vector<std::uint32_t> out;
  if (const auto* ts = std::get_if<TopScore>(&policy)) {
    if (cell.empty()) return out;
    double mx = cell[0].score;
    for (const auto& e : cell) mx = std::max(mx, e.score);
    if (mx <= 0.0) return out;
    const double thr = ts->fraction * mx;
    for (const auto& e : cell)
      if (e.score >= thr) out.push_back(e.index);
  } else {
    std::vector<Candidate> c;
    c.reserve(cell.size());
    for (const auto& e : cell) c.push_back({0, e.index, e.score});
    for (const auto& x : top_n(std::move(c), effective_k(policy, width))) out.push_back(x.index);
  }
  std::sort(out.begin(), out.end());
  return out;
}

KeySet select_sample(const attribution::ScoreMatrix& input, const SelectionPolicy& policy, Scope scope,
                     attribution::Aggregation aggregation, std::string sample_id) {
  validate_policy(policy);
  const auto m = attribution::aggregate_response(input, aggregation);
  const std::size_t L = m.layers.size();
  const std::size_t T = m.tokens;
  std::set<trace::UnitId> units;

  if (const auto* g = std::get_if<GlobalTopK>(&policy)) {
    if (scope == Scope::kPerTokenUnion) {
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<Candidate> c;
        for (std::size_t s = 0; s < L; ++s)
          for (const auto& e : m.cell(t, s)) c.push_back({m.layers[s], e.index, e.score});
        for (const auto& x : top_n(std::move(c), g->k)) units.insert({x.layer, x.index});
      }
    } else {
      std::vector<Candidate> pool;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < L; ++s)
          for (const auto& e : m.cell(t, s)) pool.push_back({m.layers[s], e.index, e.score});
      for (const auto& x : top_n(std::move(pool), std::size_t(g->k) * T)) units.insert({x.layer, x.index});
    }
  } else if (scope == Scope::kPerTokenUnion) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t s = 0; s < L; ++s)
        for (auto i : select_token(m.cell(t, s), policy, m.width)) units.insert({m.layers[s], i});
  } else {
    const auto* ts = std::get_if<TopScore>(&policy);
    // Pooled count rules keep the k*T best (token, unit) entries of a layer,
    // so a one-token sample selects exactly what per-token selection does.
    for (std::size_t s = 0; s < L; ++s) {
      std::vector<Candidate> pool;
      for (std::size_t t = 0; t < T; ++t)
        for (const auto& e : m.cell(t, s)) pool.push_back({m.layers[s], e.index, e.score});
      if (pool.empty()) continue;
      if (ts) {
        double mx = pool[0].score;
        for (const auto& x : pool) mx = std::max(mx, x.score);
        if (mx <= 0.0) continue;
        for (const auto& x : pool)
          if (x.score >= ts->fraction * mx) units.insert({x.layer, x.index});
      } else {
        for (const auto& x : top_n(std::move(pool), std::size_t(effective_k(policy, m.width)) * T))
          units.insert({x.layer, x.index});
      }
    }
  }
  return KeySet{std::move(sample_id), {units.begin(), units.end()}, describe(policy), scope};
}

void write_keysets(const std::filesystem::path& path, std::span<const KeySet> keysets) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  for (const auto& ks : keysets) {
    nlohmann::ordered_json j;
    j["sample_id"] = ks.sample_id;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& u : ks.units) arr.push_back({u.layer, u.index});
    j["units"] = std::move(arr);
    j["policy"] = ks.policy;
    j["scope"] = to_string(ks.scope);
    f << j.dump() << '\n';
  }
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<KeySet> read_keysets(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<KeySet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      KeySet ks;
      ks.sample_id = j.at("sample_id").get<std::string>();
      for (const auto& u : j.at("units")) ks.units.push_back({u.at(0).get<std::uint32_t>(), u.at(1).get<std::uint32_t>()});
      std::sort(ks.units.begin(), ks.units.end());
      ks.policy = j.at("policy").get<std::string>();
      ks.scope = j.contains("scope") ? parse_scope(j["scope"].get<std::string>()) : Scope::kPerTokenUnion;
      out.push_back(std::move(ks));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mui::selection
