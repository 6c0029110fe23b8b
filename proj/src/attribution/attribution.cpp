#include "mui/attribution/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mui/error.hpp"

namespace mui::attribution {

const char* to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kVocabProjection: return "proj";
    case ScoreMode::kActivation: return "act";
    case ScoreMode::kIntegratedGradient: return "ig";
    case ScoreMode::kSaeFeature: return "sae";
  }
  return "?";
}

const char* to_string(Aggregation agg) { return agg == Aggregation::kTokenLevel ? "token" : "sum"; }

ScoreMode parse_score_mode(std::string_view s) {
  if (s == "proj") return ScoreMode::kVocabProjection;
  if (s == "act") return ScoreMode::kActivation;
  if (s == "ig") return ScoreMode::kIntegratedGradient;
  if (s == "sae") return ScoreMode::kSaeFeature;
  throw Error(ErrorCode::kInvalidArgument, "unknown score mode '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "token") return Aggregation::kTokenLevel;
  if (s == "sum") return Aggregation::kResponseSum;
  throw Error(ErrorCode::kInvalidArgument, "unknown aggregation '" + std::string(s) + "'");
}

ScoreCell dense_cell(std::span<const double> scores) {
  ScoreCell c(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) c[i] = {static_cast<std::uint32_t>(i), scores[i]};
  return c;
}

std::vector<double> score_vocab_projection(const trace::ModelSnapshot& s, std::uint32_t layer,
                                           std::span<const float> a, std::uint32_t target) {
  if (layer >= s.layers) throw Error(ErrorCode::kShapeMismatch, "layer out of range for snapshot");
  if (a.size() != s.ffn_width) throw Error(ErrorCode::kShapeMismatch, "activation length != FFN width");
  if (target >= s.vocab) throw Error(ErrorCode::kInvalidArgument, "target token out of vocabulary");
  const auto& wo = s.w_out[layer];
  std::vector<double> u(s.ffn_width, 0.0);
  for (std::uint32_t r = 0; r < s.d_model; ++r) {
    const double wu = s.w_unembed(target, r);
    const float* row = &wo.data[std::size_t(r) * wo.cols];
    for (std::uint32_t i = 0; i < s.ffn_width; ++i) u[i] += wu * double(row[i]);
  }
  for (std::uint32_t i = 0; i < s.ffn_width; ++i) u[i] *= double(a[i]);
  return u;
}

std::vector<double> score_activation(std::span<const float> a) { return {a.begin(), a.end()}; }

std::vector<double> score_integrated_gradient(const toy::ToyModel& model, const toy::ForwardResult& cache,
                                              std::size_t position, std::uint32_t layer, std::uint32_t target,
                                              const IgConfig& cfg) {
  if (cfg.m < 1) throw Error(ErrorCode::kInvalidArgument, "IG needs m >= 1");
  if (layer >= model.config.layers) throw Error(ErrorCode::kShapeMismatch, "layer out of range");
  if (target >= model.config.vocab) throw Error(ErrorCode::kInvalidArgument, "target token out of vocabulary");
  const toy::Vec a = cache.layers[layer].act.row(static_cast<Eigen::Index>(position)).transpose();
  std::vector<double> out(a.size(), 0.0);
  toy::Vec x(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    double grad_sum = 0.0;
    for (std::size_t k = 1; k <= cfg.m; ++k) {
      const double alpha = double(k) / double(cfg.m);
      x = alpha * a;
      const double h = std::max(cfg.fd_step * std::abs(x[i]), cfg.fd_floor);
      const double xi = x[i];
      x[i] = xi + h;
      const double up = toy::target_logit_with_activation(model, cache, position, layer, target, x);
      x[i] = xi - h;
      const double down = toy::target_logit_with_activation(model, cache, position, layer, target, x);
      grad_sum += (up - down) / (2.0 * h);
    }
    out[i] = a[i] * grad_sum / double(cfg.m);
    if (!std::isfinite(out[i]))
      throw Error(ErrorCode::kUndefined, "non-finite IG gradient at layer " + std::to_string(layer) + " unit " +
                                             std::to_string(i));
  }
  return out;
}

std::vector<double> score_integrated_gradient(const toy::ToyModel& model, const trace::TaskSample& sample,
                                              std::size_t token_pos, std::uint32_t layer, const IgConfig& cfg) {
  if (token_pos >= sample.response_tokens.size()) throw Error(ErrorCode::kInvalidArgument, "token_pos out of range");
  std::vector<std::uint32_t> seq = sample.prompt_tokens;
  seq.insert(seq.end(), sample.response_tokens.begin(), sample.response_tokens.begin() + token_pos);
  const auto fr = toy::forward(model, seq);
  return score_integrated_gradient(model, fr, seq.size() - 1, layer, sample.response_tokens[token_pos], cfg);
}

ScoreCell score_sae_features(const sae::SaeSnapshot& s, std::span<const float> residual, std::uint32_t layer) {
  const auto f = sae::encode(s, layer, residual);
  ScoreCell c;
  c.reserve(f.size());
  for (const auto& x : f) c.push_back({x.index, x.value});
  return c;
}

ScoreMatrix aggregate_response(const ScoreMatrix& m, Aggregation agg) {
  if (agg == Aggregation::kTokenLevel) return m;
  ScoreMatrix out;
  out.unit_kind = m.unit_kind;
  out.width = m.width;
  out.layers = m.layers;
  out.tokens = m.tokens == 0 ? 0 : 1;
  if (m.tokens == 0) return out;
  out.cells.resize(m.layers.size());
  for (std::size_t s = 0; s < m.layers.size(); ++s) {
    std::map<std::uint32_t, double> acc;
    for (std::size_t t = 0; t < m.tokens; ++t)
      for (const auto& e : m.cell(t, s)) acc[e.index] += e.score;
    for (const auto& [i, v] : acc) out.cells[s].push_back({i, v});
  }
  return out;
}

ScoreMatrix score_sample(const trace::TraceSet& ts, const trace::SampleTrace& st, const ScoreSource& src) {
  const std::size_t L = ts.layers.size();
  const std::size_t T = st.sample.response_tokens.size();
  if (st.records.size() != T * L) throw Error(ErrorCode::kShapeMismatch, "record count != tokens x layers");
  ScoreMatrix m;
  m.unit_kind = ts.unit_kind;
  m.width = ts.width;
  m.layers = ts.layers;
  m.tokens = T;
  m.cells.resize(T * L);

  if (ts.mode == trace::TraceMode::kScored) {
    if (src.mode != ScoreMode::kVocabProjection)
      throw Error(ErrorCode::kInvalidArgument, "SCORED traces only support the proj score mode");
    for (std::size_t r = 0; r < st.records.size(); ++r)
      for (const auto& e : st.records[r].entries) m.cells[r].push_back({e.index, double(e.score)});
    return m;
  }

  switch (src.mode) {
    case ScoreMode::kVocabProjection: {
      if (!src.snapshot) throw Error(ErrorCode::kInvalidArgument, "proj scores need a model snapshot");
      if (src.snapshot->model_id != ts.model_id)
        throw Error(ErrorCode::kHashMismatch, "trace model_id does not match the snapshot");
      for (std::size_t r = 0; r < st.records.size(); ++r) {
        const auto& rec = st.records[r];
        m.cells[r] = dense_cell(score_vocab_projection(*src.snapshot, rec.layer, rec.activations,
                                                       st.sample.response_tokens[rec.token_pos]));
      }
      break;
    }
    case ScoreMode::kActivation:
      for (std::size_t r = 0; r < st.records.size(); ++r) m.cells[r] = dense_cell(score_activation(st.records[r].activations));
      break;
    case ScoreMode::kIntegratedGradient: {
      if (!src.model) throw Error(ErrorCode::kInvalidArgument, "ig scores need a live toy model");
      if (src.model->config.ffn_width != ts.width) throw Error(ErrorCode::kShapeMismatch, "model width != trace width");
      std::vector<std::uint32_t> seq = st.sample.prompt_tokens;
      seq.insert(seq.end(), st.sample.response_tokens.begin(), st.sample.response_tokens.end());
      seq.pop_back();
      const auto fr = toy::forward(*src.model, seq);
      const std::size_t p0 = st.sample.prompt_tokens.size() - 1;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < L; ++s)
          m.cell(t, s) = dense_cell(score_integrated_gradient(*src.model, fr, p0 + t, ts.layers[s],
                                                              st.sample.response_tokens[t], src.ig));
      break;
    }
    case ScoreMode::kSaeFeature: {
      if (!src.sae) throw Error(ErrorCode::kInvalidArgument, "sae scores need an SAE");
      if (!ts.has_residual) throw Error(ErrorCode::kInvalidArgument, "sae scores need residual-bearing traces");
      if (src.sae->d_model != ts.d_model) throw Error(ErrorCode::kShapeMismatch, "SAE d_model != trace d_model");
      for (auto l : ts.layers) src.sae->at(l);
      m.unit_kind = trace::UnitKind::kFeature;
      m.width = src.sae->width;
      for (std::size_t r = 0; r < st.records.size(); ++r)
        m.cells[r] = score_sae_features(*src.sae, st.records[r].residual, st.records[r].layer);
      break;
    }
  }
  return m;
}

}  // namespace mui::attribution
