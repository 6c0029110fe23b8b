#include "mui/toy/capture.hpp"

#include <algorithm>

#include "mui/attribution/attribution.hpp"
#include "mui/error.hpp"

namespace mui::toy {

CaptureResult trace_capture(const ToyModel& model, std::span<const trace::TaskSample> samples,
                            const CaptureOptions& opt) {
  const auto& c = model.config;
  const auto snap = snapshot_export(model);
  CaptureResult out;
  auto& ts = out.traces;
  ts.model_id = snap.model_id;
  ts.mode = opt.mode;
  ts.unit_kind = trace::UnitKind::kNeuron;
  ts.m_store = opt.m_store;
  ts.width = c.ffn_width;
  ts.has_residual = opt.residuals;
  ts.d_model = opt.residuals ? c.d_model : 0;
  for (std::uint32_t l = 0; l < c.layers; ++l) ts.layers.push_back(l);

  for (const auto& sample : samples) {
    if (sample.prompt_tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt in " + sample.sample_id);
    for (auto t : sample.prompt_tokens)
      if (t >= c.vocab) throw Error(ErrorCode::kInvalidArgument, "token id out of vocabulary in " + sample.sample_id);
    trace::SampleTrace st;
    st.sample = sample;
    if (opt.decoding == Decoding::kFreeRunning) {
      if (sample.prompt_tokens.size() >= c.context) {
        ++out.skipped;
        continue;
      }
      const std::size_t budget = std::max<std::size_t>(1, sample.response_tokens.size() + opt.extra_tokens);
      st.sample.response_tokens = generate(model, sample.prompt_tokens, budget);
      st.sample.correct = st.sample.response_tokens == sample.response_tokens;
    } else if (sample.prompt_tokens.size() + sample.response_tokens.size() - 1 > c.context ||
               sample.response_tokens.empty()) {
      ++out.skipped;
      continue;
    }
    const auto& resp = st.sample.response_tokens;
    std::vector<std::uint32_t> seq = st.sample.prompt_tokens;
    seq.insert(seq.end(), resp.begin(), resp.end() - 1);
    const auto fr = forward(model, seq);
    const std::size_t p0 = st.sample.prompt_tokens.size() - 1;
    for (std::size_t t = 0; t < resp.size(); ++t) {
      const auto pos = static_cast<Eigen::Index>(p0 + t);
      for (std::uint32_t l = 0; l < c.layers; ++l) {
        trace::TokenLayerRecord rec;
        rec.token_pos = static_cast<std::uint32_t>(t);
        rec.layer = l;
        const auto& lc = fr.layers[l];
        std::vector<float> act(c.ffn_width);
        for (std::uint32_t i = 0; i < c.ffn_width; ++i) act[i] = static_cast<float>(lc.act(pos, i));
        if (opt.mode == trace::TraceMode::kRaw) {
          rec.activations = std::move(act);
        } else {
          const auto scores = attribution::score_vocab_projection(snap, l, act, resp[t]);
          std::vector<trace::ScoredEntry> all(scores.size());
          for (std::uint32_t i = 0; i < scores.size(); ++i) all[i] = {i, static_cast<float>(scores[i])};
          auto better = [](const trace::ScoredEntry& a, const trace::ScoredEntry& b) {
            return a.score > b.score || (a.score == b.score && a.index < b.index);
          };
          const std::size_t keep = std::min<std::size_t>(opt.m_store, all.size());
          std::partial_sort(all.begin(), all.begin() + keep, all.end(), better);
          all.resize(keep);
          rec.entries = std::move(all);
        }
        if (opt.residuals) {
          rec.residual.resize(c.d_model);
          for (std::uint32_t j = 0; j < c.d_model; ++j) rec.residual[j] = static_cast<float>(lc.resid_in(pos, j));
        }
        st.records.push_back(std::move(rec));
      }
    }
    ts.samples.push_back(std::move(st));
  }
  return out;
}

}  // namespace mui::toy
