#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mui/sae/sae.hpp"
#include "mui/toy/toy_model.hpp"
#include "mui/trace/types.hpp"

namespace mui::attribution {

enum class ScoreMode { kVocabProjection, kActivation, kIntegratedGradient, kSaeFeature };
enum class Aggregation { kTokenLevel, kResponseSum };

const char* to_string(ScoreMode mode);
const char* to_string(Aggregation agg);
// Accepts the CLI spellings proj|act|ig|sae and token|sum.
ScoreMode parse_score_mode(std::string_view s);
Aggregation parse_aggregation(std::string_view s);

struct IgConfig {
  std::size_t m = 10;
  double fd_step = 1e-3;   // relative
  double fd_floor = 1e-6;  // absolute lower bound on the step
};

struct ScoreEntry {
  std::uint32_t index = 0;
  double score = 0.0;

  bool operator==(const ScoreEntry&) const = default;
};

// Candidate scores of one (token, layer) cell. Dense cells list every unit
// in index order; sparse cells (SCORED traces, SAE features) list only the
// stored units, and units absent from a cell cannot be selected from it.
using ScoreCell = std::vector<ScoreEntry>;

struct ScoreMatrix {
  trace::UnitKind unit_kind = trace::UnitKind::kNeuron;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> layers;  // ascending layer ids
  std::size_t tokens = 0;
  std::vector<ScoreCell> cells;  // token-major, then layer slot

  ScoreCell& cell(std::size_t t, std::size_t slot) { return cells[t * layers.size() + slot]; }
  const ScoreCell& cell(std::size_t t, std::size_t slot) const { return cells[t * layers.size() + slot]; }
  bool operator==(const ScoreMatrix&) const = default;
};

// Builds a dense cell from a score vector.
ScoreCell dense_cell(std::span<const double> scores);

// c_i = (W_u[target] . W_out[:, i]) * a_i, computed in double.
std::vector<double> score_vocab_projection(const trace::ModelSnapshot& snapshot, std::uint32_t layer,
                                           std::span<const float> activations, std::uint32_t target);
std::vector<double> score_activation(std::span<const float> activations);

// IG_i = a_i * mean_k d logit_target / d a_i at (k/m) a, by central finite
// differences. `position` is the sequence position whose next-token logit is
// attributed; `cache` must come from forward() over the same model.
std::vector<double> score_integrated_gradient(const toy::ToyModel& model, const toy::ForwardResult& cache,
                                              std::size_t position, std::uint32_t layer, std::uint32_t target,
                                              const IgConfig& config);

// Convenience form: runs forward over prompt + response once.
std::vector<double> score_integrated_gradient(const toy::ToyModel& model, const trace::TaskSample& sample,
                                              std::size_t token_pos, std::uint32_t layer, const IgConfig& config);

// Post-sparsity SAE feature values as a sparse cell, indices ascending.
ScoreCell score_sae_features(const sae::SaeSnapshot& sae, std::span<const float> residual, std::uint32_t layer);

// ResponseSum sums scores over tokens per layer (absent entries count as 0)
// and yields a one-token matrix; TokenLevel returns the input.
ScoreMatrix aggregate_response(const ScoreMatrix& matrix, Aggregation aggregation);

// Everything a scorer may need; unused pointers may be null.
struct ScoreSource {
  ScoreMode mode = ScoreMode::kVocabProjection;
  const trace::ModelSnapshot* snapshot = nullptr;  // kVocabProjection on RAW traces
  const toy::ToyModel* model = nullptr;            // kIntegratedGradient
  const sae::SaeSnapshot* sae = nullptr;           // kSaeFeature
  IgConfig ig;
};

// Scores every (token, layer) record of one sample. SCORED traces are only
// valid with kVocabProjection and pass their stored entries through.
ScoreMatrix score_sample(const trace::TraceSet& traces, const trace::SampleTrace& sample, const ScoreSource& source);

}  // namespace mui::attribution
