#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mui/trace/types.hpp"

namespace mui::toy {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// Byte-level vocabulary: 0..255 are bytes, then three specials.
inline constexpr std::uint32_t kBos = 256;
inline constexpr std::uint32_t kEos = 257;
inline constexpr std::uint32_t kPad = 258;

struct ToyConfig {
  std::uint32_t layers = 4;
  std::uint32_t d_model = 64;
  std::uint32_t heads = 4;
  std::uint32_t ffn_width = 256;
  std::uint32_t vocab = 259;
  std::uint32_t context = 256;
  trace::ActFn act_fn = trace::ActFn::kSiLU;
  std::uint64_t seed = 0;

  bool operator==(const ToyConfig&) const = default;
};

// Throws ErrorCode::kInvalidArgument on inconsistent dimensions.
void validate_config(const ToyConfig& config);

struct LayerWeights {
  Vec attn_norm;  // RMSNorm gain before attention
  Mat wq, wk, wv, wo;
  Vec ffn_norm;  // RMSNorm gain before the FFN
  Mat w_in;      // ffn_width x d_model
  Mat w_out;     // d_model x ffn_width
};

// Pre-norm decoder-only transformer with learned positions and no final norm:
// logits = W_u h_L, so every FFN output reaches the vocabulary linearly.
struct ToyModel {
  ToyConfig config;
  Mat tok_emb;    // vocab x d_model
  Mat pos_emb;    // context x d_model
  std::vector<LayerWeights> layers;
  Mat w_unembed;  // vocab x d_model
  // Per-layer multiplicative keep mask on the FFN activation (empty = unmasked).
  std::vector<Vec> ffn_keep;

  std::size_t parameter_count() const;
  bool masked() const { return !ffn_keep.empty(); }
};

// Closed-form parameter count for a config.
std::size_t parameter_count(const ToyConfig& config);

ToyModel init_toy(const ToyConfig& config);

// FNV-1a over the little-endian bytes of every weight, in a fixed order.
std::uint64_t weight_checksum(const ToyModel& model);

double activate(trace::ActFn fn, double z);
double activate_grad(trace::ActFn fn, double z);

// Intermediate values of one forward pass over a token sequence.
struct LayerCache {
  Mat resid_in;   // T x d, input to the block
  Mat attn_in;    // T x d, normalized input to attention
  Mat q, k, v;    // T x d
  std::vector<Mat> probs;  // per head, T x T
  Mat attn_cat;   // T x d, concatenated head outputs
  Mat ffn_resid;  // T x d, residual entering the FFN sub-layer (pre-norm)
  Mat ffn_in;     // T x d, normalized FFN input
  Mat pre_act;    // T x N
  Mat act;        // T x N, sigma(W_in x) after masking
};

struct ForwardResult {
  Mat logits;  // T x V
  std::vector<LayerCache> layers;
  Mat final_resid;  // T x d
};

ForwardResult forward(const ToyModel& model, std::span<const std::uint32_t> tokens);

// Greedy decoding, ties to the lowest token id, stops after EOS or max_new.
// Throws ErrorCode::kInvalidArgument if the prompt does not fit the context.
std::vector<std::uint32_t> generate(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                    std::size_t max_new);

std::uint32_t argmax_lowest(std::span<const double> logits);

struct MaskSpec {
  std::vector<trace::UnitId> units;
};

// Returns a copy whose FFN activations at the given units are forced to zero.
ToyModel apply_mask(const ToyModel& model, const MaskSpec& mask);

// Target-token logit at `position` when the FFN activation vector of `layer`
// at that position is replaced by `activation`; all other positions and
// layers below are taken from `cache`.
double target_logit_with_activation(const ToyModel& model, const ForwardResult& cache, std::size_t position,
                                    std::size_t layer, std::uint32_t target, const Vec& activation);

// Attribution weights (norm gains folded into W_in) plus the full model
// under the "TOYW" extension section.
trace::ModelSnapshot snapshot_export(const ToyModel& model);
ToyModel snapshot_import(const trace::ModelSnapshot& snapshot);

void save_toy(const std::filesystem::path& path, const ToyModel& model);
ToyModel load_toy(const std::filesystem::path& path);

}  // namespace mui::toy
