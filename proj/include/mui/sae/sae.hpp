#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mui/trace/types.hpp"

namespace mui::sae {

enum class Sparsity : std::uint8_t { kTopK = 0, kJumpReLU = 1 };

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using VecF = Eigen::VectorXf;

struct SaeLayer {
  std::uint32_t layer = 0;
  MatF w_enc;  // width x d_model
  VecF b_enc;  // width
  MatF w_dec;  // d_model x width
  VecF b_dec;  // d_model
  VecF theta;  // width; JumpReLU only

  bool operator==(const SaeLayer& o) const {
    return layer == o.layer && w_enc == o.w_enc && b_enc == o.b_enc && w_dec == o.w_dec && b_dec == o.b_dec &&
           theta == o.theta;
  }
};

struct SaeSnapshot {
  std::uint32_t d_model = 0;
  std::uint32_t width = 0;  // D
  Sparsity sparsity = Sparsity::kTopK;
  std::uint32_t k = 50;
  std::vector<SaeLayer> layers;

  // Throws ErrorCode::kInvalidArgument when `layer` is not covered.
  const SaeLayer& at(std::uint32_t layer) const;
  std::vector<std::uint32_t> covered_layers() const;
  bool operator==(const SaeSnapshot&) const = default;
};

// Checks D >= d_model, k <= D, shapes, and finiteness.
void validate_sae(const SaeSnapshot& sae);

struct Feature {
  std::uint32_t index = 0;
  double value = 0.0;

  bool operator==(const Feature&) const = default;
};

// Sparse, indices ascending, values > 0 (TopK) or > theta_i (JumpReLU).
using FeatureVector = std::vector<Feature>;

// Dense pre-activations W_e x + b_e.
Eigen::VectorXd pre_activations(const SaeSnapshot& sae, std::uint32_t layer, std::span<const float> residual);

// Applies the sparsity constraint to given pre-activations.
// TopK: ReLU, then the k largest (ties to the lower index).
// JumpReLU: entries strictly above their threshold.
FeatureVector sparsify(const SaeSnapshot& sae, const SaeLayer& layer, const Eigen::VectorXd& pre);

FeatureVector encode(const SaeSnapshot& sae, std::uint32_t layer, std::span<const float> residual);
Eigen::VectorXd decode(const SaeSnapshot& sae, std::uint32_t layer, const FeatureVector& features);

struct LayerLoss {
  std::uint32_t layer = 0;
  double mse = 0.0;  // mean over tokens of |x - decode(encode(x))|^2 / d_model
  std::size_t tokens = 0;
};

// One entry per covered layer that the trace instruments.
std::vector<LayerLoss> reconstruction_loss(const SaeSnapshot& sae, const trace::TraceSet& traces);

struct SaeTrainOptions {
  std::uint32_t width = 256;
  std::uint32_t k = 8;
  std::size_t steps = 2000;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 100;
};

struct SaeTrainResult {
  SaeSnapshot sae;
  std::vector<double> checkpoint_loss;  // full-data loss of the kept model at each checkpoint, from step 0
};

// TopK SAE per instrumented layer, trained with Adam on mean squared
// reconstruction error. The returned SAE is the best checkpoint, so the
// recorded loss sequence of kept models is non-increasing.
// Throws ErrorCode::kDivergence on a non-finite loss.
SaeTrainResult train_toy_sae(const trace::TraceSet& traces, const SaeTrainOptions& options);

// Deterministic initialization used by the trainer (decoder columns of unit
// norm, encoder = decoder transpose, b_dec = data mean).
SaeSnapshot init_sae(const trace::TraceSet& traces, std::uint32_t width, std::uint32_t k, std::uint64_t seed);

std::vector<std::uint8_t> encode_sae(const SaeSnapshot& sae);
SaeSnapshot decode_sae(std::span<const std::uint8_t> file);
std::size_t write_sae(const std::filesystem::path& path, const SaeSnapshot& sae);
SaeSnapshot read_sae(const std::filesystem::path& path);

}  // namespace mui::sae
