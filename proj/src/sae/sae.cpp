#include "mui/sae/sae.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mui/error.hpp"
#include "mui/random.hpp"
#include "mui/trace/binary.hpp"

namespace mui::sae {
namespace {

constexpr std::string_view kMagic = "MUSA";
constexpr std::uint32_t kVersion = 1;

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<Eigen::VectorXd> layer_residuals(const trace::TraceSet& traces, std::uint32_t layer) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& s : traces.samples)
    for (const auto& rec : s.records)
      if (rec.layer == layer && !rec.residual.empty())
        out.push_back(Eigen::Map<const Eigen::VectorXf>(rec.residual.data(), rec.residual.size()).cast<double>());
  return out;
}

double dataset_loss(const SaeSnapshot& sae, std::uint32_t layer, const std::vector<Eigen::VectorXd>& xs) {
  if (xs.empty()) return 0.0;
  const auto& L = sae.at(layer);
  const MatD we = L.w_enc.cast<double>();
  const Eigen::VectorXd be = L.b_enc.cast<double>();
  double total = 0.0;
  for (const auto& x : xs) {
    const Eigen::VectorXd pre = we * x + be;
    const auto f = sparsify(sae, L, pre);
    Eigen::VectorXd xhat = L.b_dec.cast<double>();
    for (const auto& ft : f) xhat += ft.value * L.w_dec.col(ft.index).cast<double>();
    total += (x - xhat).squaredNorm() / double(x.size());
  }
  return total / double(xs.size());
}

struct Adam {
  double lr;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;

  template <typename P, typename G, typename S>
  void step(P& param, const G& grad, S& m, S& v) const {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, double(t));
    const double c2 = 1.0 - std::pow(b2, double(t));
    param -= (lr * (m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
  }
};

}  // namespace

const SaeLayer& SaeSnapshot::at(std::uint32_t layer) const {
  for (const auto& l : layers)
    if (l.layer == layer) return l;
  throw Error(ErrorCode::kInvalidArgument, "SAE does not cover layer " + std::to_string(layer));
}

std::vector<std::uint32_t> SaeSnapshot::covered_layers() const {
  std::vector<std::uint32_t> out;
  for (const auto& l : layers) out.push_back(l.layer);
  return out;
}

void validate_sae(const SaeSnapshot& sae) {
  if (sae.width < sae.d_model) throw Error(ErrorCode::kInvalidArgument, "SAE width must be >= d_model");
  if (sae.sparsity == Sparsity::kTopK && (sae.k == 0 || sae.k > sae.width))
    throw Error(ErrorCode::kInvalidArgument, "TopK k must be in [1, width]");
  const Eigen::Index D = sae.width;
  const Eigen::Index d = sae.d_model;
  for (const auto& l : sae.layers) {
    const bool ok = l.w_enc.rows() == D && l.w_enc.cols() == d && l.b_enc.size() == D && l.w_dec.rows() == d &&
                    l.w_dec.cols() == D && l.b_dec.size() == d &&
                    (sae.sparsity == Sparsity::kTopK ? l.theta.size() == 0 : l.theta.size() == D);
    if (!ok) throw Error(ErrorCode::kShapeMismatch, "SAE layer " + std::to_string(l.layer) + " shapes");
    if (!l.w_enc.allFinite() || !l.b_enc.allFinite() || !l.w_dec.allFinite() || !l.b_dec.allFinite() ||
        !l.theta.allFinite())
      throw Error(ErrorCode::kInvalidArgument, "non-finite SAE weight in layer " + std::to_string(l.layer));
  }
}

Eigen::VectorXd pre_activations(const SaeSnapshot& sae, std::uint32_t layer, std::span<const float> residual) {
  const auto& L = sae.at(layer);
  if (residual.size() != sae.d_model) throw Error(ErrorCode::kShapeMismatch, "residual length != SAE d_model");
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXf>(residual.data(), residual.size()).cast<double>();
  return L.w_enc.cast<double>() * x + L.b_enc.cast<double>();
}

FeatureVector sparsify(const SaeSnapshot& sae, const SaeLayer& layer, const Eigen::VectorXd& pre) {
  FeatureVector out;
  if (sae.sparsity == Sparsity::kJumpReLU) {
    for (Eigen::Index i = 0; i < pre.size(); ++i)
      if (pre[i] > double(layer.theta[i])) out.push_back({static_cast<std::uint32_t>(i), pre[i]});
    return out;
  }
  for (Eigen::Index i = 0; i < pre.size(); ++i)
    if (pre[i] > 0.0) out.push_back({static_cast<std::uint32_t>(i), pre[i]});
  auto better = [](const Feature& a, const Feature& b) {
    return a.value > b.value || (a.value == b.value && a.index < b.index);
  };
  if (out.size() > sae.k) {
    std::nth_element(out.begin(), out.begin() + sae.k, out.end(), better);
    out.resize(sae.k);
  }
  std::sort(out.begin(), out.end(), [](const Feature& a, const Feature& b) { return a.index < b.index; });
  return out;
}

FeatureVector encode(const SaeSnapshot& sae, std::uint32_t layer, std::span<const float> residual) {
  return sparsify(sae, sae.at(layer), pre_activations(sae, layer, residual));
}

Eigen::VectorXd decode(const SaeSnapshot& sae, std::uint32_t layer, const FeatureVector& features) {
  const auto& L = sae.at(layer);
  Eigen::VectorXd x = L.b_dec.cast<double>();
  for (const auto& f : features) {
    if (f.index >= sae.width) throw Error(ErrorCode::kInvalidArgument, "feature index out of range");
    x += f.value * L.w_dec.col(f.index).cast<double>();
  }
  return x;
}

std::vector<LayerLoss> reconstruction_loss(const SaeSnapshot& sae, const trace::TraceSet& traces) {
  if (!traces.has_residual) throw Error(ErrorCode::kInvalidArgument, "trace carries no residuals");
  std::vector<LayerLoss> out;
  for (const auto& l : sae.layers) {
    if (std::find(traces.layers.begin(), traces.layers.end(), l.layer) == traces.layers.end()) continue;
    const auto xs = layer_residuals(traces, l.layer);
    out.push_back({l.layer, dataset_loss(sae, l.layer, xs), xs.size()});
  }
  return out;
}

SaeSnapshot init_sae(const trace::TraceSet& traces, std::uint32_t width, std::uint32_t k, std::uint64_t seed) {
  if (!traces.has_residual) throw Error(ErrorCode::kInvalidArgument, "trace carries no residuals");
  SaeSnapshot sae;
  sae.d_model = traces.d_model;
  sae.width = width;
  sae.k = k;
  sae.sparsity = Sparsity::kTopK;
  Rng rng(seed);
  const Eigen::Index d = traces.d_model;
  for (auto layer : traces.layers) {
    SaeLayer L;
    L.layer = layer;
    MatD dec(d, width);
    for (Eigen::Index i = 0; i < dec.size(); ++i) dec.data()[i] = rng.normal();
    for (Eigen::Index j = 0; j < dec.cols(); ++j) dec.col(j).normalize();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    const auto xs = layer_residuals(traces, layer);
    for (const auto& x : xs) mean += x;
    if (!xs.empty()) mean /= double(xs.size());
    L.w_dec = dec.cast<float>();
    L.w_enc = dec.transpose().cast<float>();
    L.b_dec = mean.cast<float>();
    L.b_enc = (-(dec.transpose() * mean)).cast<float>();
    sae.layers.push_back(std::move(L));
  }
  validate_sae(sae);
  return sae;
}

SaeTrainResult train_toy_sae(const trace::TraceSet& traces, const SaeTrainOptions& opt) {
  SaeTrainResult result{init_sae(traces, opt.width, opt.k, opt.seed), {}};
  SaeSnapshot& kept = result.sae;
  const std::size_t every = std::max<std::size_t>(1, opt.checkpoint_every);
  std::vector<std::vector<Eigen::VectorXd>> data;
  for (const auto& L : kept.layers) data.push_back(layer_residuals(traces, L.layer));

  auto total_loss = [&](const SaeSnapshot& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.layers.size(); ++i) sum += dataset_loss(s, s.layers[i].layer, data[i]);
    return s.layers.empty() ? 0.0 : sum / double(s.layers.size());
  };
  double best = total_loss(kept);
  result.checkpoint_loss.push_back(best);
  if (opt.steps == 0 || opt.batch == 0) return result;

  struct State {
    MatD we, wd, m_we, v_we, m_wd, v_wd;
    Eigen::VectorXd be, bd, m_be, v_be, m_bd, v_bd;
  };
  std::vector<State> st;
  for (const auto& L : kept.layers) {
    State s;
    s.we = L.w_enc.cast<double>();
    s.wd = L.w_dec.cast<double>();
    s.be = L.b_enc.cast<double>();
    s.bd = L.b_dec.cast<double>();
    s.m_we = s.v_we = MatD::Zero(s.we.rows(), s.we.cols());
    s.m_wd = s.v_wd = MatD::Zero(s.wd.rows(), s.wd.cols());
    s.m_be = s.v_be = Eigen::VectorXd::Zero(s.be.size());
    s.m_bd = s.v_bd = Eigen::VectorXd::Zero(s.bd.size());
    st.push_back(std::move(s));
  }
  SaeSnapshot live = kept;
  Rng rng(Rng::derive(opt.seed, 2));
  Adam adam{opt.lr};
  for (std::size_t step = 1; step <= opt.steps; ++step) {
    adam.t = step;
    for (std::size_t li = 0; li < st.size(); ++li) {
      const auto& xs = data[li];
      if (xs.empty()) continue;
      auto& s = st[li];
      const auto& L = live.layers[li];
      MatD g_we = MatD::Zero(s.we.rows(), s.we.cols()), g_wd = MatD::Zero(s.wd.rows(), s.wd.cols());
      Eigen::VectorXd g_be = Eigen::VectorXd::Zero(s.be.size()), g_bd = Eigen::VectorXd::Zero(s.bd.size());
      double loss = 0.0;
      for (std::size_t b = 0; b < opt.batch; ++b) {
        const auto& x = xs[rng.below(xs.size())];
        const Eigen::VectorXd pre = s.we * x + s.be;
        const auto f = sparsify(live, L, pre);
        Eigen::VectorXd xhat = s.bd;
        for (const auto& ft : f) xhat += ft.value * s.wd.col(ft.index);
        const Eigen::VectorXd r = xhat - x;
        loss += r.squaredNorm() / double(x.size());
        const Eigen::VectorXd dx = (2.0 / double(x.size())) * r;
        g_bd += dx;
        for (const auto& ft : f) {
          g_wd.col(ft.index) += ft.value * dx;
          const double df = s.wd.col(ft.index).dot(dx);
          g_we.row(ft.index) += df * x.transpose();
          g_be[ft.index] += df;
        }
      }
      if (!std::isfinite(loss)) throw Error(ErrorCode::kDivergence, "SAE loss became non-finite");
      const double inv = 1.0 / double(opt.batch);
      adam.step(s.we, MatD(g_we * inv), s.m_we, s.v_we);
      adam.step(s.wd, MatD(g_wd * inv), s.m_wd, s.v_wd);
      adam.step(s.be, Eigen::VectorXd(g_be * inv), s.m_be, s.v_be);
      adam.step(s.bd, Eigen::VectorXd(g_bd * inv), s.m_bd, s.v_bd);
    }
    if (step % every == 0 || step == opt.steps) {
      for (std::size_t li = 0; li < st.size(); ++li) {
        auto& L = live.layers[li];
        L.w_enc = st[li].we.cast<float>();
        L.w_dec = st[li].wd.cast<float>();
        L.b_enc = st[li].be.cast<float>();
        L.b_dec = st[li].bd.cast<float>();
      }
      const double l = total_loss(live);
      if (!std::isfinite(l)) throw Error(ErrorCode::kDivergence, "SAE loss became non-finite");
      if (l <= best) {
        best = l;
        kept = live;
      }
      result.checkpoint_loss.push_back(best);
    }
  }
  validate_sae(kept);
  return result;
}

std::vector<std::uint8_t> encode_sae(const SaeSnapshot& sae) {
  validate_sae(sae);
  trace::ByteWriter w;
  w.u32(sae.d_model);
  w.u32(sae.width);
  w.u8(static_cast<std::uint8_t>(sae.sparsity));
  w.u32(sae.k);
  w.u64(sae.layers.size());
  auto put = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f32(m.data()[i]);
  };
  for (const auto& l : sae.layers) {
    w.u32(l.layer);
    put(l.w_enc);
    put(l.b_enc);
    put(l.w_dec);
    put(l.b_dec);
    if (sae.sparsity == Sparsity::kJumpReLU) put(l.theta);
  }
  return trace::frame(kMagic, kVersion, w.bytes());
}

SaeSnapshot decode_sae(std::span<const std::uint8_t> file) {
  trace::ByteReader r(trace::unframe(file, kMagic, kVersion));
  SaeSnapshot sae;
  sae.d_model = r.u32();
  sae.width = r.u32();
  const auto sp = r.u8();
  if (sp > 1) throw Error(ErrorCode::kFormat, "bad SAE sparsity id");
  sae.sparsity = static_cast<Sparsity>(sp);
  sae.k = r.u32();
  const std::size_t per_layer = 4 * (2ull * sae.width * sae.d_model + sae.width + sae.d_model);
  const auto n = r.u64();
  if (per_layer == 0 || n > r.remaining() / per_layer) throw Error(ErrorCode::kTruncated, "SAE layer count");
  auto get = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f32();
  };
  for (std::uint64_t i = 0; i < n; ++i) {
    SaeLayer l;
    l.layer = r.u32();
    l.w_enc.resize(sae.width, sae.d_model);
    l.b_enc.resize(sae.width);
    l.w_dec.resize(sae.d_model, sae.width);
    l.b_dec.resize(sae.d_model);
    get(l.w_enc);
    get(l.b_enc);
    get(l.w_dec);
    get(l.b_dec);
    if (sae.sparsity == Sparsity::kJumpReLU) {
      l.theta.resize(sae.width);
      get(l.theta);
    }
    sae.layers.push_back(std::move(l));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, "trailing bytes in SAE payload");
  validate_sae(sae);
  return sae;
}

std::size_t write_sae(const std::filesystem::path& path, const SaeSnapshot& sae) {
  const auto bytes = encode_sae(sae);
  trace::write_file(path, bytes);
  return bytes.size();
}

SaeSnapshot read_sae(const std::filesystem::path& path) { return decode_sae(trace::read_file(path)); }

}  // namespace mui::sae
