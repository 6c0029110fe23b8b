#include "mui/toy/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mui/error.hpp"
#include "mui/random.hpp"
#include "mui/trace/binary.hpp"
#include "mui/trace/trace_io.hpp"

namespace mui::toy {
namespace {

constexpr double kNormEps = 1e-5;
constexpr std::string_view kToyTag = "TOYW";

Mat rms_norm(const Mat& x, const Vec& gain) {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double r = std::sqrt(x.row(t).squaredNorm() / double(x.cols()) + kNormEps);
    out.row(t) = (x.row(t) / r).cwiseProduct(gain.transpose());
  }
  return out;
}

Eigen::RowVectorXd rms_norm_row(const Eigen::RowVectorXd& x, const Vec& gain) {
  const double r = std::sqrt(x.squaredNorm() / double(x.size()) + kNormEps);
  return (x / r).cwiseProduct(gain.transpose());
}

void fill_normal(Mat& m, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * stddev;
}

void put_mat(trace::ByteWriter& w, const Mat& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
}

void put_vec(trace::ByteWriter& w, const Vec& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

Mat get_mat(trace::ByteReader& r, Eigen::Index rows, Eigen::Index cols) {
  const auto gr = r.u32();
  const auto gc = r.u32();
  if (gr != rows || gc != cols) throw Error(ErrorCode::kShapeMismatch, "TOYW matrix shape");
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
  return m;
}

Vec get_vec(trace::ByteReader& r, Eigen::Index n) {
  if (r.u32() != n) throw Error(ErrorCode::kShapeMismatch, "TOYW vector shape");
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = r.f64();
  return v;
}

std::vector<std::uint8_t> encode_toy(const ToyModel& m) {
  trace::ByteWriter w;
  const auto& c = m.config;
  w.u32(c.layers);
  w.u32(c.d_model);
  w.u32(c.heads);
  w.u32(c.ffn_width);
  w.u32(c.vocab);
  w.u32(c.context);
  w.u8(static_cast<std::uint8_t>(c.act_fn));
  w.u64(c.seed);
  put_mat(w, m.tok_emb);
  put_mat(w, m.pos_emb);
  for (const auto& l : m.layers) {
    put_vec(w, l.attn_norm);
    put_mat(w, l.wq);
    put_mat(w, l.wk);
    put_mat(w, l.wv);
    put_mat(w, l.wo);
    put_vec(w, l.ffn_norm);
    put_mat(w, l.w_in);
    put_mat(w, l.w_out);
  }
  put_mat(w, m.w_unembed);
  w.u8(m.masked() ? 1 : 0);
  for (const auto& k : m.ffn_keep) put_vec(w, k);
  return std::move(w.bytes());
}

ToyModel decode_toy(std::span<const std::uint8_t> bytes) {
  trace::ByteReader r(bytes);
  ToyModel m;
  auto& c = m.config;
  c.layers = r.u32();
  c.d_model = r.u32();
  c.heads = r.u32();
  c.ffn_width = r.u32();
  c.vocab = r.u32();
  c.context = r.u32();
  const auto act = r.u8();
  if (act > 2) throw Error(ErrorCode::kFormat, "TOYW activation id");
  c.act_fn = static_cast<trace::ActFn>(act);
  c.seed = r.u64();
  validate_config(c);
  const Eigen::Index d = c.d_model;
  const Eigen::Index n = c.ffn_width;
  m.tok_emb = get_mat(r, c.vocab, d);
  m.pos_emb = get_mat(r, c.context, d);
  m.layers.resize(c.layers);
  for (auto& l : m.layers) {
    l.attn_norm = get_vec(r, d);
    l.wq = get_mat(r, d, d);
    l.wk = get_mat(r, d, d);
    l.wv = get_mat(r, d, d);
    l.wo = get_mat(r, d, d);
    l.ffn_norm = get_vec(r, d);
    l.w_in = get_mat(r, n, d);
    l.w_out = get_mat(r, d, n);
  }
  m.w_unembed = get_mat(r, c.vocab, d);
  if (r.u8() == 1) {
    m.ffn_keep.resize(c.layers);
    for (auto& k : m.ffn_keep) k = get_vec(r, n);
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kFormat, "trailing bytes in TOYW section");
  return m;
}

}  // namespace

void validate_config(const ToyConfig& c) {
  if (c.layers == 0 || c.d_model == 0 || c.heads == 0 || c.vocab == 0 || c.context == 0)
    throw Error(ErrorCode::kInvalidArgument, "toy config dimensions must be positive");
  if (c.d_model % c.heads != 0) throw Error(ErrorCode::kInvalidArgument, "d_model must be divisible by heads");
  if (c.ffn_width < c.d_model) throw Error(ErrorCode::kInvalidArgument, "ffn_width must be >= d_model");
  if (c.vocab <= kPad) throw Error(ErrorCode::kInvalidArgument, "vocab must include the byte range and specials");
}

std::size_t parameter_count(const ToyConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t per_layer = 2 * d + 4 * d * d + 2 * d * c.ffn_width;
  return 2 * std::size_t(c.vocab) * d + std::size_t(c.context) * d + c.layers * per_layer;
}

std::size_t ToyModel::parameter_count() const {
  std::size_t n = tok_emb.size() + pos_emb.size() + w_unembed.size();
  for (const auto& l : layers)
    n += l.attn_norm.size() + l.wq.size() + l.wk.size() + l.wv.size() + l.wo.size() + l.ffn_norm.size() +
         l.w_in.size() + l.w_out.size();
  return n;
}

ToyModel init_toy(const ToyConfig& config) {
  validate_config(config);
  Rng rng(config.seed);
  constexpr double kStd = 0.02;
  const double proj_std = kStd / std::sqrt(2.0 * config.layers);
  const Eigen::Index d = config.d_model;
  const Eigen::Index n = config.ffn_width;

  ToyModel m;
  m.config = config;
  m.tok_emb = Mat(config.vocab, d);
  fill_normal(m.tok_emb, rng, kStd);
  m.pos_emb = Mat(config.context, d);
  fill_normal(m.pos_emb, rng, kStd);
  m.layers.resize(config.layers);
  for (auto& l : m.layers) {
    l.attn_norm = Vec::Ones(d);
    l.wq = Mat(d, d);
    l.wk = Mat(d, d);
    l.wv = Mat(d, d);
    l.wo = Mat(d, d);
    fill_normal(l.wq, rng, kStd);
    fill_normal(l.wk, rng, kStd);
    fill_normal(l.wv, rng, kStd);
    fill_normal(l.wo, rng, proj_std);
    l.ffn_norm = Vec::Ones(d);
    l.w_in = Mat(n, d);
    l.w_out = Mat(d, n);
    fill_normal(l.w_in, rng, kStd);
    fill_normal(l.w_out, rng, proj_std);
  }
  m.w_unembed = Mat(config.vocab, d);
  fill_normal(m.w_unembed, rng, kStd);
  return m;
}

std::uint64_t weight_checksum(const ToyModel& model) { return trace::fnv1a64(encode_toy(model)); }

double activate(trace::ActFn fn, double z) {
  switch (fn) {
    case trace::ActFn::kReLU: return z > 0.0 ? z : 0.0;
    case trace::ActFn::kSiLU: return z / (1.0 + std::exp(-z));
    case trace::ActFn::kGeLU: return 0.5 * z * (1.0 + std::erf(z / std::numbers::sqrt2));
  }
  return z;
}

double activate_grad(trace::ActFn fn, double z) {
  switch (fn) {
    case trace::ActFn::kReLU: return z > 0.0 ? 1.0 : 0.0;
    case trace::ActFn::kSiLU: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 + z * (1.0 - s));
    }
    case trace::ActFn::kGeLU: {
      const double cdf = 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2));
      const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      return cdf + z * pdf;
    }
  }
  return 1.0;
}

ForwardResult forward(const ToyModel& model, std::span<const std::uint32_t> tokens) {
  const auto& c = model.config;
  const Eigen::Index T = static_cast<Eigen::Index>(tokens.size());
  if (T == 0) throw Error(ErrorCode::kInvalidArgument, "empty token sequence");
  if (tokens.size() > c.context) throw Error(ErrorCode::kInvalidArgument, "sequence exceeds context");
  const Eigen::Index d = c.d_model;
  const Eigen::Index dh = d / c.heads;
  const double scale = 1.0 / std::sqrt(double(dh));

  Mat h(T, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (tokens[t] >= c.vocab) throw Error(ErrorCode::kInvalidArgument, "token id out of vocabulary");
    h.row(t) = model.tok_emb.row(tokens[t]) + model.pos_emb.row(t);
  }

  ForwardResult out;
  out.layers.resize(c.layers);
  for (std::uint32_t li = 0; li < c.layers; ++li) {
    const auto& w = model.layers[li];
    auto& cache = out.layers[li];
    cache.resid_in = h;
    cache.attn_in = rms_norm(h, w.attn_norm);
    cache.q = cache.attn_in * w.wq.transpose();
    cache.k = cache.attn_in * w.wk.transpose();
    cache.v = cache.attn_in * w.wv.transpose();
    cache.attn_cat = Mat::Zero(T, d);
    cache.probs.resize(c.heads);
    for (std::uint32_t hd = 0; hd < c.heads; ++hd) {
      const auto q = cache.q.middleCols(hd * dh, dh);
      const auto k = cache.k.middleCols(hd * dh, dh);
      const auto v = cache.v.middleCols(hd * dh, dh);
      Mat p = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < T; ++i) {
        const double mx = p.row(i).head(i + 1).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          p(i, j) = std::exp(p(i, j) - mx);
          sum += p(i, j);
        }
        for (Eigen::Index j = 0; j <= i; ++j) p(i, j) /= sum;
        for (Eigen::Index j = i + 1; j < T; ++j) p(i, j) = 0.0;
      }
      cache.attn_cat.middleCols(hd * dh, dh) = p * v;
      cache.probs[hd] = std::move(p);
    }
    h += cache.attn_cat * w.wo.transpose();
    cache.ffn_resid = h;
    cache.ffn_in = rms_norm(h, w.ffn_norm);
    cache.pre_act = cache.ffn_in * w.w_in.transpose();
    cache.act = cache.pre_act.unaryExpr([fn = c.act_fn](double z) { return activate(fn, z); });
    if (model.masked()) cache.act.array().rowwise() *= model.ffn_keep[li].transpose().array();
    h += cache.act * w.w_out.transpose();
  }
  out.final_resid = h;
  out.logits = h * model.w_unembed.transpose();
  return out;
}

std::uint32_t argmax_lowest(std::span<const double> logits) {
  std::uint32_t best = 0;
  for (std::uint32_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  return best;
}

std::vector<std::uint32_t> generate(const ToyModel& model, std::span<const std::uint32_t> prompt,
                                    std::size_t max_new) {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidArgument, "empty prompt");
  if (prompt.size() > model.config.context) throw Error(ErrorCode::kInvalidArgument, "prompt exceeds context");
  std::vector<std::uint32_t> seq(prompt.begin(), prompt.end());
  std::vector<std::uint32_t> out;
  while (out.size() < max_new && seq.size() < model.config.context) {
    const auto fr = forward(model, seq);
    const Eigen::RowVectorXd last = fr.logits.row(fr.logits.rows() - 1);
    const auto next = argmax_lowest({last.data(), static_cast<std::size_t>(last.size())});
    out.push_back(next);
    seq.push_back(next);
    if (next == kEos) break;
  }
  return out;
}

ToyModel apply_mask(const ToyModel& model, const MaskSpec& mask) {
  ToyModel out = model;
  if (mask.units.empty()) return out;
  if (!out.masked()) out.ffn_keep.assign(model.config.layers, Vec::Ones(model.config.ffn_width));
  for (const auto& u : mask.units) {
    if (u.layer >= model.config.layers || u.index >= model.config.ffn_width)
      throw Error(ErrorCode::kInvalidArgument,
                  "mask unit (" + std::to_string(u.layer) + ", " + std::to_string(u.index) + ") out of range");
    out.ffn_keep[u.layer][u.index] = 0.0;
  }
  return out;
}

double target_logit_with_activation(const ToyModel& model, const ForwardResult& cache, std::size_t position,
                                    std::size_t layer, std::uint32_t target, const Vec& activation) {
  const auto& c = model.config;
  const Eigen::Index p = static_cast<Eigen::Index>(position);
  const Eigen::Index d = c.d_model;
  const Eigen::Index dh = d / c.heads;
  const double scale = 1.0 / std::sqrt(double(dh));

  Vec a = activation;
  if (model.masked()) a = a.cwiseProduct(model.ffn_keep[layer]);
  Eigen::RowVectorXd h = cache.layers[layer].ffn_resid.row(p) + (model.layers[layer].w_out * a).transpose();

  for (std::size_t li = layer + 1; li < c.layers; ++li) {
    const auto& w = model.layers[li];
    const auto& lc = cache.layers[li];
    const Eigen::RowVectorXd xn = rms_norm_row(h, w.attn_norm);
    const Eigen::RowVectorXd q = xn * w.wq.transpose();
    const Eigen::RowVectorXd kp = xn * w.wk.transpose();
    const Eigen::RowVectorXd vp = xn * w.wv.transpose();
    Eigen::RowVectorXd att(d);
    for (std::uint32_t hd = 0; hd < c.heads; ++hd) {
      const auto qh = q.segment(hd * dh, dh);
      std::vector<double> s(static_cast<std::size_t>(p) + 1);
      for (Eigen::Index j = 0; j < p; ++j) s[j] = qh.dot(lc.k.row(j).segment(hd * dh, dh)) * scale;
      s[p] = qh.dot(kp.segment(hd * dh, dh)) * scale;
      const double mx = *std::max_element(s.begin(), s.end());
      double sum = 0.0;
      for (auto& x : s) sum += (x = std::exp(x - mx));
      Eigen::RowVectorXd o = Eigen::RowVectorXd::Zero(dh);
      for (Eigen::Index j = 0; j < p; ++j) o += (s[j] / sum) * lc.v.row(j).segment(hd * dh, dh);
      o += (s[p] / sum) * vp.segment(hd * dh, dh);
      att.segment(hd * dh, dh) = o;
    }
    h += att * w.wo.transpose();
    const Eigen::RowVectorXd xf = rms_norm_row(h, w.ffn_norm);
    Eigen::RowVectorXd z = xf * w.w_in.transpose();
    z = z.unaryExpr([fn = c.act_fn](double v) { return activate(fn, v); });
    if (model.masked()) z = z.cwiseProduct(model.ffn_keep[li].transpose());
    h += z * w.w_out.transpose();
  }
  return model.w_unembed.row(target).dot(h);
}

trace::ModelSnapshot snapshot_export(const ToyModel& model) {
  const auto& c = model.config;
  trace::ModelSnapshot s;
  s.layers = c.layers;
  s.d_model = c.d_model;
  s.ffn_width = c.ffn_width;
  s.vocab = c.vocab;
  s.act_fn = c.act_fn;
  auto narrow = [](const Mat& m) {
    trace::Matrix out(static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) out.data[i] = static_cast<float>(m.data()[i]);
    return out;
  };
  for (const auto& l : model.layers) {
    Mat w_in = l.w_in;
    w_in.array().rowwise() *= l.ffn_norm.transpose().array();
    s.w_in.push_back(narrow(w_in));
    s.w_out.push_back(narrow(l.w_out));
  }
  s.w_unembed = narrow(model.w_unembed);
  s.extensions.push_back({std::string(kToyTag), encode_toy(model)});
  s.model_id = trace::compute_model_id(s);
  return s;
}

ToyModel snapshot_import(const trace::ModelSnapshot& snapshot) {
  for (const auto& ext : snapshot.extensions)
    if (ext.tag == kToyTag) return decode_toy(ext.bytes);
  throw Error(ErrorCode::kFormat, "snapshot has no TOYW section");
}

void save_toy(const std::filesystem::path& path, const ToyModel& model) {
  trace::write_snapshot(path, snapshot_export(model));
}

ToyModel load_toy(const std::filesystem::path& path) { return snapshot_import(trace::read_snapshot(path)); }

}  // namespace mui::toy
