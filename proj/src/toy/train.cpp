#include "mui/toy/train.hpp"

#include <cmath>
#include <functional>

#include "mui/error.hpp"
#include "mui/random.hpp"

namespace mui::toy {
namespace {

constexpr double kNormEps = 1e-5;

// dy -> dx for y = g * x / rms(x), accumulating the gain gradient.
Mat rms_norm_backward(const Mat& x, const Vec& gain, const Mat& dy, Vec& dgain) {
  Mat dx(x.rows(), x.cols());
  const double d = double(x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double r = std::sqrt(x.row(t).squaredNorm() / d + kNormEps);
    const Eigen::RowVectorXd xhat = x.row(t) / r;
    dgain += dy.row(t).cwiseProduct(xhat).transpose();
    const Eigen::RowVectorXd dxhat = dy.row(t).cwiseProduct(gain.transpose());
    dx.row(t) = (dxhat - xhat * (dxhat.dot(xhat) / d)) / r;
  }
  return dx;
}

void for_each_param(ToyModel& a, const ToyModel& b, const std::function<void(double*, const double*, Eigen::Index)>& fn) {
  auto visit = [&](auto& x, const auto& y) { fn(x.data(), y.data(), x.size()); };
  visit(a.tok_emb, b.tok_emb);
  visit(a.pos_emb, b.pos_emb);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    auto& p = a.layers[l];
    const auto& q = b.layers[l];
    visit(p.attn_norm, q.attn_norm);
    visit(p.wq, q.wq);
    visit(p.wk, q.wk);
    visit(p.wv, q.wv);
    visit(p.wo, q.wo);
    visit(p.ffn_norm, q.ffn_norm);
    visit(p.w_in, q.w_in);
    visit(p.w_out, q.w_out);
  }
  visit(a.w_unembed, b.w_unembed);
}

struct Example {
  std::vector<std::uint32_t> inputs;
  std::vector<std::int64_t> targets;
};

Example make_example(const SuiteItem& item) {
  Example ex;
  ex.inputs = item.prompt_tokens;
  ex.inputs.insert(ex.inputs.end(), item.reference_tokens.begin(), item.reference_tokens.end());
  ex.targets.assign(ex.inputs.size(), -1);
  const std::size_t start = item.prompt_tokens.size() - 1;
  for (std::size_t j = 0; j < item.reference_tokens.size(); ++j) ex.targets[start + j] = item.reference_tokens[j];
  ex.targets.back() = kEos;
  return ex;
}

}  // namespace

ToyModel zeros_like(const ToyModel& model) {
  ToyModel z = model;
  z.ffn_keep.clear();
  for_each_param(z, model, [](double* p, const double*, Eigen::Index n) { std::fill(p, p + n, 0.0); });
  return z;
}

double sequence_loss_and_grad(const ToyModel& model, std::span<const std::uint32_t> inputs,
                              std::span<const std::int64_t> targets, ToyModel* grad) {
  const auto& c = model.config;
  const auto fr = forward(model, inputs);
  const Eigen::Index T = fr.logits.rows();
  const Eigen::Index d = c.d_model;
  const Eigen::Index dh = d / c.heads;
  const double scale = 1.0 / std::sqrt(double(dh));

  double loss = 0.0;
  Mat dlogits = Mat::Zero(T, fr.logits.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    if (targets[t] < 0) continue;
    const double mx = fr.logits.row(t).maxCoeff();
    Eigen::RowVectorXd p = (fr.logits.row(t).array() - mx).exp();
    const double z = p.sum();
    p /= z;
    loss += -(fr.logits(t, targets[t]) - mx - std::log(z));
    dlogits.row(t) = p;
    dlogits(t, targets[t]) -= 1.0;
  }
  if (grad == nullptr) return loss;

  grad->w_unembed += dlogits.transpose() * fr.final_resid;
  Mat dh_mat = dlogits * model.w_unembed;

  for (std::size_t li = c.layers; li-- > 0;) {
    const auto& w = model.layers[li];
    const auto& lc = fr.layers[li];
    auto& g = grad->layers[li];

    g.w_out += dh_mat.transpose() * lc.act;
    Mat dact = dh_mat * w.w_out;
    if (model.masked()) dact.array().rowwise() *= model.ffn_keep[li].transpose().array();
    const Mat dpre = dact.cwiseProduct(lc.pre_act.unaryExpr([fn = c.act_fn](double z) { return activate_grad(fn, z); }));
    g.w_in += dpre.transpose() * lc.ffn_in;
    dh_mat += rms_norm_backward(lc.ffn_resid, w.ffn_norm, dpre * w.w_in, g.ffn_norm);

    g.wo += dh_mat.transpose() * lc.attn_cat;
    const Mat dcat = dh_mat * w.wo;
    Mat dq = Mat::Zero(T, d), dk = Mat::Zero(T, d), dv = Mat::Zero(T, d);
    for (std::uint32_t hd = 0; hd < c.heads; ++hd) {
      const Mat& p = lc.probs[hd];
      const auto dout = dcat.middleCols(hd * dh, dh);
      const Mat dp = dout * lc.v.middleCols(hd * dh, dh).transpose();
      dv.middleCols(hd * dh, dh) = p.transpose() * dout;
      Mat ds = p.cwiseProduct(dp);
      const Vec row_dot = ds.rowwise().sum();
      ds -= (p.array().colwise() * row_dot.array()).matrix();
      dq.middleCols(hd * dh, dh) = ds * lc.k.middleCols(hd * dh, dh) * scale;
      dk.middleCols(hd * dh, dh) = ds.transpose() * lc.q.middleCols(hd * dh, dh) * scale;
    }
    g.wq += dq.transpose() * lc.attn_in;
    g.wk += dk.transpose() * lc.attn_in;
    g.wv += dv.transpose() * lc.attn_in;
    const Mat dattn_in = dq * w.wq + dk * w.wk + dv * w.wv;
    dh_mat += rms_norm_backward(lc.resid_in, w.attn_norm, dattn_in, g.attn_norm);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    grad->tok_emb.row(inputs[t]) += dh_mat.row(t);
    grad->pos_emb.row(t) += dh_mat.row(t);
  }
  return loss;
}

TrainResult train_on_suites(const ToyModel& model, std::span<const TaskSuite> suites, const TrainOptions& opt) {
  TrainResult result{model, {}};
  if (opt.steps == 0) return result;
  std::vector<Example> pool;
  for (const auto& s : suites)
    for (const auto& item : s.items) {
      if (item.prompt_tokens.size() + item.reference_tokens.size() > model.config.context)
        throw Error(ErrorCode::kInvalidArgument, "suite item " + item.id + " exceeds context");
      pool.push_back(make_example(item));
    }
  if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "no training items");

  Rng rng(Rng::derive(opt.seed, 1));
  ToyModel& m = result.model;
  ToyModel velocity = zeros_like(m);
  ToyModel grad = zeros_like(m);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    grad = zeros_like(m);
    double loss = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < opt.batch; ++b) {
      const auto& ex = pool[rng.below(pool.size())];
      loss += sequence_loss_and_grad(m, ex.inputs, ex.targets, &grad);
      for (auto t : ex.targets) count += t >= 0;
    }
    loss /= double(count);
    if (!std::isfinite(loss))
      throw Error(ErrorCode::kDivergence, "non-finite loss at step " + std::to_string(step));
    result.loss_history.push_back(loss);

    double sq = 0.0;
    for_each_param(grad, grad, [&](double* g, const double*, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) {
        g[i] /= double(count);
        sq += g[i] * g[i];
      }
    });
    const double norm = std::sqrt(sq);
    const double clip = (opt.clip_norm > 0.0 && norm > opt.clip_norm) ? opt.clip_norm / norm : 1.0;
    for_each_param(velocity, grad, [&](double* v, const double* g, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) v[i] = opt.momentum * v[i] + clip * g[i];
    });
    for_each_param(m, velocity, [&](double* p, const double* v, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) p[i] -= opt.lr * v[i];
    });
  }
  return result;
}

TrainResult train_on_suite(const ToyModel& model, const TaskSuite& suite, const TrainOptions& options) {
  return train_on_suites(model, std::span<const TaskSuite>(&suite, 1), options);
}

double suite_loss(const ToyModel& model, const TaskSuite& suite) {
  double loss = 0.0;
  std::size_t count = 0;
  for (const auto& item : suite.items) {
    const auto ex = make_example(item);
    loss += sequence_loss_and_grad(model, ex.inputs, ex.targets, nullptr);
    for (auto t : ex.targets) count += t >= 0;
  }
  return count ? loss / double(count) : 0.0;
}

}  // namespace mui::toy
