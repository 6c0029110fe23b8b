#include "mui/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "mui/csv.hpp"
#include "mui/error.hpp"
#include "mui/trace/binary.hpp"
#include "mui/trace/trace_io.hpp"

namespace mui::analysis {

std::vector<selection::KeySet> select_keysets(const trace::TraceSet& traces, const attribution::ScoreSource& source,
                                              const SelectionConfig& config) {
  std::vector<selection::KeySet> out;
  out.reserve(traces.samples.size());
  for (const auto& st : traces.samples) {
    const auto m = attribution::score_sample(traces, st, source);
    out.push_back(selection::select_sample(m, config.policy, config.scope, config.aggregation, st.sample.sample_id));
  }
  return out;
}

std::vector<std::uint32_t> unit_widths(const trace::TraceSet& traces, attribution::ScoreMode mode,
                                       const sae::SaeSnapshot* sae) {
  if (traces.layers.empty()) return {};
  std::vector<std::uint32_t> w(traces.layers.back() + 1, 0);
  if (mode == attribution::ScoreMode::kSaeFeature) {
    if (!sae) throw Error(ErrorCode::kInvalidArgument, "feature widths need an SAE");
    for (auto l : traces.layers) w[l] = sae->width;
  } else if (traces.unit_kind == trace::UnitKind::kFeature) {
    for (auto l : traces.layers) w[l] = traces.width;
  } else {
    std::fill(w.begin(), w.end(), traces.width);
  }
  return w;
}

std::vector<SampleKeys> pair_keys(const trace::TraceSet& traces, const std::vector<selection::KeySet>& keysets) {
  if (traces.samples.size() != keysets.size()) throw Error(ErrorCode::kShapeMismatch, "one key set per sample");
  std::vector<SampleKeys> out;
  for (std::size_t i = 0; i < keysets.size(); ++i) out.push_back({traces.samples[i].sample, keysets[i]});
  return out;
}

toy::TaskSuite suite_by_name(const std::string& name, std::size_t size, std::uint64_t seed) {
  const auto kind = toy::parse_suite_kind(name);
  if (!kind) throw Error(ErrorCode::kInvalidArgument, "unknown suite '" + name + "'");
  return toy::make_suite(*kind, size, seed);
}

// ---- pipeline ----------------------------------------------------------------

namespace {

constexpr std::uint64_t kTrainStage = 10;
constexpr std::uint64_t kEvalStage = 20;
constexpr std::uint64_t kMaskStage = 30;
constexpr std::uint64_t kDrawStage = 40;

std::uint64_t name_hash(const std::string& s) {
  return trace::fnv1a64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

}  // namespace

toy::ToyModel pipeline_model(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.model_path) return toy::load_toy(*cfg.model_path);
  toy::ToyConfig tc = cfg.toy;
  tc.seed = Rng::derive(seed, kTrainStage);
  std::vector<toy::TaskSuite> train;
  for (const auto& s : cfg.suites)
    train.push_back(suite_by_name(s, 2000, Rng::derive(seed, kTrainStage + name_hash(s))));
  toy::TrainOptions opt;
  opt.steps = cfg.train_steps;
  opt.seed = Rng::derive(seed, kTrainStage + 1);
  return toy::train_on_suites(toy::init_toy(tc), train, opt).model;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one seed is required");
  if (cfg.suites.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one suite is required");
  std::optional<sae::SaeSnapshot> sae;
  if (cfg.sae_path) sae = sae::read_sae(*cfg.sae_path);
  const bool features = cfg.selection.score_mode == attribution::ScoreMode::kSaeFeature;
  if (features && !sae) throw Error(ErrorCode::kInvalidArgument, "sae score mode needs an SAE file");
  if (cfg.out_dir) std::filesystem::create_directories(*cfg.out_dir);

  PipelineResult res;
  for (auto seed : cfg.seeds) {
    const auto model = pipeline_model(cfg, seed);
    const auto snap = toy::snapshot_export(model);
    attribution::ScoreSource src;
    src.mode = cfg.selection.score_mode;
    src.snapshot = &snap;
    src.model = &model;
    src.sae = sae ? &*sae : nullptr;
    src.ig = cfg.selection.ig;
    std::vector<selection::KeySet> pooled;
    std::vector<std::uint32_t> widths;
    double correct_total = 0.0, n_total = 0.0;
    for (const auto& name : cfg.suites) {
      const auto suite = suite_by_name(name, cfg.suite_size, Rng::derive(seed, kEvalStage + name_hash(name)));
      toy::CaptureOptions co;
      co.decoding = cfg.decoding;
      co.residuals = features;
      const auto cap = toy::trace_capture(model, toy::to_samples(suite), co);
      res.skipped_samples += cap.skipped;
      auto ks = select_keysets(cap.traces, src, cfg.selection);
      widths = unit_widths(cap.traces, src.mode, src.sae);
      // P is exact-match accuracy of the traced responses over the whole suite.
      double correct = 0.0;
      if (cfg.decoding == toy::Decoding::kFreeRunning) {
        for (const auto& s : cap.traces.samples) correct += s.sample.correct.value_or(false) ? 1.0 : 0.0;
      } else {
        correct = toy::evaluate(model, suite).accuracy * double(suite.size()) / 100.0;
      }
      correct_total += correct;
      n_total += double(suite.size());
      metrics::EvalPoint p{cfg.label, name, suite.size() ? 100.0 * correct / double(suite.size()) : 0.0,
                           metrics::mui(ks, widths)};
      if (cfg.out_dir) {
        const auto stem = name + "-" + std::to_string(seed);
        trace::write_trace(*cfg.out_dir / ("traces-" + stem + ".muit"), cap.traces);
        selection::write_keysets(*cfg.out_dir / ("keysets-" + stem + ".jsonl"), ks);
      }
      pooled.insert(pooled.end(), ks.begin(), ks.end());
      res.points.push_back(p);
      res.keysets.push_back(std::move(ks));
    }
    if (cfg.suites.size() > 1)
      res.points.push_back({cfg.label, "all", n_total > 0 ? 100.0 * correct_total / n_total : 0.0,
                            metrics::mui(pooled, widths)});
  }
  if (cfg.out_dir) metrics::write_eval_points_csv(*cfg.out_dir / "points.csv", res.points);
  return res;
}

Pool build_pool(const toy::ToyModel& model, const std::vector<std::string>& suites, std::size_t per_suite,
                std::uint64_t seed, const SelectionConfig& config) {
  const auto snap = toy::snapshot_export(model);
  attribution::ScoreSource src;
  src.mode = config.score_mode;
  src.snapshot = &snap;
  src.model = &model;
  src.ig = config.ig;
  Pool pool;
  for (const auto& name : suites) {
    const auto suite = suite_by_name(name, per_suite, Rng::derive(seed, kDrawStage + name_hash(name)));
    const auto cap = toy::trace_capture(model, toy::to_samples(suite), {});
    const auto ks = select_keysets(cap.traces, src, config);
    auto part = pair_keys(cap.traces, ks);
    pool.samples.insert(pool.samples.end(), part.begin(), part.end());
    pool.widths = unit_widths(cap.traces, src.mode);
  }
  return pool;
}

// ---- masking ---------------------------------------------------------------------

std::vector<trace::UnitId> task_units(const toy::ToyModel& model, const toy::TaskSuite& suite, std::uint32_t k,
                                      selection::Scope scope) {
  if (k == 0) return {};
  const auto snap = toy::snapshot_export(model);
  const auto cap = toy::trace_capture(model, toy::to_samples(suite), {});
  attribution::ScoreSource src;
  src.snapshot = &snap;
  SelectionConfig sc;
  sc.policy = selection::LayerTopK{k};
  sc.scope = scope;
  std::set<trace::UnitId> units;
  for (const auto& ks : select_keysets(cap.traces, src, sc)) units.insert(ks.units.begin(), ks.units.end());
  return {units.begin(), units.end()};
}

std::vector<trace::UnitId> random_units(const toy::ToyConfig& config, std::size_t count, std::uint64_t seed) {
  std::vector<trace::UnitId> all;
  for (std::uint32_t l = 0; l < config.layers; ++l)
    for (std::uint32_t i = 0; i < config.ffn_width; ++i) all.push_back({l, i});
  count = std::min(count, all.size());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(all.size() - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<MaskCurveRow> mask_sweep(const MaskSweepSpec& spec, const toy::ToyModel& model) {
  if (!std::is_sorted(spec.k_grid.begin(), spec.k_grid.end()))
    throw Error(ErrorCode::kInvalidArgument, "k grid must be ascending");
  if (spec.random_repetitions == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one random repetition");
  const auto sel = suite_by_name(spec.selection_suite, spec.selection_size,
                                 Rng::derive(spec.seed, kMaskStage + name_hash(spec.selection_suite)));
  std::vector<toy::TaskSuite> evals;
  std::vector<double> base;
  for (const auto& name : spec.eval_suites) {
    evals.push_back(suite_by_name(name, spec.eval_size, Rng::derive(spec.seed, kEvalStage + name_hash(name))));
    base.push_back(toy::evaluate(model, evals.back()).accuracy);
  }
  std::vector<MaskCurveRow> rows;
  for (auto k : spec.k_grid) {
    const std::uint32_t kk = std::min(k, model.config.ffn_width);
    const auto units = task_units(model, sel, kk, spec.scope);
    const auto masked = toy::apply_mask(model, {units});
    std::vector<std::vector<double>> rnd(evals.size());
    for (std::size_t r = 0; r < spec.random_repetitions; ++r) {
      const auto ru = random_units(model.config, units.size(), Rng::derive(spec.seed, kMaskStage + 1000 * k + r));
      const auto rm = toy::apply_mask(model, {ru});
      for (std::size_t e = 0; e < evals.size(); ++e) rnd[e].push_back(toy::evaluate(rm, evals[e]).accuracy);
    }
    for (std::size_t e = 0; e < evals.size(); ++e) {
      MaskCurveRow row;
      row.k = k;
      row.eval_suite = evals[e].name;
      row.mask_size = units.size();
      row.base_accuracy = base[e];
      row.selected_accuracy = k == 0 ? base[e] : toy::evaluate(masked, evals[e]).accuracy;
      row.random_mean = stats::mean(rnd[e]);
      row.random_variance = stats::population_variance(rnd[e]);
      rows.push_back(row);
    }
  }
  return rows;
}

void write_mask_csv(const std::filesystem::path& path, const std::vector<MaskCurveRow>& rows) {
  std::vector<csv::Row> out;
  for (const auto& r : rows)
    out.push_back({std::to_string(r.k), r.eval_suite, std::to_string(r.mask_size), csv::num(r.base_accuracy),
                   csv::num(r.selected_accuracy), csv::num(r.random_mean), csv::num(r.random_variance)});
  csv::write(path, {"k", "eval_suite", "mask_size", "base", "selected", "random_mean", "random_var"}, out);
}

// ---- diversity -------------------------------------------------------------------

namespace {

bool has_tag(const trace::TaskSample& s, const std::string& tag) {
  return s.capability_tag == tag || (s.domain_tag && *s.domain_tag == tag);
}

std::vector<std::size_t> draw(std::vector<std::size_t> idx, std::size_t n, Rng& rng) {
  if (n > idx.size()) throw Error(ErrorCode::kInsufficientData, "not enough samples for the requested draw");
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(n);
  return idx;
}

}  // namespace

std::vector<std::size_t> draw_group(const std::vector<SampleKeys>& pool, const DiversityGroup& group, std::size_t n,
                                    Rng& rng) {
  if (group.tags.empty()) throw Error(ErrorCode::kInvalidArgument, "group '" + group.name + "' has no tags");
  std::vector<std::size_t> out;
  std::set<std::size_t> used;
  for (std::size_t t = 0; t < group.tags.size(); ++t) {
    const std::size_t share = n / group.tags.size() + (t < n % group.tags.size() ? 1 : 0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (has_tag(pool[i].sample, group.tags[t]) && !used.count(i)) idx.push_back(i);
    if (share > idx.size())
      throw Error(ErrorCode::kInsufficientData, "group '" + group.name + "' tag '" + group.tags[t] + "' has " +
                                                    std::to_string(idx.size()) + " samples, needs " +
                                                    std::to_string(share));
    for (auto i : draw(std::move(idx), share, rng)) {
      used.insert(i);
      out.push_back(i);
    }
  }
  return out;
}

double subset_mui(const std::vector<SampleKeys>& pool, const std::vector<std::size_t>& subset,
                  const std::vector<std::uint32_t>& widths) {
  std::vector<selection::KeySet> ks;
  ks.reserve(subset.size());
  for (auto i : subset) ks.push_back(pool[i].keys);
  return metrics::mui(ks, widths);
}

DiversityResult diversity_curves(const DiversitySpec& spec, const std::vector<SampleKeys>& pool,
                                 const std::vector<std::uint32_t>& widths) {
  if (spec.trials == 0) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  DiversityResult res;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    for (std::size_t s = 0; s < spec.sizes.size(); ++s) {
      DiversityCell cell{group.name, spec.sizes[s], 0.0, {}};
      for (std::size_t t = 0; t < spec.trials; ++t) {
        Rng rng(Rng::derive(spec.seed, kDrawStage + 7919 * g + 131 * s + t));
        cell.trial_mui.push_back(subset_mui(pool, draw_group(pool, group, spec.sizes[s], rng), widths));
      }
      cell.mean_mui = stats::mean(cell.trial_mui);
      res.cells.push_back(std::move(cell));
    }
  }
  auto strata = [&](const std::string& name, const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    const std::size_t n = std::min({a.size(), b.size(), spec.sizes.empty() ? a.size() : spec.sizes.front()});
    if (n == 0) throw Error(ErrorCode::kInsufficientData, name + " strata need samples in both classes");
    StratumTest st;
    st.name = name;
    st.n = n;
    for (std::size_t t = 0; t < spec.trials; ++t) {
      Rng ra(Rng::derive(spec.seed, kDrawStage + 500000 + t));
      Rng rb(Rng::derive(spec.seed, kDrawStage + 600000 + t));
      st.mui_a.push_back(subset_mui(pool, draw(a, n, ra), widths));
      st.mui_b.push_back(subset_mui(pool, draw(b, n, rb), widths));
    }
    st.test = stats::mann_whitney_u(st.mui_a, st.mui_b);
    res.tests.push_back(std::move(st));
  };
  if (spec.length_strata) {
    std::vector<trace::TaskSample> samples;
    for (const auto& p : pool) samples.push_back(p.sample);
    const auto cls = trace::length_classes(samples);
    std::vector<std::size_t> shrt, lng;
    for (std::size_t i = 0; i < cls.size(); ++i) (cls[i] == trace::LengthClass::kShort ? shrt : lng).push_back(i);
    strata("length", shrt, lng);
  }
  if (spec.correctness_strata) {
    std::vector<std::size_t> ok, bad;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].sample.correct) (*pool[i].sample.correct ? ok : bad).push_back(i);
    strata("correctness", ok, bad);
  }
  return res;
}

void write_diversity_csv(const std::filesystem::path& path, const DiversityResult& r) {
  std::vector<csv::Row> out;
  for (const auto& c : r.cells) {
    std::string trials;
    for (std::size_t i = 0; i < c.trial_mui.size(); ++i) trials += (i ? ";" : "") + csv::num(c.trial_mui[i]);
    out.push_back({c.group, std::to_string(c.size), csv::num(c.mean_mui), trials});
  }
  csv::write(path, {"group", "size", "mean_mui", "trial_mui"}, out);
  if (r.tests.empty()) return;
  std::vector<csv::Row> tests;
  for (const auto& t : r.tests)
    tests.push_back({t.name, std::to_string(t.n), csv::num(stats::mean(t.mui_a)), csv::num(stats::mean(t.mui_b)),
                     csv::num(t.test.u), csv::num(t.test.p_value), stats::verdict(t.test.p_value)});
  auto p = path;
  p.replace_filename(path.stem().string() + "_tests.csv");
  csv::write(p, {"strata", "n", "mean_mui_a", "mean_mui_b", "U", "p", "verdict"}, tests);
}

// ---- correctness ablation ---------------------------------------------------------

AblationResult correctness_ablation(const std::vector<SampleKeys>& correct, const std::vector<SampleKeys>& incorrect,
                                    std::size_t n, std::size_t trials, std::uint64_t seed,
                                    const std::vector<std::uint32_t>& widths) {
  if (n == 0 || trials == 0) throw Error(ErrorCode::kInvalidArgument, "n and trials must be >= 1");
  if (correct.size() < n || incorrect.size() < n)
    throw Error(ErrorCode::kInsufficientData, "need " + std::to_string(n) + " samples per class, have " +
                                                  std::to_string(correct.size()) + " correct and " +
                                                  std::to_string(incorrect.size()) + " incorrect");
  AblationResult r;
  r.n = n;
  auto all = [](std::size_t m) {
    std::vector<std::size_t> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = i;
    return v;
  };
  for (std::size_t t = 0; t < trials; ++t) {
    Rng ra(Rng::derive(seed, kDrawStage + t));
    Rng rb(Rng::derive(seed, kDrawStage + t));
    r.mui_correct.push_back(subset_mui(correct, draw(all(correct.size()), n, ra), widths));
    r.mui_incorrect.push_back(subset_mui(incorrect, draw(all(incorrect.size()), n, rb), widths));
  }
  r.mean_correct = stats::mean(r.mui_correct);
  r.mean_incorrect = stats::mean(r.mui_incorrect);
  r.test = stats::mann_whitney_u(r.mui_correct, r.mui_incorrect);
  r.verdict = stats::verdict(r.test.p_value);
  return r;
}

AblationResult correctness_ablation(const std::vector<SampleKeys>& pool, std::size_t n, std::size_t trials,
                                    std::uint64_t seed, const std::vector<std::uint32_t>& widths) {
  std::vector<SampleKeys> ok, bad;
  for (const auto& p : pool)
    if (p.sample.correct) (*p.sample.correct ? ok : bad).push_back(p);
  return correctness_ablation(ok, bad, n, trials, seed, widths);
}

void write_ablation_csv(const std::filesystem::path& path, const AblationResult& r) {
  std::vector<csv::Row> out;
  for (std::size_t t = 0; t < r.mui_correct.size(); ++t)
    out.push_back({std::to_string(t), csv::num(r.mui_correct[t]), csv::num(r.mui_incorrect[t])});
  out.push_back({"mean", csv::num(r.mean_correct), csv::num(r.mean_incorrect)});
  out.push_back({"p_value", csv::num(r.test.p_value), r.verdict});
  csv::write(path, {"trial", "mui_correct", "mui_incorrect"}, out);
}

// ---- published tables ----------------------------------------------------------------

namespace {

std::string model_key(std::string s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != ' ') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kFormat, "not a number: '" + s + "'");
  }
}

}  // namespace

std::vector<metrics::EvalPoint> load_points(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  auto find = [&](std::initializer_list<const char*> names) -> std::optional<std::size_t> {
    for (auto n : names)
      for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == n) return i;
    return std::nullopt;
  };
  const auto label = find({"label", "model"});
  const auto dataset = find({"dataset"});
  const auto p = find({"P", "accuracy", "performance"});
  const auto m = find({"MUI", "mui"});
  if (!p || !m) throw Error(ErrorCode::kFormat, path.string() + ": needs P/accuracy and MUI columns");
  std::vector<metrics::EvalPoint> out;
  for (const auto& r : t.rows)
    out.push_back({label ? r[*label] : "", dataset ? r[*dataset] : "", to_double(r[*p]), to_double(r[*m])});
  return out;
}

Reproduction reproduce_tables(const std::filesystem::path& dir) {
  const auto ranking = csv::read(dir / "ranking.csv");
  const auto util = csv::read(dir / "utilization.csv");
  const auto summary = csv::read(dir / "ranking_summary.csv");

  std::map<std::pair<std::string, std::string>, double> mui;
  for (const auto& r : util.rows)
    mui[{model_key(r[util.col("model")]), r[util.col("dataset")]}] = to_double(r[util.col("mui")]);

  Reproduction out;
  std::vector<std::string> datasets;
  std::map<std::string, std::vector<std::array<double, 3>>> by_dataset;  // ref, acc, pur
  for (const auto& r : ranking.rows) {
    PurCheck c;
    c.model = r[ranking.col("model")];
    c.dataset = r[ranking.col("dataset")];
    c.accuracy = to_double(r[ranking.col("accuracy")]);
    c.published_pur = to_double(r[ranking.col("pur")]);
    if (auto it = mui.find({model_key(c.model), c.dataset}); it != mui.end()) {
      c.mui = it->second;
      c.recomputed_pur = metrics::pur(c.accuracy, it->second);
    }
    if (!by_dataset.count(c.dataset)) datasets.push_back(c.dataset);
    by_dataset[c.dataset].push_back({to_double(r[ranking.col("ref_rank")]), c.accuracy, c.published_pur});
    out.pur.push_back(std::move(c));
  }

  std::map<std::pair<std::string, std::string>, std::pair<double, double>> published;
  for (const auto& r : summary.rows)
    published[{r[summary.col("statistic")], r[summary.col("dataset")]}] = {
        to_double(r[summary.col("accuracy_based")]), to_double(r[summary.col("pur_based")])};

  std::vector<double> sp_acc, sp_pur, kt_acc, kt_pur;
  for (const auto& d : datasets) {
    std::vector<double> ref, acc, pur;
    for (const auto& row : by_dataset[d]) {
      ref.push_back(row[0]);
      acc.push_back(row[1]);
      pur.push_back(row[2]);
    }
    const auto ra = metrics::rank_by(acc), rp = metrics::rank_by(pur);
    const double s_acc = stats::spearman(ra, ref).coefficient, s_pur = stats::spearman(rp, ref).coefficient;
    const double k_acc = stats::kendall(ra, ref).coefficient, k_pur = stats::kendall(rp, ref).coefficient;
    sp_acc.push_back(s_acc);
    sp_pur.push_back(s_pur);
    kt_acc.push_back(k_acc);
    kt_pur.push_back(k_pur);
    const auto ps = published[{"Spearman", d}];
    const auto pk = published[{"Kendall", d}];
    out.correlations.push_back({"Spearman", d, 100 * s_acc, 100 * s_pur, ps.first, ps.second});
    out.correlations.push_back({"Kendall", d, 100 * k_acc, 100 * k_pur, pk.first, pk.second});
  }
  const auto pas = published[{"Spearman", "average"}];
  const auto pak = published[{"Kendall", "average"}];
  out.correlations.push_back(
      {"Spearman", "average", 100 * stats::mean(sp_acc), 100 * stats::mean(sp_pur), pas.first, pas.second});
  out.correlations.push_back(
      {"Kendall", "average", 100 * stats::mean(kt_acc), 100 * stats::mean(kt_pur), pak.first, pak.second});
  out.spearman_variance_acc = 100 * stats::population_variance(sp_acc);
  out.spearman_variance_pur = 100 * stats::population_variance(sp_pur);
  out.kendall_variance_acc = 100 * stats::population_variance(kt_acc);
  out.kendall_variance_pur = 100 * stats::population_variance(kt_pur);
  return out;
}

void write_reproduction(const std::filesystem::path& dir, const Reproduction& r) {
  std::filesystem::create_directories(dir);
  std::vector<csv::Row> pur;
  for (const auto& c : r.pur)
    pur.push_back({c.model, c.dataset, csv::num(c.accuracy), c.mui ? csv::num(*c.mui) : "", csv::num(c.published_pur),
                   c.recomputed_pur ? csv::num(*c.recomputed_pur, 2) : "",
                   c.recomputed_pur ? csv::num(*c.recomputed_pur - c.published_pur, 2) : ""});
  csv::write(dir / "pur_check.csv", {"model", "dataset", "accuracy", "mui", "pur_published", "pur_recomputed", "diff"},
             pur);
  std::vector<csv::Row> cor;
  for (const auto& c : r.correlations)
    cor.push_back({c.statistic, c.dataset, csv::num(c.accuracy_based, 2), csv::num(c.pur_based, 2),
                   csv::num(c.published_accuracy, 1), csv::num(c.published_pur, 1)});
  cor.push_back({"Spearman", "variance", csv::num(r.spearman_variance_acc, 2), csv::num(r.spearman_variance_pur, 2),
                 "", ""});
  cor.push_back({"Kendall", "variance", csv::num(r.kendall_variance_acc, 2), csv::num(r.kendall_variance_pur, 2), "",
                 ""});
  csv::write(dir / "ranking_check.csv",
             {"statistic", "dataset", "accuracy_based", "pur_based", "published_accuracy", "published_pur"}, cor);
}

// ---- report ------------------------------------------------------------------------

PlotFrame frame_for(const std::vector<metrics::EvalPoint>& points, const std::optional<metrics::UtilityFit>& fit) {
  PlotFrame f;
  double ymax = 0.0;
  for (const auto& p : points) ymax = std::max(ymax, p.mui);
  if (fit)
    for (double x = 1.0; x <= 100.0; x += 1.0) ymax = std::max(ymax, metrics::extrapolate(*fit, x));
  double ymin = 0.0;
  if (fit) ymin = std::min(ymin, metrics::extrapolate(*fit, 100.0));
  f.y_min = ymin;
  f.y_max = ymax > ymin ? ymax * 1.1 : ymin + 1.0;
  return f;
}

std::string render_svg(const std::vector<metrics::EvalPoint>& points, const std::optional<metrics::UtilityFit>& fit) {
  const auto f = frame_for(points, fit);
  std::ostringstream s;
  auto n = [](double v) { return csv::num(v, 2); };
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double x0 = f.px(f.x_min), x1 = f.px(f.x_max), y0 = f.py(f.y_min), y1 = f.py(f.y_max);
  s << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << n(x0) << "\" y1=\"" << n(y0) << "\" x2=\"" << n(x1) << "\" y2=\"" << n(y0) << "\"/>\n"
    << "<line x1=\"" << n(x0) << "\" y1=\"" << n(y0) << "\" x2=\"" << n(x0) << "\" y2=\"" << n(y1) << "\"/>\n"
    << "</g>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int t = 0; t <= 100; t += 20)
    s << "<text x=\"" << n(f.px(t)) << "\" y=\"" << n(y0 + 16) << "\" text-anchor=\"middle\">" << t << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = f.y_min + (f.y_max - f.y_min) * t / 4.0;
    s << "<text x=\"" << n(x0 - 6) << "\" y=\"" << n(f.py(v) + 4) << "\" text-anchor=\"end\">" << csv::num(v, 1)
      << "</text>\n";
  }
  s << "<text x=\"" << n((x0 + x1) / 2) << "\" y=\"" << n(f.height - 10)
    << "\" text-anchor=\"middle\">Performance (%)</text>\n"
    << "<text x=\"14\" y=\"" << n((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << n((y0 + y1) / 2) << ")\">MUI (%)</text>\n</g>\n";
  if (fit) {
    s << "<polyline class=\"fit\" fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"5,3\" points=\"";
    for (int x = 1; x <= 100; ++x) {
      s << n(f.px(x)) << ',' << n(f.py(metrics::extrapolate(*fit, x)));
      if (x < 100) s << ' ';
    }
    s << "\"/>\n";
  }
  s << "<g class=\"points\" fill=\"#2c3e80\">\n";
  for (const auto& p : points) {
    std::string title = p.label + " " + p.dataset;
    std::string esc;
    for (char c : title) {
      if (c == '&') esc += "&amp;";
      else if (c == '<') esc += "&lt;";
      else if (c == '>') esc += "&gt;";
      else if (c == '"') esc += "&quot;";
      else esc += c;
    }
    s << "<circle cx=\"" << n(f.px(p.performance)) << "\" cy=\"" << n(f.py(p.mui)) << "\" r=\"3\"><title>" << esc
      << "</title></circle>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

void report(const std::filesystem::path& dir, const std::vector<metrics::EvalPoint>& points) {
  std::filesystem::create_directories(dir);
  std::optional<metrics::UtilityFit> fit;
  std::vector<metrics::EvalPoint> usable;
  for (const auto& p : points)
    if (p.performance > 0.0) usable.push_back(p);
  std::set<double> distinct;
  for (const auto& p : usable) distinct.insert(p.performance);
  if (distinct.size() >= 2) {
    fit = metrics::fit_utility(usable);
    metrics::write_fit_csv(dir / "fit.csv", *fit);
  }
  const auto svg = render_svg(points, fit);
  trace::write_file(dir / "scatter.svg", {reinterpret_cast<const std::uint8_t*>(svg.data()), svg.size()});
  metrics::write_eval_points_csv(dir / "points.csv", points);
}

}  // namespace mui::analysis
