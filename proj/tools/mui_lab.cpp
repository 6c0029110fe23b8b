// mui-lab: command-line front end for tracing, scoring, MUI and the analyses.
#include <cctype>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "mui/analysis/analysis.hpp"
#include "mui/csv.hpp"
#include "mui/error.hpp"
#include "mui/trace/trace_io.hpp"

namespace fs = std::filesystem;
using namespace mui;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep))
    if (!part.empty()) out.push_back(part);
  return out;
}

template <typename T>
std::vector<T> split_numbers(const std::string& s) {
  std::vector<T> out;
  for (const auto& p : split(s, ',')) {
    try {
      if constexpr (std::is_floating_point_v<T>) out.push_back(static_cast<T>(std::stod(p)));
      else out.push_back(static_cast<T>(std::stoull(p)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad number '" + p + "'");
    }
  }
  return out;
}

std::pair<double, double> parse_pair(const std::string& s) {
  const auto v = split_numbers<double>(s);
  if (v.size() != 2) throw Error(ErrorCode::kInvalidArgument, "expected P,MUI but got '" + s + "'");
  return {v[0], v[1]};
}

double cell_number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kFormat, "non-numeric " + what + " '" + s + "'");
}

void print_row(const std::vector<std::string>& row) { std::cout << csv::line(row).substr(0, csv::line(row).size() - 2) << '\n'; }

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
};

struct SelectionFlags {
  std::string score_mode = "proj";
  std::string aggregate = "token";
  std::string policy = "permille:0.001";
  std::string scope = "token_union";
  std::size_t ig_steps = 10;

  void add(CLI::App* app) {
    app->add_option("--score-mode", score_mode, "proj|act|ig|sae")->capture_default_str();
    app->add_option("--aggregate", aggregate, "token|sum")->capture_default_str();
    app->add_option("--policy", policy, "topk:K | permille:R | global:K | topscore:F")->capture_default_str();
    app->add_option("--scope", scope, "token_union|pooled")->capture_default_str();
    app->add_option("--ig-steps", ig_steps, "Riemann steps for ig")->capture_default_str();
  }
  analysis::SelectionConfig config() const {
    analysis::SelectionConfig c;
    c.score_mode = attribution::parse_score_mode(score_mode);
    c.aggregation = attribution::parse_aggregation(aggregate);
    c.policy = selection::parse_policy(policy);
    c.scope = selection::parse_scope(scope);
    c.ig.m = ig_steps;
    return c;
  }
};

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return g.out;
}

// Every long option can also come from MUI_LAB_<NAME> (dashes become underscores).
void attach_env(CLI::App& app) {
  for (auto* opt : app.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names[0] == "help" || names[0] == "config") continue;
    std::string env = "MUI_LAB_";
    for (char c : names[0]) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    opt->envname(env);
  }
  for (auto* sub : app.get_subcommands({})) attach_env(*sub);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model utilization analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; [section] names match subcommands");
  Globals g;
  app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  std::function<void()> run;

  // train
  std::string suites = "copy,reverse";
  std::size_t steps = 3000, size = 200;
  std::string model_path;
  {
    auto* c = app.add_subcommand("train", "Train a toy model on suites and save it as out/model.musm");
    c->add_option("--suites", suites, "Comma-separated suite names")->capture_default_str();
    c->add_option("--steps", steps)->capture_default_str();
    c->callback([&] {
      analysis::ExperimentConfig cfg;
      cfg.suites = split(suites, ',');
      cfg.train_steps = steps;
      const auto model = analysis::pipeline_model(cfg, g.seed);
      const auto path = out_dir(g) / "model.musm";
      toy::save_toy(path, model);
      for (const auto& s : cfg.suites) {
        const auto held = analysis::suite_by_name(s, size, Rng::derive(g.seed, 99));
        std::cout << s << " accuracy " << toy::evaluate(model, held).accuracy << '\n';
      }
      std::cout << "wrote " << path.string() << '\n';
    });
  }

  // trace
  std::string suite = "copy", mode = "raw", decoding = "free", trace_name = "traces.muit";
  bool residuals = false;
  std::uint32_t m_store = 256;
  {
    auto* c = app.add_subcommand("trace", "Capture a RAW or SCORED trace of a toy model on one suite");
    c->add_option("--model", model_path, "*.musm with toy weights")->required();
    c->add_option("--suite", suite)->capture_default_str();
    c->add_option("--size", size)->capture_default_str();
    c->add_option("--mode", mode, "raw|scored")->capture_default_str();
    c->add_option("--decoding", decoding, "free|forced")->capture_default_str();
    c->add_flag("--residuals", residuals, "Store residual inputs for SAE scoring");
    c->add_option("--m-store", m_store)->capture_default_str();
    c->add_option("--name", trace_name)->capture_default_str();
    c->callback([&] {
      const auto model = toy::load_toy(model_path);
      toy::CaptureOptions o;
      if (mode == "raw") o.mode = trace::TraceMode::kRaw;
      else if (mode == "scored") o.mode = trace::TraceMode::kScored;
      else throw Error(ErrorCode::kInvalidArgument, "mode must be raw or scored");
      if (decoding == "free") o.decoding = toy::Decoding::kFreeRunning;
      else if (decoding == "forced") o.decoding = toy::Decoding::kForcedReference;
      else throw Error(ErrorCode::kInvalidArgument, "decoding must be free or forced");
      o.residuals = residuals;
      o.m_store = m_store;
      const auto s = analysis::suite_by_name(suite, size, g.seed);
      const auto cap = toy::trace_capture(model, toy::to_samples(s), o);
      const auto path = out_dir(g) / trace_name;
      const auto bytes = trace::write_trace(path, cap.traces);
      std::cout << "wrote " << path.string() << " (" << bytes << " bytes, " << cap.traces.samples.size()
                << " samples, " << cap.skipped << " skipped)\n";
    });
  }

  // score
  std::string traces_path, sae_path, keyset_name = "keysets.jsonl";
  SelectionFlags sel;
  {
    auto* c = app.add_subcommand("score", "Score a trace and select per-sample key sets (JSONL)");
    c->add_option("--traces", traces_path)->required();
    c->add_option("--model", model_path, "Snapshot for proj, toy model for ig");
    c->add_option("--sae", sae_path, "*.musa for --score-mode sae");
    c->add_option("--name", keyset_name)->capture_default_str();
    sel.add(c);
    c->callback([&] {
      const auto traces = trace::read_trace(traces_path);
      const auto cfg = sel.config();
      std::optional<trace::ModelSnapshot> snap;
      std::optional<toy::ToyModel> model;
      std::optional<sae::SaeSnapshot> sae;
      if (!model_path.empty()) {
        snap = trace::read_snapshot(model_path);
        if (cfg.score_mode == attribution::ScoreMode::kIntegratedGradient) model = toy::snapshot_import(*snap);
      }
      if (!sae_path.empty()) sae = sae::read_sae(sae_path);
      attribution::ScoreSource src;
      src.mode = cfg.score_mode;
      src.snapshot = snap ? &*snap : nullptr;
      src.model = model ? &*model : nullptr;
      src.sae = sae ? &*sae : nullptr;
      src.ig = cfg.ig;
      const auto ks = analysis::select_keysets(traces, src, cfg);
      const auto path = out_dir(g) / keyset_name;
      selection::write_keysets(path, ks);
      const auto widths = analysis::unit_widths(traces, cfg.score_mode, src.sae);
      std::cout << "wrote " << path.string() << " (" << ks.size() << " key sets), MUI "
                << csv::num(metrics::mui(ks, widths), 4) << '\n';
    });
  }

  // mui
  std::vector<std::string> keyset_paths;
  std::uint32_t layers = 0, width = 0;
  {
    auto* c = app.add_subcommand("mui", "MUI of the union of key sets");
    c->add_option("--keysets", keyset_paths, "One or more JSONL files")->required();
    c->add_option("--traces", traces_path, "Trace defining the unit space");
    c->add_option("--layers", layers, "Layer count when no trace is given");
    c->add_option("--width", width, "Units per layer when no trace is given");
    c->callback([&] {
      std::vector<selection::KeySet> all;
      for (const auto& p : keyset_paths) {
        auto ks = selection::read_keysets(p);
        all.insert(all.end(), ks.begin(), ks.end());
      }
      std::vector<std::uint32_t> widths;
      if (!traces_path.empty()) widths = analysis::unit_widths(trace::read_trace(traces_path), attribution::ScoreMode::kVocabProjection);
      else if (layers > 0 && width > 0) widths.assign(layers, width);
      else throw Error(ErrorCode::kInvalidArgument, "give --traces or both --layers and --width");
      std::cout << csv::num(metrics::mui(all, widths), 6) << '\n';
    });
  }

  // pur
  double p_value_arg = 0.0, mui_arg = 0.0, alpha = 0.5;
  std::string points_path;
  {
    auto* c = app.add_subcommand("pur", "Performance-to-utilization ratio P / MUI^alpha");
    c->add_option("--p", p_value_arg, "Performance (%)");
    c->add_option("--mui", mui_arg, "MUI (%)");
    c->add_option("--points", points_path, "CSV with P/accuracy and MUI columns");
    c->add_option("--alpha", alpha)->capture_default_str();
    c->callback([&] {
      const metrics::PurConfig pc{alpha};
      if (points_path.empty()) {
        std::cout << csv::num(metrics::pur(p_value_arg, mui_arg, pc), 4) << '\n';
        return;
      }
      print_row({"label", "dataset", "P", "MUI", "PUR"});
      for (const auto& p : analysis::load_points(points_path))
        print_row({p.label, p.dataset, csv::num(p.performance), csv::num(p.mui),
                   csv::num(metrics::pur(p.performance, p.mui, pc), 4)});
    });
  }

  // fit
  std::string dataset_filter;
  {
    auto* c = app.add_subcommand("fit", "Fit MUI = A ln P + B over points and extrapolate to P = 100");
    c->add_option("--points", points_path)->required();
    c->add_option("--dataset", dataset_filter, "Only rows of this dataset");
    c->callback([&] {
      std::vector<metrics::EvalPoint> pts;
      for (const auto& p : analysis::load_points(points_path))
        if (dataset_filter.empty() || p.dataset == dataset_filter) pts.push_back(p);
      const auto fit = metrics::fit_utility(pts);
      metrics::write_fit_csv(out_dir(g) / "fit.csv", fit);
      std::cout << "A " << csv::num(fit.a, 4) << " B " << csv::num(fit.b, 4) << " R2 " << csv::num(fit.r_squared, 4)
                << " n " << fit.n_points << " MUI@100 " << csv::num(metrics::extrapolate(fit, 100.0), 4) << '\n';
    });
  }

  // rank
  std::string csv_path, score_col = "score", label_col = "label", ref_col;
  bool ascending = false;
  {
    auto* c = app.add_subcommand("rank", "Average-tie ranking, optionally correlated with a reference column");
    c->add_option("--csv", csv_path)->required();
    c->add_option("--score-col", score_col)->capture_default_str();
    c->add_option("--label-col", label_col)->capture_default_str();
    c->add_option("--reference-col", ref_col, "Reference ranks for Spearman/Kendall");
    c->add_flag("--ascending", ascending, "Rank 1 = smallest");
    c->callback([&] {
      const auto t = csv::read(csv_path);
      std::vector<double> scores, ref;
      for (const auto& r : t.rows) {
        scores.push_back(cell_number(r[t.col(score_col)], score_col));
        if (!ref_col.empty()) ref.push_back(cell_number(r[t.col(ref_col)], ref_col));
      }
      const auto ranks = metrics::rank_by(scores, !ascending);
      print_row({label_col, score_col, "rank"});
      for (std::size_t i = 0; i < ranks.size(); ++i)
        print_row({t.rows[i][t.col(label_col)], t.rows[i][t.col(score_col)], csv::num(ranks[i])});
      if (!ref.empty())
        std::cout << "spearman " << csv::num(stats::spearman(ranks, ref).percent(), 2) << " kendall "
                  << csv::num(stats::kendall(ranks, ref).percent(), 2) << '\n';
    });
  }

  // compare
  std::string col_a, col_b;
  {
    auto* c = app.add_subcommand("compare", "Two-sided Mann-Whitney U test between two CSV columns");
    c->add_option("--csv", csv_path)->required();
    c->add_option("--col-a", col_a)->required();
    c->add_option("--col-b", col_b)->required();
    c->callback([&] {
      const auto t = csv::read(csv_path);
      std::vector<double> a, b;
      for (const auto& r : t.rows) {
        if (!r[t.col(col_a)].empty()) a.push_back(cell_number(r[t.col(col_a)], col_a));
        if (!r[t.col(col_b)].empty()) b.push_back(cell_number(r[t.col(col_b)], col_b));
      }
      const auto u = stats::mann_whitney_u(a, b);
      std::cout << "U " << csv::num(u.u) << " z " << csv::num(u.z, 4) << " p " << csv::num(u.p_value, 4)
                << (u.exact ? " (exact)" : " (normal)") << ": " << stats::verdict(u.p_value) << '\n';
    });
  }

  // direction
  std::string before, after, from_label, to_label;
  double eps_p = 0.5, eps_m = 0.05;
  {
    auto* c = app.add_subcommand("direction", "Classify the move between two (P, MUI) points");
    c->add_option("--before", before, "P,MUI");
    c->add_option("--after", after, "P,MUI");
    c->add_option("--points", points_path, "CSV of points; use with --from/--to labels");
    c->add_option("--from", from_label);
    c->add_option("--to", to_label);
    c->add_option("--eps-p", eps_p)->capture_default_str();
    c->add_option("--eps-m", eps_m)->capture_default_str();
    c->callback([&] {
      if (points_path.empty()) {
        const auto [p1, m1] = parse_pair(before);
        const auto [p2, m2] = parse_pair(after);
        const auto d = metrics::classify_direction({"before", "", p1, m1}, {"after", "", p2, m2}, eps_p, eps_m);
        std::cout << metrics::to_string(d.kind) << " dP " << csv::num(d.delta_p, 4) << " dMUI "
                  << csv::num(d.delta_mui, 4) << '\n';
        return;
      }
      std::map<std::string, metrics::EvalPoint> a, b;
      for (const auto& p : analysis::load_points(points_path)) {
        if (p.label == from_label) a[p.dataset] = p;
        if (p.label == to_label) b[p.dataset] = p;
      }
      std::vector<metrics::DirectionRow> rows;
      for (const auto& [ds, p] : a)
        if (b.count(ds)) rows.push_back({p, b[ds], metrics::classify_direction(p, b[ds], eps_p, eps_m)});
      if (rows.empty()) throw Error(ErrorCode::kInsufficientData, "no dataset has both labels");
      metrics::write_directions_csv(out_dir(g) / "directions.csv", rows);
      for (const auto& r : rows) std::cout << r.before.dataset << ' ' << metrics::to_string(r.direction.kind) << '\n';
    });
  }

  // mask
  std::string k_grid = "0,1,2,4", select_suite = "modadd", eval_suites = "modadd,sort";
  std::size_t reps = 5, selection_size = 100, eval_size = 200;
  {
    auto* c = app.add_subcommand("mask", "Mask task-selected vs random neurons and re-evaluate");
    c->add_option("--model", model_path)->required();
    c->add_option("--k", k_grid, "Ascending LayerTopK grid; 0 = unmasked")->capture_default_str();
    c->add_option("--select-suite", select_suite)->capture_default_str();
    c->add_option("--eval-suites", eval_suites)->capture_default_str();
    c->add_option("--reps", reps, "Random-mask repetitions")->capture_default_str();
    c->add_option("--selection-size", selection_size)->capture_default_str();
    c->add_option("--eval-size", eval_size)->capture_default_str();
    c->callback([&] {
      analysis::MaskSweepSpec spec;
      spec.k_grid = split_numbers<std::uint32_t>(k_grid);
      spec.selection_suite = select_suite;
      spec.eval_suites = split(eval_suites, ',');
      spec.random_repetitions = reps;
      spec.selection_size = selection_size;
      spec.eval_size = eval_size;
      spec.seed = g.seed;
      const auto model = toy::load_toy(model_path);
      for (auto k : spec.k_grid)
        if (k > model.config.ffn_width) std::cerr << "warning: k " << k << " clipped to " << model.config.ffn_width << '\n';
      const auto rows = analysis::mask_sweep(spec, model);
      analysis::write_mask_csv(out_dir(g) / "mask.csv", rows);
      for (const auto& r : rows)
        std::cout << "k " << r.k << ' ' << r.eval_suite << " |mask| " << r.mask_size << " base " << r.base_accuracy
                  << " selected " << r.selected_accuracy << " random " << csv::num(r.random_mean, 2) << " (var "
                  << csv::num(r.random_variance, 2) << ")\n";
    });
  }

  // diversity
  std::string groups_arg, sizes_arg = "200,400,600,800,1000,1200";
  std::size_t per_suite = 1200, trials = 5;
  bool length_strata = false, correctness_strata = false;
  {
    auto* c = app.add_subcommand("diversity", "MUI growth with sample count for tag groups");
    c->add_option("--model", model_path)->required();
    c->add_option("--suites", suites)->capture_default_str();
    c->add_option("--per-suite", per_suite, "Samples traced per suite")->capture_default_str();
    c->add_option("--sizes", sizes_arg)->capture_default_str();
    c->add_option("--trials", trials)->capture_default_str();
    c->add_option("--groups", groups_arg, "name=tag+tag;... (default: one group per suite plus 'mixed')");
    c->add_flag("--length-strata", length_strata);
    c->add_flag("--correctness-strata", correctness_strata);
    c->callback([&] {
      const auto model = toy::load_toy(model_path);
      const auto names = split(suites, ',');
      const auto pool = analysis::build_pool(model, names, per_suite, g.seed);
      analysis::DiversitySpec spec;
      spec.sizes = split_numbers<std::size_t>(sizes_arg);
      spec.trials = trials;
      spec.seed = g.seed;
      spec.length_strata = length_strata;
      spec.correctness_strata = correctness_strata;
      if (groups_arg.empty()) {
        analysis::DiversityGroup mixed{"mixed", {}};
        for (const auto& n : names) {
          spec.groups.push_back({n, {n}});
          mixed.tags.push_back(n);
        }
        if (names.size() > 1) spec.groups.push_back(mixed);
      } else {
        for (const auto& gdef : split(groups_arg, ';')) {
          const auto eq = gdef.find('=');
          if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "group needs name=tags: " + gdef);
          spec.groups.push_back({gdef.substr(0, eq), split(gdef.substr(eq + 1), '+')});
        }
      }
      const auto res = analysis::diversity_curves(spec, pool.samples, pool.widths);
      analysis::write_diversity_csv(out_dir(g) / "diversity.csv", res);
      for (const auto& cell : res.cells)
        std::cout << cell.group << " n=" << cell.size << " MUI " << csv::num(cell.mean_mui, 4) << '\n';
      for (const auto& t : res.tests)
        std::cout << t.name << " strata p " << csv::num(t.test.p_value, 4) << ": " << stats::verdict(t.test.p_value)
                  << '\n';
    });
  }

  // ablation
  std::size_t n_per_class = 20;
  {
    auto* c = app.add_subcommand("ablation", "MUI of correct vs incorrect samples with a U test");
    c->add_option("--model", model_path)->required();
    c->add_option("--suites", suites)->capture_default_str();
    c->add_option("--per-suite", per_suite)->capture_default_str();
    c->add_option("--n", n_per_class, "Samples per class per trial")->capture_default_str();
    c->add_option("--trials", trials)->capture_default_str();
    c->callback([&] {
      const auto model = toy::load_toy(model_path);
      const auto pool = analysis::build_pool(model, split(suites, ','), per_suite, g.seed);
      const auto r = analysis::correctness_ablation(pool.samples, n_per_class, trials, g.seed, pool.widths);
      analysis::write_ablation_csv(out_dir(g) / "ablation.csv", r);
      std::cout << "MUI correct " << csv::num(r.mean_correct, 4) << " incorrect " << csv::num(r.mean_incorrect, 4)
                << " p " << csv::num(r.test.p_value, 4) << ": " << r.verdict << '\n';
    });
  }

  // reproduce
  std::string data_dir = MUI_DATA_DIR;
  {
    auto* c = app.add_subcommand("reproduce", "Recompute PUR and ranking statistics from the bundled tables");
    c->add_option("--data", data_dir)->capture_default_str();
    c->callback([&] {
      const auto r = analysis::reproduce_tables(data_dir);
      analysis::write_reproduction(out_dir(g), r);
      double worst = 0.0;
      std::size_t checked = 0;
      for (const auto& c : r.pur)
        if (c.recomputed_pur) {
          worst = std::max(worst, std::abs(*c.recomputed_pur - c.published_pur));
          ++checked;
        }
      std::cout << "PUR cells recomputed " << checked << "/" << r.pur.size() << ", max |diff| " << csv::num(worst, 3)
                << '\n';
      for (const auto& c : r.correlations)
        std::cout << c.statistic << ' ' << c.dataset << ' ' << csv::num(c.accuracy_based, 1) << " / "
                  << csv::num(c.pur_based, 1) << " (published " << csv::num(c.published_accuracy, 1) << " / "
                  << csv::num(c.published_pur, 1) << ")\n";
    });
  }

  // report
  {
    auto* c = app.add_subcommand("report", "SVG scatter of MUI vs P with the fitted log curve");
    c->add_option("--points", points_path)->required();
    c->add_option("--dataset", dataset_filter, "Only rows of this dataset");
    c->callback([&] {
      std::vector<metrics::EvalPoint> pts;
      for (const auto& p : analysis::load_points(points_path))
        if (dataset_filter.empty() || p.dataset == dataset_filter) pts.push_back(p);
      analysis::report(out_dir(g), pts);
      std::cout << "wrote " << (fs::path(g.out) / "scatter.svg").string() << '\n';
    });
  }

  // run
  SelectionFlags run_sel;
  std::string decode_run = "free";
  {
    auto* c = app.add_subcommand("run", "Train or load a toy model, then trace, score, select and report MUI");
    c->add_option("--model", model_path, "Skip training and load this model");
    c->add_option("--suites", suites)->capture_default_str();
    c->add_option("--steps", steps)->capture_default_str();
    c->add_option("--size", size)->capture_default_str();
    c->add_option("--decoding", decode_run, "free|forced")->capture_default_str();
    c->add_option("--sae", sae_path);
    run_sel.add(c);
    c->callback([&] {
      analysis::ExperimentConfig cfg;
      if (!model_path.empty()) cfg.model_path = model_path;
      cfg.suites = split(suites, ',');
      cfg.train_steps = steps;
      cfg.suite_size = size;
      cfg.decoding = decode_run == "forced" ? toy::Decoding::kForcedReference : toy::Decoding::kFreeRunning;
      cfg.selection = run_sel.config();
      if (!sae_path.empty()) cfg.sae_path = sae_path;
      cfg.seeds = {g.seed};
      cfg.out_dir = out_dir(g);
      const auto res = analysis::run_pipeline(cfg);
      for (const auto& p : res.points)
        std::cout << p.dataset << " P " << csv::num(p.performance, 2) << " MUI " << csv::num(p.mui, 4) << '\n';
      if (res.skipped_samples) std::cout << "skipped samples: " << res.skipped_samples << '\n';
    });
  }

  attach_env(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
