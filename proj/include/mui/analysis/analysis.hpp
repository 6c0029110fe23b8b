#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mui/attribution/attribution.hpp"
#include "mui/metrics/metrics.hpp"
#include "mui/random.hpp"
#include "mui/selection/selection.hpp"
#include "mui/stats/stats.hpp"
#include "mui/toy/capture.hpp"
#include "mui/toy/suites.hpp"
#include "mui/toy/train.hpp"

namespace mui::analysis {

// ---- shared pieces -------------------------------------------------------

struct SelectionConfig {
  attribution::ScoreMode score_mode = attribution::ScoreMode::kVocabProjection;
  attribution::Aggregation aggregation = attribution::Aggregation::kTokenLevel;
  selection::SelectionPolicy policy = selection::LayerTopPermille{};
  selection::Scope scope = selection::Scope::kPerTokenUnion;
  attribution::IgConfig ig;
};

// One key set per traced sample, in trace order.
std::vector<selection::KeySet> select_keysets(const trace::TraceSet& traces, const attribution::ScoreSource& source,
                                              const SelectionConfig& config);

// Denominator of MUI, indexed by layer id: every layer's FFN width for
// neurons, D for each instrumented layer for features.
std::vector<std::uint32_t> unit_widths(const trace::TraceSet& traces, attribution::ScoreMode mode,
                                       const sae::SaeSnapshot* sae = nullptr);

// A sample's metadata paired with its key set.
struct SampleKeys {
  trace::TaskSample sample;
  selection::KeySet keys;
};

std::vector<SampleKeys> pair_keys(const trace::TraceSet& traces, const std::vector<selection::KeySet>& keysets);

struct Pool {
  std::vector<SampleKeys> samples;
  std::vector<std::uint32_t> widths;
};

// Traces `per_suite` fresh items of every named suite (FreeRunning) and keys
// them with proj scores under `config`.
Pool build_pool(const toy::ToyModel& model, const std::vector<std::string>& suites, std::size_t per_suite,
                std::uint64_t seed, const SelectionConfig& config = {});

// ---- pipeline --------------------------------------------------------------

struct ExperimentConfig {
  std::string label = "toy";
  toy::ToyConfig toy;                              // used when no model path is given
  std::optional<std::filesystem::path> model_path;  // *.musm carrying TOYW
  std::size_t train_steps = 3000;
  std::vector<std::string> suites{"copy", "reverse"};
  std::size_t suite_size = 200;
  toy::Decoding decoding = toy::Decoding::kFreeRunning;
  SelectionConfig selection;
  std::optional<std::filesystem::path> sae_path;  // feature-level run
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::filesystem::path> out_dir;
};

struct PipelineResult {
  std::vector<metrics::EvalPoint> points;  // one per (seed, suite), plus "all" pooled
  std::vector<std::vector<selection::KeySet>> keysets;  // parallel to points without the pooled rows
  std::size_t skipped_samples = 0;
};

// Trains (or loads) a toy model and a held-out eval suite for each named
// suite, traces, scores, selects and reports P and MUI per suite.
PipelineResult run_pipeline(const ExperimentConfig& config);

// The toy model the pipeline would use for `seed`: loaded, or trained on
// fresh suites of the configured kinds.
toy::ToyModel pipeline_model(const ExperimentConfig& config, std::uint64_t seed);

toy::TaskSuite suite_by_name(const std::string& name, std::size_t size, std::uint64_t seed);

// ---- masking ---------------------------------------------------------------

struct MaskSweepSpec {
  std::vector<std::uint32_t> k_grid{0, 1, 2, 4};  // LayerTopK k per token; 0 = unmasked
  std::string selection_suite = "modadd";
  std::vector<std::string> eval_suites{"modadd", "sort"};
  std::size_t selection_size = 100;
  std::size_t eval_size = 200;
  std::size_t random_repetitions = 5;
  selection::Scope scope = selection::Scope::kPerTokenUnion;
  std::uint64_t seed = 0;
};

struct MaskCurveRow {
  std::uint32_t k = 0;
  std::string eval_suite;
  std::size_t mask_size = 0;
  double base_accuracy = 0.0;
  double selected_accuracy = 0.0;
  double random_mean = 0.0;
  double random_variance = 0.0;  // population variance over repetitions
};

// Units selected on the selection suite (proj scores, LayerTopK(k)).
std::vector<trace::UnitId> task_units(const toy::ToyModel& model, const toy::TaskSuite& suite, std::uint32_t k,
                                      selection::Scope scope);
std::vector<trace::UnitId> random_units(const toy::ToyConfig& config, std::size_t count, std::uint64_t seed);

std::vector<MaskCurveRow> mask_sweep(const MaskSweepSpec& spec, const toy::ToyModel& model);
void write_mask_csv(const std::filesystem::path& path, const std::vector<MaskCurveRow>& rows);

// ---- diversity ---------------------------------------------------------------

struct DiversityGroup {
  std::string name;
  std::vector<std::string> tags;  // matched against capability or domain tag; draws split evenly
};

struct DiversitySpec {
  std::vector<DiversityGroup> groups;
  std::vector<std::size_t> sizes{200, 400, 600, 800, 1000, 1200};
  std::size_t trials = 5;
  bool length_strata = false;
  bool correctness_strata = false;
  std::uint64_t seed = 0;
};

struct DiversityCell {
  std::string group;
  std::size_t size = 0;
  double mean_mui = 0.0;
  std::vector<double> trial_mui;
};

struct StratumTest {
  std::string name;  // "length" or "correctness"
  std::size_t n = 0;
  std::vector<double> mui_a;
  std::vector<double> mui_b;
  stats::UTestResult test;
};

struct DiversityResult {
  std::vector<DiversityCell> cells;
  std::vector<StratumTest> tests;
};

// Subset MUI of `n` samples drawn from a group (even split over its tags).
std::vector<std::size_t> draw_group(const std::vector<SampleKeys>& pool, const DiversityGroup& group, std::size_t n,
                                    Rng& rng);
double subset_mui(const std::vector<SampleKeys>& pool, const std::vector<std::size_t>& subset,
                  const std::vector<std::uint32_t>& widths);

DiversityResult diversity_curves(const DiversitySpec& spec, const std::vector<SampleKeys>& pool,
                                 const std::vector<std::uint32_t>& widths);
void write_diversity_csv(const std::filesystem::path& path, const DiversityResult& result);

// ---- correctness ablation ----------------------------------------------------

struct AblationResult {
  std::size_t n = 0;
  std::vector<double> mui_correct;
  std::vector<double> mui_incorrect;
  double mean_correct = 0.0;
  double mean_incorrect = 0.0;
  stats::UTestResult test;
  std::string verdict;
};

// Draws n samples per class per trial; the two classes use identical seeds.
AblationResult correctness_ablation(const std::vector<SampleKeys>& correct, const std::vector<SampleKeys>& incorrect,
                                    std::size_t n, std::size_t trials, std::uint64_t seed,
                                    const std::vector<std::uint32_t>& widths);
AblationResult correctness_ablation(const std::vector<SampleKeys>& pool, std::size_t n, std::size_t trials,
                                    std::uint64_t seed, const std::vector<std::uint32_t>& widths);
void write_ablation_csv(const std::filesystem::path& path, const AblationResult& result);

// ---- published tables ----------------------------------------------------------

struct PurCheck {
  std::string model;
  std::string dataset;
  double accuracy = 0.0;
  double published_pur = 0.0;
  std::optional<double> mui;             // absent when the MUI table lacks the model
  std::optional<double> recomputed_pur;
};

struct CorrelationCheck {
  std::string statistic;  // Spearman or Kendall
  std::string dataset;    // dataset name or "average"
  double accuracy_based = 0.0;
  double pur_based = 0.0;
  double published_accuracy = 0.0;
  double published_pur = 0.0;
};

struct Reproduction {
  std::vector<PurCheck> pur;
  std::vector<CorrelationCheck> correlations;
  // Population variance of the per-dataset coefficients (fraction scale x 100).
  double spearman_variance_acc = 0.0, spearman_variance_pur = 0.0;
  double kendall_variance_acc = 0.0, kendall_variance_pur = 0.0;
};

std::vector<metrics::EvalPoint> load_points(const std::filesystem::path& csv_path);
Reproduction reproduce_tables(const std::filesystem::path& data_dir);
void write_reproduction(const std::filesystem::path& out_dir, const Reproduction& r);

// ---- report ----------------------------------------------------------------------

struct PlotFrame {
  double x_min = 0.0, x_max = 100.0;
  double y_min = 0.0, y_max = 10.0;
  double width = 640.0, height = 420.0;
  double left = 60.0, right = 20.0, top = 20.0, bottom = 50.0;

  double px(double x) const { return left + (x - x_min) / (x_max - x_min) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y_min) / (y_max - y_min) * (height - top - bottom); }
};

PlotFrame frame_for(const std::vector<metrics::EvalPoint>& points, const std::optional<metrics::UtilityFit>& fit);
std::string render_svg(const std::vector<metrics::EvalPoint>& points, const std::optional<metrics::UtilityFit>& fit);
// Writes scatter.svg, points.csv and, with >= 2 distinct P, fit.csv.
void report(const std::filesystem::path& out_dir, const std::vector<metrics::EvalPoint>& points);

}  // namespace mui::analysis
