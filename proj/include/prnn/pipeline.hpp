#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "prnn/metrics.hpp"
#include "prnn/synthcare.hpp"
#include "prnn/trainer.hpp"

namespace prnn {

// End-to-end experiment plumbing shared by the CLI and the acceptance suite.

struct GeneratedData {
  Cohort cohort;
  CohortSplit split;
};

// Seeded generation + patient-level split. The data and split streams are
// derived from the seed with fixed offsets.
GeneratedData generate_with_split(std::uint64_t seed, std::size_t n_patients,
                                  const GeneratorConfig& config);

struct SplitSummary {
  std::string name;
  std::size_t episodes = 0;
  std::size_t patients = 0;
  double mortality = 0.0;
};

std::vector<SplitSummary> summarize_splits(const Cohort& cohort, const CohortSplit& split);

// Imputed+normalized sequences for the given episode ids, in id order.
std::vector<TrainingSequence> prepare_sequences(const Cohort& cohort,
                                                std::span<const std::string> ids,
                                                const NormalizationStats& stats);

// Trains one variant on the cohort's train/validation splits.
TrainResult train_on_cohort(const Cohort& cohort, const CohortSplit& split,
                            const ModelSpec& spec, const TrainingConfig& config);

// Inference trajectories (per-row probability of survival) for the given ids.
std::vector<PredictionTrajectory> predict_trajectories(const Cohort& cohort,
                                                       std::span<const std::string> ids,
                                                       const NormalizationStats& stats,
                                                       const ModelParams& model);

// "k<k>" for the PRNN variant, "attention" otherwise.
std::string model_label(const ModelParams& model);

// Order-sensitive digest of episode ids, outcomes, and the test split;
// cmd_compare uses it to refuse joins across different cohorts.
std::uint64_t cohort_fingerprint(const Cohort& cohort, const CohortSplit& split);

struct EvaluationReport {
  std::string model;
  bool paper_thresholds = false;
  ThresholdTable thresholds;
  std::vector<VariationSummary> variation;  // one row per acuity definition
  FirstPredictionStats pipeup;
  std::vector<TimesliceRow> auroc_rows;
  std::vector<std::string> warnings;
  std::uint64_t fingerprint = 0;
  std::size_t test_episodes = 0;
};

// Runs the §5 metrics suite for one checkpoint on the test split. Thresholds
// come from the test split per the percentile definitions, or from the
// bundled published table.
EvaluationReport evaluate_model(const Cohort& cohort, const CohortSplit& split,
                                const ModelParams& model, bool paper_thresholds);

// thresholds.csv, variation.csv, pipeup.csv, auroc.csv + eval_meta.json
void write_evaluation(const std::filesystem::path& out_dir, const EvaluationReport& report);

struct ComparisonRow {
  std::string metric;      // v_bar_e | n_p | pipeup_mean | pipeup_sd | auroc
  std::string definition;  // acuity label, outcome class, or slice hours
  std::string model;
  std::string value;
};

// Joins evaluation directories into one table keyed by (metric, definition,
// model). Throws std::invalid_argument when fingerprints differ.
std::vector<ComparisonRow> compare_evaluations(
    const std::vector<std::filesystem::path>& eval_dirs);

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows);

}  // namespace prnn
