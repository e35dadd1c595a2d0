#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prnn/episode.hpp"

namespace prnn {

// Responsiveness evaluation: pipe-up statistics, percentile-threshold acute
// event detection, the V_E / V̄_E variation metrics, and time-sliced AUROC.

struct PredictionTrajectory {
  std::string episode_id;
  std::vector<double> times;  // minutes, same axis as the episode matrix
  std::vector<double> yhat;   // probability of survival per row
  Outcome outcome = Outcome::survived;
};

// ---- pipe-up -------------------------------------------------------------

struct ClassStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // population
};

struct FirstPredictionStats {
  ClassStats survivors;
  ClassStats non_survivors;  // n == 0 marks an absent class
};

FirstPredictionStats first_prediction_stats(
    const std::vector<PredictionTrajectory>& trajectories);

// ---- acute events ----------------------------------------------------------

enum class ChangeDirection { drop, rise };

inline constexpr double kPercentiles[] = {5.0, 1.0, 0.5};

struct AcuityDefinition {
  std::string channel;
  ChangeDirection direction = ChangeDirection::drop;
  double percentile = 5.0;  // X ∈ {5.0, 1.0, 0.5}
  bool cardiac_arrest = false;

  std::string label() const;  // e.g. "heart_rate_drop_5", "cardiac_arrest"
};

// The eight monitored channels in their reporting order.
const std::vector<std::string>& acuity_channel_names();

// 8 channels × 3 percentiles plus the cardiac-arrest event: 25 definitions.
std::vector<AcuityDefinition> standard_acuity_definitions();

struct PercentChange {
  std::size_t row;  // row index of the later measurement
  double percent;   // 100·(v_i - v_prev)/v_prev
};

// Changes between consecutive *charted* values of one channel. Pairs whose
// earlier value is 0 are skipped (the cardiac-arrest rule handles zeros).
// Fewer than two charted values gives an empty series.
std::vector<PercentChange> change_series(const EpisodeMatrix& episode,
                                         std::size_t channel);

class ThresholdTable {
 public:
  void set(const AcuityDefinition& def, double threshold);
  std::optional<double> get(const AcuityDefinition& def) const;
  std::size_t size() const { return by_label_.size(); }

 private:
  std::map<std::string, double> by_label_;
};

struct ThresholdComputation {
  ThresholdTable table;
  std::vector<std::string> warnings;  // channels omitted for empty pools
};

// Pools percent changes per channel across the given episodes and takes the
// nearest-rank order statistic: the ⌈X%·n⌉-th smallest change for drops, the
// ⌈X%·n⌉-th largest for rises.
ThresholdComputation compute_thresholds(const Cohort& cohort,
                                        std::span<const std::string> episode_ids);

// Nearest-rank statistic over one pooled change set (the unit the table is
// built from).
double nearest_rank_threshold(std::vector<double> pool, ChangeDirection direction,
                              double percentile);

// The published Table-3 reference thresholds (percent change).
ThresholdTable paper_threshold_table();

// Row indices (each ≥ 1) whose inter-measurement change satisfies the
// definition. Cardiac arrest: charted heart rate 0 with previous charted > 0.
using AcuteEventSet = std::vector<std::size_t>;
AcuteEventSet detect_acute_events(const EpisodeMatrix& episode,
                                  const AcuityDefinition& def,
                                  const ThresholdTable& thresholds,
                                  std::size_t channel_index);

// ---- variation -------------------------------------------------------------

// V_E(p) = (100/|S_E|)·Σ_{i∈S_E} |ŷ(t_i) - ŷ(t_{i-1})|, predecessor being the
// immediately preceding row of the episode matrix. Empty S_E is an argument
// error; callers exclude such episodes instead.
double variation_VE(const PredictionTrajectory& trajectory, const AcuteEventSet& events);

// Mean over episodes with nonempty S_E. Empty input is an argument error.
double mean_variation(std::span<const double> per_episode_values);

struct VariationSummary {
  std::string definition;
  std::size_t n_episodes = 0;          // N_p: episodes with nonempty S_E
  std::optional<double> mean;          // V̄_E; empty when N_p == 0
  std::vector<double> per_episode;     // V_E(p) for included episodes
};

// ---- AUROC -----------------------------------------------------------------

// Probability a random positive outranks a random negative, ties counted 1/2
// (Mann-Whitney). Single-class input returns nullopt.
std::optional<double> auroc(std::span<const double> scores, std::span<const int> positive);

inline constexpr double kTimesliceHours[] = {0.0, 1.0, 3.0, 6.0, 12.0, 24.0};
inline constexpr double kTimesliceMinMinutes = 24.0 * 60.0;

struct TimesliceRow {
  double hours = 0.0;
  std::optional<double> auroc;  // empty when a class is missing
  std::size_t n = 0;            // episodes in the ≥24h cohort
  double mortality_rate = 0.0;
};

// Filters to episodes lasting at least 24 h, then per slice h scores each
// episode with ŷ at the latest time point ≤ h·60 (the admission slice uses
// t_0) and computes the survivor-vs-non-survivor AUROC.
std::vector<TimesliceRow> timeslice_auroc(
    const std::vector<PredictionTrajectory>& trajectories,
    std::span<const double> slice_hours = kTimesliceHours);

// ---- report files ------------------------------------------------------------

const char* to_string(ChangeDirection d);

void write_thresholds_csv(const std::filesystem::path& path, const ThresholdTable& table);
void write_variation_csv(const std::filesystem::path& path, const std::string& model,
                         const std::vector<VariationSummary>& rows);
void write_pipeup_csv(const std::filesystem::path& path, const std::string& model,
                      const FirstPredictionStats& stats);
void write_auroc_csv(const std::filesystem::path& path, const std::string& model,
                     const std::vector<TimesliceRow>& rows);

}  // namespace prnn
