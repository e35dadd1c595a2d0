#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "prnn/episode.hpp"
#include "prnn/rng.hpp"

namespace prnn {

// Synthetic PICU-like cohort generator. Episodes chart on jittered
// ~15-minute rounds; a latent severity s(t) in [0,1] follows a mean-reverting
// random walk with Poisson-injected jumps (the acute events); channel values
// couple to severity with per-channel sign and gain; outcome is drawn from a
// logistic in peak severity calibrated to ~3.7% cohort mortality.
struct GeneratorConfig {
  std::vector<ChannelSchema> schema;   // defaults to default_schema()

  double round_period_minutes = 15.0;
  double round_jitter_minutes = 3.0;

  double episode_median_hours = 48.0;
  double episode_log_sd = 0.6;
  double episode_min_hours = 6.0;
  double episode_max_hours = 96.0;     // also the BPTT length cap

  double severity_init_mean = 0.30;
  double severity_init_sd = 0.15;
  double patient_frailty_sd = 0.08;
  double walk_sd_per_hour = 0.02;
  double mean_reversion_per_hour = 0.02;

  double jump_rate_per_day = 1.0;
  double jump_min = 0.25;
  double jump_max = 0.50;

  double noise_scale = 1.0;            // multiplies per-channel noise_sd

  double mortality_slope = 9.0;
  double mortality_intercept = -7.4;
  double arrest_probability = 0.25;    // terminal HR=0 chance for non-survivors

  std::array<double, 3> episodes_per_patient_probs{0.7, 0.2, 0.1};

  GeneratorConfig();
  void validate() const;
};

// The eight acuity-tracked channels (heart rate, MAP, GCS, SpO2, ABG pH,
// VBG pH, inotrope score, creatinine) with physiologic baselines.
std::vector<ChannelSchema> default_schema();

// Loads overrides for the scalar settings from a key=value file.
GeneratorConfig load_generator_config(const std::filesystem::path& path,
                                      GeneratorConfig base = {});

Cohort generate_cohort(Rng& rng, std::size_t n_patients, const GeneratorConfig& config);

// Patient-level 60/20/20 partition; no other stratification.
CohortSplit split_patients(const Cohort& cohort, Rng& rng);

struct ChannelStats {
  double mean = 0.0;  // post-imputation training mean; also the backfill value
  double sd = 1.0;    // post-imputation training sd; clamped to 1 when zero
  bool sd_clamped = false;
  bool never_charted = false;
};

struct NormalizationStats {
  std::vector<ChannelStats> channels;
};

// Statistics over the imputed training split only. The mean is the fixed
// point of "backfill with the mean": z-scoring the imputed training split
// with these stats yields mean 0 and sd 1 exactly.
NormalizationStats compute_normalization_stats(const Cohort& cohort,
                                               std::span<const std::string> training_ids);

// Forward-fill each channel from its last charted value; before the first
// charting, fill with the training mean; then z-score. charted_mask is
// preserved unchanged.
EpisodeMatrix impute_and_normalize(const EpisodeMatrix& episode,
                                   const NormalizationStats& stats);

// Cohort file: JSON lines, one episode per line, format_version on each
// record. Split file: JSON with the three id arrays.
void save_cohort(const std::filesystem::path& path, const Cohort& cohort);
Cohort load_cohort(const std::filesystem::path& path);
void save_split(const std::filesystem::path& path, const CohortSplit& split);
CohortSplit load_split(const std::filesystem::path& path);

}  // namespace prnn
