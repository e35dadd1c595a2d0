#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prnn/matrix.hpp"

namespace prnn {

enum class Outcome { survived, died };

enum class AcuteDirection { drop, rise, none };

// One monitored variable of the synthetic schema. Values are generated as
// baseline + severity_coupling·s(t) + noise at each charting.
struct ChannelSchema {
  std::string name;
  double baseline_mean = 0.0;
  double baseline_sd = 0.0;  // patient-to-patient baseline spread
  double severity_coupling = 0.0;
  AcuteDirection acute_direction = AcuteDirection::none;
  double charting_period_mean = 15.0;  // minutes
  double noise_sd = 0.0;
  bool integer_valued = false;  // e.g. Glasgow Coma Score
  double clamp_lo = -1e300;
  double clamp_hi = 1e300;
};

// One patient episode: rows are observation times, columns are channels.
// charted marks the entries that were actually recorded; everything else is
// imputed downstream.
struct EpisodeMatrix {
  std::string patient_id;
  std::string episode_id;
  std::vector<double> times;  // minutes from admission, strictly increasing
  Matrix values;              // rows = times, cols = channels
  std::vector<std::uint8_t> charted;  // row-major, 1 = recorded
  Outcome outcome = Outcome::survived;
  std::vector<double> injected_event_times;  // generator ground truth (minutes)

  std::size_t rows() const { return times.size(); }
  std::size_t channels() const { return values.cols(); }
  bool charted_at(std::size_t row, std::size_t channel) const {
    return charted[row * values.cols() + channel] != 0;
  }
  double duration_minutes() const { return times.empty() ? 0.0 : times.back(); }
};

struct Cohort {
  std::vector<std::string> channel_names;
  std::vector<EpisodeMatrix> episodes;

  // Throws std::invalid_argument when the channel is unknown.
  std::size_t channel_index(const std::string& name) const;
  const EpisodeMatrix* find_episode(const std::string& episode_id) const;
};

// Patient-level split: every episode of one patient falls in exactly one set.
struct CohortSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

const char* to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

}  // namespace prnn
