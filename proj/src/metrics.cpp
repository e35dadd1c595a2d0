#include "prnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "prnn/detail/csv.hpp"

namespace prnn {

namespace {

using detail::format_double;

std::ofstream open_report(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("report: cannot write " + path.string());
  return out;
}

ClassStats stats_of(const std::vector<double>& values) {
  ClassStats s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

}  // namespace

const char* to_string(ChangeDirection d) {
  return d == ChangeDirection::drop ? "drop" : "rise";
}

std::string AcuityDefinition::label() const {
  if (cardiac_arrest) return "cardiac_arrest";
  return channel + "_" + to_string(direction) + "_" + format_double(percentile);
}

const std::vector<std::string>& acuity_channel_names() {
  static const std::vector<std::string> names{
      "heart_rate",     "mean_arterial_pressure",
      "glasgow_coma_score", "pulse_oximetry",
      "abg_ph",         "vbg_ph",
      "inotrope_score", "creatinine"};
  return names;
}

std::vector<AcuityDefinition> standard_acuity_definitions() {
  std::vector<AcuityDefinition> defs;
  for (const auto& name : acuity_channel_names()) {
    const bool rises = (name == "inotrope_score" || name == "creatinine");
    for (double x : kPercentiles) {
      AcuityDefinition d;
      d.channel = name;
      d.direction = rises ? ChangeDirection::rise : ChangeDirection::drop;
      d.percentile = x;
      defs.push_back(std::move(d));
    }
  }
  AcuityDefinition arrest;
  arrest.channel = "heart_rate";
  arrest.direction = ChangeDirection::drop;
  arrest.cardiac_arrest = true;
  defs.push_back(std::move(arrest));
  return defs;
}

FirstPredictionStats first_prediction_stats(
    const std::vector<PredictionTrajectory>& trajectories) {
  if (trajectories.empty())
    throw std::invalid_argument("first_prediction_stats: no trajectories");
  std::vector<double> surv, died;
  for (const auto& t : trajectories) {
    if (t.yhat.empty()) throw std::invalid_argument("first_prediction_stats: empty trajectory");
    (t.outcome == Outcome::survived ? surv : died).push_back(t.yhat.front());
  }
  FirstPredictionStats out;
  out.survivors = stats_of(surv);
  out.non_survivors = stats_of(died);
  return out;
}

std::vector<PercentChange> change_series(const EpisodeMatrix& episode,
                                         std::size_t channel) {
  std::vector<PercentChange> series;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t r = 0; r < episode.rows(); ++r) {
    if (!episode.charted_at(r, channel)) continue;
    const double v = episode.values(r, channel);
    if (have_prev && prev != 0.0)
      series.push_back({r, 100.0 * (v - prev) / prev});
    prev = v;
    have_prev = true;
  }
  return series;
}

void ThresholdTable::set(const AcuityDefinition& def, double threshold) {
  by_label_[def.label()] = threshold;
}

std::optional<double> ThresholdTable::get(const AcuityDefinition& def) const {
  const auto it = by_label_.find(def.label());
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

double nearest_rank_threshold(std::vector<double> pool, ChangeDirection direction,
                              double percentile) {
  if (pool.empty()) throw std::invalid_argument("nearest_rank_threshold: empty pool");
  std::sort(pool.begin(), pool.end());
  const double raw = percentile * static_cast<double>(pool.size()) / 100.0;
  std::size_t rank = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, pool.size());
  return direction == ChangeDirection::drop ? pool[rank - 1] : pool[pool.size() - rank];
}

ThresholdComputation compute_thresholds(const Cohort& cohort,
                                        std::span<const std::string> episode_ids) {
  ThresholdComputation out;
  std::map<std::string, std::vector<double>> pools;
  for (const auto& name : acuity_channel_names()) {
    const std::size_t idx = cohort.channel_index(name);
    auto& pool = pools[name];
    for (const auto& id : episode_ids) {
      const EpisodeMatrix* ep = cohort.find_episode(id);
      if (!ep) throw std::invalid_argument("compute_thresholds: unknown episode " + id);
      for (const auto& ch : change_series(*ep, idx)) pool.push_back(ch.percent);
    }
  }
  for (const auto& def : standard_acuity_definitions()) {
    if (def.cardiac_arrest) continue;
    const auto& pool = pools[def.channel];
    if (pool.empty()) {
      const std::string warning = def.channel + ": no charted change pairs, omitted";
      if (out.warnings.empty() || out.warnings.back() != warning)
        out.warnings.push_back(warning);
      continue;
    }
    out.table.set(def, nearest_rank_threshold(pool, def.direction, def.percentile));
  }
  return out;
}

ThresholdTable paper_threshold_table() {
  struct Row {
    const char* channel;
    ChangeDirection dir;
    double t5, t1, t05;
  };
  static const Row rows[] = {
      {"heart_rate", ChangeDirection::drop, -18.8, -31.6, -37.1},
      {"mean_arterial_pressure", ChangeDirection::drop, -23.5, -38.1, -44.2},
      {"glasgow_coma_score", ChangeDirection::drop, -50.0, -72.7, -72.7},
      {"pulse_oximetry", ChangeDirection::drop, -5.6, -20.2, -35.1},
      {"abg_ph", ChangeDirection::drop, -1.5, -2.9, -3.5},
      {"vbg_ph", ChangeDirection::drop, -1.4, -2.6, -3.1},
      {"inotrope_score", ChangeDirection::rise, 66.7, 150.0, 250.0},
      {"creatinine", ChangeDirection::rise, 33.3, 60.5, 81.8},
  };
  ThresholdTable table;
  for (const auto& row : rows) {
    const double values[] = {row.t5, row.t1, row.t05};
    for (int i = 0; i < 3; ++i) {
      AcuityDefinition def;
      def.channel = row.channel;
      def.direction = row.dir;
      def.percentile = kPercentiles[i];
      table.set(def, values[i]);
    }
  }
  return table;
}

AcuteEventSet detect_acute_events(const EpisodeMatrix& episode,
                                  const AcuityDefinition& def,
                                  const ThresholdTable& thresholds,
                                  std::size_t channel_index) {
  AcuteEventSet events;
  if (def.cardiac_arrest) {
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t r = 0; r < episode.rows(); ++r) {
      if (!episode.charted_at(r, channel_index)) continue;
      const double v = episode.values(r, channel_index);
      if (have_prev && prev > 0.0 && v == 0.0) events.push_back(r);
      prev = v;
      have_prev = true;
    }
    return events;
  }
  const auto threshold = thresholds.get(def);
  if (!threshold)
    throw std::invalid_argument("detect_acute_events: no threshold for " + def.label());
  for (const auto& ch : change_series(episode, channel_index)) {
    const bool acute = def.direction == ChangeDirection::drop ? ch.percent <= *threshold
                                                              : ch.percent >= *threshold;
    if (acute) events.push_back(ch.row);
  }
  return events;
}

double variation_VE(const PredictionTrajectory& trajectory, const AcuteEventSet& events) {
  if (events.empty())
    throw std::invalid_argument("variation_VE: empty acute set; exclude the episode");
  double sum = 0.0;
  for (std::size_t idx : events) {
    if (idx == 0 || idx >= trajectory.yhat.size())
      throw std::invalid_argument("variation_VE: acute index " + std::to_string(idx) +
                                  " out of range");
    sum += std::abs(trajectory.yhat[idx] - trajectory.yhat[idx - 1]);
  }
  return 100.0 * sum / static_cast<double>(events.size());
}

double mean_variation(std::span<const double> per_episode_values) {
  if (per_episode_values.empty())
    throw std::invalid_argument("mean_variation: no episodes with events");
  return std::accumulate(per_episode_values.begin(), per_episode_values.end(), 0.0) /
         static_cast<double>(per_episode_values.size());
}

std::optional<double> auroc(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size())
    throw std::invalid_argument("auroc: scores and labels differ in length");
  std::size_t n_pos = 0;
  for (int p : positive) n_pos += (p != 0);
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks across tie groups (1-based)
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k)
      if (positive[order[k]]) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::vector<TimesliceRow> timeslice_auroc(
    const std::vector<PredictionTrajectory>& trajectories,
    std::span<const double> slice_hours) {
  std::vector<const PredictionTrajectory*> cohort;
  std::size_t deaths = 0;
  for (const auto& t : trajectories) {
    if (!t.times.empty() && t.times.back() >= kTimesliceMinMinutes) {
      cohort.push_back(&t);
      deaths += (t.outcome == Outcome::died);
    }
  }
  std::vector<TimesliceRow> rows;
  for (double hours : slice_hours) {
    TimesliceRow row;
    row.hours = hours;
    row.n = cohort.size();
    row.mortality_rate =
        cohort.empty() ? 0.0 : static_cast<double>(deaths) / static_cast<double>(cohort.size());
    if (!cohort.empty()) {
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto* t : cohort) {
        // latest prediction at or before the slice; admission slice uses t_0
        std::size_t idx = 0;
        if (hours > 0.0) {
          const double cutoff = hours * 60.0;
          for (std::size_t r = 0; r < t->times.size() && t->times[r] <= cutoff; ++r)
            idx = r;
        }
        scores.push_back(t->yhat[idx]);
        labels.push_back(t->outcome == Outcome::survived ? 1 : 0);
      }
      row.auroc = auroc(scores, labels);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_thresholds_csv(const std::filesystem::path& path, const ThresholdTable& table) {
  auto out = open_report(path);
  out << "channel,direction,percentile,threshold\n";
  for (const auto& def : standard_acuity_definitions()) {
    if (def.cardiac_arrest) continue;
    const auto t = table.get(def);
    if (!t) continue;
    out << def.channel << ',' << to_string(def.direction) << ','
        << format_double(def.percentile) << ',' << format_double(*t) << '\n';
  }
}

void write_variation_csv(const std::filesystem::path& path, const std::string& model,
                         const std::vector<VariationSummary>& rows) {
  auto out = open_report(path);
  out << "definition,model,n_p,v_bar_e\n";
  for (const auto& row : rows) {
    out << row.definition << ',' << model << ',' << row.n_episodes << ',';
    if (row.mean) out << format_double(*row.mean);
    out << '\n';
  }
}

void write_pipeup_csv(const std::filesystem::path& path, const std::string& model,
                      const FirstPredictionStats& stats) {
  auto out = open_report(path);
  out << "model,class,mean,sd\n";
  const auto write_class = [&](const char* name, const ClassStats& s) {
    out << model << ',' << name << ',';
    if (s.n > 0) out << format_double(s.mean) << ',' << format_double(s.sd);
    else out << ',';
    out << '\n';
  };
  write_class("survived", stats.survivors);
  write_class("died", stats.non_survivors);
}

void write_auroc_csv(const std::filesystem::path& path, const std::string& model,
                     const std::vector<TimesliceRow>& rows) {
  auto out = open_report(path);
  out << "model,slice_hours,auroc,n,mortality_rate\n";
  for (const auto& row : rows) {
    out << model << ',' << format_double(row.hours) << ',';
    if (row.auroc) out << format_double(*row.auroc);
    out << ',' << row.n << ',' << format_double(row.mortality_rate) << '\n';
  }
}

}  // namespace prnn
