#include "prnn/synthcare.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prnn/detail/csv.hpp"
#include "prnn/detail/kv.hpp"
#include "prnn/matrix.hpp"

namespace prnn {

namespace {

using nlohmann::json;

constexpr int kCohortVersion = 1;
constexpr int kSplitVersion = 1;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const char* to_string(Outcome o) { return o == Outcome::survived ? "survived" : "died"; }

Outcome outcome_from_string(const std::string& s) {
  if (s == "survived") return Outcome::survived;
  if (s == "died") return Outcome::died;
  throw std::runtime_error("unknown outcome '" + s + "'");
}

std::size_t Cohort::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i)
    if (channel_names[i] == name) return i;
  throw std::invalid_argument("cohort: unknown channel '" + name + "'");
}

const EpisodeMatrix* Cohort::find_episode(const std::string& episode_id) const {
  for (const auto& ep : episodes)
    if (ep.episode_id == episode_id) return &ep;
  return nullptr;
}

std::vector<ChannelSchema> default_schema() {
  auto make = [](const char* name, double base, double base_sd, double coupling,
                 AcuteDirection dir, double period, double noise, bool integer_valued,
                 double lo, double hi) {
    ChannelSchema c;
    c.name = name;
    c.baseline_mean = base;
    c.baseline_sd = base_sd;
    c.severity_coupling = coupling;
    c.acute_direction = dir;
    c.charting_period_mean = period;
    c.noise_sd = noise;
    c.integer_valued = integer_valued;
    c.clamp_lo = lo;
    c.clamp_hi = hi;
    return c;
  };
  return {
      make("heart_rate", 130.0, 8.0, -55.0, AcuteDirection::drop, 15.0, 2.5, false, 0.0, 250.0),
      make("mean_arterial_pressure", 68.0, 6.0, -28.0, AcuteDirection::drop, 15.0, 2.0, false, 10.0, 200.0),
      make("glasgow_coma_score", 13.0, 1.0, -9.0, AcuteDirection::drop, 60.0, 0.4, true, 3.0, 15.0),
      make("pulse_oximetry", 97.0, 1.5, -20.0, AcuteDirection::drop, 15.0, 0.8, false, 40.0, 100.0),
      make("abg_ph", 7.38, 0.02, -0.26, AcuteDirection::drop, 360.0, 0.012, false, 6.8, 7.7),
      make("vbg_ph", 7.36, 0.02, -0.24, AcuteDirection::drop, 360.0, 0.012, false, 6.8, 7.7),
      make("inotrope_score", 4.0, 0.8, 16.0, AcuteDirection::rise, 240.0, 0.35, false, 0.0, 60.0),
      make("creatinine", 0.60, 0.08, 2.6, AcuteDirection::rise, 480.0, 0.05, false, 0.1, 15.0),
  };
}

GeneratorConfig::GeneratorConfig() : schema(default_schema()) {}

void GeneratorConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("generator config: ") + what);
  };
  require(round_period_minutes > 0, "round_period_minutes must be > 0");
  require(round_jitter_minutes >= 0, "round_jitter_minutes must be >= 0");
  require(round_jitter_minutes < round_period_minutes,
          "round_jitter_minutes must be below the round period");
  require(episode_median_hours > 0, "episode_median_hours must be > 0");
  require(episode_log_sd >= 0, "episode_log_sd must be >= 0");
  require(episode_min_hours > 0 && episode_max_hours >= episode_min_hours,
          "episode hour bounds out of order");
  require(severity_init_sd >= 0, "severity_init_sd must be >= 0");
  require(patient_frailty_sd >= 0, "patient_frailty_sd must be >= 0");
  require(walk_sd_per_hour >= 0, "walk_sd_per_hour must be >= 0");
  require(mean_reversion_per_hour >= 0, "mean_reversion_per_hour must be >= 0");
  require(jump_rate_per_day >= 0, "jump_rate_per_day must be >= 0");
  require(jump_min >= 0 && jump_max >= jump_min, "jump size bounds out of order");
  require(noise_scale >= 0, "noise_scale must be >= 0");
  require(arrest_probability >= 0 && arrest_probability <= 1,
          "arrest_probability must be in [0,1]");
  double prob_sum = 0.0;
  for (double p : episodes_per_patient_probs) {
    require(p >= 0, "episodes_per_patient_probs must be nonnegative");
    prob_sum += p;
  }
  require(std::abs(prob_sum - 1.0) < 1e-9, "episodes_per_patient_probs must sum to 1");

  for (const auto& ch : schema)
    if (ch.charting_period_mean <= 0)
      throw std::invalid_argument("generator config: charting_period_mean must be > 0 for " +
                                  ch.name);
  // the eight acuity channels are always present
  static const char* required[] = {"heart_rate", "mean_arterial_pressure",
                                   "glasgow_coma_score", "pulse_oximetry",
                                   "abg_ph", "vbg_ph", "inotrope_score", "creatinine"};
  for (const char* name : required) {
    const bool found = std::any_of(schema.begin(), schema.end(),
                                   [&](const ChannelSchema& c) { return c.name == name; });
    if (!found)
      throw std::invalid_argument(std::string("generator config: schema misses acuity channel ") +
                                  name);
  }
}

GeneratorConfig load_generator_config(const std::filesystem::path& path,
                                      GeneratorConfig base) {
  using detail::parse_double;
  for (const auto& [key, value] : detail::parse_key_value_file(path)) {
    if (key == "round_period_minutes") base.round_period_minutes = parse_double(value);
    else if (key == "round_jitter_minutes") base.round_jitter_minutes = parse_double(value);
    else if (key == "episode_median_hours") base.episode_median_hours = parse_double(value);
    else if (key == "episode_log_sd") base.episode_log_sd = parse_double(value);
    else if (key == "episode_min_hours") base.episode_min_hours = parse_double(value);
    else if (key == "episode_max_hours") base.episode_max_hours = parse_double(value);
    else if (key == "severity_init_mean") base.severity_init_mean = parse_double(value);
    else if (key == "severity_init_sd") base.severity_init_sd = parse_double(value);
    else if (key == "patient_frailty_sd") base.patient_frailty_sd = parse_double(value);
    else if (key == "walk_sd_per_hour") base.walk_sd_per_hour = parse_double(value);
    else if (key == "mean_reversion_per_hour")
      base.mean_reversion_per_hour = parse_double(value);
    else if (key == "jump_rate_per_day") base.jump_rate_per_day = parse_double(value);
    else if (key == "jump_min") base.jump_min = parse_double(value);
    else if (key == "jump_max") base.jump_max = parse_double(value);
    else if (key == "noise_scale") base.noise_scale = parse_double(value);
    else if (key == "mortality_slope") base.mortality_slope = parse_double(value);
    else if (key == "mortality_intercept") base.mortality_intercept = parse_double(value);
    else if (key == "arrest_probability") base.arrest_probability = parse_double(value);
    else throw std::invalid_argument("generator config: unknown key '" + key + "' in " +
                                     path.string());
  }
  base.validate();
  return base;
}

namespace {

struct EpisodeDraw {
  EpisodeMatrix episode;
  double peak_severity = 0.0;
};

EpisodeDraw generate_episode(Rng& rng, const GeneratorConfig& cfg, double frailty) {
  EpisodeDraw out;
  const std::size_t n_channels = cfg.schema.size();

  // episode length: log-normal median, clamped to the configured bounds
  const double median_minutes = cfg.episode_median_hours * 60.0;
  double length = median_minutes * std::exp(cfg.episode_log_sd * rng.next_gaussian());
  length = std::clamp(length, cfg.episode_min_hours * 60.0, cfg.episode_max_hours * 60.0);

  const double s0 = std::clamp(
      cfg.severity_init_mean + frailty + cfg.severity_init_sd * rng.next_gaussian(), 0.02,
      0.98);

  std::vector<double> baselines(n_channels);
  for (std::size_t c = 0; c < n_channels; ++c)
    baselines[c] =
        cfg.schema[c].baseline_mean + cfg.schema[c].baseline_sd * rng.next_gaussian();

  // Poisson-injected severity jumps
  std::vector<double> jump_times;
  if (cfg.jump_rate_per_day > 0) {
    const double rate_per_minute = cfg.jump_rate_per_day / (24.0 * 60.0);
    double t = 0.0;
    while (true) {
      const double u = (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
      t += -std::log(u) / rate_per_minute;
      if (t >= length) break;
      jump_times.push_back(t);
    }
  }
  std::vector<double> jump_sizes(jump_times.size());
  for (auto& sz : jump_sizes) sz = rng.next_uniform(cfg.jump_min, cfg.jump_max);

  // latent severity on a one-minute grid
  const std::size_t minutes = static_cast<std::size_t>(std::ceil(length)) + 1;
  std::vector<double> severity(minutes);
  const double step_sd = cfg.walk_sd_per_hour / std::sqrt(60.0);
  const double reversion = cfg.mean_reversion_per_hour / 60.0;
  double s = s0;
  std::size_t next_jump = 0;
  for (std::size_t m = 0; m < minutes; ++m) {
    while (next_jump < jump_times.size() &&
           static_cast<std::size_t>(std::ceil(jump_times[next_jump])) == m) {
      s += jump_sizes[next_jump];
      ++next_jump;
    }
    s = std::clamp(s, 0.0, 1.0);
    severity[m] = s;
    out.peak_severity = std::max(out.peak_severity, s);
    s += reversion * (s0 - s);
    if (step_sd > 0) s += step_sd * rng.next_gaussian();
  }

  // charting rounds
  std::vector<double> round_times{0.0};
  {
    double t = 0.0;
    while (true) {
      double gap = cfg.round_period_minutes;
      if (cfg.round_jitter_minutes > 0)
        gap += rng.next_uniform(-cfg.round_jitter_minutes, cfg.round_jitter_minutes);
      t += std::max(1.0, gap);
      if (t > length) break;
      round_times.push_back(t);
    }
  }

  const std::size_t rows = round_times.size();
  EpisodeMatrix& ep = out.episode;
  ep.times = round_times;
  ep.values = Matrix(rows, n_channels);
  ep.charted.assign(rows * n_channels, 0);
  ep.injected_event_times = jump_times;

  for (std::size_t r = 0; r < rows; ++r) {
    const double t = round_times[r];
    const std::size_t m = std::min<std::size_t>(minutes - 1,
                                                static_cast<std::size_t>(std::llround(t)));
    const double sev = severity[m];
    std::vector<bool> chart(n_channels);
    bool any = false;
    for (std::size_t c = 0; c < n_channels; ++c) {
      const double p =
          std::min(1.0, cfg.round_period_minutes / cfg.schema[c].charting_period_mean);
      chart[c] = rng.next_double() < p;
      any = any || chart[c];
    }
    if (!any) chart[0] = true;  // no empty rows
    for (std::size_t c = 0; c < n_channels; ++c) {
      if (!chart[c]) continue;
      const auto& ch = cfg.schema[c];
      double v = baselines[c] + ch.severity_coupling * sev;
      if (ch.noise_sd > 0 && cfg.noise_scale > 0)
        v += ch.noise_sd * cfg.noise_scale * rng.next_gaussian();
      v = std::clamp(v, ch.clamp_lo, ch.clamp_hi);
      if (ch.integer_valued) v = std::round(v);
      ep.values(r, c) = v;
      ep.charted[r * n_channels + c] = 1;
    }
  }

  const double p_death =
      logistic(cfg.mortality_slope * out.peak_severity + cfg.mortality_intercept);
  ep.outcome = rng.next_double() < p_death ? Outcome::died : Outcome::survived;

  if (ep.outcome == Outcome::died && rng.next_double() < cfg.arrest_probability) {
    // terminal cardiac arrest: last row's heart rate charted as 0
    for (std::size_t c = 0; c < n_channels; ++c) {
      if (cfg.schema[c].name == "heart_rate") {
        ep.values(rows - 1, c) = 0.0;
        ep.charted[(rows - 1) * n_channels + c] = 1;
        break;
      }
    }
  }
  return out;
}

}  // namespace

Cohort generate_cohort(Rng& rng, std::size_t n_patients, const GeneratorConfig& config) {
  if (n_patients < 1) throw std::invalid_argument("generate_cohort: n_patients must be >= 1");
  config.validate();

  Cohort cohort;
  for (const auto& ch : config.schema) cohort.channel_names.push_back(ch.name);

  for (std::size_t p = 0; p < n_patients; ++p) {
    Rng patient_rng = rng.split(p + 1);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%05zu", p);
    const std::string patient_id = buf;

    const double frailty = config.patient_frailty_sd * patient_rng.next_gaussian();
    const double u = patient_rng.next_double();
    std::size_t n_episodes = 1;
    if (u >= config.episodes_per_patient_probs[0]) {
      n_episodes =
          (u < config.episodes_per_patient_probs[0] + config.episodes_per_patient_probs[1])
              ? 2
              : 3;
    }
    for (std::size_t e = 0; e < n_episodes; ++e) {
      Rng episode_rng = patient_rng.split(e + 1);
      EpisodeDraw draw = generate_episode(episode_rng, config, frailty);
      draw.episode.patient_id = patient_id;
      draw.episode.episode_id = patient_id + "_e" + std::to_string(e + 1);
      cohort.episodes.push_back(std::move(draw.episode));
    }
  }
  return cohort;
}

CohortSplit split_patients(const Cohort& cohort, Rng& rng) {
  std::vector<std::string> patients;
  for (const auto& ep : cohort.episodes)
    if (std::find(patients.begin(), patients.end(), ep.patient_id) == patients.end())
      patients.push_back(ep.patient_id);
  if (patients.size() < 5)
    throw std::invalid_argument("split_patients: need at least 5 patients, have " +
                                std::to_string(patients.size()));

  for (std::size_t i = patients.size(); i > 1; --i)
    std::swap(patients[i - 1], patients[rng.next_below(i)]);

  const std::size_t n = patients.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(0.6 * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(0.2 * static_cast<double>(n)));

  enum class Bucket { train, val, test };
  std::map<std::string, Bucket> assignment;
  for (std::size_t i = 0; i < n; ++i)
    assignment[patients[i]] =
        i < n_train ? Bucket::train : (i < n_train + n_val ? Bucket::val : Bucket::test);

  CohortSplit split;
  for (const auto& ep : cohort.episodes) {
    switch (assignment.at(ep.patient_id)) {
      case Bucket::train: split.train.push_back(ep.episode_id); break;
      case Bucket::val: split.validation.push_back(ep.episode_id); break;
      case Bucket::test: split.test.push_back(ep.episode_id); break;
    }
  }
  return split;
}

NormalizationStats compute_normalization_stats(const Cohort& cohort,
                                               std::span<const std::string> training_ids) {
  const std::size_t n_channels = cohort.channel_names.size();
  std::vector<double> sum(n_channels, 0.0);
  std::vector<std::size_t> filled_count(n_channels, 0), prefix_count(n_channels, 0);

  auto for_each_training_episode = [&](auto&& fn) {
    for (const auto& id : training_ids) {
      const EpisodeMatrix* ep = cohort.find_episode(id);
      if (!ep)
        throw std::invalid_argument("normalization stats: unknown episode " + id);
      fn(*ep);
    }
  };

  for_each_training_episode([&](const EpisodeMatrix& ep) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      bool have = false;
      double last = 0.0;
      for (std::size_t r = 0; r < ep.rows(); ++r) {
        if (ep.charted_at(r, c)) {
          last = ep.values(r, c);
          have = true;
        }
        if (have) {
          sum[c] += last;
          ++filled_count[c];
        } else {
          ++prefix_count[c];
        }
      }
    }
  });

  NormalizationStats stats;
  stats.channels.resize(n_channels);
  for (std::size_t c = 0; c < n_channels; ++c) {
    auto& ch = stats.channels[c];
    if (filled_count[c] == 0) {
      ch.never_charted = true;
      ch.mean = 0.0;
    } else {
      ch.mean = sum[c] / static_cast<double>(filled_count[c]);
    }
  }

  std::vector<double> var_num(n_channels, 0.0);
  for_each_training_episode([&](const EpisodeMatrix& ep) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      bool have = false;
      double last = 0.0;
      for (std::size_t r = 0; r < ep.rows(); ++r) {
        if (ep.charted_at(r, c)) {
          last = ep.values(r, c);
          have = true;
        }
        // prefix cells are filled with the mean and contribute zero variance
        if (have) {
          const double d = last - stats.channels[c].mean;
          var_num[c] += d * d;
        }
      }
    }
  });
  for (std::size_t c = 0; c < n_channels; ++c) {
    auto& ch = stats.channels[c];
    const std::size_t total = filled_count[c] + prefix_count[c];
    const double sd =
        total == 0 ? 0.0 : std::sqrt(var_num[c] / static_cast<double>(total));
    if (sd == 0.0) {
      ch.sd = 1.0;
      ch.sd_clamped = true;
    } else {
      ch.sd = sd;
    }
  }
  return stats;
}

EpisodeMatrix impute_and_normalize(const EpisodeMatrix& episode,
                                   const NormalizationStats& stats) {
  if (stats.channels.size() != episode.channels())
    throw std::invalid_argument("impute_and_normalize: stats cover " +
                                std::to_string(stats.channels.size()) + " channels, episode has " +
                                std::to_string(episode.channels()));
  EpisodeMatrix out = episode;
  const std::size_t n_channels = episode.channels();
  for (std::size_t c = 0; c < n_channels; ++c) {
    const auto& ch = stats.channels[c];
    bool have = false;
    double last = 0.0;
    for (std::size_t r = 0; r < episode.rows(); ++r) {
      if (episode.charted_at(r, c)) {
        last = episode.values(r, c);
        have = true;
      }
      const double filled = have ? last : ch.mean;
      out.values(r, c) = (filled - ch.mean) / ch.sd;
    }
  }
  return out;
}

// ---- serialization ----------------------------------------------------------

void save_cohort(const std::filesystem::path& path, const Cohort& cohort) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cohort: cannot write " + path.string());
  for (const auto& ep : cohort.episodes) {
    json j;
    j["format_version"] = kCohortVersion;
    j["episode_id"] = ep.episode_id;
    j["patient_id"] = ep.patient_id;
    j["outcome"] = to_string(ep.outcome);
    j["channels"] = cohort.channel_names;
    j["times"] = ep.times;
    j["values"] = std::vector<double>(ep.values.data(), ep.values.data() + ep.values.size());
    j["charted_mask"] = std::vector<bool>(ep.charted.begin(), ep.charted.end());
    j["injected_event_times"] = ep.injected_event_times;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("cohort: write failed for " + path.string());
}

Cohort load_cohort(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cohort: cannot open " + path.string());
  Cohort cohort;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("cohort: parse error at " + context + ": " + e.what());
    }
    try {
      if (j.at("format_version").get<int>() != kCohortVersion)
        throw std::runtime_error("unsupported format_version");
      EpisodeMatrix ep;
      ep.episode_id = j.at("episode_id").get<std::string>();
      ep.patient_id = j.at("patient_id").get<std::string>();
      ep.outcome = outcome_from_string(j.at("outcome").get<std::string>());
      const auto channels = j.at("channels").get<std::vector<std::string>>();
      if (cohort.channel_names.empty() && cohort.episodes.empty())
        cohort.channel_names = channels;
      else if (channels != cohort.channel_names)
        throw std::runtime_error("inconsistent channel list");
      ep.times = j.at("times").get<std::vector<double>>();
      const auto values = j.at("values").get<std::vector<double>>();
      const auto mask = j.at("charted_mask").get<std::vector<bool>>();
      ep.injected_event_times =
          j.at("injected_event_times").get<std::vector<double>>();
      const std::size_t rows = ep.times.size();
      const std::size_t cols = channels.size();
      if (rows == 0) throw std::runtime_error("episode has no rows");
      if (values.size() != rows * cols || mask.size() != rows * cols)
        throw std::runtime_error("values/mask size does not match times × channels");
      for (std::size_t r = 1; r < rows; ++r)
        if (!(ep.times[r] > ep.times[r - 1]))
          throw std::runtime_error("times not strictly increasing");
      ep.values = Matrix(rows, cols);
      std::copy(values.begin(), values.end(), ep.values.data());
      if (!ep.values.all_finite()) throw std::runtime_error("non-finite value");
      ep.charted.assign(mask.size(), 0);
      for (std::size_t i = 0; i < mask.size(); ++i) ep.charted[i] = mask[i] ? 1 : 0;
      for (std::size_t r = 0; r < rows; ++r) {
        bool any = false;
        for (std::size_t c = 0; c < cols; ++c) any = any || ep.charted_at(r, c);
        if (!any) throw std::runtime_error("row " + std::to_string(r) + " has no charted entry");
      }
      cohort.episodes.push_back(std::move(ep));
    } catch (const json::exception& e) {
      throw std::runtime_error("cohort: malformed record at " + context + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("cohort: " + context + ": " + e.what());
    }
  }
  return cohort;
}

void save_split(const std::filesystem::path& path, const CohortSplit& split) {
  json j;
  j["format_version"] = kSplitVersion;
  j["train"] = split.train;
  j["validation"] = split.validation;
  j["test"] = split.test;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("split: cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("split: write failed for " + path.string());
}

CohortSplit load_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("split: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("split: parse error in " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kSplitVersion)
      throw std::runtime_error("split: unsupported format_version in " + path.string());
    CohortSplit split;
    split.train = j.at("train").get<std::vector<std::string>>();
    split.validation = j.at("validation").get<std::vector<std::string>>();
    split.test = j.at("test").get<std::vector<std::string>>();
    return split;
  } catch (const json::exception& e) {
    throw std::runtime_error("split: malformed " + path.string() + ": " + e.what());
  }
}

}  // namespace prnn
