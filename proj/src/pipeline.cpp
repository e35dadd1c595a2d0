#include "prnn/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "prnn/detail/csv.hpp"

namespace prnn {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::map<std::string, const EpisodeMatrix*> episode_index(const Cohort& cohort) {
  std::map<std::string, const EpisodeMatrix*> index;
  for (const auto& ep : cohort.episodes) index[ep.episode_id] = &ep;
  return index;
}

const EpisodeMatrix& episode_or_throw(
    const std::map<std::string, const EpisodeMatrix*>& index, const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end()) throw std::invalid_argument("unknown episode id '" + id + "'");
  return *it->second;
}

}  // namespace

GeneratedData generate_with_split(std::uint64_t seed, std::size_t n_patients,
                                  const GeneratorConfig& config) {
  Rng root(seed);
  Rng data_rng = root.split(kStreamDataGen);
  Rng split_rng = root.split(kStreamSplit);
  GeneratedData out;
  out.cohort = generate_cohort(data_rng, n_patients, config);
  out.split = split_patients(out.cohort, split_rng);
  return out;
}

std::vector<SplitSummary> summarize_splits(const Cohort& cohort, const CohortSplit& split) {
  const auto index = episode_index(cohort);
  auto summarize = [&](const std::string& name, std::span<const std::string> ids) {
    SplitSummary s;
    s.name = name;
    s.episodes = ids.size();
    std::set<std::string> patients;
    std::size_t deaths = 0;
    for (const auto& id : ids) {
      const EpisodeMatrix& ep = episode_or_throw(index, id);
      patients.insert(ep.patient_id);
      deaths += (ep.outcome == Outcome::died);
    }
    s.patients = patients.size();
    s.mortality = ids.empty() ? 0.0 : static_cast<double>(deaths) / static_cast<double>(ids.size());
    return s;
  };
  std::vector<std::string> all;
  all.insert(all.end(), split.train.begin(), split.train.end());
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  all.insert(all.end(), split.test.begin(), split.test.end());
  return {summarize("train", split.train), summarize("validation", split.validation),
          summarize("test", split.test), summarize("overall", all)};
}

std::vector<TrainingSequence> prepare_sequences(const Cohort& cohort,
                                                std::span<const std::string> ids,
                                                const NormalizationStats& stats) {
  const auto index = episode_index(cohort);
  std::vector<TrainingSequence> seqs;
  seqs.reserve(ids.size());
  for (const auto& id : ids) {
    const EpisodeMatrix& raw = episode_or_throw(index, id);
    EpisodeMatrix normalized = impute_and_normalize(raw, stats);
    TrainingSequence seq;
    seq.episode_id = id;
    seq.inputs = std::move(normalized.values);
    seq.target = raw.outcome == Outcome::survived ? 1.0 : 0.0;
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

TrainResult train_on_cohort(const Cohort& cohort, const CohortSplit& split,
                            const ModelSpec& spec, const TrainingConfig& config) {
  if (split.train.empty() || split.validation.empty())
    throw std::invalid_argument("train: train and validation splits must be nonempty");
  const NormalizationStats stats = compute_normalization_stats(cohort, split.train);
  const auto train_seqs = prepare_sequences(cohort, split.train, stats);
  const auto val_seqs = prepare_sequences(cohort, split.validation, stats);
  return train_model(train_seqs, val_seqs, cohort.channel_names, spec, config);
}

std::vector<PredictionTrajectory> predict_trajectories(const Cohort& cohort,
                                                       std::span<const std::string> ids,
                                                       const NormalizationStats& stats,
                                                       const ModelParams& model) {
  const auto index = episode_index(cohort);
  std::vector<PredictionTrajectory> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const EpisodeMatrix& raw = episode_or_throw(index, id);
    EpisodeMatrix normalized = impute_and_normalize(raw, stats);
    SequencePrediction pred = predict_sequence(model, normalized.values);
    PredictionTrajectory traj;
    traj.episode_id = id;
    traj.times = raw.times;
    traj.yhat = std::move(pred.selected);
    traj.outcome = raw.outcome;
    out.push_back(std::move(traj));
  }
  return out;
}

std::string model_label(const ModelParams& model) {
  if (model.metadata.variant == "attention") return "attention";
  return "k" + std::to_string(model.metadata.k);
}

std::uint64_t cohort_fingerprint(const Cohort& cohort, const CohortSplit& split) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& ep : cohort.episodes) {
    h = fnv1a(h, ep.episode_id);
    h = fnv1a(h, to_string(ep.outcome));
  }
  h = fnv1a(h, "|test");
  for (const auto& id : split.test) h = fnv1a(h, id);
  return h;
}

EvaluationReport evaluate_model(const Cohort& cohort, const CohortSplit& split,
                                const ModelParams& model, bool paper_thresholds) {
  if (split.test.empty()) throw std::invalid_argument("evaluate: empty test split");
  if (model.metadata.feature_names != cohort.channel_names)
    throw std::invalid_argument(
        "evaluate: checkpoint features do not match the cohort's channels");

  EvaluationReport report;
  report.model = model_label(model);
  report.paper_thresholds = paper_thresholds;
  report.fingerprint = cohort_fingerprint(cohort, split);
  report.test_episodes = split.test.size();

  // normalization from the training split only; test episodes stay raw for
  // the change-based metrics
  const NormalizationStats stats = compute_normalization_stats(cohort, split.train);
  const auto trajectories = predict_trajectories(cohort, split.test, stats, model);

  if (paper_thresholds) {
    report.thresholds = paper_threshold_table();
  } else {
    ThresholdComputation computed = compute_thresholds(cohort, split.test);
    report.thresholds = std::move(computed.table);
    report.warnings = std::move(computed.warnings);
  }

  const auto index = episode_index(cohort);
  for (const auto& def : standard_acuity_definitions()) {
    VariationSummary summary;
    summary.definition = def.label();
    const bool have_threshold =
        def.cardiac_arrest || report.thresholds.get(def).has_value();
    if (have_threshold) {
      const std::size_t channel = cohort.channel_index(def.channel);
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        const EpisodeMatrix& raw = episode_or_throw(index, split.test[i]);
        const AcuteEventSet events =
            detect_acute_events(raw, def, report.thresholds, channel);
        if (events.empty()) continue;
        summary.per_episode.push_back(variation_VE(trajectories[i], events));
      }
      summary.n_episodes = summary.per_episode.size();
      if (summary.n_episodes > 0) summary.mean = mean_variation(summary.per_episode);
    }
    report.variation.push_back(std::move(summary));
  }

  report.pipeup = first_prediction_stats(trajectories);
  report.auroc_rows = timeslice_auroc(trajectories);
  return report;
}

void write_evaluation(const std::filesystem::path& out_dir, const EvaluationReport& report) {
  std::filesystem::create_directories(out_dir);
  write_thresholds_csv(out_dir / "thresholds.csv", report.thresholds);
  write_variation_csv(out_dir / "variation.csv", report.model, report.variation);
  write_pipeup_csv(out_dir / "pipeup.csv", report.model, report.pipeup);
  write_auroc_csv(out_dir / "auroc.csv", report.model, report.auroc_rows);

  json meta;
  meta["model"] = report.model;
  meta["thresholds"] = report.paper_thresholds ? "paper" : "computed";
  meta["cohort_fingerprint"] = report.fingerprint;
  meta["test_episodes"] = report.test_episodes;
  meta["warnings"] = report.warnings;
  std::ofstream out(out_dir / "eval_meta.json");
  if (!out) throw std::runtime_error("evaluate: cannot write eval_meta.json in " +
                                     out_dir.string());
  out << meta.dump(1) << '\n';
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("compare: missing file " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

std::vector<ComparisonRow> compare_evaluations(
    const std::vector<std::filesystem::path>& eval_dirs) {
  if (eval_dirs.empty()) throw std::invalid_argument("compare: no evaluation directories");
  std::vector<ComparisonRow> rows;
  std::optional<std::uint64_t> fingerprint;
  for (const auto& dir : eval_dirs) {
    if (!std::filesystem::is_directory(dir))
      throw std::invalid_argument("compare: no such directory: " + dir.string());
    std::ifstream meta_in(dir / "eval_meta.json");
    if (!meta_in)
      throw std::invalid_argument("compare: missing eval_meta.json in " + dir.string());
    json meta;
    try {
      meta_in >> meta;
    } catch (const json::exception& e) {
      throw std::runtime_error("compare: malformed eval_meta.json in " + dir.string() +
                               ": " + e.what());
    }
    const auto fp = meta.at("cohort_fingerprint").get<std::uint64_t>();
    const auto model = meta.at("model").get<std::string>();
    if (fingerprint && *fingerprint != fp)
      throw std::invalid_argument("compare: " + dir.string() +
                                  " was evaluated on a different cohort");
    fingerprint = fp;

    for (const auto& row : read_csv(dir / "variation.csv")) {
      if (row.size() != 4 || row[0] == "definition") continue;
      rows.push_back({"v_bar_e", row[0], row[1], row[3]});
      rows.push_back({"n_p", row[0], row[1], row[2]});
    }
    for (const auto& row : read_csv(dir / "pipeup.csv")) {
      if (row.size() != 4 || row[0] == "model") continue;
      rows.push_back({"pipeup_mean", row[1], row[0], row[2]});
      rows.push_back({"pipeup_sd", row[1], row[0], row[3]});
    }
    for (const auto& row : read_csv(dir / "auroc.csv")) {
      if (row.size() != 5 || row[0] == "model") continue;
      rows.push_back({"auroc", row[1] + "hr", row[0], row[2]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.metric != b.metric) return a.metric < b.metric;
    return a.definition < b.definition;
  });
  return rows;
}

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("compare: cannot write " + path.string());
  out << "metric,definition,model,value\n";
  for (const auto& row : rows)
    out << row.metric << ',' << row.definition << ',' << row.model << ',' << row.value
        << '\n';
}

}  // namespace prnn
