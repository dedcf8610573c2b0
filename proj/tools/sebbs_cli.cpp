// Command-line front end: convert, eval, tune, cv, synth.
//
// Exit codes: 0 success, 1 data error, 2 configuration / usage error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "sebbs/core.hpp"
#include "sebbs/dataio.hpp"
#include "sebbs/metrics.hpp"
#include "sebbs/postproc.hpp"
#include "sebbs/synth.hpp"
#include "sebbs/tuning.hpp"

namespace fs = std::filesystem;
using namespace sebbs;

namespace {

struct Options {
  std::string scores, gt, durations, params, out, out_dir, predictions, report;
  std::string method = "csebb";
  std::vector<std::string> metrics;
  EvalConfig eval;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double threshold = 0.5;

  std::vector<double> medfilt_lengths, taus, ext_thresholds, hyb_thresholds;
  std::vector<std::string> gammas;

  synth::SynthSpec synth;
  bool two_peak = false;
};

unsigned default_threads() {
  if (const char* env = std::getenv("SEBBS_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0)
        return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void add_eval_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--rho-dtc", o.eval.rho_dtc, "Detection tolerance criterion")->capture_default_str();
  cmd->add_option("--rho-gtc", o.eval.rho_gtc, "Ground-truth intersection criterion")->capture_default_str();
  cmd->add_option("--alpha-st", o.eval.alpha_st, "Inter-class std penalty weight")->capture_default_str();
  cmd->add_option("--e-max", o.eval.e_max, "Maximum FP per hour on the PSD-ROC")->capture_default_str();
  cmd->add_option("--onset-collar", o.eval.onset_collar, "Onset collar in seconds")->capture_default_str();
  cmd->add_option("--offset-collar-floor", o.eval.offset_collar_floor, "Minimum offset collar in seconds")
      ->capture_default_str();
  cmd->add_option("--offset-collar-frac", o.eval.offset_collar_frac, "Offset collar as a fraction of event length")
      ->capture_default_str();
}

void add_grid_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--medfilt-lengths", o.medfilt_lengths, "Median filter lengths (s)")->delimiter(',');
  cmd->add_option("--taus", o.taus, "Step filter lengths (s)")->delimiter(',');
  cmd->add_option("--gammas", o.gammas, "Merge thresholds, e.g. 0.2abs,3rel")->delimiter(',');
  cmd->add_option("--ext-thresholds", o.ext_thresholds, "tSEBB extent thresholds")->delimiter(',');
  cmd->add_option("--hyb-thresholds", o.hyb_thresholds, "hSEBB selection thresholds")->delimiter(',');
}

MergeThreshold parse_gamma(const std::string& text) {
  for (const char* suffix : {"abs", "rel"}) {
    const std::string s(suffix);
    if (text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0) {
      try {
        return {std::stod(text.substr(0, text.size() - s.size())),
                s == "abs" ? MergeMode::absolute : MergeMode::relative};
      } catch (const std::exception&) {
        break;
      }
    }
  }
  throw ConfigError("malformed gamma '" + text + "' (expected e.g. 0.2abs or 3rel)");
}

Grid make_grid(const Options& o, Metric metric) {
  Grid grid = Grid::defaults(metric);
  if (!o.medfilt_lengths.empty()) grid.medfilt_lengths = o.medfilt_lengths;
  if (!o.taus.empty()) grid.taus = o.taus;
  if (!o.ext_thresholds.empty()) grid.ext_thresholds = o.ext_thresholds;
  if (!o.hyb_thresholds.empty()) grid.hyb_thresholds = o.hyb_thresholds;
  if (!o.gammas.empty()) {
    grid.gammas.clear();
    for (const auto& g : o.gammas)
      grid.gammas.push_back(parse_gamma(g));
  }
  grid.validate();
  return grid;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty())
    throw ConfigError(std::string("missing ") + what);
  if (!fs::exists(path))
    throw ConfigError(std::string(what) + " not found: " + path);
}

GroundTruth load_gt(const Options& o) {
  require_file(o.gt, "--gt");
  require_file(o.durations, "--durations");
  auto load = io::read_ground_truth(o.gt, o.durations);
  if (load.clipped)
    std::cerr << "warning: " << load.clipped << " ground-truth events clipped to clip bounds (" << load.dropped
              << " dropped)\n";
  return load.gt;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void print_result(std::ostream& os, const MetricResult& r) {
  os << to_string(r.metric) << ": " << fixed3(r.value) << '\n';
  for (const auto& [label, v] : r.per_class)
    os << "  " << label << '\t' << fixed3(v) << '\n';
}

void write_json(const nlohmann::json& doc, const std::string& path) {
  if (path.empty())
    return;
  const fs::path p(path);
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

std::vector<Metric> requested_metrics(const Options& o) {
  std::vector<Metric> out;
  if (o.metrics.empty() || (o.metrics.size() == 1 && o.metrics[0] == "all"))
    return {Metric::psds1, Metric::nopsds1, Metric::collar_f1};
  for (const auto& m : o.metrics)
    out.push_back(metric_from_string(m));
  return out;
}

Metric single_metric(const Options& o) {
  if (o.metrics.size() != 1)
    throw ConfigError("exactly one --metric is required");
  return metric_from_string(o.metrics[0]);
}

int cmd_convert(const Options& o) {
  const Method method = method_from_string(o.method);
  require_file(o.params, "--params");
  if (o.out.empty())
    throw ConfigError("missing --out");
  const auto params = io::read_params(o.params);
  if (o.scores.empty())
    throw ConfigError("missing --scores");
  const auto tracks = io::read_scores(o.scores);
  std::size_t rows = 0;
  if (is_sebb_method(method)) {
    const auto sebbs = predict_sebbs(tracks, params, method);
    for (const auto& [id, list] : sebbs)
      rows += list.size();
    io::write_sebbs(sebbs, o.out);
    std::cout << "clips: " << tracks.size() << "\nsebbs: " << rows << '\n';
  } else {
    const auto prediction = predict(tracks, params, method);
    for (const auto& [id, list] : prediction.events)
      rows += list.size();
    io::write_events(prediction.events, o.out);
    std::cout << "clips: " << tracks.size() << "\nevents: " << rows << '\n';
  }
  return 0;
}

// Prediction from a SEBB / event file or from scores + method + params.
Prediction load_prediction(const Options& o, const GroundTruth& gt, std::vector<std::string>& labels) {
  std::set<std::string> label_set;
  for (const auto& l : gt.class_labels())
    label_set.insert(l);
  Prediction prediction;
  if (!o.predictions.empty()) {
    require_file(o.predictions, "--predictions");
    HyperParams params;
    if (!o.params.empty()) {
      require_file(o.params, "--params");
      params = io::read_params(o.params);
    }
    prediction.method = Method::csebb;
    if (io::has_confidence_column(o.predictions)) {
      prediction.sebbs = io::read_sebbs(o.predictions);
    } else {
      for (auto& [id, events] : io::read_events(o.predictions))
        for (auto& e : events)
          prediction.sebbs[id].push_back({e.class_label, e.onset, e.offset, 1.0});
    }
    for (const auto& [id, list] : prediction.sebbs)
      for (const auto& s : list)
        label_set.insert(s.class_label);
    ClassThresholds lambda_f;
    for (const auto& l : label_set)
      lambda_f[l] = params.classes.count(l) ? params.classes.at(l).lambda_f : o.threshold;
    for (const auto& [id, list] : prediction.sebbs)
      prediction.events[id] = select_events(list, lambda_f);
  } else {
    const Method method = method_from_string(o.method);
    require_file(o.params, "--params");
    if (o.scores.empty())
      throw ConfigError("either --predictions or --scores is required");
    const auto params = io::read_params(o.params);
    const auto tracks = io::read_scores(o.scores);
    for (const auto& l : labels_of(tracks, gt))
      label_set.insert(l);
    prediction = predict(tracks, params, method);
  }
  labels.assign(label_set.begin(), label_set.end());
  return prediction;
}

int cmd_eval(const Options& o) {
  o.eval.validate();
  const auto metrics = requested_metrics(o);
  const auto gt = load_gt(o);
  std::vector<std::string> labels;
  const auto prediction = load_prediction(o, gt, labels);

  nlohmann::json results = nlohmann::json::array();
  for (const Metric metric : metrics) {
    const auto result = score(prediction, gt, labels, metric, o.eval);
    print_result(std::cout, result);
    results.push_back(io::to_json(result));
    if (metric != Metric::collar_f1 && !o.out_dir.empty() && is_sebb_method(prediction.method)) {
      std::map<std::string, std::vector<double>> thresholds;
      for (const auto& l : labels) {
        std::vector<double> conf;
        for (const auto& [id, list] : prediction.sebbs)
          for (const auto& s : list)
            if (s.class_label == l)
              conf.push_back(s.confidence);
        thresholds[l] = candidate_thresholds(conf);
      }
      const auto points = operating_points(prediction.sebbs, gt, o.eval, thresholds);
      std::map<std::string, double> keep_all;
      for (const auto& l : labels)
        keep_all[l] = 0.0;
      const auto curve =
          metric == Metric::psds1 ? psd_roc_envelope(points, o.eval) : psd_roc_raw(points, keep_all, o.eval);
      const fs::path dir(o.out_dir);
      io::write_roc(points, dir / (std::string("roc_") + to_string(metric) + ".tsv"));
      io::write_combined_roc(curve, o.eval, dir / (std::string("roc_") + to_string(metric) + "_combined.tsv"));
    } else if (metric != Metric::collar_f1 && !o.out_dir.empty()) {
      std::map<std::string, std::vector<double>> thresholds;
      std::map<std::string, ClipColumns> columns;
      std::map<std::string, double> floors;
      for (const auto& l : labels) {
        if (auto it = prediction.columns.find(l); it != prediction.columns.end())
          columns[l] = it->second;
        else
          columns[l] = {};
        std::vector<double> values;
        for (auto& [id, c] : columns[l]) {
          if (metric == Metric::psds1)
            c.floor = -INFINITY;
          for (double v : c.values)
            if (v > c.floor)
              values.push_back(v);
        }
        thresholds[l] = candidate_thresholds(values);
        floors[l] = 0.0;
      }
      const auto points = operating_points(columns, gt, o.eval, thresholds);
      const auto curve =
          metric == Metric::psds1 ? psd_roc_envelope(points, o.eval) : psd_roc_raw(points, floors, o.eval);
      const fs::path dir(o.out_dir);
      io::write_roc(points, dir / (std::string("roc_") + to_string(metric) + ".tsv"));
      io::write_combined_roc(curve, o.eval, dir / (std::string("roc_") + to_string(metric) + "_combined.tsv"));
    }
  }
  nlohmann::json doc{{"format", io::kFormatVersion}, {"results", results}};
  std::string report = o.report;
  if (report.empty() && !o.out_dir.empty())
    report = (fs::path(o.out_dir) / "report.json").string();
  write_json(doc, report);
  return 0;
}

int cmd_tune(const Options& o) {
  const Method method = method_from_string(o.method);
  const Grid grid = make_grid(o, single_metric(o));
  o.eval.validate();
  if (o.out.empty())
    throw ConfigError("missing --out");
  if (o.scores.empty())
    throw ConfigError("missing --scores");
  const auto gt = load_gt(o);
  const auto tracks = io::read_scores(o.scores);
  GridSearchOptions options;
  options.config = o.eval;
  options.threads = o.threads;
  const auto params = grid_search(tracks, gt, grid, method, options);
  io::write_params(params, o.out);
  const auto result = evaluate(tracks, gt, params, method, grid.metric, o.eval);
  std::cout << "validation ";
  print_result(std::cout, result);
  return 0;
}

int cmd_cv(const Options& o) {
  const Method method = method_from_string(o.method);
  const Grid grid = make_grid(o, single_metric(o));
  o.eval.validate();
  if (o.scores.empty())
    throw ConfigError("missing --scores");
  const auto gt = load_gt(o);
  const auto tracks = io::read_scores(o.scores);
  if (o.folds < 2 || o.folds > tracks.size())
    throw ConfigError("--folds must be between 2 and the number of clips (" + std::to_string(tracks.size()) + ")");
  GridSearchOptions options;
  options.config = o.eval;
  options.threads = o.threads;
  const auto report = cross_validate(tracks, gt, grid, method, o.folds, o.seed, options);
  for (const auto& f : report.folds)
    std::cout << "fold " << f.index << " (" << f.clip_ids.size() << " clips): " << to_string(f.metric.metric) << ' '
              << fixed3(f.metric.value) << '\n';
  std::cout << "pooled ";
  print_result(std::cout, report.pooled);
  write_json(io::to_json(report), o.out);
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.out_dir.empty())
    throw ConfigError("missing --out-dir");
  const auto corpus = o.two_peak ? synth::two_peak_scenario() : synth::generate(o.synth);
  const fs::path dir(o.out_dir);
  io::write_scores(corpus.tracks, dir / "scores");
  io::write_ground_truth(corpus.gt, dir / "gt.tsv", dir / "durations.tsv");
  std::size_t events = 0;
  for (const auto& [id, clip] : corpus.gt.clips)
    events += clip.events.size();
  std::cout << "clips: " << corpus.tracks.size() << "\nevents: " << events << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sound event bounding boxes: score conversion, evaluation and tuning"};
  app.require_subcommand(1);
  Options o;
  o.threads = default_threads();

  auto* convert = app.add_subcommand("convert", "Convert frame scores into SEBBs or events");
  convert->add_option("--scores", o.scores, "Directory of per-clip score TSVs");
  convert->add_option("--params", o.params, "Hyperparameter JSON");
  convert->add_option("--method", o.method, "legacy | medfilt | tsebb | csebb | hsebb")->capture_default_str();
  convert->add_option("--out", o.out, "Output TSV");

  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  eval->add_option("--predictions", o.predictions, "SEBB or event TSV");
  eval->add_option("--scores", o.scores, "Directory of per-clip score TSVs (with --method and --params)");
  eval->add_option("--params", o.params, "Hyperparameter JSON");
  eval->add_option("--method", o.method, "Conversion method when evaluating scores")->capture_default_str();
  eval->add_option("--gt", o.gt, "Ground-truth event TSV");
  eval->add_option("--durations", o.durations, "Clip duration TSV");
  eval->add_option("--metric", o.metrics, "psds1 | nopsds1 | cbf1 | all (repeatable)");
  eval->add_option("--threshold", o.threshold, "Decision threshold for F1 when no params are given")
      ->capture_default_str();
  eval->add_option("--out-dir", o.out_dir, "Directory for report.json and ROC TSVs");
  eval->add_option("--report", o.report, "JSON report path");
  add_eval_flags(eval, o);

  auto* tune = app.add_subcommand("tune", "Grid-search per-class hyperparameters");
  tune->add_option("--scores", o.scores, "Directory of per-clip score TSVs");
  tune->add_option("--gt", o.gt, "Ground-truth event TSV");
  tune->add_option("--durations", o.durations, "Clip duration TSV");
  tune->add_option("--method", o.method, "legacy | medfilt | tsebb | csebb | hsebb")->capture_default_str();
  tune->add_option("--metric", o.metrics, "psds1 | nopsds1 | cbf1")->required();
  tune->add_option("--out", o.out, "Output hyperparameter JSON");
  tune->add_option("--threads", o.threads, "Worker threads (default $SEBBS_THREADS or 1)");
  add_eval_flags(tune, o);
  add_grid_flags(tune, o);

  auto* cv = app.add_subcommand("cv", "k-fold cross-validation of tuning plus evaluation");
  cv->add_option("--scores", o.scores, "Directory of per-clip score TSVs");
  cv->add_option("--gt", o.gt, "Ground-truth event TSV");
  cv->add_option("--durations", o.durations, "Clip duration TSV");
  cv->add_option("--method", o.method, "legacy | medfilt | tsebb | csebb | hsebb")->capture_default_str();
  cv->add_option("--metric", o.metrics, "psds1 | nopsds1 | cbf1")->required();
  cv->add_option("--folds", o.folds, "Number of folds")->capture_default_str();
  cv->add_option("--seed", o.seed, "Fold assignment seed")->capture_default_str();
  cv->add_option("--out", o.out, "JSON report path");
  cv->add_option("--threads", o.threads, "Worker threads (default $SEBBS_THREADS or 1)");
  add_eval_flags(cv, o);
  add_grid_flags(cv, o);

  auto* syn = app.add_subcommand("synth", "Write a synthetic score corpus with ground truth");
  syn->add_option("--out-dir", o.out_dir, "Output directory");
  syn->add_option("--clips", o.synth.n_clips, "Number of clips")->capture_default_str();
  syn->add_option("--duration", o.synth.clip_duration, "Clip duration (s)")->capture_default_str();
  syn->add_option("--frame-width", o.synth.frame_width, "Frame width (s)")->capture_default_str();
  syn->add_option("--classes", o.synth.classes, "Class labels")->delimiter(',');
  syn->add_option("--rate", o.synth.event_rate, "Mean events per clip per class")->delimiter(',');
  syn->add_option("--min-len", o.synth.min_event_len, "Minimum event length (s)")->capture_default_str();
  syn->add_option("--max-len", o.synth.max_event_len, "Maximum event length (s)")->capture_default_str();
  syn->add_option("--heights", o.synth.heights, "Event heights")->delimiter(',');
  syn->add_option("--ramp", o.synth.ramp_width, "Ramp width (s)")->capture_default_str();
  syn->add_option("--tail-width", o.synth.tail_width, "Tail width (s)")->capture_default_str();
  syn->add_option("--tail-level", o.synth.tail_level, "Tail level relative to height")->capture_default_str();
  syn->add_option("--background", o.synth.background, "Background score")->capture_default_str();
  syn->add_option("--noise", o.synth.noise, "Uniform noise amplitude")->capture_default_str();
  syn->add_option("--seed", o.synth.seed, "Generator seed")->capture_default_str();
  syn->add_flag("--two-peak", o.two_peak, "Write the fixed two-peak scenario instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (convert->parsed()) return cmd_convert(o);
    if (eval->parsed()) return cmd_eval(o);
    if (tune->parsed()) return cmd_tune(o);
    if (cv->parsed()) return cmd_cv(o);
    if (syn->parsed()) return cmd_synth(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
