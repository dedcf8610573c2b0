#include "sebbs/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "parallel.hpp"

namespace sebbs {

const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::psds1: return "psds1";
    case Metric::nopsds1: return "nopsds1";
    case Metric::collar_f1: return "cbf1";
  }
  return "?";
}

Metric metric_from_string(const std::string& name) {
  if (name == "psds1" || name == "psds") return Metric::psds1;
  if (name == "nopsds1" || name == "nopsds") return Metric::nopsds1;
  if (name == "cbf1" || name == "f1" || name == "collar_f1") return Metric::collar_f1;
  throw ConfigError("unknown metric '" + name + "'");
}

Grid Grid::defaults(Metric metric) {
  Grid g;
  for (int i = 0; i <= 10; ++i)
    g.medfilt_lengths.push_back(0.2 * i);
  g.taus = {0.32, 0.48, 0.64};
  g.gammas = {{0.15, MergeMode::absolute}, {0.2, MergeMode::absolute}, {0.3, MergeMode::absolute},
              {1.5, MergeMode::relative},  {2.0, MergeMode::relative}, {3.0, MergeMode::relative}};
  for (int i = 1; i <= 9; ++i)
    g.ext_thresholds.push_back(0.1 * i);
  for (int i = 0; i <= 20; ++i)
    g.hyb_thresholds.push_back(0.05 * i);
  g.metric = metric;
  return g;
}

void Grid::validate() const {
  if (medfilt_lengths.empty() || taus.empty() || gammas.empty() || ext_thresholds.empty() || hyb_thresholds.empty())
    throw ConfigError("grid lists must be non-empty");
  for (double v : medfilt_lengths)
    if (!(v >= 0.0))
      throw ConfigError("median filter lengths must be non-negative");
  for (double v : taus)
    if (!(v > 0.0))
      throw ConfigError("taus must be positive");
  for (const auto& g : gammas) {
    ClassParams p;
    p.gamma = g;
    p.validate();
  }
  for (double v : ext_thresholds)
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("extent thresholds must lie in [0, 1]");
  for (double v : hyb_thresholds)
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("hybrid thresholds must lie in [0, 1]");
}

std::vector<double> candidate_thresholds(std::span<const double> confidences) {
  std::vector<double> values(confidences.begin(), confidences.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out{0.0, 1.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back(values[i]);
    if (i + 1 < values.size())
      out.push_back(0.5 * (values[i] + values[i + 1]));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double tune_nopsds_threshold(std::span<const OperatingPoint> points) {
  if (points.empty())
    throw ConfigError("no operating points to tune on");
  std::size_t best_tp = 0;
  for (const auto& p : points)
    best_tp = std::max(best_tp, p.counts.tp);
  double lambda = INFINITY;
  for (const auto& p : points)
    if (p.counts.tp == best_tp)
      lambda = std::min(lambda, p.threshold);
  return lambda;
}

void Prediction::absorb(Prediction other) {
  sebbs.merge(other.sebbs);
  events.merge(other.events);
  for (auto& [label, cols] : other.columns)
    columns[label].merge(cols);
}

std::vector<std::string> labels_of(const ClipTracks& tracks, const GroundTruth& gt) {
  std::set<std::string> labels;
  for (const auto& [id, track] : tracks)
    labels.insert(track.class_labels.begin(), track.class_labels.end());
  for (const auto& l : gt.class_labels())
    labels.insert(l);
  return {labels.begin(), labels.end()};
}

Prediction predict(const ClipTracks& tracks, const HyperParams& params, Method method) {
  Prediction out;
  out.method = method;
  if (is_sebb_method(method)) {
    const auto lambda_f = thresholds_of(params, &ClassParams::lambda_f);
    for (const auto& [id, track] : tracks) {
      auto sebbs = predict_sebbs(track, params, method);
      out.events[id] = select_events(sebbs, lambda_f);
      out.sebbs[id] = std::move(sebbs);
    }
    return out;
  }
  for (const auto& [id, track] : tracks) {
    auto& events = out.events[id];
    for (const auto& label : track.class_labels) {
      const auto& p = params.at(label);
      FrameColumn column{track.boundaries, legacy_scores(track, label, params, method), p.lambda_nopsds};
      for (auto& e : threshold_merge(column.boundaries, column.values, label, p.lambda_f))
        events.push_back(std::move(e));
      out.columns[label][id] = std::move(column);
    }
  }
  return out;
}

namespace {

// Best class-wise objective of one prediction plus the threshold fitted with it.
struct ClassScore {
  double objective = 0.0;
  double threshold = 0.0;
};

ClassScore best_f1(std::span<const ClassCounts> counts, std::span<const double> thresholds) {
  ClassScore best{-1.0, thresholds.front()};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double f1 = f1_score(counts[i].tp, counts[i].fp, counts[i].fn());
    if (f1 > best.objective)
      best = {f1, thresholds[i]};
  }
  return best;
}

std::vector<double> sebb_confidences(const ClipSebbs& sebbs, const std::string& label) {
  std::vector<double> out;
  for (const auto& [id, list] : sebbs)
    for (const auto& s : list)
      if (s.class_label == label)
        out.push_back(s.confidence);
  return out;
}

std::vector<double> column_values(const ClipColumns& columns) {
  std::vector<double> out;
  for (const auto& [id, c] : columns)
    for (double v : c.values)
      if (v > c.floor)
        out.push_back(v);
  return out;
}

ClassScore sebb_objective(const ClipSebbs& sebbs, const GroundTruth& gt, const std::string& label, Metric metric,
                          const EvalConfig& config) {
  const auto thresholds = candidate_thresholds(sebb_confidences(sebbs, label));
  if (metric == Metric::collar_f1)
    return best_f1(sweep_sebbs(sebbs, gt, label, thresholds, config, Criterion::collar), thresholds);
  const auto points =
      to_operating_points(sweep_sebbs(sebbs, gt, label, thresholds, config), thresholds, gt.total_duration());
  const auto curve = metric == Metric::psds1 ? envelope_staircase(points, config.e_max)
                                             : raw_staircase(points, 0.0, config.e_max);
  return {class_auc(curve, config.e_max), 0.0};
}

ClassScore frame_objective(const ClipColumns& columns, const GroundTruth& gt, const std::string& label,
                           Metric metric, const EvalConfig& config) {
  const auto thresholds = candidate_thresholds(column_values(columns));
  if (metric == Metric::collar_f1)
    return best_f1(sweep_frames(columns, gt, label, thresholds, config, Criterion::collar), thresholds);
  const auto points =
      to_operating_points(sweep_frames(columns, gt, label, thresholds, config), thresholds, gt.total_duration());
  const double lambda = tune_nopsds_threshold(points);
  const auto curve = metric == Metric::psds1 ? envelope_staircase(points, config.e_max)
                                             : raw_staircase(points, lambda, config.e_max);
  return {class_auc(curve, config.e_max), lambda};
}

struct Candidate {
  std::string name;
  std::function<void(ClassParams&)> apply;
};

HyperParams with_candidate(HyperParams params, const Candidate& c) {
  for (auto& [label, p] : params.classes)
    c.apply(p);
  return params;
}

// Evaluates every candidate applied on top of `base` and keeps, per class, the
// first candidate with the highest objective.
HyperParams search(const ClipTracks& tracks, const GroundTruth& gt, std::span<const std::string> labels,
                   Method method, Metric metric, const HyperParams& base, const std::vector<Candidate>& candidates,
                   const GridSearchOptions& options, GridTrace* trace) {
  std::vector<std::map<std::string, ClassScore>> scores(candidates.size());
  detail::parallel_for(candidates.size(), options.threads, [&](std::size_t i) {
    const auto params = with_candidate(base, candidates[i]);
    if (is_sebb_method(method)) {
      const auto sebbs = predict_sebbs(tracks, params, method);
      for (const auto& label : labels)
        scores[i][label] = sebb_objective(sebbs, gt, label, metric, options.config);
    } else {
      for (const auto& label : labels) {
        ClipColumns columns;
        for (const auto& [id, track] : tracks)
          if (std::find(track.class_labels.begin(), track.class_labels.end(), label) != track.class_labels.end())
            columns[id] = FrameColumn{track.boundaries, legacy_scores(track, label, params, method)};
        scores[i][label] = frame_objective(columns, gt, label, metric, options.config);
      }
    }
  });

  HyperParams out = base;
  for (const auto& label : labels) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
      if (scores[i].at(label).objective > scores[best].at(label).objective)
        best = i;
    auto& p = out.classes.at(label);
    candidates[best].apply(p);
    const auto& s = scores[best].at(label);
    if (metric == Metric::collar_f1)
      p.lambda_f = std::clamp(s.threshold, 0.0, 1.0);
    else
      p.lambda_nopsds = is_sebb_method(method) ? 0.0 : std::clamp(s.threshold, 0.0, 1.0);
  }
  if (trace) {
    const std::string prefix = std::string(to_string(method)) + ":";
    for (const auto& c : candidates)
      trace->points.push_back(prefix + c.name);
    for (const auto& label : labels)
      for (const auto& s : scores)
        trace->objective[label].push_back(s.at(label).objective);
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<Candidate> medfilt_candidates(const Grid& grid) {
  std::vector<Candidate> out;
  for (double m : grid.medfilt_lengths)
    out.push_back({"medfilt=" + fmt(m), [m](ClassParams& p) { p.medfilt_len = m; }});
  return out;
}

std::vector<Candidate> tsebb_candidates(const Grid& grid) {
  std::vector<Candidate> out;
  for (double m : grid.medfilt_lengths)
    for (double l : grid.ext_thresholds)
      out.push_back({"medfilt=" + fmt(m) + ",lambda_ext=" + fmt(l), [m, l](ClassParams& p) {
                       p.medfilt_len = m;
                       p.lambda_ext = l;
                     }});
  return out;
}

std::vector<Candidate> csebb_candidates(const Grid& grid) {
  std::vector<Candidate> out;
  for (double t : grid.taus)
    for (const auto& g : grid.gammas)
      out.push_back({"tau=" + fmt(t) + ",gamma=" + fmt(g.value) + (g.mode == MergeMode::absolute ? "abs" : "rel"),
                     [t, g](ClassParams& p) {
                       p.tau = t;
                       p.gamma = g;
                     }});
  return out;
}

std::vector<Candidate> hyb_candidates(const Grid& grid) {
  std::vector<Candidate> out;
  for (double l : grid.hyb_thresholds)
    out.push_back({"lambda_hyb=" + fmt(l), [l](ClassParams& p) { p.lambda_hyb = l; }});
  return out;
}

}  // namespace

HyperParams grid_search(const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method,
                        const GridSearchOptions& options, GridTrace* trace) {
  if (tracks.empty() || gt.clips.empty())
    throw DataError("empty validation set");
  grid.validate();
  options.config.validate();
  const auto labels = labels_of(tracks, gt);
  if (trace)
    trace->labels = labels;
  const auto base = HyperParams::uniform(labels, options.base);
  const Metric metric = grid.metric;

  switch (method) {
    case Method::legacy: {
      const std::vector<Candidate> none{{"raw", [](ClassParams& p) { p.medfilt_len = 0.0; }}};
      return search(tracks, gt, labels, method, metric, base, none, options, trace);
    }
    case Method::medfilt:
      return search(tracks, gt, labels, method, metric, base, medfilt_candidates(grid), options, trace);
    case Method::tsebb:
      return search(tracks, gt, labels, method, metric, base, tsebb_candidates(grid), options, trace);
    case Method::csebb:
      return search(tracks, gt, labels, method, metric, base, csebb_candidates(grid), options, trace);
    case Method::hsebb: {
      const auto t = search(tracks, gt, labels, Method::tsebb, metric, base, tsebb_candidates(grid), options, trace);
      const auto c = search(tracks, gt, labels, Method::csebb, metric, base, csebb_candidates(grid), options, trace);
      HyperParams combined = base;
      for (const auto& label : labels) {
        auto& p = combined.classes.at(label);
        p.medfilt_len = t.at(label).medfilt_len;
        p.lambda_ext = t.at(label).lambda_ext;
        p.tau = c.at(label).tau;
        p.gamma = c.at(label).gamma;
      }
      return search(tracks, gt, labels, method, metric, combined, hyb_candidates(grid), options, trace);
    }
  }
  throw ConfigError("unsupported method");
}

MetricResult score(const Prediction& prediction, const GroundTruth& gt, std::span<const std::string> labels,
                   Metric metric, const EvalConfig& config) {
  config.validate();
  MetricResult out;
  out.metric = metric;
  if (metric == Metric::collar_f1) {
    const auto report = collar_f1(prediction.events, gt, config, labels);
    out.value = report.macro_f1;
    for (const auto& [label, entry] : report.classes)
      out.per_class[label] = entry.f1;
    return out;
  }

  ClassOperatingPoints points;
  for (const auto& label : labels) {
    if (is_sebb_method(prediction.method)) {
      const auto thresholds = candidate_thresholds(sebb_confidences(prediction.sebbs, label));
      points[label] = to_operating_points(sweep_sebbs(prediction.sebbs, gt, label, thresholds, config), thresholds,
                                          gt.total_duration());
    } else {
      ClipColumns columns;
      if (auto it = prediction.columns.find(label); it != prediction.columns.end())
        columns = it->second;
      if (metric == Metric::psds1)
        for (auto& [id, c] : columns)
          c.floor = -INFINITY;
      const auto thresholds = candidate_thresholds(column_values(columns));
      points[label] = to_operating_points(sweep_frames(columns, gt, label, thresholds, config), thresholds,
                                          gt.total_duration());
    }
  }
  std::map<std::string, double> keep_all;
  for (const auto& label : labels)
    keep_all[label] = 0.0;
  // Legacy noPSDS floors are already applied per clip in the columns.
  const auto curve = metric == Metric::psds1 ? psd_roc_envelope(points, config) : psd_roc_raw(points, keep_all, config);
  out.value = psds(curve, config);
  for (const auto& [label, s] : curve.classes)
    out.per_class[label] = class_auc(s, config.e_max);
  return out;
}

MetricResult evaluate(const ClipTracks& tracks, const GroundTruth& gt, const HyperParams& params, Method method,
                      Metric metric, const EvalConfig& config) {
  const auto labels = labels_of(tracks, gt);
  return score(predict(tracks, params, method), gt, labels, metric, config);
}

std::vector<std::vector<std::string>> FoldSplit::folds() const {
  std::vector<std::vector<std::string>> out(k);
  for (const auto& [id, f] : assignment)
    out.at(f).push_back(id);
  return out;
}

FoldSplit assign_folds(std::vector<std::string> clip_ids, std::size_t k, std::uint64_t seed) {
  if (k < 2)
    throw ConfigError("need at least 2 folds");
  std::sort(clip_ids.begin(), clip_ids.end());
  clip_ids.erase(std::unique(clip_ids.begin(), clip_ids.end()), clip_ids.end());
  if (clip_ids.size() < k)
    throw ConfigError("fewer clips (" + std::to_string(clip_ids.size()) + ") than folds (" + std::to_string(k) + ")");
  std::mt19937_64 rng(seed);
  for (std::size_t i = clip_ids.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(clip_ids[i], clip_ids[j]);
  }
  FoldSplit split;
  split.k = k;
  split.seed = seed;
  for (std::size_t i = 0; i < clip_ids.size(); ++i)
    split.assignment[clip_ids[i]] = i % k;
  return split;
}

namespace {

ClipTracks subset(const ClipTracks& tracks, std::span<const std::string> ids) {
  ClipTracks out;
  for (const auto& id : ids)
    out.emplace(id, tracks.at(id));
  return out;
}

}  // namespace

CvReport cross_validate(const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method,
                        std::size_t k, std::uint64_t seed, const GridSearchOptions& options) {
  std::vector<std::string> ids;
  for (const auto& [id, track] : tracks) {
    if (!gt.clips.count(id))
      throw DataError("clip '" + id + "' has no ground truth");
    ids.push_back(id);
  }
  const auto split = assign_folds(ids, k, seed);
  const auto folds = split.folds();
  const auto labels = labels_of(tracks, gt);

  CvReport report;
  report.method = method;
  report.metric = grid.metric;
  report.k = k;
  report.seed = seed;
  Prediction pooled;
  pooled.method = method;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::string> train_ids;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f)
        train_ids.insert(train_ids.end(), folds[g].begin(), folds[g].end());
    std::sort(train_ids.begin(), train_ids.end());

    FoldResult fold;
    fold.index = f;
    fold.clip_ids = folds[f];
    fold.params = grid_search(subset(tracks, train_ids), gt.subset(train_ids), grid, method, options);
    auto prediction = predict(subset(tracks, folds[f]), fold.params, method);
    fold.metric = score(prediction, gt.subset(folds[f]), labels, grid.metric, options.config);
    pooled.absorb(std::move(prediction));
    report.folds.push_back(std::move(fold));
  }
  report.pooled = score(pooled, gt.subset(ids), labels, grid.metric, options.config);
  return report;
}

}  // namespace sebbs
