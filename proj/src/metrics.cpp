#include "sebbs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sebbs {

namespace {

struct Interval {
  double onset;
  double offset;
  bool operator==(const Interval&) const = default;
};

double overlap(const Interval& a, const Interval& b) {
  return std::max(0.0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
}

bool at_least(double amount, double fraction, double length) {
  return amount >= fraction * length - kTimeTolerance;
}

// Intersection-based TP/FP bookkeeping of one (clip, class) under insertions
// and removals of detections.
class IntersectionTally {
public:
  IntersectionTally(std::vector<Interval> truth, double rho_dtc, double rho_gtc)
      : truth_(std::move(truth)), covered_(truth_.size(), false), rho_dtc_(rho_dtc), rho_gtc_(rho_gtc) {}

  void add(const Interval& d) {
    if (!passes_dtc(d)) {
      ++fp_;
      return;
    }
    passing_.push_back(d);
    refresh(d);
  }

  void remove(const Interval& d) {
    if (!passes_dtc(d)) {
      --fp_;
      return;
    }
    auto it = std::find(passing_.begin(), passing_.end(), d);
    if (it != passing_.end())
      passing_.erase(it);
    refresh(d);
  }

  std::size_t tp() const { return tp_; }
  std::size_t fp() const { return fp_; }

private:
  bool passes_dtc(const Interval& d) const {
    double total = 0.0;
    for (const auto& g : truth_)
      total += overlap(d, g);
    return at_least(total, rho_dtc_, d.offset - d.onset);
  }

  bool covered(const Interval& g) const {
    std::vector<Interval> parts;
    for (const auto& d : passing_)
      if (overlap(d, g) > 0.0)
        parts.push_back({std::max(d.onset, g.onset), std::min(d.offset, g.offset)});
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
    double length = 0.0;
    double reach = -INFINITY;
    for (const auto& p : parts) {
      const double start = std::max(p.onset, reach);
      if (p.offset > start)
        length += p.offset - start;
      reach = std::max(reach, p.offset);
    }
    return at_least(length, rho_gtc_, g.offset - g.onset);
  }

  void refresh(const Interval& d) {
    for (std::size_t i = 0; i < truth_.size(); ++i) {
      if (overlap(d, truth_[i]) <= 0.0)
        continue;
      const bool now = covered(truth_[i]);
      if (now != covered_[i]) {
        covered_[i] = now;
        if (now)
          ++tp_;
        else
          --tp_;
      }
    }
  }

  std::vector<Interval> truth_;
  std::vector<bool> covered_;
  std::vector<Interval> passing_;
  double rho_dtc_;
  double rho_gtc_;
  std::size_t tp_ = 0;
  std::size_t fp_ = 0;
};

// Collar-based bookkeeping of one (clip, class). Only detections within the
// collars of some ground-truth event can ever match, so only those are kept.
class CollarTally {
public:
  CollarTally(std::vector<Interval> truth, const EvalConfig& config) : truth_(std::move(truth)), config_(config) {
    std::stable_sort(truth_.begin(), truth_.end(),
                     [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
  }

  void add(const Interval& d) {
    ++n_detections_;
    if (compatible(d)) {
      candidates_.push_back(d);
      rematch();
    }
  }

  void remove(const Interval& d) {
    --n_detections_;
    if (compatible(d)) {
      auto it = std::find(candidates_.begin(), candidates_.end(), d);
      if (it != candidates_.end())
        candidates_.erase(it);
      rematch();
    }
  }

  std::size_t tp() const { return tp_; }
  std::size_t fp() const { return n_detections_ - tp_; }

private:
  bool matches(const Interval& d, const Interval& g) const {
    return collar_match({"", d.onset, d.offset}, {"", g.onset, g.offset}, config_);
  }

  bool compatible(const Interval& d) const {
    return std::any_of(truth_.begin(), truth_.end(), [&](const Interval& g) { return matches(d, g); });
  }

  void rematch() {
    std::vector<Interval> dets = candidates_;
    std::stable_sort(dets.begin(), dets.end(), [](const Interval& a, const Interval& b) { return a.onset < b.onset; });
    std::vector<bool> used(dets.size(), false);
    tp_ = 0;
    for (const auto& g : truth_) {
      for (std::size_t j = 0; j < dets.size(); ++j) {
        if (!used[j] && matches(dets[j], g)) {
          used[j] = true;
          ++tp_;
          break;
        }
      }
    }
  }

  std::vector<Interval> truth_;
  EvalConfig config_;
  std::vector<Interval> candidates_;
  std::size_t n_detections_ = 0;
  std::size_t tp_ = 0;
};

struct Totals {
  std::size_t tp = 0;
  std::size_t fp = 0;
};

template <class Tally, class Op>
void apply(Tally& tally, Totals& totals, Op op) {
  totals.tp -= tally.tp();
  totals.fp -= tally.fp();
  op(tally);
  totals.tp += tally.tp();
  totals.fp += tally.fp();
}

// One tally per ground-truth clip, indexed in clip-id order.
template <class Tally>
struct ClipTallies {
  std::map<std::string, std::size_t> index;
  std::vector<Tally> tallies;
  std::size_t n_gt = 0;

  std::size_t at(const std::string& clip_id) const {
    auto it = index.find(clip_id);
    if (it == index.end())
      throw DataError("clip '" + clip_id + "' has no ground truth");
    return it->second;
  }
};

std::vector<Interval> truth_intervals(const ClipTruth& clip, const std::string& label) {
  std::vector<Interval> out;
  for (const auto& e : clip.events)
    if (e.class_label == label)
      out.push_back({e.onset, e.offset});
  return out;
}

template <class Tally>
ClipTallies<Tally> make_tallies(const GroundTruth& gt, const std::string& label, const EvalConfig& config) {
  ClipTallies<Tally> out;
  for (const auto& [id, clip] : gt.clips) {
    auto truth = truth_intervals(clip, label);
    out.n_gt += truth.size();
    out.index.emplace(id, out.tallies.size());
    if constexpr (std::is_same_v<Tally, IntersectionTally>)
      out.tallies.emplace_back(std::move(truth), config.rho_dtc, config.rho_gtc);
    else
      out.tallies.emplace_back(std::move(truth), config);
  }
  return out;
}

void check_descending(std::span<const double> thresholds) {
  if (thresholds.empty())
    throw ConfigError("empty threshold list");
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    if (!(thresholds[i] <= thresholds[i - 1]))
      throw ConfigError("thresholds must be sorted in descending order");
}

template <class Tally>
std::vector<ClassCounts> sweep_sebbs_impl(const ClipSebbs& sebbs, const GroundTruth& gt, const std::string& label,
                                          std::span<const double> thresholds, const EvalConfig& config) {
  check_descending(thresholds);
  auto clips = make_tallies<Tally>(gt, label, config);

  struct Item {
    double confidence;
    std::size_t clip;
    Interval extent;
  };
  std::vector<Item> items;
  for (const auto& [id, list] : sebbs) {
    const std::size_t clip = clips.at(id);
    for (const auto& s : list)
      if (s.class_label == label)
        items.push_back({s.confidence, clip, {s.onset, s.offset}});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.confidence > b.confidence; });

  std::vector<ClassCounts> out;
  out.reserve(thresholds.size());
  Totals totals;
  std::size_t next = 0;
  for (const double lambda : thresholds) {
    for (; next < items.size() && items[next].confidence > lambda; ++next) {
      const auto& item = items[next];
      apply(clips.tallies[item.clip], totals, [&](Tally& t) { t.add(item.extent); });
    }
    out.push_back({label, totals.tp, totals.fp, clips.n_gt});
  }
  return out;
}

template <class Tally>
std::vector<ClassCounts> sweep_frames_impl(const ClipColumns& columns, const GroundTruth& gt, const std::string& label,
                                           std::span<const double> thresholds, const EvalConfig& config) {
  check_descending(thresholds);
  auto clips = make_tallies<Tally>(gt, label, config);

  // Run bookkeeping per clip: run_end[start] and run_start[end] are valid for
  // the endpoints of every active run.
  struct RunState {
    const FrameColumn* column;
    std::size_t tally;
    std::vector<bool> active;
    std::vector<std::size_t> run_end;
    std::vector<std::size_t> run_start;
  };
  std::vector<RunState> states;
  struct Item {
    double value;
    std::size_t state;
    std::size_t frame;
  };
  std::vector<Item> items;
  for (const auto& [id, column] : columns) {
    if (column.values.empty() || column.boundaries.size() != column.values.size() + 1)
      throw DataError("malformed frame column for clip '" + id + "'");
    const std::size_t n = column.values.size();
    states.push_back({&column, clips.at(id), std::vector<bool>(n, false), std::vector<std::size_t>(n),
                      std::vector<std::size_t>(n)});
    for (std::size_t f = 0; f < n; ++f)
      if (column.values[f] > column.floor)
        items.push_back({column.values[f], states.size() - 1, f});
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value > b.value; });

  std::vector<ClassCounts> out;
  out.reserve(thresholds.size());
  Totals totals;
  std::size_t next = 0;
  for (const double lambda : thresholds) {
    for (; next < items.size() && items[next].value > lambda; ++next) {
      auto& st = states[items[next].state];
      const std::size_t f = items[next].frame;
      const auto& b = st.column->boundaries;
      apply(clips.tallies[st.tally], totals, [&](Tally& t) {
        std::size_t left = f;
        std::size_t right = f;
        if (f > 0 && st.active[f - 1]) {
          left = st.run_start[f - 1];
          t.remove({b[left], b[f]});
        }
        if (f + 1 < st.active.size() && st.active[f + 1]) {
          right = st.run_end[f + 1];
          t.remove({b[f + 1], b[right + 1]});
        }
        st.active[f] = true;
        st.run_end[left] = right;
        st.run_start[right] = left;
        t.add({b[left], b[right + 1]});
      });
    }
    out.push_back({label, totals.tp, totals.fp, clips.n_gt});
  }
  return out;
}

template <class Tally>
ClassCounts count_events(const ClipEvents& detections, const GroundTruth& gt, const std::string& label,
                         const EvalConfig& config) {
  auto clips = make_tallies<Tally>(gt, label, config);
  Totals totals;
  for (const auto& [id, events] : detections) {
    auto& tally = clips.tallies[clips.at(id)];
    for (const auto& e : events)
      if (e.class_label == label)
        apply(tally, totals, [&](Tally& t) { t.add({e.onset, e.offset}); });
  }
  return {label, totals.tp, totals.fp, clips.n_gt};
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

bool collar_match(const Event& detection, const Event& truth, const EvalConfig& config) {
  const double offset_collar =
      std::max(config.offset_collar_floor, config.offset_collar_frac * (truth.offset - truth.onset));
  return detection.class_label == truth.class_label &&
         std::abs(detection.onset - truth.onset) <= config.onset_collar + kTimeTolerance &&
         std::abs(detection.offset - truth.offset) <= offset_collar + kTimeTolerance;
}

ClassCounts intersection_counts(const ClipEvents& detections, const GroundTruth& gt, const std::string& label,
                                double rho_dtc, double rho_gtc) {
  EvalConfig config;
  config.rho_dtc = rho_dtc;
  config.rho_gtc = rho_gtc;
  return count_events<IntersectionTally>(detections, gt, label, config);
}

ClassCounts collar_counts(const ClipEvents& detections, const GroundTruth& gt, const std::string& label,
                          const EvalConfig& config) {
  return count_events<CollarTally>(detections, gt, label, config);
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

F1Report collar_f1(const ClipEvents& detections, const GroundTruth& gt, const EvalConfig& config,
                   std::span<const std::string> labels) {
  std::set<std::string> classes(labels.begin(), labels.end());
  if (classes.empty()) {
    for (const auto& l : gt.class_labels())
      classes.insert(l);
    for (const auto& [id, events] : detections)
      for (const auto& e : events)
        classes.insert(e.class_label);
  }
  F1Report report;
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& label : classes) {
    F1Entry entry;
    entry.counts = collar_counts(detections, gt, label, config);
    const auto& c = entry.counts;
    entry.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    entry.recall = c.n_gt ? static_cast<double>(c.tp) / static_cast<double>(c.n_gt) : 0.0;
    entry.f1 = f1_score(c.tp, c.fp, c.fn());
    tp += c.tp;
    fp += c.fp;
    fn += c.fn();
    report.macro_f1 += entry.f1;
    report.classes.emplace(label, entry);
  }
  if (!classes.empty())
    report.macro_f1 /= static_cast<double>(classes.size());
  report.micro_f1 = f1_score(tp, fp, fn);
  return report;
}

std::vector<ClassCounts> sweep_sebbs(const ClipSebbs& sebbs, const GroundTruth& gt, const std::string& label,
                                     std::span<const double> thresholds, const EvalConfig& config,
                                     Criterion criterion) {
  if (criterion == Criterion::collar)
    return sweep_sebbs_impl<CollarTally>(sebbs, gt, label, thresholds, config);
  return sweep_sebbs_impl<IntersectionTally>(sebbs, gt, label, thresholds, config);
}

std::vector<ClassCounts> sweep_frames(const ClipColumns& columns, const GroundTruth& gt, const std::string& label,
                                      std::span<const double> thresholds, const EvalConfig& config,
                                      Criterion criterion) {
  if (criterion == Criterion::collar)
    return sweep_frames_impl<CollarTally>(columns, gt, label, thresholds, config);
  return sweep_frames_impl<IntersectionTally>(columns, gt, label, thresholds, config);
}

std::vector<OperatingPoint> to_operating_points(std::span<const ClassCounts> counts,
                                                std::span<const double> thresholds, double total_duration) {
  if (counts.size() != thresholds.size())
    throw ConfigError("counts and thresholds differ in length");
  if (!(total_duration > 0.0))
    throw DataError("total evaluated duration must be positive");
  const double hours = total_duration / 3600.0;
  std::vector<OperatingPoint> out;
  out.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = counts[i];
    const double etpr = c.n_gt ? static_cast<double>(c.tp) / static_cast<double>(c.n_gt) : 0.0;
    out.push_back({thresholds[i], c, etpr, static_cast<double>(c.fp) / hours});
  }
  return out;
}

ClassOperatingPoints operating_points(const ClipSebbs& sebbs, const GroundTruth& gt, const EvalConfig& config,
                                      const std::map<std::string, std::vector<double>>& thresholds) {
  ClassOperatingPoints out;
  for (const auto& [label, list] : thresholds)
    out[label] = to_operating_points(sweep_sebbs(sebbs, gt, label, list, config), list, gt.total_duration());
  return out;
}

ClassOperatingPoints operating_points(const std::map<std::string, ClipColumns>& columns, const GroundTruth& gt,
                                      const EvalConfig& config,
                                      const std::map<std::string, std::vector<double>>& thresholds) {
  ClassOperatingPoints out;
  for (const auto& [label, list] : thresholds) {
    auto it = columns.find(label);
    if (it == columns.end())
      throw ConfigError("no score columns for class '" + label + "'");
    out[label] = to_operating_points(sweep_frames(it->second, gt, label, list, config), list, gt.total_duration());
  }
  return out;
}

std::map<std::string, ClipColumns> columns_of(const ClipTracks& tracks, std::span<const std::string> labels) {
  std::map<std::string, ClipColumns> out;
  for (const auto& label : labels)
    for (const auto& [id, track] : tracks)
      out[label][id] = FrameColumn{track.boundaries, track.class_scores(label)};
  return out;
}

double Staircase::at(double e) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), e);
  if (it == knots.begin())
    return 0.0;
  return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

double Staircase::area(double e_max) const {
  double total = 0.0;
  for (std::size_t i = 0; i < knots.size() && knots[i] < e_max; ++i) {
    const double right = i + 1 < knots.size() ? std::min(knots[i + 1], e_max) : e_max;
    total += (right - knots[i]) * values[i];
  }
  return total;
}

Staircase envelope_staircase(std::span<const OperatingPoint> points, double e_max) {
  std::vector<std::pair<double, double>> sorted;
  for (const auto& p : points)
    if (p.efpr <= e_max)
      sorted.emplace_back(p.efpr, p.etpr);
  std::sort(sorted.begin(), sorted.end());
  Staircase out;
  double best = 0.0;
  for (const auto& [e, r] : sorted) {
    if (!(r > best))
      continue;
    best = r;
    if (e <= out.knots.back()) {
      out.values.back() = best;
    } else {
      out.knots.push_back(e);
      out.values.push_back(best);
    }
  }
  return out;
}

Staircase raw_staircase(std::span<const OperatingPoint> points, double min_threshold, double e_max) {
  std::vector<const OperatingPoint*> kept;
  for (const auto& p : points)
    if (p.threshold >= min_threshold && p.efpr <= e_max)
      kept.push_back(&p);
  std::sort(kept.begin(), kept.end(), [](const OperatingPoint* a, const OperatingPoint* b) {
    return a->efpr != b->efpr ? a->efpr < b->efpr : a->threshold < b->threshold;
  });
  Staircase out;
  bool first = true;
  double last_e = -1.0;
  for (const auto* p : kept) {
    if (p->efpr == last_e)
      continue;  // keep the lowest-threshold point per efpr
    last_e = p->efpr;
    if (first && p->efpr <= 0.0) {
      out.values.front() = p->etpr;
    } else {
      out.knots.push_back(p->efpr);
      out.values.push_back(p->etpr);
    }
    first = false;
  }
  return out;
}

PSDCurve psd_roc_envelope(const ClassOperatingPoints& points, const EvalConfig& config) {
  PSDCurve curve;
  curve.e_max = config.e_max;
  for (const auto& [label, list] : points) {
    if (list.empty())
      throw ConfigError("no operating points for class '" + label + "'");
    curve.classes[label] = envelope_staircase(list, config.e_max);
  }
  return curve;
}

PSDCurve psd_roc_raw(const ClassOperatingPoints& points, const std::map<std::string, double>& lambda_nopsds,
                     const EvalConfig& config) {
  PSDCurve curve;
  curve.e_max = config.e_max;
  for (const auto& [label, list] : points) {
    auto it = lambda_nopsds.find(label);
    if (it == lambda_nopsds.end())
      throw ConfigError("no noPSDS threshold for class '" + label + "'");
    curve.classes[label] = raw_staircase(list, it->second, config.e_max);
  }
  return curve;
}

std::vector<std::pair<double, double>> PSDCurve::combined(const EvalConfig& config) const {
  std::set<double> knots;
  for (const auto& [label, s] : classes)
    for (double k : s.knots)
      if (k < e_max)
        knots.insert(k);
  std::vector<std::pair<double, double>> out;
  if (classes.empty())
    return out;
  std::vector<double> r(classes.size());
  for (double e : knots) {
    std::size_t i = 0;
    for (const auto& [label, s] : classes)
      r[i++] = s.at(e);
    const double mean = mean_of(r);
    double ss = 0.0;
    for (double x : r)
      ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(r.size());
    const double denom = config.sample_std ? n - 1.0 : n;
    const double sd = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
    out.emplace_back(e, mean - config.alpha_st * sd);
  }
  return out;
}

double psds(const PSDCurve& curve, const EvalConfig& config) {
  const auto mu = curve.combined(config);
  double area = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double right = i + 1 < mu.size() ? mu[i + 1].first : curve.e_max;
    area += (right - mu[i].first) * std::max(0.0, mu[i].second);
  }
  return area / curve.e_max;
}

double class_auc(const Staircase& curve, double e_max) { return curve.area(e_max) / e_max; }

}  // namespace sebbs
