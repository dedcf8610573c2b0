#include "sebbs/postproc.hpp"

#include <algorithm>
#include <cmath>

namespace sebbs {

const char* to_string(Method method) {
  switch (method) {
    case Method::legacy: return "legacy";
    case Method::medfilt: return "medfilt";
    case Method::tsebb: return "tsebb";
    case Method::csebb: return "csebb";
    case Method::hsebb: return "hsebb";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "legacy") return Method::legacy;
  if (name == "medfilt" || name == "medfilt-legacy") return Method::medfilt;
  if (name == "tsebb") return Method::tsebb;
  if (name == "csebb") return Method::csebb;
  if (name == "hsebb") return Method::hsebb;
  throw ConfigError("unknown method '" + name + "'");
}

bool is_sebb_method(Method method) {
  return method == Method::tsebb || method == Method::csebb || method == Method::hsebb;
}

namespace {

// Index of the frame containing t, clamped to the valid frame range.
std::size_t frame_at(std::span<const double> boundaries, double t) {
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  if (it == boundaries.begin())
    return 0;
  const auto idx = static_cast<std::size_t>(it - boundaries.begin()) - 1;
  return std::min(idx, boundaries.size() - 2);
}

// Integral of (y - ref) over [a, b) for the piecewise-constant signal extended
// by its edge values outside the clip.
double offset_integral(std::span<const double> boundaries, std::span<const double> values, double ref,
                       double a, double b) {
  const double start = boundaries.front();
  const double end = boundaries.back();
  double total = 0.0;
  if (a < start) {
    total += (std::min(b, start) - a) * (values.front() - ref);
    a = start;
  }
  if (b > end) {
    total += (b - std::max(a, end)) * (values.back() - ref);
    b = end;
  }
  if (a < b) {
    for (std::size_t n = frame_at(boundaries, a); n < values.size() && boundaries[n] < b; ++n) {
      const double width = std::min(b, boundaries[n + 1]) - std::max(a, boundaries[n]);
      if (width > 0.0)
        total += width * (values[n] - ref);
    }
  }
  return total;
}

template <class Reduce>
double reduce_over(std::span<const double> boundaries, std::span<const double> values, double a, double b,
                   double init, Reduce reduce) {
  double acc = init;
  for (std::size_t n = frame_at(boundaries, a); n < values.size() && boundaries[n] < b; ++n)
    if (boundaries[n + 1] > a)
      acc = reduce(acc, values[n]);
  return acc;
}

double max_over(std::span<const double> boundaries, std::span<const double> values, double a, double b) {
  return reduce_over(boundaries, values, a, b, -INFINITY, [](double x, double y) { return std::max(x, y); });
}

double min_over(std::span<const double> boundaries, std::span<const double> values, double a, double b) {
  return reduce_over(boundaries, values, a, b, INFINITY, [](double x, double y) { return std::min(x, y); });
}

void check_column(std::span<const double> boundaries, std::span<const double> values) {
  if (values.empty() || boundaries.size() != values.size() + 1)
    throw DataError("boundaries must have one more entry than scores");
}

}  // namespace

std::size_t median_window(std::span<const double> boundaries, double length) {
  if (!(length >= 0.0))
    throw ConfigError("median filter length must be non-negative");
  if (length == 0.0 || boundaries.size() < 2)
    return 1;
  std::vector<double> widths(boundaries.size() - 1);
  for (std::size_t n = 0; n < widths.size(); ++n)
    widths[n] = boundaries[n + 1] - boundaries[n];
  std::sort(widths.begin(), widths.end());
  const std::size_t mid = widths.size() / 2;
  const double width = widths.size() % 2 ? widths[mid] : 0.5 * (widths[mid - 1] + widths[mid]);
  auto k = static_cast<std::size_t>(std::llround(length / width));
  if (k % 2 == 0)
    ++k;
  return std::max<std::size_t>(k, 1);
}

std::vector<double> median_filter(std::span<const double> boundaries, std::span<const double> values,
                                  double length) {
  check_column(boundaries, values);
  const std::size_t k = median_window(boundaries, length);
  if (k == 1)
    return {values.begin(), values.end()};
  const std::size_t half = (k - 1) / 2;
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  std::vector<double> out(values.size());
  std::vector<double> window(k);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const auto src = std::clamp<std::ptrdiff_t>(i - static_cast<std::ptrdiff_t>(half) + static_cast<std::ptrdiff_t>(j),
                                                 0, n - 1);
      window[j] = values[static_cast<std::size_t>(src)];
    }
    std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(half), window.end());
    out[static_cast<std::size_t>(i)] = window[half];
  }
  return out;
}

std::vector<double> median_filter(const ScoreTrack& track, const std::string& label, double length) {
  const auto column = track.class_scores(label);
  return median_filter(track.boundaries, column, length);
}

std::vector<Event> threshold_merge(std::span<const double> boundaries, std::span<const double> values,
                                   const std::string& label, double lambda) {
  check_column(boundaries, values);
  std::vector<Event> events;
  std::size_t n = 0;
  while (n < values.size()) {
    if (!(values[n] > lambda)) {
      ++n;
      continue;
    }
    std::size_t last = n;
    while (last + 1 < values.size() && values[last + 1] > lambda)
      ++last;
    events.push_back({label, boundaries[n], boundaries[last + 1]});
    n = last + 1;
  }
  return events;
}

std::vector<Event> frame_threshold_merge(const ScoreTrack& track, const std::string& label, double lambda) {
  const auto column = track.class_scores(label);
  return threshold_merge(track.boundaries, column, label, lambda);
}

double mean_over(std::span<const double> boundaries, std::span<const double> values, double onset,
                 double offset) {
  check_column(boundaries, values);
  if (!(offset > onset))
    throw ConfigError("empty averaging interval");
  return offset_integral(boundaries, values, 0.0, onset, offset) / (offset - onset);
}

std::vector<SEBB> tsebb(const ScoreTrack& track, const HyperParams& params) {
  std::vector<SEBB> out;
  for (const auto& label : track.class_labels) {
    const auto& p = params.at(label);
    const auto filtered = median_filter(track, label, p.medfilt_len);
    for (const auto& e : threshold_merge(track.boundaries, filtered, label, p.lambda_ext))
      out.push_back({label, e.onset, e.offset, mean_over(track.boundaries, filtered, e.onset, e.offset)});
  }
  return out;
}

std::vector<double> step_filter(std::span<const double> boundaries, std::span<const double> values, double tau) {
  check_column(boundaries, values);
  if (!(tau > 0.0))
    throw ConfigError("tau must be positive");
  const double half = 0.5 * tau;
  std::vector<double> deltas(boundaries.size());
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    const double t = boundaries[i];
    // Integrating y - ref keeps flat stretches exactly zero.
    const double ref = values[i == 0 ? 0 : i - 1];
    const double ahead = offset_integral(boundaries, values, ref, t, t + half);
    const double behind = offset_integral(boundaries, values, ref, t - half, t);
    deltas[i] = (ahead - behind) / half;
  }
  return deltas;
}

DeltaTrack delta_scores(const ScoreTrack& track, const std::string& label, double tau) {
  const auto column = track.class_scores(label);
  return {track.clip_id, label, track.boundaries, step_filter(track.boundaries, column, tau)};
}

TentativeSegmentation extract_segmentation(const DeltaTrack& deltas) {
  const auto& t = deltas.times;
  const auto& d = deltas.deltas;
  if (t.empty() || t.size() != d.size())
    throw DataError("delta track is empty or malformed");

  // Collapse plateaus to their first sample, then keep interior extrema.
  // Rounding noise on linear ramps must not split a plateau, so a run ends
  // only once a value leaves the run's first value by more than the tolerance.
  constexpr double tolerance = 1e-12;
  std::vector<std::size_t> runs;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (i == 0 || std::abs(d[i] - d[runs.back()]) > tolerance)
      runs.push_back(i);

  TentativeSegmentation seg;
  bool expect_onset = true;
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    const double prev = d[runs[r - 1]];
    const double cur = d[runs[r]];
    const double next = d[runs[r + 1]];
    if (cur > prev && cur > next) {
      seg.onsets.push_back(t[runs[r]]);
      expect_onset = false;
    } else if (cur < prev && cur < next) {
      if (expect_onset) {
        // first extremum is an offset
        seg.onsets.push_back(t.front());
        seg.implicit_onset = true;
      }
      seg.offsets.push_back(t[runs[r]]);
      expect_onset = true;
    }
  }
  if (seg.onsets.empty()) {
    seg.onsets.push_back(t.front());
    seg.implicit_onset = true;
  }
  if (seg.offsets.size() < seg.onsets.size()) {
    seg.offsets.push_back(t.back());
    seg.implicit_offset = true;
  }
  return seg;
}

bool gap_merges(double gap_min, double left_max, double right_max, MergeThreshold gamma) {
  if (gamma.mode == MergeMode::absolute)
    return left_max - gap_min < gamma.value && right_max - gap_min < gamma.value;
  return left_max < gamma.value * gap_min && right_max < gamma.value * gap_min;
}

TentativeSegmentation merge_gaps(std::span<const double> boundaries, std::span<const double> values,
                                 TentativeSegmentation seg, MergeThreshold gamma) {
  check_column(boundaries, values);
  bool merged = true;
  while (merged) {
    merged = false;
    std::size_t i = 0;
    while (i + 1 < seg.size()) {
      const double gap_min = min_over(boundaries, values, seg.offsets[i], seg.onsets[i + 1]);
      const double left_max = max_over(boundaries, values, seg.onsets[i], seg.offsets[i]);
      const double right_max = max_over(boundaries, values, seg.onsets[i + 1], seg.offsets[i + 1]);
      if (gap_merges(gap_min, left_max, right_max, gamma)) {
        seg.offsets.erase(seg.offsets.begin() + static_cast<std::ptrdiff_t>(i));
        seg.onsets.erase(seg.onsets.begin() + static_cast<std::ptrdiff_t>(i) + 1);
        merged = true;
      } else {
        ++i;
      }
    }
  }
  return seg;
}

TentativeSegmentation merge_gaps(const ScoreTrack& track, const std::string& label, TentativeSegmentation seg,
                                 MergeThreshold gamma) {
  const auto column = track.class_scores(label);
  return merge_gaps(track.boundaries, column, std::move(seg), gamma);
}

std::vector<SEBB> csebb(const ScoreTrack& track, const HyperParams& params) {
  std::vector<SEBB> out;
  for (const auto& label : track.class_labels) {
    const auto& p = params.at(label);
    const auto column = track.class_scores(label);
    DeltaTrack deltas{track.clip_id, label, track.boundaries, step_filter(track.boundaries, column, p.tau)};
    auto seg = merge_gaps(track.boundaries, column, extract_segmentation(deltas), p.gamma);
    for (std::size_t i = 0; i < seg.size(); ++i)
      out.push_back({label, seg.onsets[i], seg.offsets[i],
                     mean_over(track.boundaries, column, seg.onsets[i], seg.offsets[i])});
  }
  return out;
}

namespace {

bool overlaps(const SEBB& a, const SEBB& b) {
  return std::max(a.onset, b.onset) < std::min(a.offset, b.offset);
}

bool above(const SEBB& s, const ClassThresholds& lambda) {
  auto it = lambda.find(s.class_label);
  return it != lambda.end() && s.confidence > it->second;
}

}  // namespace

std::vector<SEBB> hsebb(std::span<const SEBB> tsebbs, std::span<const SEBB> csebbs,
                        const ClassThresholds& lambda_hyb) {
  std::vector<SEBB> out;
  for (const auto& t : tsebbs)
    if (above(t, lambda_hyb))
      out.push_back(t);
  const std::size_t n_selected = out.size();
  for (const auto& c : csebbs) {
    const bool clash = std::any_of(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_selected),
                                   [&](const SEBB& t) { return t.class_label == c.class_label && overlaps(t, c); });
    if (!clash)
      out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const SEBB& a, const SEBB& b) {
    return a.class_label != b.class_label ? a.class_label < b.class_label : a.onset < b.onset;
  });
  return out;
}

std::vector<SEBB> hsebb(const ScoreTrack& track, const HyperParams& params) {
  return hsebb(tsebb(track, params), csebb(track, params), thresholds_of(params, &ClassParams::lambda_hyb));
}

std::vector<Event> select_events(std::span<const SEBB> sebbs, const ClassThresholds& lambda) {
  std::vector<Event> out;
  for (const auto& s : sebbs)
    if (above(s, lambda))
      out.push_back({s.class_label, s.onset, s.offset});
  return out;
}

std::vector<Event> select_events(std::span<const SEBB> sebbs, double lambda) {
  std::vector<Event> out;
  for (const auto& s : sebbs)
    if (s.confidence > lambda)
      out.push_back({s.class_label, s.onset, s.offset});
  return out;
}

std::vector<SEBB> predict_sebbs(const ScoreTrack& track, const HyperParams& params, Method method) {
  switch (method) {
    case Method::tsebb: return tsebb(track, params);
    case Method::csebb: return csebb(track, params);
    case Method::hsebb: return hsebb(track, params);
    default: throw ConfigError(std::string("method '") + to_string(method) + "' does not produce SEBBs");
  }
}

ClipSebbs predict_sebbs(const ClipTracks& tracks, const HyperParams& params, Method method) {
  ClipSebbs out;
  for (const auto& [id, track] : tracks)
    out[id] = predict_sebbs(track, params, method);
  return out;
}

std::vector<double> legacy_scores(const ScoreTrack& track, const std::string& label, const HyperParams& params,
                                  Method method) {
  const double length = method == Method::medfilt ? params.at(label).medfilt_len : 0.0;
  return median_filter(track, label, length);
}

ClassThresholds thresholds_of(const HyperParams& params, double ClassParams::*field) {
  ClassThresholds out;
  for (const auto& [label, p] : params.classes)
    out[label] = p.*field;
  return out;
}

}  // namespace sebbs
