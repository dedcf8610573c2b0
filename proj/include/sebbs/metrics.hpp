#pragma once

#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sebbs/core.hpp"

namespace sebbs {

/// Absolute slack (seconds) applied to every interval comparison so that
/// ratios such as 7 / 10 >= 0.7 are not lost to rounding.
inline constexpr double kTimeTolerance = 1e-9;

struct ClassCounts {
  std::string class_label;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t n_gt = 0;

  std::size_t fn() const { return n_gt - tp; }
  bool operator==(const ClassCounts&) const = default;
};

struct OperatingPoint {
  double threshold = 0.0;
  ClassCounts counts;
  double etpr = 0.0;  // tp / n_gt (0 when the class has no ground truth)
  double efpr = 0.0;  // FP per hour of evaluated audio
};

using ClassOperatingPoints = std::map<std::string, std::vector<OperatingPoint>>;

/// Right-continuous step function on [0, e_max]: value[i] holds on
/// [knots[i], knots[i+1]), the last value up to e_max. knots[0] == 0.
struct Staircase {
  std::vector<double> knots{0.0};
  std::vector<double> values{0.0};

  double at(double e) const;
  /// Integral over [0, e_max].
  double area(double e_max) const;
};

struct PSDCurve {
  double e_max = 100.0;
  std::map<std::string, Staircase> classes;

  /// Breakpoints (e, mu(e)) of mean_c r_c(e) - alpha_st * std_c r_c(e).
  std::vector<std::pair<double, double>> combined(const EvalConfig& config) const;
};

/// Which rule decides TP/FP in a threshold sweep.
enum class Criterion { intersection, collar };

// ---------------------------------------------------------------------------
// Counting

/// Intersection-based counts for one class. Detections of other classes are
/// ignored. Throws DataError if a detection refers to a clip without ground truth.
ClassCounts intersection_counts(const ClipEvents& detections, const GroundTruth& gt, const std::string& label,
                                double rho_dtc, double rho_gtc);

/// Collar-based counts for one class using greedy onset-ordered matching.
ClassCounts collar_counts(const ClipEvents& detections, const GroundTruth& gt, const std::string& label,
                          const EvalConfig& config);

bool collar_match(const Event& detection, const Event& truth, const EvalConfig& config);

struct F1Entry {
  ClassCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Report {
  std::map<std::string, F1Entry> classes;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
};

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn);

/// Collar-based F1 over `labels` (ground-truth and detected labels when empty).
F1Report collar_f1(const ClipEvents& detections, const GroundTruth& gt, const EvalConfig& config,
                   std::span<const std::string> labels = {});

// ---------------------------------------------------------------------------
// Threshold sweeps

/// One class column of frame scores for the legacy sweep. Frames with a value
/// <= floor never switch on, which freezes the clip's detections at the floor.
struct FrameColumn {
  std::vector<double> boundaries;
  std::vector<double> values;
  double floor = -std::numeric_limits<double>::infinity();
};

using ClipColumns = std::map<std::string, FrameColumn>;

/// Counts at each threshold (descending) for SEBB selection with confidence > threshold.
std::vector<ClassCounts> sweep_sebbs(const ClipSebbs& sebbs, const GroundTruth& gt, const std::string& label,
                                     std::span<const double> thresholds, const EvalConfig& config,
                                     Criterion criterion = Criterion::intersection);

/// Counts at each threshold (descending) for frame thresholding plus merging.
std::vector<ClassCounts> sweep_frames(const ClipColumns& columns, const GroundTruth& gt, const std::string& label,
                                      std::span<const double> thresholds, const EvalConfig& config,
                                      Criterion criterion = Criterion::intersection);

std::vector<OperatingPoint> to_operating_points(std::span<const ClassCounts> counts,
                                                std::span<const double> thresholds, double total_duration);

/// Intersection-based operating points of SEBB selection, per class.
ClassOperatingPoints operating_points(const ClipSebbs& sebbs, const GroundTruth& gt, const EvalConfig& config,
                                      const std::map<std::string, std::vector<double>>& thresholds);

/// Intersection-based operating points of legacy frame thresholding on the
/// given (possibly filtered) per-class columns.
ClassOperatingPoints operating_points(const std::map<std::string, ClipColumns>& columns, const GroundTruth& gt,
                                      const EvalConfig& config,
                                      const std::map<std::string, std::vector<double>>& thresholds);

/// Raw per-class columns of a set of tracks.
std::map<std::string, ClipColumns> columns_of(const ClipTracks& tracks, std::span<const std::string> labels);

// ---------------------------------------------------------------------------
// PSD-ROC and PSDS

/// r(e) = best etpr among points with efpr <= e.
Staircase envelope_staircase(std::span<const OperatingPoint> points, double e_max);

/// Staircase through the points with threshold >= min_threshold in efpr
/// order, without best-case selection. Ties on efpr keep the lowest threshold.
Staircase raw_staircase(std::span<const OperatingPoint> points, double min_threshold, double e_max);

PSDCurve psd_roc_envelope(const ClassOperatingPoints& points, const EvalConfig& config);
PSDCurve psd_roc_raw(const ClassOperatingPoints& points, const std::map<std::string, double>& lambda_nopsds,
                     const EvalConfig& config);

/// Normalised area under max(0, mu(e)) on [0, e_max], integrated exactly.
double psds(const PSDCurve& curve, const EvalConfig& config);

/// Normalised area of a single class staircase (no std penalty).
double class_auc(const Staircase& curve, double e_max);

}  // namespace sebbs
