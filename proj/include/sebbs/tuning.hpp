#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sebbs/core.hpp"
#include "sebbs/metrics.hpp"
#include "sebbs/postproc.hpp"

namespace sebbs {

enum class Metric { psds1, nopsds1, collar_f1 };

const char* to_string(Metric metric);
Metric metric_from_string(const std::string& name);

/// Hyperparameter grid searched per class.
struct Grid {
  std::vector<double> medfilt_lengths;        // seconds
  std::vector<double> taus;                   // seconds
  std::vector<MergeThreshold> gammas;
  std::vector<double> ext_thresholds;         // tSEBB extent thresholds
  std::vector<double> hyb_thresholds;         // hSEBB tSEBB-selection thresholds
  Metric metric = Metric::psds1;

  /// Median filter {0, 0.2, ..., 2} s, tau {0.32, 0.48, 0.64} s,
  /// gamma {0.15, 0.2, 0.3 abs; 1.5, 2, 3 rel}.
  static Grid defaults(Metric metric = Metric::psds1);
  void validate() const;
};

/// Distinct values, midpoints between neighbours, and the sentinels 0 and 1,
/// sorted in descending order.
std::vector<double> candidate_thresholds(std::span<const double> confidences);

/// Smallest threshold whose TP count equals the maximum over all points.
double tune_nopsds_threshold(std::span<const OperatingPoint> points);

struct MetricResult {
  Metric metric = Metric::psds1;
  double value = 0.0;
  std::map<std::string, double> per_class;  // class AUC for PSDS types, F1 for collar_f1
};

/// Everything needed to score a prediction under any metric.
struct Prediction {
  Method method = Method::csebb;
  ClipSebbs sebbs;                              // SEBB methods
  std::map<std::string, ClipColumns> columns;   // legacy methods, floors at lambda_nopsds
  ClipEvents events;                            // decisions at lambda_f

  /// Disjoint union with predictions for other clips.
  void absorb(Prediction other);
};

Prediction predict(const ClipTracks& tracks, const HyperParams& params, Method method);

/// Scores a prediction. `labels` lists the classes entering the average.
MetricResult score(const Prediction& prediction, const GroundTruth& gt, std::span<const std::string> labels,
                   Metric metric, const EvalConfig& config);

MetricResult evaluate(const ClipTracks& tracks, const GroundTruth& gt, const HyperParams& params, Method method,
                      Metric metric, const EvalConfig& config);

/// Union of the class labels of all tracks and of the ground truth.
std::vector<std::string> labels_of(const ClipTracks& tracks, const GroundTruth& gt);

struct GridSearchOptions {
  EvalConfig config;
  unsigned threads = 1;
  ClassParams base;  // values for parameters the method does not tune
};

/// Class-wise objective of every grid point, in grid order.
struct GridTrace {
  std::vector<std::string> labels;
  std::vector<std::string> points;                       // printable grid points
  std::map<std::string, std::vector<double>> objective;  // class -> per point
};

/// Selects, per class, the grid point maximising the class-wise objective
/// (first in grid order on ties) and fits the decision thresholds the metric needs.
HyperParams grid_search(const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method,
                        const GridSearchOptions& options, GridTrace* trace = nullptr);

struct FoldSplit {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignment;

  std::vector<std::vector<std::string>> folds() const;
};

/// Seeded Fisher-Yates shuffle (mt19937_64, index = draw % (i + 1)) of the
/// sorted clip ids followed by round-robin fold assignment.
FoldSplit assign_folds(std::vector<std::string> clip_ids, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::size_t index = 0;
  std::vector<std::string> clip_ids;
  HyperParams params;
  MetricResult metric;
};

struct CvReport {
  Method method = Method::csebb;
  Metric metric = Metric::psds1;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  MetricResult pooled;
};

/// k-fold cross-validation: tune on k - 1 folds, predict the held-out fold,
/// score each fold and the pooled held-out predictions.
CvReport cross_validate(const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method,
                        std::size_t k, std::uint64_t seed, const GridSearchOptions& options);

}  // namespace sebbs
