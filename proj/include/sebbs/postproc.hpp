#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sebbs/core.hpp"

namespace sebbs {

/// Conversion method from frame scores to predictions.
///
/// legacy and medfilt produce events by frame thresholding (medfilt with a
/// tuned median filter first); the others produce SEBBs.
enum class Method { legacy, medfilt, tsebb, csebb, hsebb };

const char* to_string(Method method);
Method method_from_string(const std::string& name);
bool is_sebb_method(Method method);

using ClassThresholds = std::map<std::string, double>;

// ---------------------------------------------------------------------------
// Frame-level building blocks operating on one class column. `boundaries`
// always has values.size() + 1 entries.

/// Odd median window length in frames for a filter length in seconds.
std::size_t median_window(std::span<const double> boundaries, double length);

/// Sliding median with edge-replication padding. Length 0 is the identity.
std::vector<double> median_filter(std::span<const double> boundaries, std::span<const double> values,
                                  double length);
std::vector<double> median_filter(const ScoreTrack& track, const std::string& label, double length);

/// Events from maximal runs of frames with value > lambda.
std::vector<Event> threshold_merge(std::span<const double> boundaries, std::span<const double> values,
                                   const std::string& label, double lambda);
std::vector<Event> frame_threshold_merge(const ScoreTrack& track, const std::string& label, double lambda);

/// Duration-weighted mean of the piecewise-constant signal over [onset, offset).
double mean_over(std::span<const double> boundaries, std::span<const double> values, double onset,
                 double offset);

// ---------------------------------------------------------------------------
// Threshold-based SEBBs

std::vector<SEBB> tsebb(const ScoreTrack& track, const HyperParams& params);

// ---------------------------------------------------------------------------
// Change-detection-based SEBBs

/// Step-filter response sampled at every frame boundary.
struct DeltaTrack {
  std::string clip_id;
  std::string class_label;
  std::vector<double> times;
  std::vector<double> deltas;
};

/// Mean over [t, t + tau/2) minus mean over [t - tau/2, t) at each boundary t,
/// with the signal extended by edge replication beyond the clip.
std::vector<double> step_filter(std::span<const double> boundaries, std::span<const double> values, double tau);
DeltaTrack delta_scores(const ScoreTrack& track, const std::string& label, double tau);

/// Alternating tentative onsets and offsets; onsets[i] < offsets[i] < onsets[i+1].
struct TentativeSegmentation {
  std::vector<double> onsets;
  std::vector<double> offsets;
  bool implicit_onset = false;   // onsets.front() is the clip start
  bool implicit_offset = false;  // offsets.back() is the clip end

  std::size_t size() const { return onsets.size(); }
  bool operator==(const TentativeSegmentation&) const = default;
};

/// Delta values within 1e-12 of a plateau's first value belong to the plateau.
TentativeSegmentation extract_segmentation(const DeltaTrack& deltas);

/// Removes tentative gaps whose minimum score is close to the maxima of both
/// neighbouring tentative events, scanning left to right until no gap merges.
TentativeSegmentation merge_gaps(std::span<const double> boundaries, std::span<const double> values,
                                 TentativeSegmentation seg, MergeThreshold gamma);
TentativeSegmentation merge_gaps(const ScoreTrack& track, const std::string& label, TentativeSegmentation seg,
                                 MergeThreshold gamma);

/// True if a gap with minimum `gap_min` between events with maxima
/// `left_max` and `right_max` is merged under `gamma`.
bool gap_merges(double gap_min, double left_max, double right_max, MergeThreshold gamma);

std::vector<SEBB> csebb(const ScoreTrack& track, const HyperParams& params);

// ---------------------------------------------------------------------------
// Hybrid SEBBs and selection

/// Selected tSEBBs (confidence > lambda_hyb) plus every cSEBB that does not
/// overlap a selected tSEBB of its class.
std::vector<SEBB> hsebb(std::span<const SEBB> tsebbs, std::span<const SEBB> csebbs, const ClassThresholds& lambda_hyb);
std::vector<SEBB> hsebb(const ScoreTrack& track, const HyperParams& params);

/// Events of SEBBs with confidence > lambda of their class. Classes missing
/// from the map select nothing.
std::vector<Event> select_events(std::span<const SEBB> sebbs, const ClassThresholds& lambda);
std::vector<Event> select_events(std::span<const SEBB> sebbs, double lambda);

/// SEBBs of one clip for a SEBB method.
std::vector<SEBB> predict_sebbs(const ScoreTrack& track, const HyperParams& params, Method method);
ClipSebbs predict_sebbs(const ClipTracks& tracks, const HyperParams& params, Method method);

/// Per-class median-filtered column used by the legacy methods (unfiltered
/// for Method::legacy).
std::vector<double> legacy_scores(const ScoreTrack& track, const std::string& label, const HyperParams& params,
                                  Method method);

ClassThresholds thresholds_of(const HyperParams& params, double ClassParams::*field);

}  // namespace sebbs
