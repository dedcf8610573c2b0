#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sebbs {

/// Malformed or inconsistent input data (bad files, invalid tracks).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Frame-level class confidences of one clip.
///
/// Frame n covers [boundaries[n], boundaries[n+1]) and carries one score per
/// class. Frames may have different widths. Scores are stored row-major
/// (frame-major), i.e. scores[n * num_classes() + c].
struct ScoreTrack {
  std::string clip_id;
  std::vector<std::string> class_labels;
  std::vector<double> boundaries;
  std::vector<double> scores;

  std::size_t num_frames() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  std::size_t num_classes() const { return class_labels.size(); }

  double score(std::size_t frame, std::size_t cls) const { return scores[frame * num_classes() + cls]; }
  double frame_width(std::size_t frame) const { return boundaries[frame + 1] - boundaries[frame]; }
  double start() const { return boundaries.front(); }
  double end() const { return boundaries.back(); }

  /// Index of a class label; throws ConfigError for unknown labels.
  std::size_t class_index(const std::string& label) const;
  /// Copy of one class column.
  std::vector<double> class_scores(const std::string& label) const;
};

/// Sound event bounding box: an event candidate with a fixed extent and a
/// single presence confidence.
struct SEBB {
  std::string class_label;
  double onset = 0.0;
  double offset = 0.0;
  double confidence = 0.0;

  bool operator==(const SEBB&) const = default;
};

struct Event {
  std::string class_label;
  double onset = 0.0;
  double offset = 0.0;

  bool operator==(const Event&) const = default;
};

using ClipSebbs = std::map<std::string, std::vector<SEBB>>;
using ClipEvents = std::map<std::string, std::vector<Event>>;
using ClipTracks = std::map<std::string, ScoreTrack>;

struct ClipTruth {
  double duration = 0.0;
  std::vector<Event> events;
};

struct GroundTruth {
  std::map<std::string, ClipTruth> clips;

  /// Sum of clip durations in seconds.
  double total_duration() const;
  /// Sorted set of labels appearing in any event.
  std::vector<std::string> class_labels() const;
  std::size_t count(const std::string& label) const;
  /// Restriction to the given clips (clips absent here are ignored).
  GroundTruth subset(std::span<const std::string> clip_ids) const;
};

/// Throws DataError if an event lies outside its clip or a duration is not positive.
void validate_ground_truth(const GroundTruth& gt);

/// Evaluation constants. Defaults are the PSDS1 / collar-F1 settings.
struct EvalConfig {
  double rho_dtc = 0.7;
  double rho_gtc = 0.7;
  double alpha_st = 1.0;
  double e_max = 100.0;  // FP per hour
  double onset_collar = 0.2;
  double offset_collar_floor = 0.2;
  double offset_collar_frac = 0.2;
  bool sample_std = false;  // population std unless set

  void validate() const;
};

enum class MergeMode { absolute, relative };

struct MergeThreshold {
  double value = 3.0;
  MergeMode mode = MergeMode::relative;

  bool operator==(const MergeThreshold&) const = default;
};

/// Per-class post-processing parameters and decision thresholds.
struct ClassParams {
  double medfilt_len = 0.0;     // seconds, 0 = no filter
  double lambda_ext = 0.5;      // frame threshold defining tSEBB extents
  double tau = 0.48;            // step filter length, seconds
  MergeThreshold gamma;         // gap merge threshold
  double lambda_hyb = 0.5;      // tSEBB selection threshold in hSEBBs
  double lambda_nopsds = 0.0;   // lowest threshold kept on the raw ROC
  double lambda_f = 0.5;        // decision threshold for collar F1

  bool operator==(const ClassParams&) const = default;
  void validate() const;
};

struct HyperParams {
  std::map<std::string, ClassParams> classes;

  /// Parameters of a class; throws ConfigError if absent.
  const ClassParams& at(const std::string& label) const;
  void validate() const;
  /// Same parameters for every label.
  static HyperParams uniform(std::span<const std::string> labels, const ClassParams& params);
};

/// Every violated invariant of a track, empty when the track is valid.
std::vector<std::string> track_violations(const ScoreTrack& track);

/// Returns the track unchanged if valid; otherwise throws DataError listing
/// all violations.
ScoreTrack validate_track(ScoreTrack track);

const char* to_string(MergeMode mode);
MergeMode merge_mode_from_string(const std::string& name);

}  // namespace sebbs
