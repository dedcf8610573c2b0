#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "sebbs/core.hpp"
#include "sebbs/metrics.hpp"
#include "sebbs/tuning.hpp"

namespace sebbs::io {

namespace fs = std::filesystem;

/// Version tag accepted (and written) as an optional first line "# format: v1".
inline constexpr const char* kFormatVersion = "v1";

/// Reads one score file: header "onset offset <class>...", one row per frame.
ScoreTrack read_score_file(const fs::path& path, const std::string& clip_id);

/// Reads every *.tsv in a directory; the file stem is the clip id. Throws
/// DataError when no files are found or class columns differ between files.
ClipTracks read_scores(const fs::path& directory);

void write_score_file(const ScoreTrack& track, const fs::path& path);
void write_scores(const ClipTracks& tracks, const fs::path& directory);

struct GroundTruthLoad {
  GroundTruth gt;
  std::size_t clipped = 0;  // events shortened to the clip duration
  std::size_t dropped = 0;  // events empty after clipping
};

/// Event list (filename, onset, offset, event_label) plus durations
/// (filename, duration). Audio extensions are stripped from filenames.
GroundTruthLoad read_ground_truth(const fs::path& events_path, const fs::path& durations_path);
void write_ground_truth(const GroundTruth& gt, const fs::path& events_path, const fs::path& durations_path);

/// Clip id of a filename column entry (".wav", ".flac", ".mp3", ".ogg" removed).
std::string clip_id_from_filename(const std::string& filename);

void write_sebbs(const ClipSebbs& sebbs, const fs::path& path);
ClipSebbs read_sebbs(const fs::path& path);
void write_events(const ClipEvents& events, const fs::path& path);
ClipEvents read_events(const fs::path& path);

/// True if the prediction file carries a confidence column.
bool has_confidence_column(const fs::path& path);

/// Columns threshold, class, efpr, etpr.
void write_roc(const ClassOperatingPoints& points, const fs::path& path);
/// Columns e, mu.
void write_combined_roc(const PSDCurve& curve, const EvalConfig& config, const fs::path& path);

nlohmann::json to_json(const HyperParams& params);
HyperParams params_from_json(const nlohmann::json& doc);
void write_params(const HyperParams& params, const fs::path& path);
HyperParams read_params(const fs::path& path);

nlohmann::json to_json(const MetricResult& result);
nlohmann::json to_json(const CvReport& report);

/// Fixed six-decimal formatting used by every writer.
std::string format_number(double value);

}  // namespace sebbs::io
