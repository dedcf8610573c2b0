#include "sebbs/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace sebbs {

std::size_t ScoreTrack::class_index(const std::string& label) const {
  auto it = std::find(class_labels.begin(), class_labels.end(), label);
  if (it == class_labels.end())
    throw ConfigError("unknown class label '" + label + "' in clip '" + clip_id + "'");
  return static_cast<std::size_t>(it - class_labels.begin());
}

std::vector<double> ScoreTrack::class_scores(const std::string& label) const {
  const std::size_t c = class_index(label);
  std::vector<double> out(num_frames());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = score(n, c);
  return out;
}

double GroundTruth::total_duration() const {
  double total = 0.0;
  for (const auto& [id, clip] : clips)
    total += clip.duration;
  return total;
}

std::vector<std::string> GroundTruth::class_labels() const {
  std::set<std::string> labels;
  for (const auto& [id, clip] : clips)
    for (const auto& e : clip.events)
      labels.insert(e.class_label);
  return {labels.begin(), labels.end()};
}

std::size_t GroundTruth::count(const std::string& label) const {
  std::size_t n = 0;
  for (const auto& [id, clip] : clips)
    n += static_cast<std::size_t>(
        std::count_if(clip.events.begin(), clip.events.end(),
                      [&](const Event& e) { return e.class_label == label; }));
  return n;
}

GroundTruth GroundTruth::subset(std::span<const std::string> clip_ids) const {
  GroundTruth out;
  for (const auto& id : clip_ids) {
    auto it = clips.find(id);
    if (it != clips.end())
      out.clips.emplace(id, it->second);
  }
  return out;
}

void validate_ground_truth(const GroundTruth& gt) {
  for (const auto& [id, clip] : gt.clips) {
    if (!(clip.duration > 0.0))
      throw DataError("clip '" + id + "' has non-positive duration");
    for (const auto& e : clip.events) {
      if (!(e.onset < e.offset))
        throw DataError("event in clip '" + id + "' has offset <= onset");
      if (e.onset < 0.0 || e.offset > clip.duration)
        throw DataError("event in clip '" + id + "' exceeds the clip duration");
    }
  }
}

void EvalConfig::validate() const {
  if (!(rho_dtc > 0.0 && rho_dtc <= 1.0) || !(rho_gtc > 0.0 && rho_gtc <= 1.0))
    throw ConfigError("rho_dtc and rho_gtc must lie in (0, 1]");
  if (!(alpha_st >= 0.0))
    throw ConfigError("alpha_st must be non-negative");
  if (!(e_max > 0.0))
    throw ConfigError("e_max must be positive");
  if (!(onset_collar >= 0.0) || !(offset_collar_floor >= 0.0) || !(offset_collar_frac >= 0.0))
    throw ConfigError("collars must be non-negative");
}

void ClassParams::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(medfilt_len >= 0.0))
    throw ConfigError("median filter length must be non-negative");
  if (!(tau > 0.0))
    throw ConfigError("tau must be positive");
  if (!(gamma.value > 0.0))
    throw ConfigError("gamma must be positive");
  if (gamma.mode == MergeMode::relative && !(gamma.value > 1.0))
    throw ConfigError("relative gamma must exceed 1");
  if (!in_unit(lambda_ext) || !in_unit(lambda_hyb) || !in_unit(lambda_nopsds) || !in_unit(lambda_f))
    throw ConfigError("thresholds must lie in [0, 1]");
}

const ClassParams& HyperParams::at(const std::string& label) const {
  auto it = classes.find(label);
  if (it == classes.end())
    throw ConfigError("no hyperparameters for class '" + label + "'");
  return it->second;
}

void HyperParams::validate() const {
  for (const auto& [label, p] : classes) {
    try {
      p.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("class '" + label + "': " + e.what());
    }
  }
}

HyperParams HyperParams::uniform(std::span<const std::string> labels, const ClassParams& params) {
  HyperParams out;
  for (const auto& l : labels)
    out.classes[l] = params;
  return out;
}

std::vector<std::string> track_violations(const ScoreTrack& track) {
  std::vector<std::string> errors;
  const std::size_t n_classes = track.class_labels.size();
  if (n_classes == 0)
    errors.emplace_back("no classes");
  {
    std::set<std::string> unique(track.class_labels.begin(), track.class_labels.end());
    if (unique.size() != n_classes)
      errors.emplace_back("duplicate class labels");
  }
  if (track.boundaries.size() < 2) {
    errors.emplace_back("fewer than one frame");
  } else {
    if (!(track.boundaries.front() >= 0.0))
      errors.emplace_back("negative start time");
    for (std::size_t i = 1; i < track.boundaries.size(); ++i) {
      if (!(track.boundaries[i] > track.boundaries[i - 1])) {
        std::ostringstream msg;
        msg << "non-increasing boundaries at index " << i;
        errors.push_back(msg.str());
        break;
      }
    }
  }
  if (track.scores.size() != track.num_frames() * n_classes) {
    errors.emplace_back("shape mismatch between scores and boundaries");
  } else {
    for (std::size_t i = 0; i < track.scores.size(); ++i) {
      const double v = track.scores[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        std::ostringstream msg;
        msg << "score out of range at frame " << i / std::max<std::size_t>(n_classes, 1) << ": " << v;
        errors.push_back(msg.str());
        break;
      }
    }
  }
  return errors;
}

ScoreTrack validate_track(ScoreTrack track) {
  auto errors = track_violations(track);
  if (!errors.empty()) {
    std::string msg = "invalid track '" + track.clip_id + "': ";
    for (std::size_t i = 0; i < errors.size(); ++i)
      msg += (i ? "; " : "") + errors[i];
    throw DataError(msg);
  }
  return track;
}

const char* to_string(MergeMode mode) {
  return mode == MergeMode::absolute ? "absolute" : "relative";
}

MergeMode merge_mode_from_string(const std::string& name) {
  if (name == "absolute" || name == "abs")
    return MergeMode::absolute;
  if (name == "relative" || name == "rel")
    return MergeMode::relative;
  throw ConfigError("unknown merge mode '" + name + "'");
}

}  // namespace sebbs
