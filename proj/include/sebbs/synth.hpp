#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sebbs/core.hpp"

namespace sebbs::synth {

/// Parameters of a synthetic score corpus.
///
/// Each planted event renders as a trapezoid of its height whose linear ramps
/// are centred on the true onset and offset. An optional tail continues the
/// score outside the event at `tail_level * height`, decaying linearly to zero
/// over `tail_width` seconds. Noise is uniform in [-noise, noise], added per
/// frame and clamped to [0, 1].
struct SynthSpec {
  std::size_t n_clips = 10;
  double clip_duration = 10.0;
  double frame_width = 0.04;
  std::vector<std::string> classes{"A"};
  std::vector<double> event_rate{1.0};  // mean events per clip, per class (or one value for all)
  double min_event_len = 0.5;
  double max_event_len = 3.0;
  std::vector<double> heights{0.9, 0.4};  // drawn uniformly per event
  double ramp_width = 0.08;
  double tail_width = 0.0;
  double tail_level = 0.0;
  double background = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t max_retries = 100;

  void validate() const;
};

struct Plant {
  std::string class_label;
  double onset = 0.0;
  double offset = 0.0;
  double height = 1.0;
};

struct Corpus {
  ClipTracks tracks;
  GroundTruth gt;
};

/// Deterministic in the spec: clip i uses its own generator seeded from
/// (seed, i), so clips can be produced independently.
Corpus generate(const SynthSpec& spec);

/// Frame scores of one clip for the given plants (noise drawn from `seed`).
ScoreTrack render(const SynthSpec& spec, const std::string& clip_id, const std::vector<Plant>& plants,
                  std::uint64_t seed);

/// Seed of clip `index` derived from the corpus seed (splitmix64).
std::uint64_t clip_seed(std::uint64_t seed, std::size_t index);

/// Single 10 s clip, class "A": a 0.9-high event on [1.5, 3.5) and a 0.4-high
/// event on [6.5, 8.5), each with steep ramps and long tails at 70 % of its
/// height. No frame threshold gets both events right under 0.7 intersection
/// criteria.
Corpus two_peak_scenario();

}  // namespace sebbs::synth
