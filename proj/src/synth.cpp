#include "sebbs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace sebbs::synth {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t poisson(std::mt19937_64& rng, double mean) {
  const double limit = std::exp(-mean);
  std::size_t k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

std::size_t frame_count(const SynthSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.clip_duration / spec.frame_width));
}

double profile(const SynthSpec& spec, const Plant& plant, double t) {
  double value = 0.0;
  const double r = spec.ramp_width;
  if (r > 0.0) {
    const double rise = (t - (plant.onset - 0.5 * r)) / r;
    const double fall = ((plant.offset + 0.5 * r) - t) / r;
    value = plant.height * std::clamp(std::min(rise, fall), 0.0, 1.0);
  } else if (t >= plant.onset && t < plant.offset) {
    value = plant.height;
  }
  if (spec.tail_width > 0.0 && spec.tail_level > 0.0) {
    const double outside = std::max({plant.onset - t, t - plant.offset, 0.0});
    value = std::max(value, spec.tail_level * plant.height * std::clamp(1.0 - outside / spec.tail_width, 0.0, 1.0));
  }
  return value;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_clips == 0)
    throw ConfigError("n_clips must be positive");
  if (!(clip_duration > 0.0) || !(frame_width > 0.0))
    throw ConfigError("clip duration and frame width must be positive");
  const double frames = clip_duration / frame_width;
  if (std::abs(frames - std::round(frames)) > 1e-9)
    throw ConfigError("frame width must divide the clip duration");
  if (classes.empty())
    throw ConfigError("at least one class is required");
  if (event_rate.size() != 1 && event_rate.size() != classes.size())
    throw ConfigError("event_rate needs one value or one per class");
  for (double r : event_rate)
    if (!(r >= 0.0))
      throw ConfigError("event rates must be non-negative");
  if (!(min_event_len > 0.0) || !(max_event_len >= min_event_len) || max_event_len > clip_duration)
    throw ConfigError("invalid event length range");
  if (heights.empty())
    throw ConfigError("heights must be non-empty");
  for (double h : heights)
    if (!(h >= 0.0 && h <= 1.0))
      throw ConfigError("heights must lie in [0, 1]");
  if (!(ramp_width >= 0.0) || !(tail_width >= 0.0) || !(tail_level >= 0.0 && tail_level <= 1.0))
    throw ConfigError("invalid ramp or tail parameters");
  if (!(background >= 0.0 && background <= 1.0) || !(noise >= 0.0))
    throw ConfigError("invalid background or noise");
}

std::uint64_t clip_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ScoreTrack render(const SynthSpec& spec, const std::string& clip_id, const std::vector<Plant>& plants,
                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = frame_count(spec);
  ScoreTrack track;
  track.clip_id = clip_id;
  track.class_labels = spec.classes;
  track.boundaries.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    track.boundaries[i] = static_cast<double>(i) * spec.frame_width;
  track.scores.resize(n * spec.classes.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = (static_cast<double>(i) + 0.5) * spec.frame_width;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      double v = spec.background;
      for (const auto& p : plants)
        if (p.class_label == spec.classes[c])
          v = std::max(v, profile(spec, p, centre));
      if (spec.noise > 0.0)
        v += spec.noise * (2.0 * uniform01(rng) - 1.0);
      track.scores[i * spec.classes.size() + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return track;
}

Corpus generate(const SynthSpec& spec) {
  spec.validate();
  Corpus corpus;
  const std::size_t n_frames = frame_count(spec);
  const auto min_len = static_cast<std::size_t>(std::max(1LL, std::llround(spec.min_event_len / spec.frame_width)));
  const auto max_len = static_cast<std::size_t>(std::max(1LL, std::llround(spec.max_event_len / spec.frame_width)));
  for (std::size_t i = 0; i < spec.n_clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%04zu", i);
    std::mt19937_64 rng(clip_seed(spec.seed, i));
    std::vector<Plant> plants;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
      const double rate = spec.event_rate.size() == 1 ? spec.event_rate[0] : spec.event_rate[c];
      const std::size_t count = poisson(rng, rate);
      for (std::size_t e = 0; e < count; ++e) {
        bool placed = false;
        for (std::size_t attempt = 0; attempt <= spec.max_retries && !placed; ++attempt) {
          const std::size_t len = min_len + static_cast<std::size_t>(rng() % (max_len - min_len + 1));
          const std::size_t start = static_cast<std::size_t>(rng() % (n_frames - len + 1));
          const double height = spec.heights[static_cast<std::size_t>(rng() % spec.heights.size())];
          Plant p{spec.classes[c], static_cast<double>(start) * spec.frame_width,
                  static_cast<double>(start + len) * spec.frame_width, height};
          // same-class plants keep at least one ramp width apart
          const bool clash = std::any_of(plants.begin(), plants.end(), [&](const Plant& q) {
            return q.class_label == p.class_label && p.onset <= q.offset + spec.ramp_width &&
                   q.onset <= p.offset + spec.ramp_width;
          });
          if (!clash) {
            plants.push_back(p);
            placed = true;
          }
        }
        if (!placed)
          throw ConfigError("could not place non-overlapping events in clip " + std::string(name) +
                            "; lower the event rate or lengths");
      }
    }
    auto& clip = corpus.gt.clips[name];
    clip.duration = spec.clip_duration;
    for (const auto& p : plants)
      clip.events.push_back({p.class_label, p.onset, p.offset});
    std::stable_sort(clip.events.begin(), clip.events.end(),
                     [](const Event& a, const Event& b) { return a.onset < b.onset; });
    corpus.tracks.emplace(name, render(spec, name, plants, rng()));
  }
  return corpus;
}

Corpus two_peak_scenario() {
  SynthSpec spec;
  spec.n_clips = 1;
  spec.clip_duration = 10.0;
  spec.frame_width = 0.04;
  spec.classes = {"A"};
  spec.ramp_width = 0.08;
  spec.tail_width = 1.5;
  spec.tail_level = 0.7;
  const std::vector<Plant> plants{{"A", 1.5, 3.5, 0.9}, {"A", 6.5, 8.5, 0.4}};
  Corpus corpus;
  corpus.tracks.emplace("two_peak", render(spec, "two_peak", plants, 0));
  auto& clip = corpus.gt.clips["two_peak"];
  clip.duration = spec.clip_duration;
  for (const auto& p : plants)
    clip.events.push_back({p.class_label, p.onset, p.offset});
  return corpus;
}

}  // namespace sebbs::synth
