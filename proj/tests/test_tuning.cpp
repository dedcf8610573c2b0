#include "doctest.h"

#include <algorithm>
#include <set>

#include "sebbs/synth.hpp"
#include "sebbs/tuning.hpp"

using namespace sebbs;

namespace {

synth::Corpus small_corpus(std::uint64_t seed, double noise = 0.05, std::size_t clips = 12) {
  synth::SynthSpec spec;
  spec.n_clips = clips;
  spec.classes = {"A", "B"};
  spec.event_rate = {1.0};
  spec.max_event_len = 2.0;
  spec.heights = {0.9, 0.6, 0.35};
  spec.ramp_width = 0.2;
  spec.noise = noise;
  spec.seed = seed;
  return synth::generate(spec);
}

Grid small_grid(Metric metric) {
  Grid g = Grid::defaults(metric);
  g.medfilt_lengths = {0.0, 0.2};
  g.taus = {0.32, 0.48};
  g.gammas = {{0.2, MergeMode::absolute}, {3.0, MergeMode::relative}};
  g.ext_thresholds = {0.3, 0.5};
  g.hyb_thresholds = {0.5, 1.0};
  return g;
}

OperatingPoint tp_point(double threshold, std::size_t tp) {
  OperatingPoint p;
  p.threshold = threshold;
  p.counts.tp = tp;
  return p;
}

}  // namespace

TEST_CASE("candidate thresholds") {
  CHECK(candidate_thresholds(std::vector<double>{0.2, 0.8}) == std::vector<double>{1, 0.8, 0.5, 0.2, 0});
  CHECK(candidate_thresholds(std::vector<double>{}) == std::vector<double>{1, 0});
  CHECK(candidate_thresholds(std::vector<double>{0.5, 0.5, 0.5}) == std::vector<double>{1, 0.5, 0});
  CHECK(candidate_thresholds(std::vector<double>{1.0, 0.0}) == std::vector<double>{1, 0.5, 0});
}

TEST_CASE("noPSDS threshold") {
  std::vector<OperatingPoint> pts{tp_point(0.7, 4), tp_point(0.5, 5), tp_point(0.3, 5)};
  CHECK(tune_nopsds_threshold(pts) == 0.3);
  pts = {tp_point(0.9, 2), tp_point(0.4, 2), tp_point(0.1, 2)};
  CHECK(tune_nopsds_threshold(pts) == 0.1);
  pts = {tp_point(0.6, 1)};
  CHECK(tune_nopsds_threshold(pts) == 0.6);
  // non-monotone TP: the maximum, not the last point, decides
  pts = {tp_point(0.8, 3), tp_point(0.6, 6), tp_point(0.2, 4)};
  CHECK(tune_nopsds_threshold(pts) == 0.6);
}

TEST_CASE("default grid") {
  const auto g = Grid::defaults();
  CHECK(g.medfilt_lengths.size() == 11);
  CHECK(g.medfilt_lengths.front() == 0.0);
  CHECK(g.medfilt_lengths.back() == doctest::Approx(2.0));
  CHECK(g.taus == std::vector<double>{0.32, 0.48, 0.64});
  REQUIRE(g.gammas.size() == 6);
  CHECK(g.gammas[0] == MergeThreshold{0.15, MergeMode::absolute});
  CHECK(g.gammas[5] == MergeThreshold{3.0, MergeMode::relative});
  Grid bad = g;
  bad.taus.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("fold assignment") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i)
    ids.push_back("clip" + std::to_string(i));
  const auto split = assign_folds(ids, 5, 42);
  const auto folds = split.folds();
  REQUIRE(folds.size() == 5);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 2);
    seen.insert(f.begin(), f.end());
  }
  CHECK(seen.size() == 10);

  std::vector<std::string> shuffled(ids.rbegin(), ids.rend());
  CHECK(assign_folds(shuffled, 5, 42).assignment == split.assignment);
  CHECK(assign_folds(ids, 5, 43).assignment != split.assignment);

  ids.push_back("extra");
  for (const auto& f : assign_folds(ids, 5, 1).folds())
    CHECK((f.size() == 2 || f.size() == 3));

  CHECK_THROWS_AS(assign_folds(ids, 1, 0), ConfigError);
  CHECK_THROWS_AS(assign_folds({"a", "b"}, 3, 0), ConfigError);
}

TEST_CASE("single-point grid returns that point") {
  const auto corpus = small_corpus(1);
  Grid g = small_grid(Metric::psds1);
  g.taus = {0.64};
  g.gammas = {{2.0, MergeMode::relative}};
  const auto p = grid_search(corpus.tracks, corpus.gt, g, Method::csebb, {});
  for (const auto& [label, cp] : p.classes) {
    CHECK(cp.tau == 0.64);
    CHECK(cp.gamma == MergeThreshold{2.0, MergeMode::relative});
  }
}

TEST_CASE("ties go to the first grid point") {
  // noiseless rectangles: every grid point is perfect
  synth::SynthSpec spec;
  spec.n_clips = 6;
  spec.classes = {"A"};
  spec.heights = {1.0};
  spec.ramp_width = 0.0;
  spec.seed = 4;
  const auto corpus = synth::generate(spec);
  Grid g = small_grid(Metric::psds1);
  g.taus = {0.48, 0.32};
  GridTrace trace;
  const auto p = grid_search(corpus.tracks, corpus.gt, g, Method::csebb, {}, &trace);
  for (double v : trace.objective.at("A"))
    CHECK(v == 1.0);
  CHECK(p.at("A").tau == 0.48);
  CHECK(p.at("A").gamma == g.gammas.front());
}

TEST_CASE("grid search picks the best class-wise objective") {
  const auto corpus = small_corpus(2, 0.1);
  for (const Method m : {Method::medfilt, Method::tsebb, Method::csebb}) {
    for (const Metric metric : {Metric::psds1, Metric::nopsds1, Metric::collar_f1}) {
      GridTrace trace;
      const auto p = grid_search(corpus.tracks, corpus.gt, small_grid(metric), m, {}, &trace);
      for (const auto& label : trace.labels) {
        const auto& obj = trace.objective.at(label);
        const auto best = std::max_element(obj.begin(), obj.end());
        // the returned parameters reproduce the maximum
        const auto res = evaluate(corpus.tracks, corpus.gt, p, m, metric, EvalConfig{});
        CHECK(res.per_class.at(label) == doctest::Approx(*best));
      }
    }
  }
}

TEST_CASE("hSEBB search reuses the tSEBB and cSEBB choices") {
  const auto corpus = small_corpus(3, 0.1);
  const Grid g = small_grid(Metric::psds1);
  const auto t = grid_search(corpus.tracks, corpus.gt, g, Method::tsebb, {});
  const auto c = grid_search(corpus.tracks, corpus.gt, g, Method::csebb, {});
  const auto h = grid_search(corpus.tracks, corpus.gt, g, Method::hsebb, {});
  for (const auto& [label, p] : h.classes) {
    CHECK(p.medfilt_len == t.at(label).medfilt_len);
    CHECK(p.lambda_ext == t.at(label).lambda_ext);
    CHECK(p.tau == c.at(label).tau);
    CHECK(p.gamma == c.at(label).gamma);
    CHECK(std::find(g.hyb_thresholds.begin(), g.hyb_thresholds.end(), p.lambda_hyb) != g.hyb_thresholds.end());
  }
}

TEST_CASE("tuned cSEBBs recover planted boundaries") {
  synth::SynthSpec spec;
  spec.n_clips = 10;
  spec.classes = {"A"};
  spec.min_event_len = 0.5;
  spec.max_event_len = 2.0;
  spec.heights = {0.9, 0.5};
  spec.ramp_width = 0.08;
  spec.seed = 9;
  const auto corpus = synth::generate(spec);
  const auto grid = Grid::defaults(Metric::psds1);
  const auto p = grid_search(corpus.tracks, corpus.gt, grid, Method::csebb, {});
  CHECK(std::find(grid.taus.begin(), grid.taus.end(), p.at("A").tau) != grid.taus.end());
  const auto sebbs = predict_sebbs(corpus.tracks, p, Method::csebb);
  for (const auto& [id, clip] : corpus.gt.clips) {
    for (const auto& e : clip.events) {
      const auto& list = sebbs.at(id);
      const bool found = std::any_of(list.begin(), list.end(), [&](const SEBB& s) {
        return std::abs(s.onset - e.onset) <= spec.frame_width + 1e-9 &&
               std::abs(s.offset - e.offset) <= spec.frame_width + 1e-9;
      });
      CHECK_MESSAGE(found, id << " event at " << e.onset);
    }
  }
}

TEST_CASE("tuning never does worse than the defaults on its own data") {
  const auto corpus = small_corpus(5, 0.1);
  const EvalConfig config;
  for (const Method m : {Method::medfilt, Method::tsebb, Method::csebb}) {
    const auto tuned = grid_search(corpus.tracks, corpus.gt, Grid::defaults(Metric::psds1), m, {});
    const auto labels = labels_of(corpus.tracks, corpus.gt);
    const auto defaults = HyperParams::uniform(labels, ClassParams{});
    const auto a = evaluate(corpus.tracks, corpus.gt, tuned, m, Metric::psds1, config);
    const auto b = evaluate(corpus.tracks, corpus.gt, defaults, m, Metric::psds1, config);
    for (const auto& label : labels)
      CHECK(a.per_class.at(label) >= b.per_class.at(label) - 1e-12);
  }
}

TEST_CASE("cross-validation") {
  const auto corpus = small_corpus(6, 0.1, 10);
  const Grid g = small_grid(Metric::psds1);
  GridSearchOptions opt;
  const auto r = cross_validate(corpus.tracks, corpus.gt, g, Method::csebb, 5, 7, opt);
  REQUIRE(r.folds.size() == 5);
  std::set<std::string> seen;
  for (const auto& f : r.folds) {
    CHECK(f.clip_ids.size() == 2);
    seen.insert(f.clip_ids.begin(), f.clip_ids.end());
    CHECK(f.metric.value >= 0.0);
    CHECK(f.metric.value <= 1.0);
  }
  CHECK(seen.size() == 10);

  opt.threads = 4;
  const auto again = cross_validate(corpus.tracks, corpus.gt, g, Method::csebb, 5, 7, opt);
  CHECK(again.pooled.value == r.pooled.value);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(again.folds[i].params.classes == r.folds[i].params.classes);

  CHECK_THROWS_AS(cross_validate(corpus.tracks, corpus.gt, g, Method::csebb, 11, 7, opt), ConfigError);
}

TEST_CASE("held-out clips do not influence their fold's parameters") {
  auto corpus = small_corpus(7, 0.1, 10);
  const Grid g = small_grid(Metric::psds1);
  const auto base = cross_validate(corpus.tracks, corpus.gt, g, Method::csebb, 5, 3, {});
  const auto& held = base.folds[0].clip_ids.front();
  auto& track = corpus.tracks.at(held);
  for (auto& v : track.scores)
    v = 1.0 - v;
  const auto perturbed = cross_validate(corpus.tracks, corpus.gt, g, Method::csebb, 5, 3, {});
  CHECK(perturbed.folds[0].params.classes == base.folds[0].params.classes);
}

TEST_CASE("two statistically identical halves score alike") {
  const auto corpus = small_corpus(8, 0.1, 40);
  const auto r = cross_validate(corpus.tracks, corpus.gt, small_grid(Metric::psds1), Method::csebb, 2, 1, {});
  REQUIRE(r.folds.size() == 2);
  CHECK(std::abs(r.folds[0].metric.value - r.folds[1].metric.value) < 0.15);
}

TEST_CASE("metric names") {
  for (const Metric m : {Metric::psds1, Metric::nopsds1, Metric::collar_f1})
    CHECK(metric_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(metric_from_string("psds2"), ConfigError);
}
