#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "sebbs/metrics.hpp"
#include "sebbs/postproc.hpp"

using namespace sebbs;

namespace {

GroundTruth one_clip(double duration, std::vector<Event> events) {
  GroundTruth gt;
  gt.clips["c"] = {duration, std::move(events)};
  return gt;
}

OperatingPoint point(double threshold, double efpr, double etpr) {
  OperatingPoint p;
  p.threshold = threshold;
  p.efpr = efpr;
  p.etpr = etpr;
  return p;
}

Staircase constant(double v) {
  Staircase s;
  s.values = {v};
  return s;
}

}  // namespace

TEST_CASE("intersection counts") {
  const auto gt = one_clip(20, {{"A", 0, 10}});
  auto c = intersection_counts({{"c", {{"A", 1, 8}}}}, gt, "A", 0.7, 0.7);
  CHECK(c.tp == 1);
  CHECK(c.fp == 0);
  CHECK(c.n_gt == 1);

  c = intersection_counts({{"c", {{"A", 0, 20}}}}, gt, "A", 0.7, 0.7);
  CHECK(c.tp == 0);
  CHECK(c.fp == 1);
  CHECK(c.fn() == 1);

  c = intersection_counts({}, gt, "A", 0.7, 0.7);
  CHECK(c.tp == 0);
  CHECK(c.fp == 0);
  CHECK(c.fn() == 1);

  // other classes are ignored
  c = intersection_counts({{"c", {{"B", 0, 10}}}}, gt, "A", 0.7, 0.7);
  CHECK(c.fp == 0);

  CHECK_THROWS_AS(intersection_counts({{"nope", {{"A", 0, 1}}}}, gt, "A", 0.7, 0.7), DataError);
}

TEST_CASE("DTC sums intersections, GTC takes the union") {
  // detection spans two GT events: 2 + 2 of its 5 s intersect
  const auto gt = one_clip(20, {{"A", 0, 2}, {"A", 3, 5}});
  auto c = intersection_counts({{"c", {{"A", 0, 5}}}}, gt, "A", 0.7, 0.7);
  CHECK(c.fp == 0);
  CHECK(c.tp == 2);

  // two overlapping detections covering the same part of a GT event
  const auto gt2 = one_clip(20, {{"A", 0, 10}});
  c = intersection_counts({{"c", {{"A", 0, 4}, {"A", 2, 6}}}}, gt2, "A", 0.7, 0.7);
  CHECK(c.tp == 0);  // union 6 s < 7 s
  c = intersection_counts({{"c", {{"A", 0, 4}, {"A", 2, 7}}}}, gt2, "A", 0.7, 0.7);
  CHECK(c.tp == 1);
}

TEST_CASE("intersection counts match the brute-force oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto gts = oracle::random_intervals(rng, 6, 10.0, 0.1);
    const auto dets = oracle::random_overlapping(rng, 6, 10.0, 0.1);
    GroundTruth gt;
    gt.clips["c"].duration = 10.0;
    for (const auto& [a, b] : gts)
      gt.clips["c"].events.push_back({"A", a, b});
    ClipEvents d;
    for (const auto& [a, b] : dets)
      d["c"].push_back({"A", a, b});
    const auto got = intersection_counts(d, gt, "A", 0.7, 0.7);
    const auto want = oracle::intersection(dets, gts, 0.7, 0.7);
    CHECK(got.tp == want.tp);
    CHECK(got.fp == want.fp);
    CHECK(got.n_gt == want.n_gt);
  }
}

TEST_CASE("SEBB sweeps equal per-threshold counting") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const EvalConfig config;
  for (int trial = 0; trial < 100; ++trial) {
    GroundTruth gt;
    ClipSebbs sebbs;
    std::vector<double> conf;
    for (int clip = 0; clip < 3; ++clip) {
      const std::string id = "c" + std::to_string(clip);
      gt.clips[id].duration = 10.0;
      for (const auto& [a, b] : oracle::random_intervals(rng, 4, 10.0, 0.1))
        gt.clips[id].events.push_back({"A", a, b});
      for (const auto& [a, b] : oracle::random_intervals(rng, 5, 10.0, 0.1)) {
        const double c = std::round(u(rng) * 10) / 10;
        sebbs[id].push_back({"A", a, b, c});
        conf.push_back(c);
      }
    }
    std::vector<double> thresholds{1.0, 0.75, 0.5, 0.35, 0.2, 0.0};
    for (const auto criterion : {Criterion::intersection, Criterion::collar}) {
      const auto counts = sweep_sebbs(sebbs, gt, "A", thresholds, config, criterion);
      REQUIRE(counts.size() == thresholds.size());
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        ClipEvents ev;
        for (const auto& [id, list] : sebbs)
          ev[id] = select_events(list, thresholds[i]);
        const auto want = criterion == Criterion::intersection
                              ? intersection_counts(ev, gt, "A", config.rho_dtc, config.rho_gtc)
                              : collar_counts(ev, gt, "A", config);
        CHECK(counts[i].tp == want.tp);
        CHECK(counts[i].fp == want.fp);
      }
    }
  }
}

TEST_CASE("frame sweeps equal per-threshold thresholding") {
  std::mt19937_64 rng(9);
  const EvalConfig config;
  for (int trial = 0; trial < 100; ++trial) {
    GroundTruth gt;
    ClipColumns columns;
    for (int clip = 0; clip < 2; ++clip) {
      const std::string id = "c" + std::to_string(clip);
      gt.clips[id].duration = 4.0;
      for (const auto& [a, b] : oracle::random_intervals(rng, 3, 4.0, 0.2))
        gt.clips[id].events.push_back({"A", a, b});
      FrameColumn col;
      for (int i = 0; i <= 20; ++i)
        col.boundaries.push_back(0.2 * i);
      for (int i = 0; i < 20; ++i)
        col.values.push_back(static_cast<double>(rng() % 11) / 10);
      if (clip == 1)
        col.floor = 0.3;
      columns[id] = col;
    }
    const std::vector<double> thresholds{1.0, 0.85, 0.6, 0.45, 0.3, 0.25, 0.05, 0.0};
    for (const auto criterion : {Criterion::intersection, Criterion::collar}) {
      const auto counts = sweep_frames(columns, gt, "A", thresholds, config, criterion);
      for (std::size_t i = 0; i < thresholds.size(); ++i) {
        ClipEvents ev;
        for (const auto& [id, col] : columns)
          ev[id] = threshold_merge(col.boundaries, col.values, "A", std::max(thresholds[i], col.floor));
        const auto want = criterion == Criterion::intersection
                              ? intersection_counts(ev, gt, "A", config.rho_dtc, config.rho_gtc)
                              : collar_counts(ev, gt, "A", config);
        CHECK(counts[i].tp == want.tp);
        CHECK(counts[i].fp == want.fp);
      }
    }
  }
}

TEST_CASE("sweep preconditions") {
  const auto gt = one_clip(10, {{"A", 0, 1}});
  const EvalConfig config;
  CHECK_THROWS_AS(sweep_sebbs({}, gt, "A", std::vector<double>{}, config), ConfigError);
  CHECK_THROWS_AS(sweep_sebbs({}, gt, "A", std::vector<double>{0.1, 0.9}, config), ConfigError);
  const ClipSebbs s{{"c", {{"A", 0, 1, 0.5}}}};
  const std::vector<double> one{1.0};
  const auto counts = sweep_sebbs(s, gt, "A", one, config);
  CHECK(counts[0].tp == 0);
  CHECK(counts[0].fp == 0);
}

TEST_CASE("operating points") {
  const std::vector<ClassCounts> counts{{"A", 0, 0, 4}, {"A", 2, 3, 4}};
  const std::vector<double> thresholds{0.9, 0.1};
  const auto p = to_operating_points(counts, thresholds, 1800.0);
  CHECK(p[1].etpr == 0.5);
  CHECK(p[1].efpr == 6.0);
  CHECK(p[1].threshold == 0.1);
  const std::vector<ClassCounts> none{{"B", 0, 2, 0}};
  const std::vector<double> t1{0.5};
  CHECK(to_operating_points(none, t1, 3600.0)[0].etpr == 0.0);
}

TEST_CASE("envelope staircase") {
  const std::vector<OperatingPoint> perfect{point(0.5, 0, 1)};
  auto s = envelope_staircase(perfect, 100);
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(100) == 1.0);
  CHECK(s.area(100) == doctest::Approx(100));

  const std::vector<OperatingPoint> pts{point(0.9, 0, 0.4), point(0.5, 10, 0.3), point(0.1, 20, 0.6)};
  s = envelope_staircase(pts, 100);
  CHECK(s.at(0) == 0.4);
  CHECK(s.at(10) == 0.4);
  CHECK(s.at(19.99) == 0.4);
  CHECK(s.at(20) == 0.6);
  CHECK(s.at(100) == 0.6);

  const std::vector<OperatingPoint> empty{point(1, 0, 0)};
  CHECK(envelope_staircase(empty, 100).area(100) == 0.0);
}

TEST_CASE("raw staircase") {
  const std::vector<OperatingPoint> pts{point(0.8, 0, 0.5), point(0.2, 10, 0.3)};
  const auto raw = raw_staircase(pts, 0.0, 20);
  CHECK(raw.at(5) == 0.5);
  CHECK(raw.at(15) == 0.3);
  CHECK(class_auc(raw, 20) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(class_auc(raw_staircase(pts, 0.9, 20), 20) == 0.0);

  // monotone points give the envelope
  const std::vector<OperatingPoint> mono{point(0.9, 0, 0.2), point(0.5, 5, 0.4), point(0.1, 30, 0.9)};
  const auto env = envelope_staircase(mono, 100);
  const auto r = raw_staircase(mono, 0.0, 100);
  CHECK(env.area(100) == doctest::Approx(r.area(100)));

  // equal efpr: the lowest threshold wins
  const std::vector<OperatingPoint> tie{point(0.9, 0, 0.2), point(0.6, 4, 0.7), point(0.4, 4, 0.5)};
  CHECK(raw_staircase(tie, 0.0, 100).at(50) == 0.5);

  // nothing before the first point
  const std::vector<OperatingPoint> late{point(0.3, 10, 0.5)};
  CHECK(raw_staircase(late, 0.0, 100).at(5) == 0.0);
}

TEST_CASE("PSDS") {
  EvalConfig config;
  PSDCurve c;
  c.classes["A"] = constant(1.0);
  c.classes["B"] = constant(1.0);
  CHECK(psds(c, config) == 1.0);
  c.classes["A"] = constant(0.0);
  CHECK(psds(c, config) == 0.0);  // mean .5 - std .5
  c.classes["B"] = constant(0.0);
  CHECK(psds(c, config) == 0.0);

  // staircase integral equals segment-by-segment sum
  PSDCurve d;
  d.classes["A"] = {{0, 10, 40}, {0.2, 0.6, 1.0}};
  d.classes["B"] = {{0, 25}, {0.4, 0.8}};
  // mean/std on [0,10): .3/.1, [10,25): .5/.1, [25,40): .7/.1, [40,100]: .9/.1
  const double want = oracle::staircase_area({{0, 0.2}, {10, 0.4}, {25, 0.6}, {40, 0.8}}, 100);
  CHECK(psds(d, config) == doctest::Approx(want).epsilon(1e-12));

  // alpha 0 is the plain mean
  config.alpha_st = 0.0;
  CHECK(psds(d, config) == doctest::Approx(oracle::staircase_area({{0, 0.3}, {10, 0.5}, {25, 0.7}, {40, 0.9}}, 100)));
}

TEST_CASE("PSDS clips the combined curve at zero") {
  EvalConfig config;
  config.alpha_st = 2.0;
  PSDCurve c;
  c.classes["A"] = {{0, 50}, {0.0, 1.0}};
  c.classes["B"] = constant(1.0);
  // [0,50): mean .5 std .5 -> -.5 clipped; [50,100]: 1
  CHECK(psds(c, config) == doctest::Approx(0.5));
}

TEST_CASE("collar matching") {
  const EvalConfig config;
  const Event g{"A", 1, 5};
  CHECK(collar_match({"A", 1, 5}, g, config));
  CHECK_FALSE(collar_match({"A", 1.3, 5}, g, config));
  CHECK(collar_match({"A", 1, 5.5}, g, config));   // offset collar max(.2, .8)
  CHECK_FALSE(collar_match({"A", 1, 5.9}, g, config));
  CHECK_FALSE(collar_match({"B", 1, 5}, g, config));

  const auto gt = one_clip(10, {g});
  auto r = collar_f1({{"c", {g}}}, gt, config);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.micro_f1 == 1.0);
  r = collar_f1({{"c", {{"A", 1.3, 5}}}}, gt, config);
  CHECK(r.classes.at("A").counts.fp == 1);
  CHECK(r.classes.at("A").counts.fn() == 1);
  CHECK(r.macro_f1 == 0.0);
}

TEST_CASE("collar F1 is one-to-one and averages per class") {
  const EvalConfig config;
  GroundTruth gt;
  gt.clips["c"] = {10, {{"A", 1, 3}, {"B", 5, 7}}};
  const ClipEvents det{{"c", {{"A", 1, 3}, {"A", 1.1, 3}, {"B", 5, 7}, {"B", 8, 9}}}};
  const auto r = collar_f1(det, gt, config);
  CHECK(r.classes.at("A").counts.tp == 1);
  CHECK(r.classes.at("A").counts.fp == 1);
  CHECK(r.classes.at("A").f1 == doctest::Approx(2.0 / 3));
  CHECK(r.classes.at("B").f1 == doctest::Approx(2.0 / 3));
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3));
  CHECK(r.micro_f1 == doctest::Approx(4.0 / 6));

  const std::vector<std::string> labels{"A", "B", "C"};
  CHECK(collar_f1(det, gt, config, labels).macro_f1 == doctest::Approx(4.0 / 9));
  CHECK(f1_score(0, 0, 0) == 0.0);
}
