#include "doctest.h"

#include <fstream>
#include <random>
#include <sstream>

#include "sebbs/dataio.hpp"

using namespace sebbs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sebbs_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

const fs::path golden = fs::path(SEBBS_FIXTURES) / "golden";

}  // namespace

TEST_CASE("score files") {
  TempDir tmp;
  write_text(tmp / "s/x.tsv", "onset\toffset\tA\n0\t1\t0.2\n1\t2\t0.8\n");
  const auto t = io::read_score_file(tmp / "s/x.tsv", "x");
  CHECK(t.num_frames() == 2);
  CHECK(t.boundaries == std::vector<double>{0, 1, 2});
  CHECK(t.scores == std::vector<double>{0.2, 0.8});

  write_text(tmp / "bad/x.tsv", "onset\toffset\tA\n0\t1\t0.2\n1.5\t2\t0.8\n");
  CHECK(error_of([&] { io::read_score_file(tmp / "bad/x.tsv", "x"); }).find("non-contiguous frames") !=
        std::string::npos);

  write_text(tmp / "nan/x.tsv", "onset\toffset\tA\n0\t1\tabc\n");
  CHECK(error_of([&] { io::read_score_file(tmp / "nan/x.tsv", "x"); }).find("malformed number") !=
        std::string::npos);

  write_text(tmp / "range/x.tsv", "onset\toffset\tA\n0\t1\t1.2\n");
  CHECK_THROWS_AS(io::read_score_file(tmp / "range/x.tsv", "x"), DataError);

  write_text(tmp / "v/x.tsv", "# format: v1\nonset\toffset\tA\n0\t1\t0.5\n");
  CHECK(io::read_score_file(tmp / "v/x.tsv", "x").num_frames() == 1);
  write_text(tmp / "v2/x.tsv", "# format: v2\nonset\toffset\tA\n0\t1\t0.5\n");
  CHECK_THROWS_AS(io::read_score_file(tmp / "v2/x.tsv", "x"), DataError);
}

TEST_CASE("score directories") {
  TempDir tmp;
  fs::create_directories(tmp / "empty");
  CHECK(error_of([&] { io::read_scores(tmp / "empty"); }).find("no score files found") != std::string::npos);

  write_text(tmp / "mix/a.tsv", "onset\toffset\tA\n0\t1\t0.2\n");
  write_text(tmp / "mix/b.tsv", "onset\toffset\tB\n0\t1\t0.2\n");
  CHECK(error_of([&] { io::read_scores(tmp / "mix"); }).find("inconsistent class columns") != std::string::npos);

  const auto tracks = io::read_scores(golden / "scores");
  CHECK(tracks.size() == 2);
  CHECK(tracks.at("clip_a").class_labels == std::vector<std::string>{"dog", "speech"});
}

TEST_CASE("score round trip") {
  TempDir tmp;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoreTrack t{"r", {"A", "B"}, {0.0}, {}};
  for (int i = 0; i < 50; ++i) {
    t.boundaries.push_back(t.boundaries.back() + 0.01 + u(rng) * 0.1);
    t.scores.push_back(u(rng));
    t.scores.push_back(u(rng));
  }
  io::write_score_file(t, tmp / "r.tsv");
  const auto back = io::read_score_file(tmp / "r.tsv", "r");
  REQUIRE(back.scores.size() == t.scores.size());
  for (std::size_t i = 0; i < t.scores.size(); ++i)
    CHECK(std::abs(back.scores[i] - t.scores[i]) <= 5e-7);
  for (std::size_t i = 0; i < t.boundaries.size(); ++i)
    CHECK(std::abs(back.boundaries[i] - t.boundaries[i]) <= 5e-7 * (1 + i));
  io::write_score_file(back, tmp / "r2.tsv");
  CHECK(read_text(tmp / "r.tsv") == read_text(tmp / "r2.tsv"));
}

TEST_CASE("ground truth files") {
  TempDir tmp;
  write_text(tmp / "d.tsv", "filename\tduration\na.wav\t10\n");
  write_text(tmp / "g.tsv", "filename\tonset\toffset\tevent_label\na.wav\t1\t2\tdog\n");
  auto load = io::read_ground_truth(tmp / "g.tsv", tmp / "d.tsv");
  REQUIRE(load.gt.clips.count("a"));
  CHECK(load.gt.clips.at("a").events == std::vector<Event>{{"dog", 1, 2}});
  CHECK(load.clipped == 0);

  write_text(tmp / "g2.tsv", "filename\tonset\toffset\tevent_label\na.wav\t1\t2\tdog\na.wav\t3\t2\tdog\n");
  CHECK(error_of([&] { io::read_ground_truth(tmp / "g2.tsv", tmp / "d.tsv"); }).find("g2.tsv:3") !=
        std::string::npos);

  write_text(tmp / "g3.tsv", "filename\tonset\toffset\tevent_label\na\t9\t12\tdog\na\t11\t12\tcat\n");
  load = io::read_ground_truth(tmp / "g3.tsv", tmp / "d.tsv");
  CHECK(load.clipped == 2);
  CHECK(load.dropped == 1);
  CHECK(load.gt.clips.at("a").events == std::vector<Event>{{"dog", 9, 10}});

  write_text(tmp / "g4.tsv", "filename\tonset\toffset\tevent_label\nb\t1\t2\tdog\n");
  CHECK(error_of([&] { io::read_ground_truth(tmp / "g4.tsv", tmp / "d.tsv"); }).find("no duration") !=
        std::string::npos);
}

TEST_CASE("SEBB files") {
  TempDir tmp;
  io::write_sebbs({}, tmp / "e.tsv");
  CHECK(read_text(tmp / "e.tsv") == "filename\tonset\toffset\tevent_label\tconfidence\n");

  ClipSebbs s;
  s["b"] = {{"A", 2, 3, 0.5}, {"A", 0, 1, 0.25}};
  s["a"] = {{"B", 1, 2, 0.75}, {"A", 1, 2, 1.0}};
  io::write_sebbs(s, tmp / "s.tsv");
  CHECK(read_text(tmp / "s.tsv") ==
        "filename\tonset\toffset\tevent_label\tconfidence\n"
        "a\t1.000000\t2.000000\tA\t1.000000\n"
        "a\t1.000000\t2.000000\tB\t0.750000\n"
        "b\t0.000000\t1.000000\tA\t0.250000\n"
        "b\t2.000000\t3.000000\tA\t0.500000\n");
  const auto back = io::read_sebbs(tmp / "s.tsv");
  CHECK(back.at("a").size() == 2);
  CHECK(back.at("b")[0] == SEBB{"A", 0, 1, 0.25});
  CHECK(io::has_confidence_column(tmp / "s.tsv"));

  io::write_events({{"a", {{"A", 1, 2}}}}, tmp / "ev.tsv");
  CHECK_FALSE(io::has_confidence_column(tmp / "ev.tsv"));
  CHECK(io::read_events(tmp / "ev.tsv").at("a")[0] == Event{"A", 1, 2});
}

TEST_CASE("params JSON") {
  TempDir tmp;
  const auto p = io::read_params(golden / "params.json");
  CHECK(p.at("dog").gamma == MergeThreshold{3.0, MergeMode::relative});
  CHECK(p.at("speech").lambda_f == 0.65);
  io::write_params(p, tmp / "p.json");
  CHECK(io::read_params(tmp / "p.json").classes == p.classes);

  CHECK_THROWS_AS(io::read_params(tmp / "missing.json"), ConfigError);
  write_text(tmp / "bad.json", "{\"format\": \"v9\", \"classes\": {}}");
  CHECK_THROWS_AS(io::read_params(tmp / "bad.json"), ConfigError);
  write_text(tmp / "bad2.json", "{\"classes\": {\"A\": {\"tau\": -1}}}");
  CHECK_THROWS_AS(io::read_params(tmp / "bad2.json"), ConfigError);
  write_text(tmp / "bad3.json", "{not json");
  CHECK_THROWS_AS(io::read_params(tmp / "bad3.json"), ConfigError);
}

TEST_CASE("golden files round-trip byte for byte") {
  TempDir tmp;
  for (const auto& name : {"clip_a", "clip_b"}) {
    const auto src = golden / "scores" / (std::string(name) + ".tsv");
    io::write_score_file(io::read_score_file(src, name), tmp / "x.tsv");
    CHECK(read_text(tmp / "x.tsv") == read_text(src));
  }
  const auto gt = io::read_ground_truth(golden / "gt.tsv", golden / "durations.tsv");
  io::write_ground_truth(gt.gt, tmp / "gt.tsv", tmp / "d.tsv");
  CHECK(read_text(tmp / "gt.tsv") == read_text(golden / "gt.tsv"));
  CHECK(read_text(tmp / "d.tsv") == read_text(golden / "durations.tsv"));
  io::write_sebbs(io::read_sebbs(golden / "sebbs.tsv"), tmp / "s.tsv");
  CHECK(read_text(tmp / "s.tsv") == read_text(golden / "sebbs.tsv"));
  io::write_events(io::read_events(golden / "events.tsv"), tmp / "e.tsv");
  CHECK(read_text(tmp / "e.tsv") == read_text(golden / "events.tsv"));
  io::write_params(io::read_params(golden / "params.json"), tmp / "p.json");
  CHECK(read_text(tmp / "p.json") == read_text(golden / "params.json"));
}

TEST_CASE("number formatting and clip ids") {
  CHECK(io::format_number(0.5) == "0.500000");
  CHECK(io::format_number(-0.0000001) == "0.000000");
  CHECK(io::clip_id_from_filename("a.wav") == "a");
  CHECK(io::clip_id_from_filename("a.b.flac") == "a.b");
  CHECK(io::clip_id_from_filename("a.txt") == "a.txt");
}
