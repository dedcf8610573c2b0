#include "sebbs/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace sebbs::io {

namespace {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos)
      break;
    start = tab + 1;
  }
  return out;
}

std::string location(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line_no == 1 && !line.empty() && line.front() == '#') {
      const std::string expected = std::string("# format: ") + kFormatVersion;
      if (line.rfind("# format:", 0) == 0 && line != expected)
        throw DataError(location(path, line_no) + ": unsupported format '" + line + "'");
      continue;
    }
    if (line.empty())
      continue;
    if (!have_header) {
      table.header = split_tabs(line);
      have_header = true;
      continue;
    }
    auto row = split_tabs(line);
    if (row.size() != table.header.size())
      throw DataError(location(path, line_no) + ": expected " + std::to_string(table.header.size()) +
                      " columns, found " + std::to_string(row.size()));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header)
    throw DataError(path.string() + ": missing header");
  return table;
}

double parse_number(const std::string& text, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    throw DataError(location(path, line) + ": malformed number '" + text + "'");
  return value;
}

std::size_t column(const Table& table, const std::string& name, const fs::path& path) {
  auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end())
    throw DataError(path.string() + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - table.header.begin());
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out)
    throw DataError("failed writing " + path.string());
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string s(buf);
  if (s == "-0.000000")
    s = "0.000000";
  return s;
}

std::string clip_id_from_filename(const std::string& filename) {
  for (const char* ext : {".wav", ".flac", ".mp3", ".ogg"}) {
    const std::string e(ext);
    if (filename.size() > e.size() && filename.compare(filename.size() - e.size(), e.size(), e) == 0)
      return filename.substr(0, filename.size() - e.size());
  }
  return filename;
}

ScoreTrack read_score_file(const fs::path& path, const std::string& clip_id) {
  const auto table = read_table(path);
  if (table.header.size() < 3 || table.header[0] != "onset" || table.header[1] != "offset")
    throw DataError(path.string() + ": header must be 'onset<TAB>offset<TAB><class>...'");
  ScoreTrack track;
  track.clip_id = clip_id;
  track.class_labels.assign(table.header.begin() + 2, table.header.end());
  if (table.rows.empty())
    throw DataError(path.string() + ": no frames");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    const double onset = parse_number(row[0], path, line);
    const double offset = parse_number(row[1], path, line);
    if (track.boundaries.empty())
      track.boundaries.push_back(onset);
    else if (onset != track.boundaries.back())
      throw DataError(location(path, line) + ": non-contiguous frames");
    track.boundaries.push_back(offset);
    for (std::size_t c = 2; c < row.size(); ++c)
      track.scores.push_back(parse_number(row[c], path, line));
  }
  return validate_track(std::move(track));
}

ClipTracks read_scores(const fs::path& directory) {
  if (!fs::is_directory(directory))
    throw DataError("not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && entry.path().extension() == ".tsv")
      files.push_back(entry.path());
  if (files.empty())
    throw DataError("no score files found in " + directory.string());
  std::sort(files.begin(), files.end());
  ClipTracks tracks;
  for (const auto& file : files) {
    auto track = read_score_file(file, file.stem().string());
    if (!tracks.empty() && track.class_labels != tracks.begin()->second.class_labels)
      throw DataError(file.string() + ": inconsistent class columns");
    tracks.emplace(track.clip_id, std::move(track));
  }
  return tracks;
}

void write_score_file(const ScoreTrack& track, const fs::path& path) {
  auto out = open_out(path);
  out << "onset\toffset";
  for (const auto& l : track.class_labels)
    out << '\t' << l;
  out << '\n';
  for (std::size_t n = 0; n < track.num_frames(); ++n) {
    out << format_number(track.boundaries[n]) << '\t' << format_number(track.boundaries[n + 1]);
    for (std::size_t c = 0; c < track.num_classes(); ++c)
      out << '\t' << format_number(track.score(n, c));
    out << '\n';
  }
  finish(out, path);
}

void write_scores(const ClipTracks& tracks, const fs::path& directory) {
  fs::create_directories(directory);
  for (const auto& [id, track] : tracks)
    write_score_file(track, directory / (id + ".tsv"));
}

GroundTruthLoad read_ground_truth(const fs::path& events_path, const fs::path& durations_path) {
  GroundTruthLoad load;
  {
    const auto table = read_table(durations_path);
    const auto name = column(table, "filename", durations_path);
    const auto dur = column(table, "duration", durations_path);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const double d = parse_number(table.rows[r][dur], durations_path, table.line_numbers[r]);
      if (!(d > 0.0))
        throw DataError(location(durations_path, table.line_numbers[r]) + ": duration must be positive");
      load.gt.clips[clip_id_from_filename(table.rows[r][name])].duration = d;
    }
  }
  const auto table = read_table(events_path);
  const auto name = column(table, "filename", events_path);
  const auto on = column(table, "onset", events_path);
  const auto off = column(table, "offset", events_path);
  const auto label = column(table, "event_label", events_path);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    const auto id = clip_id_from_filename(row[name]);
    auto it = load.gt.clips.find(id);
    if (it == load.gt.clips.end())
      throw DataError(location(events_path, line) + ": no duration for clip '" + id + "'");
    Event e{row[label], parse_number(row[on], events_path, line), parse_number(row[off], events_path, line)};
    if (!(e.offset > e.onset))
      throw DataError(location(events_path, line) + ": offset <= onset");
    if (e.onset < 0.0 || e.offset > it->second.duration) {
      ++load.clipped;
      e.onset = std::max(e.onset, 0.0);
      e.offset = std::min(e.offset, it->second.duration);
      if (!(e.offset > e.onset)) {
        ++load.dropped;
        continue;
      }
    }
    it->second.events.push_back(std::move(e));
  }
  for (auto& [id, clip] : load.gt.clips)
    std::stable_sort(clip.events.begin(), clip.events.end(),
                     [](const Event& a, const Event& b) { return a.onset < b.onset; });
  return load;
}

void write_ground_truth(const GroundTruth& gt, const fs::path& events_path, const fs::path& durations_path) {
  {
    auto out = open_out(durations_path);
    out << "filename\tduration\n";
    for (const auto& [id, clip] : gt.clips)
      out << id << '\t' << format_number(clip.duration) << '\n';
    finish(out, durations_path);
  }
  ClipEvents events;
  for (const auto& [id, clip] : gt.clips)
    events[id] = clip.events;
  write_events(events, events_path);
}

namespace {

template <class T>
std::vector<std::pair<std::string, const T*>> sorted_rows(const std::map<std::string, std::vector<T>>& clips) {
  std::vector<std::pair<std::string, const T*>> rows;
  for (const auto& [id, list] : clips)
    for (const auto& item : list)
      rows.emplace_back(id, &item);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first)
      return a.first < b.first;
    if (a.second->onset != b.second->onset)
      return a.second->onset < b.second->onset;
    return a.second->class_label < b.second->class_label;
  });
  return rows;
}

}  // namespace

void write_sebbs(const ClipSebbs& sebbs, const fs::path& path) {
  auto out = open_out(path);
  out << "filename\tonset\toffset\tevent_label\tconfidence\n";
  for (const auto& [id, s] : sorted_rows(sebbs))
    out << id << '\t' << format_number(s->onset) << '\t' << format_number(s->offset) << '\t' << s->class_label
        << '\t' << format_number(s->confidence) << '\n';
  finish(out, path);
}

ClipSebbs read_sebbs(const fs::path& path) {
  const auto table = read_table(path);
  const auto name = column(table, "filename", path);
  const auto on = column(table, "onset", path);
  const auto off = column(table, "offset", path);
  const auto label = column(table, "event_label", path);
  const auto conf = column(table, "confidence", path);
  ClipSebbs out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    SEBB s{row[label], parse_number(row[on], path, line), parse_number(row[off], path, line),
           parse_number(row[conf], path, line)};
    if (!(s.offset > s.onset))
      throw DataError(location(path, line) + ": offset <= onset");
    if (!(s.confidence >= 0.0 && s.confidence <= 1.0))
      throw DataError(location(path, line) + ": confidence out of [0, 1]");
    out[clip_id_from_filename(row[name])].push_back(std::move(s));
  }
  return out;
}

void write_events(const ClipEvents& events, const fs::path& path) {
  auto out = open_out(path);
  out << "filename\tonset\toffset\tevent_label\n";
  for (const auto& [id, e] : sorted_rows(events))
    out << id << '\t' << format_number(e->onset) << '\t' << format_number(e->offset) << '\t' << e->class_label << '\n';
  finish(out, path);
}

ClipEvents read_events(const fs::path& path) {
  const auto table = read_table(path);
  const auto name = column(table, "filename", path);
  const auto on = column(table, "onset", path);
  const auto off = column(table, "offset", path);
  const auto label = column(table, "event_label", path);
  ClipEvents out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = table.line_numbers[r];
    Event e{row[label], parse_number(row[on], path, line), parse_number(row[off], path, line)};
    if (!(e.offset > e.onset))
      throw DataError(location(path, line) + ": offset <= onset");
    out[clip_id_from_filename(row[name])].push_back(std::move(e));
  }
  return out;
}

bool has_confidence_column(const fs::path& path) {
  const auto table = read_table(path);
  return std::find(table.header.begin(), table.header.end(), "confidence") != table.header.end();
}

void write_roc(const ClassOperatingPoints& points, const fs::path& path) {
  auto out = open_out(path);
  out << "threshold\tclass\tefpr\tetpr\n";
  for (const auto& [label, list] : points)
    for (const auto& p : list)
      out << format_number(p.threshold) << '\t' << label << '\t' << format_number(p.efpr) << '\t'
          << format_number(p.etpr) << '\n';
  finish(out, path);
}

void write_combined_roc(const PSDCurve& curve, const EvalConfig& config, const fs::path& path) {
  auto out = open_out(path);
  out << "e\tmu\n";
  for (const auto& [e, mu] : curve.combined(config))
    out << format_number(e) << '\t' << format_number(mu) << '\n';
  finish(out, path);
}

nlohmann::json to_json(const HyperParams& params) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [label, p] : params.classes) {
    classes[label] = {
        {"medfilt_len", p.medfilt_len},
        {"lambda_ext", p.lambda_ext},
        {"tau", p.tau},
        {"gamma", {{"value", p.gamma.value}, {"mode", to_string(p.gamma.mode)}}},
        {"lambda_hyb", p.lambda_hyb},
        {"lambda_nopsds", p.lambda_nopsds},
        {"lambda_f", p.lambda_f},
    };
  }
  return {{"format", kFormatVersion}, {"classes", classes}};
}

HyperParams params_from_json(const nlohmann::json& doc) {
  try {
    if (doc.contains("format") && doc.at("format").get<std::string>() != kFormatVersion)
      throw ConfigError("unsupported params format '" + doc.at("format").get<std::string>() + "'");
    HyperParams params;
    for (const auto& [label, c] : doc.at("classes").items()) {
      ClassParams p;
      p.medfilt_len = c.value("medfilt_len", p.medfilt_len);
      p.lambda_ext = c.value("lambda_ext", p.lambda_ext);
      p.tau = c.value("tau", p.tau);
      if (c.contains("gamma")) {
        const auto& g = c.at("gamma");
        p.gamma.value = g.at("value").get<double>();
        p.gamma.mode = merge_mode_from_string(g.at("mode").get<std::string>());
      }
      p.lambda_hyb = c.value("lambda_hyb", p.lambda_hyb);
      p.lambda_nopsds = c.value("lambda_nopsds", p.lambda_nopsds);
      p.lambda_f = c.value("lambda_f", p.lambda_f);
      params.classes.emplace(label, p);
    }
    params.validate();
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed params document: ") + e.what());
  }
}

void write_params(const HyperParams& params, const fs::path& path) {
  auto out = open_out(path);
  out << to_json(params).dump(2) << '\n';
  finish(out, path);
}

HyperParams read_params(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open params file " + path.string());
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const MetricResult& result) {
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, v] : result.per_class)
    per_class[label] = v;
  return {{"metric", to_string(result.metric)}, {"value", result.value}, {"per_class", per_class}};
}

nlohmann::json to_json(const CvReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"fold", f.index},
                     {"clips", f.clip_ids},
                     {"params", to_json(f.params)},
                     {"result", to_json(f.metric)}});
  }
  return {{"format", kFormatVersion},
          {"method", to_string(report.method)},
          {"metric", to_string(report.metric)},
          {"k", report.k},
          {"seed", report.seed},
          {"folds", folds},
          {"pooled", to_json(report.pooled)}};
}

}  // namespace sebbs::io
