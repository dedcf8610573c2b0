#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sebbs/dataio.hpp"
#include "sebbs/synth.hpp"
#include "sebbs/tuning.hpp"

namespace py = pybind11;
using namespace sebbs;

namespace {

template <class T>
std::string json_text(const T& value) {
  return io::to_json(value).dump(2);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sound event bounding boxes: post-processing, metrics and tuning";

  static py::exception<DataError> data_error(m, "DataError", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p)
        std::rethrow_exception(p);
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const ConfigError& e) {
      config_error(e.what());
    }
  });

  py::enum_<MergeMode>(m, "MergeMode").value("absolute", MergeMode::absolute).value("relative", MergeMode::relative);
  py::enum_<Method>(m, "Method")
      .value("legacy", Method::legacy)
      .value("medfilt", Method::medfilt)
      .value("tsebb", Method::tsebb)
      .value("csebb", Method::csebb)
      .value("hsebb", Method::hsebb);
  py::enum_<Metric>(m, "Metric")
      .value("psds1", Metric::psds1)
      .value("nopsds1", Metric::nopsds1)
      .value("collar_f1", Metric::collar_f1);

  py::class_<ScoreTrack>(m, "ScoreTrack")
      .def(py::init([](std::string clip_id, std::vector<std::string> labels, std::vector<double> boundaries,
                       std::vector<std::vector<double>> rows) {
             ScoreTrack t{std::move(clip_id), std::move(labels), std::move(boundaries), {}};
             for (const auto& row : rows)
               t.scores.insert(t.scores.end(), row.begin(), row.end());
             return validate_track(std::move(t));
           }),
           py::arg("clip_id"), py::arg("class_labels"), py::arg("boundaries"), py::arg("scores"),
           "scores: one row per frame, one column per class")
      .def_readonly("clip_id", &ScoreTrack::clip_id)
      .def_readonly("class_labels", &ScoreTrack::class_labels)
      .def_readonly("boundaries", &ScoreTrack::boundaries)
      .def_property_readonly("num_frames", &ScoreTrack::num_frames)
      .def("class_scores", &ScoreTrack::class_scores);

  py::class_<SEBB>(m, "SEBB")
      .def(py::init<std::string, double, double, double>(), py::arg("class_label"), py::arg("onset"),
           py::arg("offset"), py::arg("confidence"))
      .def_readwrite("class_label", &SEBB::class_label)
      .def_readwrite("onset", &SEBB::onset)
      .def_readwrite("offset", &SEBB::offset)
      .def_readwrite("confidence", &SEBB::confidence)
      .def("__eq__", [](const SEBB& a, const SEBB& b) { return a == b; })
      .def("__repr__", [](const SEBB& s) {
        return "SEBB(" + s.class_label + ", " + io::format_number(s.onset) + ", " + io::format_number(s.offset) +
               ", " + io::format_number(s.confidence) + ")";
      });

  py::class_<Event>(m, "Event")
      .def(py::init<std::string, double, double>(), py::arg("class_label"), py::arg("onset"), py::arg("offset"))
      .def_readwrite("class_label", &Event::class_label)
      .def_readwrite("onset", &Event::onset)
      .def_readwrite("offset", &Event::offset)
      .def("__eq__", [](const Event& a, const Event& b) { return a == b; })
      .def("__repr__", [](const Event& e) {
        return "Event(" + e.class_label + ", " + io::format_number(e.onset) + ", " + io::format_number(e.offset) +
               ")";
      });

  py::class_<ClipTruth>(m, "ClipTruth")
      .def(py::init<>())
      .def_readwrite("duration", &ClipTruth::duration)
      .def_readwrite("events", &ClipTruth::events);

  py::class_<GroundTruth>(m, "GroundTruth")
      .def(py::init<>())
      .def_readwrite("clips", &GroundTruth::clips)
      .def("class_labels", &GroundTruth::class_labels)
      .def("total_duration", &GroundTruth::total_duration);

  py::class_<EvalConfig>(m, "EvalConfig")
      .def(py::init<>())
      .def_readwrite("rho_dtc", &EvalConfig::rho_dtc)
      .def_readwrite("rho_gtc", &EvalConfig::rho_gtc)
      .def_readwrite("alpha_st", &EvalConfig::alpha_st)
      .def_readwrite("e_max", &EvalConfig::e_max)
      .def_readwrite("onset_collar", &EvalConfig::onset_collar)
      .def_readwrite("offset_collar_floor", &EvalConfig::offset_collar_floor)
      .def_readwrite("offset_collar_frac", &EvalConfig::offset_collar_frac);

  py::class_<MergeThreshold>(m, "MergeThreshold")
      .def(py::init<double, MergeMode>(), py::arg("value") = 3.0, py::arg("mode") = MergeMode::relative)
      .def_readwrite("value", &MergeThreshold::value)
      .def_readwrite("mode", &MergeThreshold::mode);

  py::class_<ClassParams>(m, "ClassParams")
      .def(py::init<>())
      .def_readwrite("medfilt_len", &ClassParams::medfilt_len)
      .def_readwrite("lambda_ext", &ClassParams::lambda_ext)
      .def_readwrite("tau", &ClassParams::tau)
      .def_readwrite("gamma", &ClassParams::gamma)
      .def_readwrite("lambda_hyb", &ClassParams::lambda_hyb)
      .def_readwrite("lambda_nopsds", &ClassParams::lambda_nopsds)
      .def_readwrite("lambda_f", &ClassParams::lambda_f);

  py::class_<HyperParams>(m, "HyperParams")
      .def(py::init<>())
      .def_readwrite("classes", &HyperParams::classes)
      .def_static("uniform", [](const std::vector<std::string>& labels, const ClassParams& p) {
        return HyperParams::uniform(labels, p);
      })
      .def("to_json", [](const HyperParams& p) { return json_text(p); });

  py::class_<Grid>(m, "Grid")
      .def_static("defaults", &Grid::defaults, py::arg("metric") = Metric::psds1)
      .def_readwrite("medfilt_lengths", &Grid::medfilt_lengths)
      .def_readwrite("taus", &Grid::taus)
      .def_readwrite("gammas", &Grid::gammas)
      .def_readwrite("ext_thresholds", &Grid::ext_thresholds)
      .def_readwrite("hyb_thresholds", &Grid::hyb_thresholds)
      .def_readwrite("metric", &Grid::metric);

  py::class_<MetricResult>(m, "MetricResult")
      .def_readonly("metric", &MetricResult::metric)
      .def_readonly("value", &MetricResult::value)
      .def_readonly("per_class", &MetricResult::per_class);

  py::class_<CvReport>(m, "CvReport")
      .def_readonly("pooled", &CvReport::pooled)
      .def_property_readonly("fold_values",
                             [](const CvReport& r) {
                               std::vector<double> v;
                               for (const auto& f : r.folds)
                                 v.push_back(f.metric.value);
                               return v;
                             })
      .def("to_json", [](const CvReport& r) { return json_text(r); });

  py::class_<synth::SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("n_clips", &synth::SynthSpec::n_clips)
      .def_readwrite("clip_duration", &synth::SynthSpec::clip_duration)
      .def_readwrite("frame_width", &synth::SynthSpec::frame_width)
      .def_readwrite("classes", &synth::SynthSpec::classes)
      .def_readwrite("event_rate", &synth::SynthSpec::event_rate)
      .def_readwrite("min_event_len", &synth::SynthSpec::min_event_len)
      .def_readwrite("max_event_len", &synth::SynthSpec::max_event_len)
      .def_readwrite("heights", &synth::SynthSpec::heights)
      .def_readwrite("ramp_width", &synth::SynthSpec::ramp_width)
      .def_readwrite("tail_width", &synth::SynthSpec::tail_width)
      .def_readwrite("tail_level", &synth::SynthSpec::tail_level)
      .def_readwrite("background", &synth::SynthSpec::background)
      .def_readwrite("noise", &synth::SynthSpec::noise)
      .def_readwrite("seed", &synth::SynthSpec::seed);

  py::class_<synth::Corpus>(m, "Corpus")
      .def_readonly("tracks", &synth::Corpus::tracks)
      .def_readonly("gt", &synth::Corpus::gt);

  // post-processing
  m.def("median_filter", py::overload_cast<const ScoreTrack&, const std::string&, double>(&median_filter),
        py::arg("track"), py::arg("label"), py::arg("length"));
  m.def("frame_threshold_merge", &frame_threshold_merge, py::arg("track"), py::arg("label"), py::arg("threshold"));
  m.def("tsebb", &tsebb);
  m.def("csebb", &csebb);
  m.def("hsebb", py::overload_cast<const ScoreTrack&, const HyperParams&>(&hsebb));
  m.def("predict_sebbs", py::overload_cast<const ScoreTrack&, const HyperParams&, Method>(&predict_sebbs),
        py::arg("track"), py::arg("params"), py::arg("method") = Method::csebb);
  m.def(
      "select_events",
      [](const std::vector<SEBB>& sebbs, double threshold) { return select_events(sebbs, threshold); },
      py::arg("sebbs"), py::arg("threshold"));

  // metrics and tuning
  m.def("candidate_thresholds", [](const std::vector<double>& c) { return candidate_thresholds(c); });
  m.def("evaluate", &evaluate, py::arg("tracks"), py::arg("gt"), py::arg("params"), py::arg("method"),
        py::arg("metric"), py::arg("config") = EvalConfig{});
  m.def(
      "intersection_counts",
      [](const ClipEvents& det, const GroundTruth& gt, const std::string& label, double rho_dtc, double rho_gtc) {
        const auto c = intersection_counts(det, gt, label, rho_dtc, rho_gtc);
        return py::make_tuple(c.tp, c.fp, c.n_gt);
      },
      py::arg("detections"), py::arg("gt"), py::arg("label"), py::arg("rho_dtc") = 0.7, py::arg("rho_gtc") = 0.7,
      "(tp, fp, n_gt) for one class");
  m.def(
      "grid_search",
      [](const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method, unsigned threads) {
        GridSearchOptions options;
        options.threads = threads;
        py::gil_scoped_release release;
        return grid_search(tracks, gt, grid, method, options);
      },
      py::arg("tracks"), py::arg("gt"), py::arg("grid"), py::arg("method"), py::arg("threads") = 1);
  m.def(
      "cross_validate",
      [](const ClipTracks& tracks, const GroundTruth& gt, const Grid& grid, Method method, std::size_t k,
         std::uint64_t seed, unsigned threads) {
        GridSearchOptions options;
        options.threads = threads;
        py::gil_scoped_release release;
        return cross_validate(tracks, gt, grid, method, k, seed, options);
      },
      py::arg("tracks"), py::arg("gt"), py::arg("grid"), py::arg("method"), py::arg("folds") = 5,
      py::arg("seed") = 0, py::arg("threads") = 1);

  // files
  m.def("read_scores", &io::read_scores, py::arg("directory"));
  m.def(
      "read_ground_truth",
      [](const std::filesystem::path& events, const std::filesystem::path& durations) {
        return io::read_ground_truth(events, durations).gt;
      },
      py::arg("events"), py::arg("durations"));
  m.def("read_params", &io::read_params);
  m.def("write_params", &io::write_params);
  m.def("read_sebbs", &io::read_sebbs);
  m.def("write_sebbs", &io::write_sebbs);

  // synthetic data
  m.def("generate", &synth::generate, py::arg("spec"));
  m.def("two_peak_scenario", &synth::two_peak_scenario);
}
