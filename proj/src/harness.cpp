#include <cmath>
#include <cstdio>
#include <fstream>
#include <array>
#include <map>
#include <set>
#include <sstream>

#include "zpf/error.hpp"
#include "zpf/harness.hpp"

namespace zpf {

using nlohmann::json;

namespace {

struct BeamModes {
  // index[pol][l] -> mode index, or npos when the beam lacks that polarization
  std::array<std::vector<std::size_t>, 2> index;
};
constexpr std::size_t npos = static_cast<std::size_t>(-1);

}  // namespace

BuiltExperiment build_experiment(const ExperimentConfig& cfg) {
  const auto grid = band_grid(cfg.window, cfg.coherence_time, cfg.center_frequency);
  const std::size_t n = grid.size();

  std::map<std::string, const BeamConfig*> beams;
  for (const auto& b : cfg.beams) beams[b.name] = &b;

  std::optional<PumpSpecd> pump;
  std::set<std::string> cone_beams;
  if (cfg.source) {
    const auto& first = cfg.source->pairs.front();
    const auto& na = beams.at(first.signal)->axis;
    const auto& nb = beams.at(first.idler)->axis;
    pump = PumpSpecd{cfg.center_frequency * (na + nb), 2.0 * cfg.center_frequency, cfg.source->g};
    if (!(pump->k0.norm() > 1e-9 * pump->omega0))
      throw InvalidInput("signal and idler beams are antiparallel; no pump direction");
    cone_beams = {first.signal, first.idler};
  }

  std::vector<Moded> modes;
  std::map<std::string, BeamModes> beam_modes;
  for (const auto& b : cfg.beams) {
    auto& bm = beam_modes[b.name];
    bm.index[0].assign(n, npos);
    bm.index[1].assign(n, npos);
    for (int pol : b.polarizations) {
      for (std::size_t l = 0; l < n; ++l) {
        Eigen::Vector3d k = cone_beams.count(b.name) ? cone_wavevector(*pump, grid[l], b.axis) : b.axis * grid[l];
        bm.index[static_cast<std::size_t>(pol)][l] = modes.size();
        modes.push_back(Moded{k, k.norm(), pol});
      }
    }
  }

  // Detectors and the vacuum calibration of the quantization volume.
  std::vector<DetectorSpec> detectors;
  std::vector<std::string> names;
  for (const auto& dc : cfg.detectors) {
    DetectorBuild build;
    build.radius = dc.radius;
    build.length = dc.length;
    build.window = cfg.window;
    build.coherence_time = cfg.coherence_time;
    build.center_frequency = cfg.center_frequency;
    build.efficiency = dc.efficiency;
    build.axis = beams.at(dc.beam)->axis;
    build.polarization = dc.polarization;
    auto d = make_detector(build);
    const double i0 = d.vacuum_mean();
    const double s0 = d.vacuum_sigma();
    switch (dc.threshold_kind) {
      case DetectorConfig::Threshold::absolute: d.threshold = dc.threshold_value; break;
      case DetectorConfig::Threshold::vacuum_multiple: d.threshold = dc.threshold_value * i0; break;
      case DetectorConfig::Threshold::sigma_offset: d.threshold = i0 + dc.threshold_value * s0; break;
    }
    if (dc.gain) {
      d.gain = *dc.gain;
    } else if (dc.gain_sigma) {
      d.gain = *dc.gain_sigma / s0;
    } else {
      d.gain = efficiency_gain(d.efficiency, d.radius, d.window, d.center_frequency);
    }
    try {
      validate(d);
    } catch (const InvalidInput& e) {
      throw InvalidInput("detector '" + dc.name + "': " + e.what());
    }
    detectors.push_back(std::move(d));
    names.push_back(dc.name);
  }

  // L0^3 is chosen so the ensemble vacuum mean seen by the first detector is
  // exactly I0; every mode contributes scale^2 / 2 = omega / (2 V) weighted by
  // its overlap with the detector.
  double volume = 0;
  if (cfg.box_volume) {
    volume = *cfg.box_volume;
  } else {
    const ModeSetd unit_box(modes, 1.0);
    auto implied = [&](const DetectorSpec& d) {
      return 0.5 * build_response(d, unit_box).squaredNorm() / d.vacuum_mean();
    };
    volume = implied(detectors.front());
    for (std::size_t i = 1; i < detectors.size(); ++i) {
      const double v = implied(detectors[i]);
      if (std::abs(v - volume) > 1e-6 * volume)
        throw InvalidInput("detectors '" + names.front() + "' and '" + names[i] +
                           "' imply different vacuum calibrations; set box_volume explicitly");
    }
  }
  auto mode_set = std::make_shared<const ModeSetd>(std::move(modes), volume);

  std::optional<SourceStage> source;
  if (cfg.source) {
    SourceStage stage{*pump, {}};
    for (const auto& p : cfg.source->pairs) {
      const auto& s = beam_modes.at(p.signal).index[static_cast<std::size_t>(p.signal_polarization)];
      const auto& i = beam_modes.at(p.idler).index[static_cast<std::size_t>(p.idler_polarization)];
      for (std::size_t l = 0; l < n; ++l) stage.pairs.pairs.emplace_back(s[l], i[n - 1 - l]);
    }
    source = std::move(stage);
  }

  auto hv_pairs = [&](const std::string& beam) {
    const auto& bm = beam_modes.at(beam);
    ModePairs pairs;
    for (std::size_t l = 0; l < n; ++l) pairs.emplace_back(bm.index[0][l], bm.index[1][l]);
    return pairs;
  };

  BuiltExperiment out{Experiment(mode_set, std::nullopt, {}, {}), names, std::vector<double>(names.size(), 1.0),
                      std::nullopt, {}};
  std::vector<OpticalStep> optics;
  for (const auto& op : cfg.optics) {
    switch (op.kind) {
      case OpticConfig::Kind::rotator: optics.push_back(OpticalStep::rotator(hv_pairs(op.beam), op.angle)); break;
      case OpticConfig::Kind::beam_splitter: {
        const auto& a = beam_modes.at(op.beam);
        const auto& b = beam_modes.at(op.beam_b);
        ModePairs pairs;
        for (std::size_t p = 0; p < 2; ++p)
          for (std::size_t l = 0; l < n; ++l)
            if (a.index[p][l] != npos && b.index[p][l] != npos) pairs.emplace_back(a.index[p][l], b.index[p][l]);
        if (pairs.empty()) throw InvalidInput("beam splitter ports share no polarization");
        optics.push_back(OpticalStep::beam_splitter(std::move(pairs), op.transmittance, op.phase));
        break;
      }
      case OpticConfig::Kind::lens: {
        for (std::size_t d = 0; d < names.size(); ++d)
          if (names[d] == op.detector) out.lens_gain[d] *= lens_gain(op.lens);
        out.warnings.push_back("lens on detector '" + op.detector +
                               "' scales the analytic signal intensity only; Monte Carlo entries exclude it");
        break;
      }
    }
  }

  if (pump) {
    if (auto w = validity_warning(*pump)) out.warnings.push_back(*w);
  }

  out.experiment = Experiment(mode_set, std::move(source), std::move(optics), std::move(detectors));

  if (cfg.chsh) {
    auto index_of = [&](const std::string& name) {
      for (std::size_t d = 0; d < names.size(); ++d)
        if (names[d] == name) return d;
      throw InvalidInput("unknown detector '" + name + "'");
    };
    auto station = [&](const ChshStationConfig& sc) {
      return ChshStation{hv_pairs(sc.beam), index_of(sc.plus), index_of(sc.minus)};
    };
    out.chsh = std::make_pair(station(cfg.chsh->station_a), station(cfg.chsh->station_b));
  }
  return out;
}

namespace {

std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes) {
  std::vector<std::vector<double>> points{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : points) {
      for (double v : axis.values) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

PointResult run_point(const ExperimentConfig& cfg, std::size_t index, const std::vector<double>& axis_values,
                      int workers) {
  const auto built = build_experiment(cfg);
  const auto& ex = built.experiment;
  const std::size_t nd = ex.detector_count();
  PointResult point;
  point.index = index;
  point.axis_values = axis_values;
  point.warnings = built.warnings;

  const bool want_mc = cfg.mode != RunMode::analytic;
  const bool want_analytic = cfg.mode != RunMode::mc;
  const bool need_corr = want_analytic && nd > 1 && !cfg.correlation;

  std::optional<DetectionResult> mc;
  if (want_mc || need_corr) {
    McOptions options;
    options.keep_intensities = need_corr;
    options.workers = workers;
    mc = mc_detect(ex, cfg.trials, cfg.seed, options);
  }

  std::vector<EffectiveIntensityDist> dists;
  for (std::size_t d = 0; d < nd; ++d) {
    const auto& det = ex.detector(d);
    DetectorRow row;
    row.name = built.detector_names[d];
    row.vacuum_mean = det.vacuum_mean();
    row.vacuum_sigma = det.vacuum_sigma();
    row.threshold = det.threshold;
    row.gain = det.gain;
    double signal = ex.signal_intensity(d) * built.lens_gain[d];
    if (std::abs(signal) < 1e-12 * row.vacuum_mean) signal = 0;
    row.signal_intensity = std::max(0.0, signal);
    dists.push_back(rho_signal(det, row.signal_intensity));
    if (want_analytic) row.p_analytic = p_single(dists.back(), det);
    if (want_mc) {
      row.p_mc = mc->singles[d];
      row.mc_intensity_mean = mc->intensity_mean[d];
      row.mc_intensity_sd = mc->intensity_sd[d];
    }
    const auto report = classify_regime(row.signal_intensity, det, {cfg.constraint_k, 0.1, 10.0});
    row.regime = report.regime;
    row.dark_margin_sigma = report.checks[0].margin_sigma;
    row.linear_margin_sigma = report.checks[1].margin_sigma;
    row.feasible = report.feasible;
    point.detectors.push_back(std::move(row));
  }

  std::size_t pair_index = 0;
  for (std::size_t a = 0; a < nd; ++a) {
    for (std::size_t b = a + 1; b < nd; ++b, ++pair_index) {
      CoincidenceRow row;
      row.first = built.detector_names[a];
      row.second = built.detector_names[b];
      if (want_analytic) {
        row.corr = cfg.correlation ? *cfg.correlation : empirical_corr(mc->intensities[a], mc->intensities[b]);
        row.p_analytic = p_joint({dists[a], dists[b], *row.corr}, ex.detector(a), ex.detector(b));
      }
      if (want_mc) row.p_mc = mc->coincidences[pair_index].probability;
      point.coincidences.push_back(std::move(row));
    }
  }

  if (built.chsh) {
    point.chsh = chsh_scan(ex, built.chsh->first, built.chsh->second, cfg.chsh->settings, cfg.trials, cfg.seed,
                           cfg.chsh->response, workers);
  }
  return point;
}

std::string describe_point(const ExperimentConfig& cfg, std::size_t index, const std::vector<double>& values) {
  std::ostringstream os;
  os << "sweep point " << index;
  if (!values.empty()) {
    os << " (";
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? ", " : "") << cfg.sweeps[i].path << "=" << values[i];
    os << ")";
  }
  return os.str();
}

}  // namespace

RunRecord run(const ExperimentConfig& cfg, int workers) {
  RunRecord record;
  record.config_digest = config_digest(cfg.normalized);
  record.config = cfg.normalized;
  for (const auto& axis : cfg.sweeps) record.axes.push_back(axis.path);
  for (const auto& d : cfg.detectors) record.detector_names.push_back(d.name);
  record.has_chsh = cfg.chsh.has_value();

  const auto points = sweep_points(cfg.sweeps);
  json base = cfg.normalized;
  base.erase("sweeps");
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& values = points[p];
    try {
      if (cfg.sweeps.empty()) {
        record.points.push_back(run_point(cfg, p, values, workers));
        continue;
      }
      json patched = base;
      for (std::size_t a = 0; a < values.size(); ++a) {
        const json::json_pointer ptr(cfg.sweeps[a].path);
        const bool integral = patched.contains(ptr) && patched[ptr].is_number_integer();
        if (integral) {
          patched[ptr] = static_cast<long long>(std::llround(values[a]));
        } else {
          patched[ptr] = values[a];
        }
      }
      const auto point_cfg = config_from_json(patched);
      record.points.push_back(run_point(point_cfg, p, values, workers));
    } catch (const ConfigError& e) {
      throw ConfigError(describe_point(cfg, p, values) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(describe_point(cfg, p, values) + ": " + e.what());
    }
  }
  return record;
}

// Serialization.

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json estimate_json(const std::optional<Estimate>& e) {
  if (!e) return nullptr;
  return json{{"value", e->value}, {"standard_error", e->standard_error}};
}

std::optional<double> read_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<Estimate> read_estimate(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return Estimate{j.at(key).at("value").get<double>(), j.at(key).at("standard_error").get<double>()};
}

Regime regime_from(const std::string& s) {
  for (auto r : {Regime::dark, Regime::linear, Regime::intermediate, Regime::saturated})
    if (to_string(r) == s) return r;
  throw std::runtime_error("unknown regime '" + s + "'");
}

}  // namespace

json to_json(const RunRecord& record) {
  json points = json::array();
  for (const auto& p : record.points) {
    json detectors = json::array();
    for (const auto& d : p.detectors) {
      detectors.push_back({{"name", d.name},
                           {"vacuum_mean", d.vacuum_mean},
                           {"vacuum_sigma", d.vacuum_sigma},
                           {"threshold", d.threshold},
                           {"gain", d.gain},
                           {"signal_intensity", d.signal_intensity},
                           {"p_analytic", optional_number(d.p_analytic)},
                           {"p_mc", estimate_json(d.p_mc)},
                           {"mc_intensity_mean", estimate_json(d.mc_intensity_mean)},
                           {"mc_intensity_sd", optional_number(d.mc_intensity_sd)},
                           {"regime", to_string(d.regime)},
                           {"dark_margin_sigma", d.dark_margin_sigma},
                           {"linear_margin_sigma", d.linear_margin_sigma},
                           {"feasible", d.feasible}});
    }
    json coincidences = json::array();
    for (const auto& c : p.coincidences) {
      coincidences.push_back({{"first", c.first},
                              {"second", c.second},
                              {"corr", optional_number(c.corr)},
                              {"p_analytic", optional_number(c.p_analytic)},
                              {"p_mc", estimate_json(c.p_mc)}});
    }
    json chsh = nullptr;
    if (p.chsh) {
      json settings = json::array();
      for (const auto& s : p.chsh->settings) settings.push_back({s.first, s.second});
      chsh = {{"settings", settings},
              {"correlation", p.chsh->correlation},
              {"correlation_se", p.chsh->correlation_se},
              {"S", p.chsh->s},
              {"S_se", p.chsh->s_se},
              {"normalized_correlation", p.chsh->normalized_correlation},
              {"normalized_correlation_se", p.chsh->normalized_correlation_se},
              {"S_normalized", p.chsh->s_normalized},
              {"S_normalized_se", p.chsh->s_normalized_se}};
    }
    points.push_back({{"index", p.index},
                      {"axis_values", p.axis_values},
                      {"detectors", detectors},
                      {"coincidences", coincidences},
                      {"chsh", chsh},
                      {"warnings", p.warnings}});
  }
  return {{"schema_version", kRecordSchemaVersion},
          {"tool_version", record.tool_version},
          {"config_digest", record.config_digest},
          {"config", record.config},
          {"axes", record.axes},
          {"detector_names", record.detector_names},
          {"has_chsh", record.has_chsh},
          {"points", points}};
}

RunRecord record_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kRecordSchemaVersion)
    throw std::runtime_error("unsupported run record schema version");
  RunRecord r;
  r.tool_version = j.at("tool_version").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.config = j.at("config");
  r.axes = j.at("axes").get<std::vector<std::string>>();
  r.detector_names = j.at("detector_names").get<std::vector<std::string>>();
  r.has_chsh = j.at("has_chsh").get<bool>();
  for (const auto& pj : j.at("points")) {
    PointResult p;
    p.index = pj.at("index").get<std::size_t>();
    p.axis_values = pj.at("axis_values").get<std::vector<double>>();
    p.warnings = pj.at("warnings").get<std::vector<std::string>>();
    for (const auto& dj : pj.at("detectors")) {
      DetectorRow d;
      d.name = dj.at("name").get<std::string>();
      d.vacuum_mean = dj.at("vacuum_mean").get<double>();
      d.vacuum_sigma = dj.at("vacuum_sigma").get<double>();
      d.threshold = dj.at("threshold").get<double>();
      d.gain = dj.at("gain").get<double>();
      d.signal_intensity = dj.at("signal_intensity").get<double>();
      d.p_analytic = read_number(dj, "p_analytic");
      d.p_mc = read_estimate(dj, "p_mc");
      d.mc_intensity_mean = read_estimate(dj, "mc_intensity_mean");
      d.mc_intensity_sd = read_number(dj, "mc_intensity_sd");
      d.regime = regime_from(dj.at("regime").get<std::string>());
      d.dark_margin_sigma = dj.at("dark_margin_sigma").get<double>();
      d.linear_margin_sigma = dj.at("linear_margin_sigma").get<double>();
      d.feasible = dj.at("feasible").get<bool>();
      p.detectors.push_back(std::move(d));
    }
    for (const auto& cj : pj.at("coincidences")) {
      CoincidenceRow c;
      c.first = cj.at("first").get<std::string>();
      c.second = cj.at("second").get<std::string>();
      c.corr = read_number(cj, "corr");
      c.p_analytic = read_number(cj, "p_analytic");
      c.p_mc = read_estimate(cj, "p_mc");
      p.coincidences.push_back(std::move(c));
    }
    if (!pj.at("chsh").is_null()) {
      const auto& cj = pj.at("chsh");
      ChshResult c;
      for (std::size_t s = 0; s < 4; ++s) {
        c.settings[s] = {cj.at("settings")[s][0].get<double>(), cj.at("settings")[s][1].get<double>()};
        c.correlation[s] = cj.at("correlation")[s].get<double>();
        c.correlation_se[s] = cj.at("correlation_se")[s].get<double>();
        c.normalized_correlation[s] = cj.at("normalized_correlation")[s].get<double>();
        c.normalized_correlation_se[s] = cj.at("normalized_correlation_se")[s].get<double>();
      }
      c.s = cj.at("S").get<double>();
      c.s_se = cj.at("S_se").get<double>();
      c.s_normalized = cj.at("S_normalized").get<double>();
      c.s_normalized_se = cj.at("S_normalized_se").get<double>();
      p.chsh = c;
    }
    r.points.push_back(std::move(p));
  }
  return r;
}

std::vector<std::string> csv_header(const RunRecord& record) {
  std::vector<std::string> h{"point_index"};
  for (const auto& a : record.axes) h.push_back(a);
  for (const auto& d : record.detector_names) {
    for (const char* col : {"signal_intensity", "threshold", "p_analytic", "p_mc", "p_mc_se", "regime",
                            "dark_margin_sigma", "linear_margin_sigma", "feasible"})
      h.push_back(d + "." + col);
  }
  for (std::size_t a = 0; a < record.detector_names.size(); ++a) {
    for (std::size_t b = a + 1; b < record.detector_names.size(); ++b) {
      const std::string prefix = record.detector_names[a] + "&" + record.detector_names[b] + ".";
      for (const char* col : {"corr", "p_analytic", "p_mc", "p_mc_se"}) h.push_back(prefix + col);
    }
  }
  if (record.has_chsh) {
    for (const char* col : {"chsh.S", "chsh.S_se", "chsh.E1", "chsh.E2", "chsh.E3", "chsh.E4", "chsh.S_normalized",
                            "chsh.S_normalized_se"}) h.push_back(col);
  }
  return h;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_csv(const RunRecord& record) {
  std::ostringstream os;
  const auto header = csv_header(record);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << csv_field(header[i]);
  os << "\n";
  for (const auto& p : record.points) {
    std::vector<std::string> row{std::to_string(p.index)};
    for (double v : p.axis_values) row.push_back(fmt17(v));
    for (const auto& d : p.detectors) {
      row.push_back(fmt17(d.signal_intensity));
      row.push_back(fmt17(d.threshold));
      row.push_back(fmt17(d.p_analytic));
      row.push_back(d.p_mc ? fmt17(d.p_mc->value) : "");
      row.push_back(d.p_mc ? fmt17(d.p_mc->standard_error) : "");
      row.push_back(to_string(d.regime));
      row.push_back(fmt17(d.dark_margin_sigma));
      row.push_back(fmt17(d.linear_margin_sigma));
      row.push_back(d.feasible ? "true" : "false");
    }
    for (const auto& c : p.coincidences) {
      row.push_back(fmt17(c.corr));
      row.push_back(fmt17(c.p_analytic));
      row.push_back(c.p_mc ? fmt17(c.p_mc->value) : "");
      row.push_back(c.p_mc ? fmt17(c.p_mc->standard_error) : "");
    }
    if (record.has_chsh) {
      row.push_back(p.chsh ? fmt17(p.chsh->s) : "");
      row.push_back(p.chsh ? fmt17(p.chsh->s_se) : "");
      for (std::size_t s = 0; s < 4; ++s) row.push_back(p.chsh ? fmt17(p.chsh->correlation[s]) : "");
      row.push_back(p.chsh ? fmt17(p.chsh->s_normalized) : "");
      row.push_back(p.chsh ? fmt17(p.chsh->s_normalized_se) : "");
    }
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
  return os.str();
}

void emit(const RunRecord& record, OutputFormat format, const std::string& path) {
  const std::string payload = format == OutputFormat::csv ? to_csv(record) : to_json(record).dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::fwrite(payload.data(), 1, payload.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << payload;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace zpf
