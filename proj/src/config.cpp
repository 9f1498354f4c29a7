#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "zpf/error.hpp"
#include "zpf/harness.hpp"

namespace zpf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  std::string unknown;
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) unknown += (unknown.empty() ? "" : ", ") + item.key();
  }
  if (!unknown.empty()) fail(where, "unknown key(s): " + unknown);
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) fail(where, "missing required key '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(where, "'" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "'" + key + "' must be finite");
  return x;
}

double number_or(json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) obj[key] = fallback;
  return number(obj, key, where);
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_string()) fail(where, "'" + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

int polarization(json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) obj[key] = 0;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
    fail(where, "'" + key + "' must be 0 or 1");
  return v.get<int>();
}

Eigen::Vector3d vec3(json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) obj[key] = json::array({0.0, 0.0, 1.0});
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 3) fail(where, "'" + key + "' must be a 3-vector");
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) fail(where, "'" + key + "' must hold numbers");
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  if (!out.allFinite() || out.norm() == 0) fail(where, "'" + key + "' must be a finite nonzero vector");
  return out.normalized();
}

std::pair<std::size_t, std::size_t> line_column(const std::string& s, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < s.size() && i + 1 < byte; ++i) {
    if (s[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ExperimentConfig config_from_json(const json& document) {
  json doc = document;
  check_keys(doc, {"schema_version", "unit_system", "band", "box_volume", "beams", "source", "optics", "detectors",
                   "run", "chsh", "sweeps"},
             "config");
  ExperimentConfig cfg;

  if (!doc.contains("schema_version")) doc["schema_version"] = kConfigSchemaVersion;
  if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kConfigSchemaVersion)
    fail("config", "unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");

  if (!doc.contains("unit_system")) doc["unit_system"] = "dimensionless";
  const std::string units = text(doc, "unit_system", "config");
  if (units != "dimensionless" && units != "SI") fail("config", "unit_system must be 'dimensionless' or 'SI'");
  const bool si_units = units == "SI";

  // Band shared by every beam and detector.
  if (!doc.contains("band")) {
    if (si_units) fail("config", "SI configs need an explicit band");
    doc["band"] = json::object();
  }
  {
    auto& band = doc["band"];
    check_keys(band, {"T", "tau", "omega_bar"}, "band");
    const double window = number_or(band, "T", 1.0, "band");
    if (!(window > 0)) fail("band", "T must be positive");
    const double tau = number_or(band, "tau", window / 64.0, "band");
    if (!(tau > 0 && tau <= window)) fail("band", "requires 0 < tau <= T");
    const double modes = std::round(window / tau);
    if (si_units && !band.contains("omega_bar")) fail("band", "SI configs need omega_bar");
    const double omega_bar = number_or(band, "omega_bar", 20.0 * 2.0 * std::numbers::pi * modes / window, "band");
    cfg.units = si_units ? UnitSystem::si_anchored(window) : UnitSystem::dimensionless();
    cfg.window = cfg.units.to_internal(window, Quantity::time);
    cfg.coherence_time = cfg.units.to_internal(tau, Quantity::time);
    cfg.center_frequency = cfg.units.to_internal(omega_bar, Quantity::angular_frequency);
    if (!(cfg.center_frequency > 0)) fail("band", "omega_bar must be positive");
  }
  const double length_unit = cfg.units.scale(Quantity::length);

  if (doc.contains("box_volume")) {
    const double v = number(doc, "box_volume", "config");
    if (!(v > 0)) fail("config", "box_volume must be positive");
    cfg.box_volume = v / (length_unit * length_unit * length_unit);
  }

  // Beams.
  if (!doc.contains("beams") || !doc["beams"].is_array() || doc["beams"].empty())
    fail("config", "'beams' must be a non-empty array");
  std::set<std::string> beam_names;
  for (std::size_t i = 0; i < doc["beams"].size(); ++i) {
    auto& b = doc["beams"][i];
    const std::string where = "beams[" + std::to_string(i) + "]";
    check_keys(b, {"name", "axis", "polarizations"}, where);
    BeamConfig beam;
    beam.name = text(b, "name", where);
    if (!beam_names.insert(beam.name).second) fail(where, "duplicate beam name '" + beam.name + "'");
    beam.axis = vec3(b, "axis", where);
    if (!b.contains("polarizations")) b["polarizations"] = json::array({0});
    const auto& p = b["polarizations"];
    if (!p.is_array() || p.empty() || p.size() > 2) fail(where, "'polarizations' must list 0 and/or 1");
    beam.polarizations.clear();
    for (const auto& v : p) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
        fail(where, "'polarizations' must list 0 and/or 1");
      beam.polarizations.push_back(v.get<int>());
    }
    if (beam.polarizations.size() == 2 && beam.polarizations[0] == beam.polarizations[1])
      fail(where, "'polarizations' lists a polarization twice");
    cfg.beams.push_back(beam);
  }
  auto has_beam_pol = [&](const std::string& name, int pol) {
    for (const auto& b : cfg.beams)
      if (b.name == name)
        for (int p : b.polarizations)
          if (p == pol) return true;
    return false;
  };

  // Source.
  if (doc.contains("source")) {
    auto& s = doc["source"];
    check_keys(s, {"g", "pairs"}, "source");
    SourceConfig src;
    src.g = number(s, "g", "source");
    if (!(src.g >= 0)) fail("source", "g must be non-negative");
    if (!s.contains("pairs") || !s["pairs"].is_array() || s["pairs"].empty())
      fail("source", "'pairs' must be a non-empty array");
    for (std::size_t i = 0; i < s["pairs"].size(); ++i) {
      auto& p = s["pairs"][i];
      const std::string where = "source.pairs[" + std::to_string(i) + "]";
      check_keys(p, {"signal", "signal_polarization", "idler", "idler_polarization"}, where);
      PairConfig pair;
      pair.signal = text(p, "signal", where);
      pair.idler = text(p, "idler", where);
      pair.signal_polarization = polarization(p, "signal_polarization", where);
      pair.idler_polarization = polarization(p, "idler_polarization", where);
      if (!has_beam_pol(pair.signal, pair.signal_polarization) || !has_beam_pol(pair.idler, pair.idler_polarization))
        fail(where, "references a beam/polarization that does not exist");
      if (!src.pairs.empty()) {
        const auto& first = src.pairs.front();
        const bool same = (first.signal == pair.signal && first.idler == pair.idler) ||
                          (first.signal == pair.idler && first.idler == pair.signal);
        if (!same) fail(where, "all pairs must connect the same two beams (single pump)");
      }
      src.pairs.push_back(pair);
    }
    cfg.source = src;
  }

  // Optics chain.
  if (!doc.contains("optics")) doc["optics"] = json::array();
  if (!doc["optics"].is_array()) fail("config", "'optics' must be an array");
  std::vector<std::string> lens_targets;
  for (std::size_t i = 0; i < doc["optics"].size(); ++i) {
    auto& o = doc["optics"][i];
    const std::string where = "optics[" + std::to_string(i) + "]";
    if (!o.is_object()) fail(where, "expected an object");
    const std::string type = text(o, "type", where);
    OpticConfig op;
    if (type == "rotator") {
      check_keys(o, {"type", "beam", "angle"}, where);
      op.kind = OpticConfig::Kind::rotator;
      op.beam = text(o, "beam", where);
      op.angle = number(o, "angle", where);
      if (!has_beam_pol(op.beam, 0) || !has_beam_pol(op.beam, 1))
        fail(where, "rotator needs a beam carrying both polarizations");
    } else if (type == "beam_splitter") {
      check_keys(o, {"type", "beam", "beam_b", "transmittance", "phase"}, where);
      op.kind = OpticConfig::Kind::beam_splitter;
      op.beam = text(o, "beam", where);
      op.beam_b = text(o, "beam_b", where);
      op.transmittance = number_or(o, "transmittance", 0.5, where);
      op.phase = number_or(o, "phase", 0.0, where);
      if (!beam_names.count(op.beam) || !beam_names.count(op.beam_b) || op.beam == op.beam_b)
        fail(where, "beam splitter needs two distinct existing beams");
      if (!(op.transmittance >= 0 && op.transmittance <= 1)) fail(where, "transmittance must lie in [0, 1]");
    } else if (type == "lens") {
      check_keys(o, {"type", "detector", "radius", "focal_length", "wavelength", "ring"}, where);
      op.kind = OpticConfig::Kind::lens;
      op.detector = text(o, "detector", where);
      op.lens.radius = number(o, "radius", where) / length_unit;
      op.lens.focal_length = number(o, "focal_length", where) / length_unit;
      op.lens.wavelength = number(o, "wavelength", where) / length_unit;
      if (!o.contains("ring")) o["ring"] = "first";
      const std::string ring = text(o, "ring", where);
      if (ring != "first" && ring != "second") fail(where, "ring must be 'first' or 'second'");
      op.lens.ring = ring == "first" ? DiffractionRing::first : DiffractionRing::second;
      try {
        validate(op.lens);
      } catch (const InvalidInput& e) {
        fail(where, e.what());
      }
      lens_targets.push_back(op.detector);
    } else {
      fail(where, "unknown optic type '" + type + "'");
    }
    cfg.optics.push_back(op);
  }

  // Detectors.
  if (!doc.contains("detectors") || !doc["detectors"].is_array() || doc["detectors"].empty())
    fail("config", "'detectors' must be a non-empty array");
  std::set<std::string> detector_names;
  for (std::size_t i = 0; i < doc["detectors"].size(); ++i) {
    auto& d = doc["detectors"][i];
    const std::string where = "detectors[" + std::to_string(i) + "]";
    check_keys(d, {"name", "beam", "polarization", "radius", "length", "efficiency", "threshold", "threshold_i0",
                   "threshold_sigma", "gain", "gain_sigma"},
               where);
    DetectorConfig det;
    det.name = text(d, "name", where);
    if (!detector_names.insert(det.name).second) fail(where, "duplicate detector name '" + det.name + "'");
    det.beam = text(d, "beam", where);
    det.polarization = polarization(d, "polarization", where);
    if (!has_beam_pol(det.beam, det.polarization)) fail(where, "watches a beam/polarization that does not exist");
    if (si_units && (!d.contains("radius") || !d.contains("length")))
      fail(where, "SI configs need explicit radius and length");
    // dimensionless defaults: 20 and 50 center wavelengths
    const double wavelength = 2.0 * std::numbers::pi / cfg.center_frequency;
    det.radius = number_or(d, "radius", 20.0 * wavelength, where) / length_unit;
    det.length = number_or(d, "length", 50.0 * wavelength, where) / length_unit;
    det.efficiency = number_or(d, "efficiency", 0.1, where);
    const int threshold_keys = static_cast<int>(d.contains("threshold")) + static_cast<int>(d.contains("threshold_i0")) +
                               static_cast<int>(d.contains("threshold_sigma"));
    if (threshold_keys > 1) fail(where, "give at most one of threshold, threshold_i0, threshold_sigma");
    if (threshold_keys == 0) d["threshold_sigma"] = 3.0;
    if (d.contains("threshold")) {
      det.threshold_kind = DetectorConfig::Threshold::absolute;
      det.threshold_value = cfg.units.to_internal(number(d, "threshold", where), Quantity::intensity);
    } else if (d.contains("threshold_i0")) {
      det.threshold_kind = DetectorConfig::Threshold::vacuum_multiple;
      det.threshold_value = number(d, "threshold_i0", where);
    } else {
      det.threshold_kind = DetectorConfig::Threshold::sigma_offset;
      det.threshold_value = number(d, "threshold_sigma", where);
    }
    if (d.contains("gain") && d.contains("gain_sigma")) fail(where, "give at most one of gain, gain_sigma");
    if (d.contains("gain")) det.gain = number(d, "gain", where) * cfg.units.scale(Quantity::intensity);
    if (d.contains("gain_sigma")) det.gain_sigma = number(d, "gain_sigma", where);
    cfg.detectors.push_back(det);
  }
  for (const auto& target : lens_targets)
    if (!detector_names.count(target)) fail("optics", "lens targets unknown detector '" + target + "'");

  // Run.
  if (!doc.contains("run")) doc["run"] = json::object();
  {
    auto& r = doc["run"];
    check_keys(r, {"trials", "seed", "mode", "correlation", "k"}, "run");
    if (!r.contains("trials")) r["trials"] = 10000;
    if (!r["trials"].is_number_integer() || r["trials"].get<long long>() < 1)
      fail("run", "'trials' must be a positive integer");
    cfg.trials = r["trials"].get<std::size_t>();
    if (!r.contains("seed")) r["seed"] = 0;
    if (!r["seed"].is_number_unsigned() && !(r["seed"].is_number_integer() && r["seed"].get<long long>() >= 0))
      fail("run", "'seed' must be a non-negative integer");
    cfg.seed = r["seed"].get<std::uint64_t>();
    if (!r.contains("mode")) r["mode"] = "both";
    const std::string mode = text(r, "mode", "run");
    if (mode == "mc") {
      cfg.mode = RunMode::mc;
    } else if (mode == "analytic") {
      cfg.mode = RunMode::analytic;
    } else if (mode == "both") {
      cfg.mode = RunMode::both;
    } else {
      fail("run", "mode must be 'mc', 'analytic' or 'both'");
    }
    if (r.contains("correlation")) {
      const double c = number(r, "correlation", "run");
      if (!(std::abs(c) <= 1)) fail("run", "correlation must lie in [-1, 1]");
      cfg.correlation = c;
    }
    cfg.constraint_k = number_or(r, "k", 3.0, "run");
    if (!(cfg.constraint_k > 0)) fail("run", "k must be positive");
  }

  // CHSH.
  if (doc.contains("chsh")) {
    auto& c = doc["chsh"];
    check_keys(c, {"station_a", "station_b", "settings", "response"}, "chsh");
    ChshConfig chsh;
    auto station = [&](const char* key) {
      const std::string where = std::string("chsh.") + key;
      if (!c.contains(key)) fail("chsh", std::string("missing '") + key + "'");
      auto& s = c[key];
      check_keys(s, {"beam", "plus", "minus"}, where);
      ChshStationConfig st{text(s, "beam", where), text(s, "plus", where), text(s, "minus", where)};
      if (!has_beam_pol(st.beam, 0) || !has_beam_pol(st.beam, 1))
        fail(where, "station beam must carry both polarizations");
      if (!detector_names.count(st.plus) || !detector_names.count(st.minus))
        fail(where, "station references an unknown detector");
      return st;
    };
    chsh.station_a = station("station_a");
    chsh.station_b = station("station_b");
    if (!c.contains("settings") || !c["settings"].is_array() || c["settings"].size() != 4)
      fail("chsh", "'settings' must hold exactly four [angle_a, angle_b] pairs");
    for (const auto& s : c["settings"]) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
        fail("chsh", "each setting must be [angle_a, angle_b]");
      chsh.settings.emplace_back(s[0].get<double>(), s[1].get<double>());
    }
    try {
      validate_chsh_settings(chsh.settings);
    } catch (const InvalidInput& e) {
      fail("chsh", e.what());
    }
    if (!c.contains("response")) c["response"] = "model";
    const std::string response = text(c, "response", "chsh");
    if (response == "model") {
      chsh.response = ChshResponse::model;
    } else if (response == "forced_plus") {
      chsh.response = ChshResponse::forced_plus;
    } else {
      fail("chsh", "response must be 'model' or 'forced_plus'");
    }
    cfg.chsh = chsh;
  }

  // Sweeps.
  if (!doc.contains("sweeps")) doc["sweeps"] = json::array();
  if (!doc["sweeps"].is_array()) fail("config", "'sweeps' must be an array");
  for (std::size_t i = 0; i < doc["sweeps"].size(); ++i) {
    auto& s = doc["sweeps"][i];
    const std::string where = "sweeps[" + std::to_string(i) + "]";
    check_keys(s, {"path", "values"}, where);
    SweepAxis axis;
    axis.path = text(s, "path", where);
    try {
      (void)json::json_pointer(axis.path);
    } catch (const json::exception&) {
      fail(where, "'path' is not a JSON pointer");
    }
    if (axis.path.rfind("/sweeps", 0) == 0) fail(where, "a sweep cannot target the sweeps themselves");
    if (!s.contains("values") || !s["values"].is_array()) fail(where, "'values' must be an array");
    for (const auto& v : s["values"]) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) fail(where, "sweep values must be finite numbers");
      axis.values.push_back(v.get<double>());
    }
    cfg.sweeps.push_back(axis);
  }

  cfg.normalized = doc;
  // Physics invariants need the built detectors (I_m > I0 after unit conversion).
  try {
    (void)build_experiment(cfg);
  } catch (const InvalidInput& e) {
    fail("config", e.what());
  }
  return cfg;
}

json parse_document(const std::string& content) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(content, e.byte);
    throw ConfigError("parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                          e.what(),
                      true);
  }
}

json read_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", true);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_document(buffer.str());
}

ExperimentConfig parse_config(const std::string& content) { return config_from_json(parse_document(content)); }

ExperimentConfig load_config(const std::string& path) { return config_from_json(read_document(path)); }

std::string config_digest(const json& normalized) {
  const std::string canonical = normalized.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace zpf
