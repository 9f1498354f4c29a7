#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "zpf/analysis.hpp"
#include "zpf/experiment.hpp"
#include "zpf/units.hpp"

namespace zpf {

inline constexpr const char* kToolVersion = "0.3.1";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kRecordSchemaVersion = 1;

enum class RunMode { mc, analytic, both };

struct BeamConfig {
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  std::vector<int> polarizations{0};
};

struct PairConfig {
  std::string signal;
  int signal_polarization = 0;
  std::string idler;
  int idler_polarization = 0;
};

struct SourceConfig {
  double g = 0;
  std::vector<PairConfig> pairs;
};

struct OpticConfig {
  enum class Kind { rotator, beam_splitter, lens } kind = Kind::rotator;
  std::string beam;    ///< rotator target, or first splitter port
  std::string beam_b;  ///< second splitter port
  std::string detector;  ///< lens target
  double angle = 0;
  double transmittance = 0.5;
  double phase = 0;
  LensSpecd lens{1, 1, 1, DiffractionRing::first};
};

struct DetectorConfig {
  enum class Threshold { absolute, vacuum_multiple, sigma_offset };
  std::string name;
  std::string beam;
  int polarization = 0;
  double radius = 0;
  double length = 0;
  double efficiency = 0;
  Threshold threshold_kind = Threshold::sigma_offset;
  double threshold_value = 3;
  std::optional<double> gain;        ///< per unit effective intensity
  std::optional<double> gain_sigma;  ///< gain * sigma0
};

struct ChshStationConfig {
  std::string beam;
  std::string plus;
  std::string minus;
};

struct ChshConfig {
  ChshStationConfig station_a;
  ChshStationConfig station_b;
  std::vector<std::pair<double, double>> settings;
  ChshResponse response = ChshResponse::model;
};

struct SweepAxis {
  std::string path;  ///< JSON pointer into the config
  std::vector<double> values;
};

/// Validated configuration, held in internal natural units. `normalized`
/// keeps the document as given plus every filled default.
struct ExperimentConfig {
  UnitSystem units = UnitSystem::dimensionless();
  double window = 1;
  double coherence_time = 1.0 / 64;
  double center_frequency = 0;
  std::optional<double> box_volume;
  std::vector<BeamConfig> beams;
  std::optional<SourceConfig> source;
  std::vector<OpticConfig> optics;
  std::vector<DetectorConfig> detectors;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::both;
  std::optional<double> correlation;
  double constraint_k = 3;
  std::optional<ChshConfig> chsh;
  std::vector<SweepAxis> sweeps;
  nlohmann::json normalized;
};

/// Parses, checks the schema strictly and validates every invariant.
/// Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// JSON text to document; ConfigError with line and column on malformed input.
nlohmann::json parse_document(const std::string& text);
nlohmann::json read_document(const std::string& path);
/// Same, from an already-parsed document.
ExperimentConfig config_from_json(const nlohmann::json& document);

/// Content hash of the normalized config; independent of key order.
std::string config_digest(const nlohmann::json& normalized);

/// An Experiment plus the name lookups the harness needs.
struct BuiltExperiment {
  Experiment experiment;
  std::vector<std::string> detector_names;
  std::vector<double> lens_gain;  ///< per detector, 1 without a lens
  std::optional<std::pair<ChshStation, ChshStation>> chsh;
  std::vector<std::string> warnings;
};

BuiltExperiment build_experiment(const ExperimentConfig& config);

struct DetectorRow {
  std::string name;
  double vacuum_mean = 0;
  double vacuum_sigma = 0;
  double threshold = 0;
  double gain = 0;
  double signal_intensity = 0;
  std::optional<double> p_analytic;
  std::optional<Estimate> p_mc;
  std::optional<Estimate> mc_intensity_mean;
  std::optional<double> mc_intensity_sd;
  Regime regime = Regime::dark;
  double dark_margin_sigma = 0;
  double linear_margin_sigma = 0;
  bool feasible = false;
};

struct CoincidenceRow {
  std::string first;
  std::string second;
  std::optional<double> corr;
  std::optional<double> p_analytic;
  std::optional<Estimate> p_mc;
};

struct PointResult {
  std::size_t index = 0;
  std::vector<double> axis_values;
  std::vector<DetectorRow> detectors;
  std::vector<CoincidenceRow> coincidences;
  std::optional<ChshResult> chsh;
  std::vector<std::string> warnings;
};

struct RunRecord {
  std::string tool_version = kToolVersion;
  std::string config_digest;
  nlohmann::json config;
  std::vector<std::string> axes;
  std::vector<std::string> detector_names;
  bool has_chsh = false;
  std::vector<PointResult> points;
};

RunRecord run(const ExperimentConfig& config, int workers = 0);

enum class OutputFormat { csv, json };

nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& document);

/// Fixed column order: point_index, each sweep axis, then per detector
/// signal_intensity, threshold, p_analytic, p_mc, p_mc_se, regime,
/// dark_margin_sigma, linear_margin_sigma, feasible; per detector pair
/// corr, p_analytic, p_mc, p_mc_se; then S, S_se, E1..E4, S_normalized,
/// S_normalized_se when CHSH is on.
std::vector<std::string> csv_header(const RunRecord& record);
std::string to_csv(const RunRecord& record);

void emit(const RunRecord& record, OutputFormat format, const std::string& path);

}  // namespace zpf
