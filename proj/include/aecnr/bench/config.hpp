#pragma once

// Experiment configuration: INI text (sections of key = value), validated
// against a fixed schema. Unknown sections or keys are rejected with the
// offending key path.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "aecnr/filter_bank.hpp"
#include "aecnr/metrics.hpp"
#include "aecnr/room.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/stft.hpp"

namespace aecnr::bench {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& what)
      : std::runtime_error(key_path.empty() ? what : key_path + ": " + what), key_path_(key_path) {}
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

enum class StatsMode { Oracle, Streaming };

inline std::string_view to_string(StatsMode m) {
  return m == StatsMode::Oracle ? "oracle" : "streaming";
}

enum class VadPreset { PermanentDoubletalk, ErrorFree, MicrophoneOnly };

struct ExperimentConfig {
  // [experiment]
  std::size_t scenarios = 5;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<EchoPath> echo_paths{EchoPath::Linear, EchoPath::HammersteinCubic};
  std::vector<StatsMode> stats_modes{StatsMode::Oracle, StatsMode::Streaming};
  VadPreset vad_preset = VadPreset::PermanentDoubletalk;
  std::size_t n_speakers = 2;
  std::size_t reference_mic = 0;
  // [room]
  RoomSpec room{};
  // [levels]
  double snr_db = 5.0;
  double ser_db = 5.0;
  double duration_s = 10.0;
  FarActivity far_activity = FarActivity::Coincident;
  // [stft]
  WindowSpec window{};
  double forgetting = kDefaultForgetting;
  // [vad] label corruption in streaming mode
  VadErrorRates vad_errors{};
  // [metrics]
  std::string band_weights = "ansi";  // uniform | ansi | <path>
  // [input]
  std::string near_speech_wav;
  std::string far_speech_wav;
  // [output]
  std::string out_dir = "results";
  bool write_wav = false;
  std::size_t jobs = 1;

  VadScalings scalings() const {
    switch (vad_preset) {
      case VadPreset::ErrorFree: return VadScalings::error_free();
      case VadPreset::MicrophoneOnly: return VadScalings::microphone_only();
      default: return VadScalings::permanent_doubletalk();
    }
  }
  RegimeMap regimes() const {
    return vad_preset == VadPreset::PermanentDoubletalk ? RegimeMap::permanent_doubletalk()
                                                        : RegimeMap::separate_vads();
  }
  BandWeights weights() const {
    if (band_weights == "uniform") return BandWeights::uniform();
    if (band_weights == "ansi") return BandWeights::ansi_third_octave();
    return BandWeights::load(band_weights);
  }
};

namespace detail {

using Tree = boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment",
       {"scenarios", "seed", "algorithms", "echo_paths", "stats_modes", "vad_preset", "n_speakers",
        "reference_mic"}},
      {"room",
       {"dimensions", "reflection_coefficient", "displacement_radius", "rir_length", "sample_rate",
        "speed_of_sound"}},
      {"levels", {"snr_db", "ser_db", "duration_s", "far_activity"}},
      {"stft", {"window_length", "hop", "forgetting"}},
      {"vad", {"miss_s", "false_s", "miss_e", "false_e"}},
      {"metrics", {"band_weights"}},
      {"input", {"near_speech_wav", "far_speech_wav"}},
      {"output", {"dir", "write_wav", "jobs"}},
  };
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
T parse_number(const std::string& path, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  std::string rest;
  if (in.fail() || (in >> rest)) throw ConfigError(path, "not a valid number: '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& path, const std::string& text) {
  if (text.find('-') != std::string::npos) throw ConfigError(path, "must be non-negative");
  return parse_number<std::size_t>(path, text);
}

inline bool parse_bool(const std::string& path, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(path, "expected true or false, got '" + text + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  detail::Tree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " +
                              std::to_string(e.line()) + ")");
  }
  const auto& sch = detail::schema();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside a section");
    const auto it = sch.find(section);
    if (it == sch.end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
      (void)value;
    }
  }

  ExperimentConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(detail::Tree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double& dst) {
    if (auto v = get(path)) dst = detail::parse_number<double>(path, *v);
  };
  auto count = [&](const std::string& path, std::size_t& dst) {
    if (auto v = get(path)) dst = detail::parse_count(path, *v);
  };

  count("experiment.scenarios", c.scenarios);
  if (auto v = get("experiment.seed")) c.seed = detail::parse_number<std::uint64_t>("experiment.seed", *v);
  if (auto v = get("experiment.algorithms")) {
    c.algorithms.clear();
    for (const auto& name : detail::split_list(*v)) {
      const auto a = parse_algorithm(name);
      if (!a) throw ConfigError("experiment.algorithms", "unknown algorithm '" + name + "'");
      c.algorithms.push_back(*a);
    }
  }
  if (auto v = get("experiment.echo_paths")) {
    c.echo_paths.clear();
    for (const auto& name : detail::split_list(*v)) {
      if (name == "linear") c.echo_paths.push_back(EchoPath::Linear);
      else if (name == "hammerstein") c.echo_paths.push_back(EchoPath::HammersteinCubic);
      else throw ConfigError("experiment.echo_paths", "unknown echo path '" + name + "'");
    }
  }
  if (auto v = get("experiment.stats_modes")) {
    c.stats_modes.clear();
    for (const auto& name : detail::split_list(*v)) {
      if (name == "oracle") c.stats_modes.push_back(StatsMode::Oracle);
      else if (name == "streaming") c.stats_modes.push_back(StatsMode::Streaming);
      else throw ConfigError("experiment.stats_modes", "unknown stats mode '" + name + "'");
    }
  }
  if (auto v = get("experiment.vad_preset")) {
    if (*v == "permanent_doubletalk") c.vad_preset = VadPreset::PermanentDoubletalk;
    else if (*v == "error_free") c.vad_preset = VadPreset::ErrorFree;
    else if (*v == "microphone_only") c.vad_preset = VadPreset::MicrophoneOnly;
    else throw ConfigError("experiment.vad_preset", "unknown preset '" + *v + "'");
  }
  count("experiment.n_speakers", c.n_speakers);
  count("experiment.reference_mic", c.reference_mic);

  if (auto v = get("room.dimensions")) {
    const auto parts = detail::split_list(*v);
    if (parts.size() != 3) throw ConfigError("room.dimensions", "expected three comma-separated values");
    for (std::size_t i = 0; i < 3; ++i) {
      c.room.dimensions[i] = detail::parse_number<double>("room.dimensions", parts[i]);
    }
  }
  num("room.reflection_coefficient", c.room.reflection_coefficient);
  num("room.displacement_radius", c.room.displacement_radius);
  count("room.rir_length", c.room.rir_length);
  num("room.sample_rate", c.room.sample_rate);
  num("room.speed_of_sound", c.room.speed_of_sound);

  num("levels.snr_db", c.snr_db);
  num("levels.ser_db", c.ser_db);
  num("levels.duration_s", c.duration_s);
  if (auto v = get("levels.far_activity")) {
    if (*v == "coincident") c.far_activity = FarActivity::Coincident;
    else if (*v == "offset") c.far_activity = FarActivity::Offset;
    else throw ConfigError("levels.far_activity", "expected coincident or offset");
  }

  count("stft.window_length", c.window.length);
  count("stft.hop", c.window.hop);
  num("stft.forgetting", c.forgetting);

  num("vad.miss_s", c.vad_errors.miss_s);
  num("vad.false_s", c.vad_errors.false_s);
  num("vad.miss_e", c.vad_errors.miss_e);
  num("vad.false_e", c.vad_errors.false_e);

  if (auto v = get("metrics.band_weights")) c.band_weights = *v;
  if (auto v = get("input.near_speech_wav")) c.near_speech_wav = *v;
  if (auto v = get("input.far_speech_wav")) c.far_speech_wav = *v;
  if (auto v = get("output.dir")) c.out_dir = *v;
  if (auto v = get("output.write_wav")) c.write_wav = detail::parse_bool("output.write_wav", *v);
  count("output.jobs", c.jobs);

  // Semantic checks, reported against the key that carries the value.
  if (c.scenarios == 0) throw ConfigError("experiment.scenarios", "must be at least 1");
  if (c.algorithms.empty()) throw ConfigError("experiment.algorithms", "empty list");
  if (c.echo_paths.empty()) throw ConfigError("experiment.echo_paths", "empty list");
  if (c.stats_modes.empty()) throw ConfigError("experiment.stats_modes", "empty list");
  if (c.n_speakers == 0) throw ConfigError("experiment.n_speakers", "at least one loudspeaker");
  if (c.reference_mic >= 2) throw ConfigError("experiment.reference_mic", "two microphones are fixed");
  if (!(c.duration_s > 0.0)) throw ConfigError("levels.duration_s", "must be positive");
  if (!(c.forgetting > 0.0 && c.forgetting < 1.0)) throw ConfigError("stft.forgetting", "must lie in (0, 1)");
  if (c.jobs == 0) throw ConfigError("output.jobs", "must be at least 1");
  try {
    c.window.validate();
  } catch (const std::exception& e) {
    throw ConfigError("stft.window_length", e.what());
  }
  try {
    c.room.validate();
  } catch (const std::exception& e) {
    throw ConfigError("room", e.what());
  }
  try {
    c.vad_errors.validate();
  } catch (const std::exception& e) {
    throw ConfigError("vad", e.what());
  }
  if (c.band_weights != "uniform" && c.band_weights != "ansi") {
    try {
      (void)c.weights();
    } catch (const std::exception& e) {
      throw ConfigError("metrics.band_weights", e.what());
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  return parse_config(in);
}

}  // namespace aecnr::bench
