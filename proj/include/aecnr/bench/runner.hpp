#pragma once

// End-to-end experiment: seeded scenarios x echo paths x statistics modes x
// algorithms, evaluated by shadow filtering.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/version.hpp>

#include "aecnr/bench/config.hpp"
#include "aecnr/bench/results.hpp"
#include "aecnr/geic.hpp"
#include "aecnr/metrics.hpp"
#include "aecnr/mwf.hpp"
#include "aecnr/room.hpp"
#include "aecnr/stats.hpp"
#include "aecnr/steering.hpp"
#include "aecnr/wav.hpp"
#include "json.hpp"

namespace aecnr::bench {

inline constexpr const char* kToolVersion = "1.0.0";

struct ScenarioInstance {
  std::string id;
  Scenario scenario;  // geometry and levels; echo_path set per run
};

inline std::vector<ScenarioInstance> make_scenarios(const ExperimentConfig& cfg) {
  std::vector<ScenarioInstance> out;
  for (std::size_t k = 0; k < cfg.scenarios; ++k) {
    Scenario sc;
    sc.room = cfg.room;
    sc.reference_mic = cfg.reference_mic;
    sc.snr_db = cfg.snr_db;
    sc.ser_db = cfg.ser_db;
    sc.duration_s = cfg.duration_s;
    sc.far_activity = cfg.far_activity;
    sc.seed = derive_seed(cfg.seed, k);
    Rng rng(sc.seed, 0x504C4345);  // "PLCE"
    place_randomly(sc, cfg.n_speakers, rng);
    char id[16];
    std::snprintf(id, sizeof id, "S%02zu", k + 1);
    out.push_back({id, sc});
  }
  return out;
}

struct SourceInputs {
  std::optional<Signal> near_speech;
  std::optional<Signal> far_speech;
};

inline SourceInputs load_inputs(const ExperimentConfig& cfg) {
  SourceInputs in;
  if (!cfg.near_speech_wav.empty()) in.near_speech = read_mono_wav(cfg.near_speech_wav, cfg.room.sample_rate);
  if (!cfg.far_speech_wav.empty()) in.far_speech = read_mono_wav(cfg.far_speech_wav, cfg.room.sample_rate);
  return in;
}

// Filters for every requested algorithm from one correlation set.
struct DesignedFilters {
  std::vector<std::pair<Algorithm, FilterBank>> banks;
};

struct CaseContext {
  const ExperimentConfig* cfg = nullptr;
  const ScenarioInstance* inst = nullptr;
  Scenario scenario;
  ComponentSignals components;
  ComponentSpectra spectra;
  ActivityLabels truth;
  SteeringVariant true_steering;
  SteeringVariant gj_steering;
};

inline DesignedFilters design_all(const CaseContext& ctx, StatsMode mode) {
  const ExperimentConfig& cfg = *ctx.cfg;
  const std::size_t m = ctx.scenario.n_mics();
  const std::size_t ref = ctx.scenario.reference_mic;
  const VadScalings v = cfg.scalings();

  CorrelationSet c;
  std::optional<OracleCovariances> oc;
  if (mode == StatsMode::Oracle) {
    oc = batch_covariances(ctx.spectra, ctx.truth);
    c = compose(*oc, v);
  } else {
    ActivityLabels labels = ctx.truth;
    if (cfg.vad_errors.any()) {
      labels = corrupt_labels(ctx.truth, cfg.vad_errors, derive_seed(ctx.scenario.seed, 0x564144));
    }
    c = streaming_estimate(ctx.spectra.stacked_mixture(), labels, cfg.forgetting, cfg.regimes());
    if (c.alpha_updates == 0 || c.beta_updates == 0 || c.gamma_updates == 0) {
      throw StatsError("a covariance regime was never visited (alpha " +
                       std::to_string(c.alpha_updates) + ", beta " +
                       std::to_string(c.beta_updates) + ", gamma " +
                       std::to_string(c.gamma_updates) + " frames)");
    }
  }

  auto geic = [&](const SteeringVariant& sv, Algorithm tag) {
    return oc ? geic_solve(c.alpha, *oc, sv, v.alpha_e, tag) : geic_solve(c.alpha, sv, tag);
  };
  std::optional<MwfDesign> rank1;
  auto rank1_design = [&]() -> const MwfDesign& {
    if (!rank1) rank1 = mwf_ext_design(c, m, ref, MwfRank::One);
    return *rank1;
  };

  DesignedFilters out;
  for (Algorithm a : cfg.algorithms) {
    switch (a) {
      case Algorithm::Geic: out.banks.emplace_back(a, geic(ctx.true_steering, a)); break;
      case Algorithm::GeicGj: out.banks.emplace_back(a, geic(ctx.gj_steering, a)); break;
      case Algorithm::GeicGevd:
        out.banks.emplace_back(a, geic(gevd_steering(rank1_design().bins, m, ref), a));
        break;
      case Algorithm::MwfExtRank1: out.banks.emplace_back(a, rank1_design().filters); break;
      case Algorithm::MwfExtFull: out.banks.emplace_back(a, mwf_ext(c, m, ref, MwfRank::Full)); break;
      case Algorithm::Custom: break;
    }
  }
  return out;
}

inline std::string wav_name(const std::string& id, EchoPath p, StatsMode m, std::string_view alg) {
  return id + "_" + std::string(to_string(p)) + "_" + std::string(to_string(m)) + "_" +
         std::string(alg) + ".wav";
}

// All rows for one (scenario, echo path). Failures of a statistics mode are
// recorded and the remaining modes still run.
inline void run_case(const ExperimentConfig& cfg, const ScenarioInstance& inst, EchoPath path,
                     const SourceInputs& inputs, const std::string& wav_dir, ResultsTable& out) {
  CaseContext ctx;
  ctx.cfg = &cfg;
  ctx.inst = &inst;
  ctx.scenario = inst.scenario;
  ctx.scenario.echo_path = path;
  try {
    const SourceSignals src = synthesize_sources(ctx.scenario, inputs.near_speech, inputs.far_speech);
    const RirSet rirs = generate_rirs(ctx.scenario);
    ctx.components = render_scenario(ctx.scenario, src, rirs);
    ctx.spectra = analyze_components(ctx.components, cfg.window);
    ctx.truth = frame_labels(ctx.components, cfg.window);
    ctx.true_steering =
        true_rtf_steering(true_rtf(ctx.scenario, rirs, cfg.window.length), ctx.scenario.reference_mic);
    ctx.gj_steering = griffiths_jim_steering(ctx.scenario, cfg.window.length);
  } catch (const std::exception& e) {
    for (StatsMode mode : cfg.stats_modes) {
      out.failures.push_back({inst.id, std::string(to_string(path)), std::string(to_string(mode)), e.what()});
    }
    return;
  }

  MetricOptions mo;
  mo.window = cfg.window;
  mo.sample_rate = cfg.room.sample_rate;
  mo.weights = cfg.weights();

  for (StatsMode mode : cfg.stats_modes) {
    try {
      const DesignedFilters d = design_all(ctx, mode);
      std::vector<ResultRow> rows;
      for (const auto& [alg, fb] : d.banks) {
        const ShadowOutputs y = shadow_filter(ctx.spectra, fb, cfg.window);
        const MetricsReport r = evaluate(ctx.components, y, ctx.scenario.reference_mic, mo);
        rows.push_back({inst.id, inst.scenario.seed, std::string(to_string(alg)),
                        std::string(to_string(path)), std::string(to_string(mode)), r.delta_snr_i,
                        r.erle_i, r.sd_i});
        if (!wav_dir.empty()) {
          write_wav(wav_dir + "/" + wav_name(inst.id, path, mode, to_string(alg)),
                    {cfg.room.sample_rate, {y.mixture}});
        }
      }
      out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    } catch (const std::exception& e) {
      out.failures.push_back({inst.id, std::string(to_string(path)), std::string(to_string(mode)), e.what()});
    }
  }
  if (!wav_dir.empty()) {
    write_wav(wav_dir + "/" + inst.id + "_" + std::string(to_string(path)) + "_input.wav",
              {cfg.room.sample_rate, {ctx.components.mixture()[ctx.scenario.reference_mic]}});
  }
}

// Deterministic for a fixed config regardless of `jobs`.
inline ResultsTable run_experiment(const ExperimentConfig& cfg, const std::string& wav_dir = {}) {
  const std::vector<ScenarioInstance> scenarios = make_scenarios(cfg);
  const SourceInputs inputs = load_inputs(cfg);
  struct Task {
    std::size_t scenario;
    EchoPath path;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (EchoPath p : cfg.echo_paths) tasks.push_back({s, p});

  std::vector<ResultsTable> partial(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      run_case(cfg, scenarios[tasks[i].scenario], tasks[i].path, inputs, wav_dir, partial[i]);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.jobs, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ResultsTable table;
  for (auto& p : partial) {
    table.rows.insert(table.rows.end(), p.rows.begin(), p.rows.end());
    table.failures.insert(table.failures.end(), p.failures.begin(), p.failures.end());
  }
  table.sort();
  return table;
}

inline std::string manifest_text(const ExperimentConfig& cfg, const std::string& config_text,
                                 const ResultsTable& t) {
  std::ostringstream m;
  m << "tool aecnr_bench " << kToolVersion << '\n';
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_text)));
  m << "config_fnv1a64 " << hash << '\n';
  m << "seed " << cfg.seed << '\n';
  m << "scenarios " << cfg.scenarios << '\n';
  m << "rows " << t.rows.size() << '\n';
  m << "failures " << t.failures.size() << '\n';
  m << "compiler " << __VERSION__ << '\n';
  m << "cxx_standard " << __cplusplus << '\n';
  m << "boost " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.'
    << BOOST_VERSION % 100 << '\n';
  m << "nlohmann_json " << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.'
    << NLOHMANN_JSON_VERSION_PATCH << '\n';
  return m.str();
}

// results.csv, summary.json and manifest.txt under out_dir.
inline void write_artifacts(const ExperimentConfig& cfg, const std::string& config_text,
                            const ResultsTable& t, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir + "/results.csv", std::ios::binary);
    write_csv(csv, t);
  }
  {
    std::ofstream js(out_dir + "/summary.json");
    js << summary_json(t).dump(2) << '\n';
  }
  {
    std::ofstream mf(out_dir + "/manifest.txt");
    mf << manifest_text(cfg, config_text, t);
  }
}

}  // namespace aecnr::bench
