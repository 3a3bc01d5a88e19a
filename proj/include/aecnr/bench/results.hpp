#pragma once

// Result rows, CSV round-trip, per-group summaries and the run manifest.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace aecnr::bench {

class ResultsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ResultRow {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::string algorithm;
  std::string echo_path;
  std::string stats_mode;
  double delta_snr_i_db = 0.0;
  double erle_i_db = 0.0;
  double sd_i_db = 0.0;

  auto key() const { return std::tie(scenario_id, algorithm, echo_path, stats_mode); }
  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ScenarioFailure {
  std::string scenario_id;
  std::string echo_path;
  std::string stats_mode;
  std::string message;
};

struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<ScenarioFailure> failures;

  void sort() {
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
  }
};

inline constexpr const char* kCsvHeader =
    "scenario_id,seed,algorithm,echo_path,stats_mode,delta_snr_i_db,erle_i_db,sd_i_db";

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ResultsError("csv: not a number: '" + s + "'");
  }
  return v;
}

inline void write_csv(std::ostream& out, const ResultsTable& t) {
  out << kCsvHeader << '\n';
  for (const auto& r : t.rows) {
    for (const std::string* f : {&r.scenario_id, &r.algorithm, &r.echo_path, &r.stats_mode}) {
      if (f->find_first_of(",\n\r\"") != std::string::npos) {
        throw ResultsError("csv: field contains a separator: '" + *f + "'");
      }
    }
    out << r.scenario_id << ',' << r.seed << ',' << r.algorithm << ',' << r.echo_path << ','
        << r.stats_mode << ',' << format_double(r.delta_snr_i_db) << ','
        << format_double(r.erle_i_db) << ',' << format_double(r.sd_i_db) << '\n';
  }
}

inline ResultsTable parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ResultsError("csv: missing or wrong header");
  ResultsTable t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 8) throw ResultsError("csv: line " + std::to_string(lineno) + " has " +
                                          std::to_string(f.size()) + " fields");
    ResultRow r;
    r.scenario_id = f[0];
    {
      const auto res = std::from_chars(f[1].data(), f[1].data() + f[1].size(), r.seed);
      if (res.ec != std::errc() || res.ptr != f[1].data() + f[1].size()) {
        throw ResultsError("csv: bad seed on line " + std::to_string(lineno));
      }
    }
    r.algorithm = f[2];
    r.echo_path = f[3];
    r.stats_mode = f[4];
    r.delta_snr_i_db = parse_double(f[5]);
    r.erle_i_db = parse_double(f[6]);
    r.sd_i_db = parse_double(f[7]);
    t.rows.push_back(std::move(r));
  }
  return t;
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single row
};

struct GroupSummary {
  std::string algorithm;
  std::string echo_path;
  std::string stats_mode;
  std::size_t count = 0;
  MetricSummary delta_snr_i_db, erle_i_db, sd_i_db;
};

inline MetricSummary summarize_values(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

inline std::vector<GroupSummary> summarize(const ResultsTable& t) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<const ResultRow*>> groups;
  for (const auto& r : t.rows) groups[{r.algorithm, r.echo_path, r.stats_mode}].push_back(&r);
  std::vector<GroupSummary> out;
  for (const auto& [k, rows] : groups) {
    GroupSummary g;
    std::tie(g.algorithm, g.echo_path, g.stats_mode) = k;
    g.count = rows.size();
    std::vector<double> a, b, c;
    for (const auto* r : rows) {
      a.push_back(r->delta_snr_i_db);
      b.push_back(r->erle_i_db);
      c.push_back(r->sd_i_db);
    }
    g.delta_snr_i_db = summarize_values(a);
    g.erle_i_db = summarize_values(b);
    g.sd_i_db = summarize_values(c);
    out.push_back(std::move(g));
  }
  return out;
}

inline nlohmann::json summary_json(const ResultsTable& t) {
  auto metric = [](const MetricSummary& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; };
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : summarize(t)) {
    groups.push_back({{"algorithm", g.algorithm},
                      {"echo_path", g.echo_path},
                      {"stats_mode", g.stats_mode},
                      {"count", g.count},
                      {"delta_snr_i_db", metric(g.delta_snr_i_db)},
                      {"erle_i_db", metric(g.erle_i_db)},
                      {"sd_i_db", metric(g.sd_i_db)}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : t.failures) {
    failures.push_back({{"scenario_id", f.scenario_id},
                        {"echo_path", f.echo_path},
                        {"stats_mode", f.stats_mode},
                        {"message", f.message}});
  }
  return {{"groups", groups}, {"failures", failures}, {"rows", t.rows.size()}};
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace aecnr::bench
