#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gmleb/diagnostics.hpp"
#include "gmleb/estimators.hpp"
#include "gmleb/io.hpp"
#include "gmleb/rng.hpp"

namespace gmleb {

struct BinarySignal {
  std::size_t nonzero = 0;
  double mu = 0.0;
};

struct BinaryPerturbedSignal {
  std::size_t nonzero = 0;
  double mu = 0.0;
  double half_width = 0.2;
};

struct GaussianSignal {
  double mu = 0.0;
  double sigma2 = 1.0;
};

using Signal = std::variant<BinarySignal, BinaryPerturbedSignal, GaussianSignal>;

struct ScenarioConfig {
  std::string id;
  std::size_t n = 0;
  Signal signal;
  std::vector<EstimatorSpec> estimators;
  std::size_t replications = 100;
  std::uint64_t base_seed = 0;

  void validate() const {
    if (n == 0) throw std::invalid_argument("scenario " + id + ": n must be positive");
    if (replications == 0) throw std::invalid_argument("scenario " + id + ": replications must be >= 1");
    if (estimators.empty()) throw std::invalid_argument("scenario " + id + ": no estimators");
    if (const auto* b = std::get_if<BinarySignal>(&signal)) {
      if (b->nonzero > n) throw std::invalid_argument("scenario " + id + ": nonzero count exceeds n");
    } else if (const auto* bp = std::get_if<BinaryPerturbedSignal>(&signal)) {
      if (bp->nonzero > n) throw std::invalid_argument("scenario " + id + ": nonzero count exceeds n");
    } else if (const auto* ga = std::get_if<GaussianSignal>(&signal)) {
      if (!(ga->sigma2 > 0.0)) throw std::invalid_argument("scenario " + id + ": sigma2 must be positive");
    }
  }
};

struct SimulationRecord {
  std::string scenario_id;
  std::string estimator;
  std::size_t rep = 0;
  double total_sq_error = 0.0;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
  bool skipped = false;  //!< estimator precondition failed for this input
};

struct AggregateRow {
  std::string scenario_id;
  std::string estimator;
  double mean_total_sq_error = 0.0;
  double standard_error = 0.0;  //!< sample std / sqrt(reps)
  std::size_t replications = 0;
};

namespace detail {

inline std::vector<double> draw_truth(const ScenarioConfig& sc, Rng& rng) {
  std::vector<double> theta(sc.n, 0.0);
  if (const auto* b = std::get_if<BinarySignal>(&sc.signal)) {
    for (std::size_t i = 0; i < b->nonzero; ++i) theta[i] = b->mu;
  } else if (const auto* bp = std::get_if<BinaryPerturbedSignal>(&sc.signal)) {
    for (std::size_t i = 0; i < bp->nonzero; ++i) theta[i] = bp->mu;
    for (double& t : theta) t += rng.uniform(-bp->half_width, bp->half_width);
  } else {
    const auto& ga = std::get<GaussianSignal>(sc.signal);
    const double sd = std::sqrt(ga.sigma2);
    for (double& t : theta) t = ga.mu + sd * rng.normal();
  }
  return theta;
}

}  // namespace detail

//! Truth vector for one replication; deterministic given (base_seed, rep).
inline std::vector<double> generate_truth(const ScenarioConfig& sc, std::size_t rep) {
  sc.validate();
  Rng rng(sc.base_seed ^ static_cast<std::uint64_t>(rep));
  return detail::draw_truth(sc, rng);
}

namespace detail {

//! One replication: truth, shared noisy observation, every estimator.
inline void run_replication(const ScenarioConfig& sc, std::size_t rep,
                            std::vector<SimulationRecord>& out) {
  const std::uint64_t seed = sc.base_seed ^ static_cast<std::uint64_t>(rep);
  Rng rng(seed);
  std::vector<double> theta = draw_truth(sc, rng);
  std::vector<double> x(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) x[i] = theta[i] + rng.normal();

  for (const EstimatorSpec& spec : sc.estimators) {
    SimulationRecord rec;
    rec.scenario_id = sc.id;
    rec.estimator = spec.label();
    rec.rep = rep;
    rec.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      EstimateResult est = apply_estimator(spec, x, &theta);
      rec.total_sq_error = average_loss(est.estimates, theta).total_sq_error;
    } catch (const std::invalid_argument&) {
      rec.skipped = true;
      rec.total_sq_error = std::numeric_limits<double>::quiet_NaN();
    }
    const auto t1 = std::chrono::steady_clock::now();
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(rec));
  }
}

}  // namespace detail

//! Run all replications of a scenario. Replications are independent, so the
//! loop may fan out over `threads` workers; the record order and contents are
//! identical for every thread count.
inline std::vector<SimulationRecord> run_scenario(const ScenarioConfig& sc,
                                                  std::size_t threads = 1) {
  sc.validate();
  std::vector<std::vector<SimulationRecord>> per_rep(sc.replications);
  threads = std::max<std::size_t>(1, std::min(threads, sc.replications));
  if (threads == 1) {
    for (std::size_t rep = 0; rep < sc.replications; ++rep) {
      detail::run_replication(sc, rep, per_rep[rep]);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t rep = next.fetch_add(1);
          if (rep >= sc.replications) break;
          detail::run_replication(sc, rep, per_rep[rep]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  std::vector<SimulationRecord> records;
  records.reserve(sc.replications * sc.estimators.size());
  for (auto& chunk : per_rep) {
    for (auto& rec : chunk) records.push_back(std::move(rec));
  }
  return records;
}

//! Group records by (scenario, estimator) and report the mean total squared
//! error with its Monte Carlo standard error. Skipped records are dropped.
inline std::vector<AggregateRow> aggregate(const std::vector<SimulationRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& rec : records) {
    auto key = std::make_pair(rec.scenario_id, rec.estimator);
    if (groups.find(key) == groups.end()) order.push_back(key);
    if (!rec.skipped) groups[key].push_back(rec.total_sq_error);
    else groups[key];
  }
  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    const auto& vals = groups[key];
    AggregateRow row;
    row.scenario_id = key.first;
    row.estimator = key.second;
    row.replications = vals.size();
    if (!vals.empty()) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      row.mean_total_sq_error = mean;
      row.standard_error =
          vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1) /
                                      static_cast<double>(vals.size()))
                          : 0.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                           const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument("scenario file: missing field " + path + "." + key);
  }
  return *it;
}

template <typename T>
T field_as(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return require_field(j, key, path).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("scenario file: bad type for field " + path + "." + key);
  }
}

inline EstimatorSpec parse_estimator(const nlohmann::json& j, const std::string& path) {
  if (j.is_string()) {
    return EstimatorSpec::of(estimator_kind_from_string(j.get<std::string>()));
  }
  if (!j.is_object()) {
    throw std::invalid_argument("scenario file: " + path + " must be a kind name or object");
  }
  EstimatorSpec spec = EstimatorSpec::of(
      estimator_kind_from_string(field_as<std::string>(j, "kind", path)));
  if (spec.kind == EstimatorKind::fdr) {
    spec = EstimatorSpec::fdr_at(field_as<double>(j, "q", path));
  } else if (j.contains("q")) {
    throw std::invalid_argument("scenario file: " + path + ".q only applies to fdr");
  }
  if (j.contains("kappa")) spec.kappa = field_as<double>(j, "kappa", path);
  return spec;
}

inline Signal parse_signal(const nlohmann::json& j, const std::string& path) {
  const auto kind = field_as<std::string>(j, "kind", path);
  if (kind == "binary") {
    return BinarySignal{field_as<std::size_t>(j, "k", path), field_as<double>(j, "mu", path)};
  }
  if (kind == "binary_perturbed") {
    BinaryPerturbedSignal s{field_as<std::size_t>(j, "k", path), field_as<double>(j, "mu", path), 0.2};
    if (j.contains("half_width")) s.half_width = field_as<double>(j, "half_width", path);
    return s;
  }
  if (kind == "gaussian") {
    return GaussianSignal{field_as<double>(j, "mu", path), field_as<double>(j, "sigma2", path)};
  }
  throw std::invalid_argument("scenario file: " + path + ".kind must be one of binary, binary_perturbed, gaussian");
}

inline ScenarioConfig parse_scenario(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw std::invalid_argument("scenario file: " + path + " must be an object");
  ScenarioConfig sc;
  sc.id = field_as<std::string>(j, "id", path);
  sc.n = field_as<std::size_t>(j, "n", path);
  sc.signal = parse_signal(require_field(j, "signal", path), path + ".signal");
  const auto& est = require_field(j, "estimators", path);
  if (!est.is_array() || est.empty()) {
    throw std::invalid_argument("scenario file: " + path + ".estimators must be a nonempty array");
  }
  for (std::size_t i = 0; i < est.size(); ++i) {
    sc.estimators.push_back(parse_estimator(est[i], path + ".estimators[" + std::to_string(i) + "]"));
  }
  if (j.contains("replications")) sc.replications = field_as<std::size_t>(j, "replications", path);
  if (j.contains("base_seed")) sc.base_seed = field_as<std::uint64_t>(j, "base_seed", path);
  sc.validate();
  return sc;
}

}  // namespace detail

//! Parse a scenario file: a single scenario object or an array of them.
inline std::vector<ScenarioConfig> parse_scenarios(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario file: invalid JSON: ") + e.what());
  }
  std::vector<ScenarioConfig> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(detail::parse_scenario(j[i], "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(detail::parse_scenario(j, "$"));
  }
  return out;
}

inline std::vector<ScenarioConfig> load_scenarios(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_scenarios(buf.str());
}

//! Records CSV. Wall times are measured per record but written only on
//! request: the default keeps the file a pure function of (config, seed).
inline void write_records_csv(const std::vector<SimulationRecord>& records, std::ostream& os,
                              bool with_timings = false) {
  os << "scenario,estimator,rep,total_sq_error,wall_time_ms,seed\n";
  os.precision(17);
  for (const auto& r : records) {
    os << r.scenario_id << ',' << r.estimator << ',' << r.rep << ',';
    if (r.skipped) {
      os << "nan";
    } else {
      os << r.total_sq_error;
    }
    os << ',' << (with_timings ? r.wall_time_ms : 0.0) << ',' << r.seed << '\n';
  }
}

inline void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os) {
  os << "scenario,estimator,mean_total_sq_error,mc_standard_error,replications\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.scenario_id << ',' << r.estimator << ',' << r.mean_total_sq_error << ','
       << r.standard_error << ',' << r.replications << '\n';
  }
}

//! Markdown comparison table: estimators as rows, scenarios as columns.
inline void write_markdown_table(const std::vector<AggregateRow>& rows, std::ostream& os) {
  std::vector<std::string> scenarios, estimators;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& r : rows) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario_id) == scenarios.end()) {
      scenarios.push_back(r.scenario_id);
    }
    if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end()) {
      estimators.push_back(r.estimator);
    }
    cells[{r.scenario_id, r.estimator}] = r.mean_total_sq_error;
  }
  os << "| estimator |";
  for (const auto& s : scenarios) os << ' ' << s << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < scenarios.size(); ++i) os << "---|";
  os << '\n';
  char buf[64];
  for (const auto& e : estimators) {
    os << "| " << e << " |";
    for (const auto& s : scenarios) {
      auto it = cells.find({s, e});
      if (it == cells.end()) {
        os << " - |";
      } else {
        std::snprintf(buf, sizeof(buf), "%.6g", it->second);
        os << ' ' << buf << " |";
      }
    }
    os << '\n';
  }
}

}  // namespace gmleb
