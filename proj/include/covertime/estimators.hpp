#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gamma2.hpp"
#include "generators.hpp"
#include "gff.hpp"
#include "resistance.hpp"
#include "walk.hpp"

namespace covertime {

// t_hit (1 + ln n).
inline double matthews_upper(const HittingTimeTable& table, std::size_t n) {
  return table.t_hit * (1.0 + std::log(static_cast<double>(n)));
}

struct MatthewsLower {
  double value = 0.0;
  double threshold = 0.0;
  std::vector<Vertex> set;
};

// max over thresholds alpha of alpha ln(|S| - 1), where S is packed greedily
// (farthest first in min(H(u,v), H(v,u))) so all pairs in S are >= alpha.
inline MatthewsLower matthews_lower_set(const HittingTimeTable& table) {
  const auto n = static_cast<std::size_t>(table.H.rows());
  MatthewsLower best;
  if (n < 3) return best;
  Eigen::MatrixXd sym(table.H.rows(), table.H.cols());
  for (Eigen::Index u = 0; u < table.H.rows(); ++u)
    for (Eigen::Index v = 0; v < table.H.cols(); ++v) sym(u, v) = std::min(table.H(u, v), table.H(v, u));

  std::vector<double> thresholds;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) thresholds.push_back(sym(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)));
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // Start from an endpoint of the most separated pair.
  Eigen::Index seed_u = 0, seed_v = 0;
  sym.maxCoeff(&seed_u, &seed_v);
  std::vector<double> gap(n);
  std::vector<char> in(n);
  for (double alpha : thresholds) {
    std::vector<Vertex> S{static_cast<Vertex>(seed_u)};
    std::fill(in.begin(), in.end(), 0);
    in[S[0]] = 1;
    for (std::size_t x = 0; x < n; ++x) gap[x] = sym(seed_u, static_cast<Eigen::Index>(x));
    while (true) {
      std::size_t pick = n;
      for (std::size_t x = 0; x < n; ++x)
        if (!in[x] && gap[x] >= alpha && (pick == n || gap[x] > gap[pick])) pick = x;
      if (pick == n) break;
      in[pick] = 1;
      S.push_back(pick);
      for (std::size_t x = 0; x < n; ++x)
        gap[x] = std::min(gap[x], sym(static_cast<Eigen::Index>(pick), static_cast<Eigen::Index>(x)));
    }
    if (S.size() < 3) continue;
    const double value = alpha * std::log(static_cast<double>(S.size() - 1));
    if (value > best.value) best = {value, alpha, std::move(S)};
  }
  return best;
}

inline double matthews_lower(const HittingTimeTable& table) { return matthews_lower_set(table).value; }

struct ReportConfig {
  std::uint64_t seed = kDefaultSeed;
  std::size_t sup_samples = 2000;
  std::size_t cover_reps = 200;
  Vertex start = 0;
  bool gaussian = true;
  bool gamma2 = true;
  bool pseudoroot = true;
  bool sketch = true;
  bool matthews = true;
  bool simulate = true;
  int gamma2_r = 16;
  // Constant in the tight upper bound (informational only).
  double tight_constant = 1.0;
  // Record wall-clock durations; off by default so reports are reproducible.
  bool timings = false;
  Parallelism par;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

struct CoverTimeReport {
  std::string graph_name;
  std::size_t n = 0;
  std::size_t edges = 0;
  double total_conductance = 0.0;
  double resistance_diameter = 0.0;
  double t_hit = 0.0;

  std::optional<SupEstimate> gaussian_sup;
  std::optional<Estimate> gaussian;  // C (E sup eta)^2
  std::optional<double> gamma2_value;  // A(V, sqrt(R_eff))
  std::optional<double> gamma2;  // C A^2
  std::optional<Estimate> pseudoroot;  // E ||sqrt(L^+) g||_inf^2
  std::optional<Estimate> pseudoroot_mean_squared;  // (E ||sqrt(L^+) g||_inf)^2
  std::optional<Estimate> sketch;
  std::optional<Estimate> sketch_mean_squared;
  std::optional<Eigen::Index> sketch_rows;
  std::optional<double> matthews_upper;
  std::optional<double> matthews_lower;
  std::optional<MeanSE> cover;
  std::optional<MeanSE> cover_and_return;
  std::optional<bool> sandwich_ok;
  std::optional<double> tight_upper;
  double tight_constant = 1.0;

  std::map<std::string, double> ratios;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, double> durations_ms;
  // Estimators that failed numerically; the rest of the report stands.
  std::map<std::string, std::string> failures;
  bool partial() const { return !failures.empty(); }
};

namespace detail {

inline Estimate square_of_mean(const SupEstimate& e) {
  // Delta method for (mean)^2.
  return {e.mean * e.mean, 2.0 * std::abs(e.mean) * e.std_error};
}

inline Estimate mean_of(const SupEstimate& e) { return {e.mean, e.std_error}; }

}  // namespace detail

inline CoverTimeReport full_report(const Network& net, const ReportConfig& config, std::string name = {}) {
  CoverTimeReport rep;
  rep.graph_name = std::move(name);
  rep.n = net.size();
  rep.edges = net.edge_count();
  rep.total_conductance = net.total_conductance();
  rep.tight_constant = config.tight_constant;
  const double C = net.total_conductance();

  auto timed = [&](const std::string& key, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const NumericalError& e) {
      rep.failures[key] = e.what();
    }
    if (config.timings)
      rep.durations_ms[key] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  };

  const ResistanceOracle oracle(net);
  {
    const auto R = oracle.resistance_matrix();
    rep.resistance_diameter = std::sqrt(R.maxCoeff());
  }
  std::optional<HittingTimeTable> table;
  timed("hitting", [&] {
    table = hitting_times(oracle);
    rep.t_hit = table->t_hit;
  });

  if (config.gaussian)
    timed("gaussian", [&] {
      const std::uint64_t s = derive_seed(config.seed, 1);
      rep.seeds["gaussian"] = s;
      const auto sup = estimate_sup(GFFSampler::pinned(oracle), config.sup_samples, s, config.par);
      rep.gaussian_sup = sup;
      const auto sq = detail::square_of_mean(sup);
      rep.gaussian = Estimate{C * sq.value, C * sq.se};
    });
  if (config.gamma2)
    timed("gamma2", [&] {
      const double A = gamma2_of_network(oracle, config.gamma2_r);
      rep.gamma2_value = A;
      rep.gamma2 = C * A * A;
    });
  if (config.pseudoroot)
    timed("pseudoroot", [&] {
      const std::uint64_t s = derive_seed(config.seed, 2);
      rep.seeds["pseudoroot"] = s;
      const auto est = estimate_sup_norm(GFFSampler::pseudoroot(net), config.sup_samples, s, config.par);
      rep.pseudoroot = detail::mean_of(est.norm_squared);
      rep.pseudoroot_mean_squared = detail::square_of_mean(est.norm);
    });
  if (config.sketch)
    timed("sketch", [&] {
      const std::uint64_t s = derive_seed(config.seed, 3);
      rep.seeds["sketch"] = s;
      const auto sketch = build_sketch(oracle, s);
      rep.sketch_rows = sketch.rows;
      const std::uint64_t s2 = derive_seed(config.seed, 4);
      rep.seeds["sketch_samples"] = s2;
      const auto est = sketch_sup_estimate(sketch, config.sup_samples, s2, config.par);
      rep.sketch = detail::mean_of(est.norm_squared);
      rep.sketch_mean_squared = detail::square_of_mean(est.norm);
    });
  if (config.matthews && table) {
    rep.matthews_upper = matthews_upper(*table, net.size());
    rep.matthews_lower = matthews_lower(*table);
  }
  if (config.simulate)
    timed("simulate", [&] {
      const std::uint64_t s = derive_seed(config.seed, 5);
      rep.seeds["simulate"] = s;
      const auto est = estimate_cover_time(net, config.start, config.cover_reps, s, config.par);
      rep.cover = est.cover;
      rep.cover_and_return = est.cover_and_return;
      rep.sandwich_ok = est.sandwich_ok;
    });

  // (1 + C' sqrt(t_hit / t_cov)) |E| (E sup eta)^2 with t_cov from simulation
  // when available, otherwise from the Gaussian estimate itself.
  if (rep.gaussian_sup && table) {
    const double edges = C / 2.0;
    const double esup2 = rep.gaussian_sup->mean * rep.gaussian_sup->mean;
    const double tcov = rep.cover ? rep.cover->mean : rep.gaussian->value;
    if (tcov > 0.0) rep.tight_upper = (1.0 + config.tight_constant * std::sqrt(rep.t_hit / tcov)) * edges * esup2;
  }

  std::vector<std::pair<std::string, double>> named;
  if (rep.gaussian) named.emplace_back("gaussian", rep.gaussian->value);
  if (rep.gamma2) named.emplace_back("gamma2", *rep.gamma2);
  if (rep.pseudoroot) named.emplace_back("pseudoroot", rep.pseudoroot->value);
  if (rep.sketch) named.emplace_back("sketch", rep.sketch->value);
  for (std::size_t i = 0; i < named.size(); ++i)
    for (std::size_t j = i + 1; j < named.size(); ++j)
      if (named[j].second > 0.0) rep.ratios[named[i].first + "/" + named[j].first] = named[i].second / named[j].second;
  if (rep.cover_and_return)
    for (const auto& [key, value] : named)
      if (value > 0.0) rep.ratios["cover_and_return/" + key] = rep.cover_and_return->mean / value;
  if (rep.cover && rep.matthews_upper && *rep.matthews_upper > 0.0)
    rep.ratios["cover/matthews_upper"] = rep.cover->mean / *rep.matthews_upper;
  if (rep.cover && rep.matthews_lower && *rep.matthews_lower > 0.0)
    rep.ratios["cover/matthews_lower"] = rep.cover->mean / *rep.matthews_lower;
  return rep;
}

inline nlohmann::ordered_json to_json(const CoverTimeReport& rep) {
  using nlohmann::ordered_json;
  auto est = [](const Estimate& e) { return ordered_json{{"value", e.value}, {"se", e.se}}; };
  auto mse = [](const MeanSE& m) { return ordered_json{{"mean", m.mean}, {"se", m.se}, {"reps", m.count}}; };

  ordered_json j;
  j["schema"] = 1;
  j["graph"] = {{"name", rep.graph_name},
                {"n", rep.n},
                {"edges", rep.edges},
                {"total_conductance", rep.total_conductance},
                {"resistance_diameter", rep.resistance_diameter},
                {"t_hit", rep.t_hit}};
  ordered_json e = ordered_json::object();
  if (rep.gaussian_sup)
    e["gaussian_sup"] = {{"value", rep.gaussian_sup->mean},
                         {"se", rep.gaussian_sup->std_error},
                         {"samples", rep.gaussian_sup->samples}};
  if (rep.gaussian) e["gaussian"] = est(*rep.gaussian);
  if (rep.gamma2_value) e["gamma2_value"] = *rep.gamma2_value;
  if (rep.gamma2) e["gamma2"] = *rep.gamma2;
  if (rep.pseudoroot) e["pseudoroot"] = est(*rep.pseudoroot);
  if (rep.pseudoroot_mean_squared) e["pseudoroot_mean_squared"] = est(*rep.pseudoroot_mean_squared);
  if (rep.sketch) e["sketch"] = est(*rep.sketch);
  if (rep.sketch_mean_squared) e["sketch_mean_squared"] = est(*rep.sketch_mean_squared);
  if (rep.sketch_rows) e["sketch_rows"] = *rep.sketch_rows;
  if (rep.matthews_upper) e["matthews_upper"] = *rep.matthews_upper;
  if (rep.matthews_lower) e["matthews_lower"] = *rep.matthews_lower;
  if (rep.cover) e["cover"] = mse(*rep.cover);
  if (rep.cover_and_return) e["cover_and_return"] = mse(*rep.cover_and_return);
  if (rep.sandwich_ok) e["cover_sandwich_ok"] = *rep.sandwich_ok;
  if (rep.tight_upper) e["tight_upper"] = {{"value", *rep.tight_upper}, {"constant", rep.tight_constant}};
  j["estimates"] = std::move(e);
  j["ratios"] = ordered_json::object();
  for (const auto& [k, v] : rep.ratios) j["ratios"][k] = v;
  j["seeds"] = ordered_json::object();
  for (const auto& [k, v] : rep.seeds) j["seeds"][k] = v;
  j["durations_ms"] = ordered_json::object();
  for (const auto& [k, v] : rep.durations_ms) j["durations_ms"][k] = v;
  if (rep.partial()) {
    j["partial"] = true;
    j["failures"] = ordered_json::object();
    for (const auto& [k, v] : rep.failures) j["failures"][k] = v;
  }
  return j;
}

enum class Family { complete, bary_tree };

struct AsymptoticRow {
  std::size_t size_parameter = 0;  // n for complete graphs, height for trees
  std::size_t n = 0;
  std::size_t edges = 0;
  SupEstimate sup;
  // |E| (E sup eta)^2.
  double predicted = 0.0;
  // n ln n for complete graphs, 2 h n ln n for binary trees.
  double reference = 0.0;
  // E sup eta over sqrt(2 ln n / n) (complete) or sqrt(2 h ln n) (tree).
  double sup_ratio = 0.0;
  std::optional<MeanSE> cover;
  // predicted / simulated t_cov; the asymptotic target is 1.
  std::optional<double> ratio;
  double target = 1.0;
};

struct AsymptoticConfig {
  std::uint64_t seed = kDefaultSeed;
  std::size_t sup_samples = 2000;
  // 0 skips the cover-time simulation.
  std::size_t cover_reps = 200;
  Parallelism par;
};

inline std::vector<AsymptoticRow> asymptotic_check(Family family, const std::vector<std::size_t>& sizes,
                                                   const AsymptoticConfig& config = {}) {
  std::vector<AsymptoticRow> rows;
  for (std::size_t idx = 0; idx < sizes.size(); ++idx) {
    const std::size_t s = sizes[idx];
    if (family == Family::complete && (s < 2 || s > 1024))
      throw InvalidParamError("asymptotics: complete graph sizes must lie in [2, 1024]");
    if (family == Family::bary_tree && (s < 1 || s > 7))
      throw InvalidParamError("asymptotics: tree heights must lie in [1, 7]");
    const Network net = family == Family::complete ? gen::complete(s) : gen::bary_tree(2, s);
    AsymptoticRow row;
    row.size_parameter = s;
    row.n = net.size();
    row.edges = net.edge_count();
    const double n = static_cast<double>(row.n);
    const ResistanceOracle oracle(net);
    row.sup = estimate_sup(GFFSampler::pinned(oracle), config.sup_samples, derive_seed(config.seed, 2 * idx),
                           config.par);
    row.predicted = static_cast<double>(row.edges) * row.sup.mean * row.sup.mean;
    if (family == Family::complete) {
      row.reference = n * std::log(n);
      row.sup_ratio = row.sup.mean / std::sqrt(2.0 * std::log(n) / n);
    } else {
      const double h = static_cast<double>(s);
      row.reference = 2.0 * h * n * std::log(n);
      row.sup_ratio = row.sup.mean / std::sqrt(2.0 * h * std::log(n));
    }
    if (config.cover_reps > 0) {
      const auto est =
          estimate_cover_time(net, 0, config.cover_reps, derive_seed(config.seed, 2 * idx + 1), config.par);
      row.cover = est.cover;
      if (est.cover.mean > 0.0) row.ratio = row.predicted / est.cover.mean;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace covertime
