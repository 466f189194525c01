// covertime: command-line front end for the cover-time estimators.
//
// Exit codes: 0 success, 1 a verification check failed, 2 parse error,
// 3 validation error, 4 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <covertime/covertime.hpp>

namespace {

using namespace covertime;
using nlohmann::ordered_json;

using Cell = std::variant<std::string, double, long long, bool>;

struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string text_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.6g", v);
          return buf;
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return text_cell(c);
}

ordered_json json_cell(const Cell& c) {
  return std::visit([](const auto& v) { return ordered_json(v); }, c);
}

void print_table(const Table& t, const std::string& format, std::ostream& out) {
  if (format == "json") {
    ordered_json j;
    j["schema"] = 1;
    j["command"] = t.command;
    j["rows"] = ordered_json::array();
    for (const auto& row : t.rows) {
      ordered_json o;
      for (std::size_t i = 0; i < t.columns.size(); ++i) o[t.columns[i]] = json_cell(row[i]);
      j["rows"].push_back(std::move(o));
    }
    out << j.dump(2) << '\n';
  } else if (format == "csv") {
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
      out << '\n';
    }
  } else {
    std::vector<std::size_t> width(t.columns.size());
    for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
    for (const auto& row : t.rows)
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], text_cell(row[i]).size());
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        out << cells[i];
        if (i + 1 < cells.size()) out << std::string(width[i] - cells[i].size() + 2, ' ');
      }
      out << '\n';
    };
    line(t.columns);
    for (const auto& row : t.rows) {
      std::vector<std::string> cells;
      for (const auto& c : row) cells.push_back(text_cell(c));
      line(cells);
    }
  }
}

// Flattens a JSON object into dotted key/value rows.
void flatten(const ordered_json& j, const std::string& prefix, Table& t) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, t);
    return;
  }
  Cell c;
  if (j.is_boolean()) c = j.get<bool>();
  else if (j.is_number_integer() || j.is_number_unsigned()) c = j.dump();
  else if (j.is_number()) c = j.get<double>();
  else if (j.is_string()) c = j.get<std::string>();
  else c = j.dump();
  t.rows.push_back({prefix, c});
}

struct Common {
  std::string input;
  std::string gen;
  std::string format = "text";
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  unsigned threads = 1;
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed_given) return c.seed;
  if (const char* env = std::getenv("COVERTIME_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ParseError("COVERTIME_SEED must be an unsigned integer");
    return v;
  }
  return kDefaultSeed;
}

std::string graph_name(const Common& c) { return c.gen.empty() ? c.input : c.gen; }

Network load(const Common& c) {
  if (!c.gen.empty() && !c.input.empty()) throw ParseError("give either --input or --gen, not both");
  if (!c.gen.empty()) return io::generate(c.gen);
  if (!c.input.empty()) return io::read_network_file(c.input);
  throw ParseError("a graph is required: use --input FILE or --gen SPEC");
}

void add_common(CLI::App* app, Common& c, bool graph = true) {
  if (graph) {
    app->add_option("-i,--input", c.input, "Edge list (u v [c]) or JSON network file");
    app->add_option("-g,--gen", c.gen, "Generator: complete:n path:n cycle:n tree:b,h grid:r[,c] er:n,p[,seed]");
  }
  app->add_option_function<std::uint64_t>(
      "--seed",
      [&c](const std::uint64_t& s) {
        c.seed = s;
        c.seed_given = true;
      },
      "Master seed (default: $COVERTIME_SEED, else 20100419)");
  app->add_option("--threads", c.threads, "Worker threads for Monte Carlo")->check(CLI::PositiveNumber);
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
}

std::vector<Vertex> parse_vertex_list(const std::string& s, const Network& net) {
  std::vector<Vertex> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    std::size_t v = 0;
    if (!io::detail::parse_index(tok, v)) throw ParseError("bad vertex '" + tok + "'");
    if (v >= net.size()) throw InvalidParamError("vertex " + tok + " out of range");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------- info

int cmd_info(const Common& c) {
  const Network net = load(c);
  const ResistanceOracle oracle(net);
  const auto table = hitting_times(oracle);
  double cmin = INFINITY, cmax = 0.0;
  for (double x : net.conductances()) {
    cmin = std::min(cmin, x);
    cmax = std::max(cmax, x);
  }
  Table t{"info", {"key", "value"}, {}};
  t.rows.push_back({std::string("graph"), graph_name(c)});
  t.rows.push_back({std::string("n"), static_cast<long long>(net.size())});
  t.rows.push_back({std::string("edges"), static_cast<long long>(net.edge_count())});
  t.rows.push_back({std::string("total_conductance"), net.total_conductance()});
  t.rows.push_back({std::string("min_vertex_conductance"), cmin});
  t.rows.push_back({std::string("max_vertex_conductance"), cmax});
  t.rows.push_back({std::string("ground"), net.label(oracle.ground())});
  t.rows.push_back({std::string("resistance_diameter"), table.resistance_diameter});
  t.rows.push_back({std::string("t_hit"), table.t_hit});
  t.rows.push_back({std::string("foster_residual"), foster_residual(oracle)});
  print_table(t, c.format, std::cout);
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::size_t samples = 2000;
  std::size_t reps = 200;
  Vertex start = 0;
  std::vector<std::string> skip;
  int r = 16;
  double tight_c = 1.0;
  bool timings = false;
};

int cmd_estimate(const Common& c, const EstimateArgs& a) {
  const Network net = load(c);
  if (a.start >= net.size()) throw InvalidParamError("--start out of range");
  ReportConfig cfg;
  cfg.seed = resolve_seed(c);
  cfg.sup_samples = a.samples;
  cfg.cover_reps = a.reps;
  cfg.start = a.start;
  cfg.gamma2_r = a.r;
  cfg.tight_constant = a.tight_c;
  cfg.timings = a.timings;
  cfg.par.threads = c.threads;
  for (const auto& s : a.skip) {
    if (s == "gaussian") cfg.gaussian = false;
    else if (s == "gamma2") cfg.gamma2 = false;
    else if (s == "pseudoroot") cfg.pseudoroot = false;
    else if (s == "sketch") cfg.sketch = false;
    else if (s == "matthews") cfg.matthews = false;
    else if (s == "simulate") cfg.simulate = false;
    else throw ParseError("--skip: unknown estimator '" + s + "'");
  }
  const auto report = full_report(net, cfg, graph_name(c));
  auto j = to_json(report);
  j["seeds"]["master"] = cfg.seed;
  if (c.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    Table t{"estimate", {"key", "value"}, {}};
    flatten(j, "", t);
    print_table(t, c.format, std::cout);
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string rule = "cover";
  double delta = 0.5;
  double t = 1.0;
  std::size_t reps = 200;
  Vertex start = 0;
  std::string trace;
  std::uint64_t budget = 1'000'000'000ULL;
};

StoppingRule make_rule(const SimulateArgs& a) {
  if (a.rule == "cover") return StoppingRule::cover();
  if (a.rule == "cover-return") return StoppingRule::cover_and_return();
  if (a.rule == "blanket-weak") return StoppingRule::blanket_weak(a.delta);
  if (a.rule == "blanket-strong") return StoppingRule::blanket_strong(a.delta);
  if (a.rule == "blanket-continuous") return StoppingRule::blanket_continuous(a.delta);
  if (a.rule == "inverse-local") return StoppingRule::inverse_local(a.start, a.t);
  throw ParseError("unknown rule '" + a.rule + "'");
}

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const Network net = load(c);
  if (a.start >= net.size()) throw InvalidParamError("--start out of range");
  const std::uint64_t seed = resolve_seed(c);
  const Parallelism par{c.threads};
  const StoppingRule rule = make_rule(a);
  WalkOptions opt;
  opt.step_budget = a.budget;

  Table t{"simulate", {"quantity", "mean", "se", "reps"}, {}};
  auto row = [&](const std::string& name, const MeanSE& m) {
    t.rows.push_back({name, m.mean, m.se, static_cast<long long>(m.count)});
  };
  if (rule.kind == StoppingRule::Kind::cover || rule.kind == StoppingRule::Kind::cover_and_return) {
    const auto est = estimate_cover_time(net, a.start, a.reps, seed, par, opt);
    row("cover", est.cover);
    row("cover_and_return", est.cover_and_return);
    row("cover_continuous", est.cover_continuous);
    row("half_return_minus_cover", est.half_gap);
  } else if (rule.kind == StoppingRule::Kind::blanket_weak || rule.kind == StoppingRule::Kind::blanket_strong) {
    const auto est = estimate_blanket_time(net, a.start, a.delta, a.reps, seed, par, opt);
    row("cover", est.cover);
    row("blanket_weak", est.weak);
    row("blanket_strong", est.strong);
    t.rows.push_back({std::string("samplewise_ordering"), est.samplewise_ok ? 1.0 : 0.0, 0.0,
                      static_cast<long long>(a.reps)});
  } else {
    const RandomWalk walk(net);
    std::vector<double> disc(a.reps), cont(a.reps);
    parallel_for(a.reps, par, [&](std::size_t i) {
      auto rng = stream(seed, i);
      const auto r = run_until(walk, a.start, rule, rng, opt);
      disc[i] = static_cast<double>(r.stop_discrete);
      cont[i] = r.stop_continuous;
    });
    row("stop_discrete", mean_se(disc));
    row("stop_continuous", mean_se(cont));
    if (rule.kind == StoppingRule::Kind::inverse_local) {
      const double target = net.total_conductance() * a.t;
      t.rows.push_back({std::string("expected_continuous"), target, 0.0, static_cast<long long>(a.reps)});
    }
  }
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw ParseError("cannot write trace file " + a.trace);
    out << "jump_index,vertex,holding_time\n";
    out.precision(17);
    WalkOptions traced = opt;
    traced.on_jump = [&](std::uint64_t k, Vertex v, double h) { out << k << ',' << net.label(v) << ',' << h << '\n'; };
    auto rng = stream(seed, 0);
    run_until(net, a.start, rule, rng, traced);
  }
  print_table(t, c.format, std::cout);
  return 0;
}

// ---------------------------------------------------------------- gamma2

struct Gamma2Args {
  std::string metric;
  int r = 16;
  std::string certificate;
  bool brute_force = false;
};

int cmd_gamma2(const Common& c, const Gamma2Args& a) {
  FiniteMetric metric = !a.metric.empty() ? read_metric_csv_file(a.metric)
                                          : resistance_metric(ResistanceOracle(load(c)));
  if (!a.metric.empty() && (!c.input.empty() || !c.gen.empty()))
    throw ParseError("give either --metric or a graph, not both");
  const auto maps = gamma2_maps(metric, a.r);
  Table t{"gamma2", {"key", "value"}, {}};
  t.rows.push_back({std::string("points"), static_cast<long long>(metric.size())});
  t.rows.push_back({std::string("r"), static_cast<long long>(a.r)});
  t.rows.push_back({std::string("top_scale"), static_cast<long long>(maps.top_scale)});
  t.rows.push_back({std::string("active_scales"), static_cast<long long>(maps.active_scales.size())});
  t.rows.push_back({std::string("diameter"), metric.diameter()});
  t.rows.push_back({std::string("A"), maps.value()});
  if (a.brute_force) t.rows.push_back({std::string("gamma2_exact"), brute_force_gamma2(metric)});
  if (!a.certificate.empty()) {
    const auto tree = extract_certificate(maps);
    ordered_json j;
    j["schema"] = 1;
    j["r"] = tree.r;
    j["unit"] = tree.unit;
    j["value"] = tree.value();
    j["nodes"] = ordered_json::array();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& node = tree.nodes[i];
      ordered_json o;
      o["id"] = i;
      o["point"] = node.point;
      if (node.point < metric.labels().size()) o["label"] = metric.labels()[node.point];
      o["scale"] = node.scale;
      if (i != 0) o["parent"] = node.parent;
      o["children"] = node.children;
      j["nodes"].push_back(std::move(o));
    }
    std::ofstream out(a.certificate);
    if (!out) throw ParseError("cannot write certificate file " + a.certificate);
    out << j.dump(2) << '\n';
    t.rows.push_back({std::string("certificate_nodes"), static_cast<long long>(tree.nodes.size())});
    t.rows.push_back({std::string("certificate_value"), tree.value()});
  }
  print_table(t, c.format, std::cout);
  return 0;
}

// ---------------------------------------------------------------- resistance

struct ResistanceArgs {
  std::vector<std::string> pairs;
  long long ground = -1;
};

int cmd_resistance(const Common& c, const ResistanceArgs& a) {
  const Network net = load(c);
  ResistanceOracle::Options opt;
  if (a.ground >= 0) opt.ground = static_cast<Vertex>(a.ground);
  const ResistanceOracle oracle(net, opt);
  Table t{"resistance", {"u", "v", "r_eff", "commute"}, {}};
  auto add = [&](Vertex u, Vertex v) {
    t.rows.push_back({net.label(u), net.label(v), oracle.r_eff(u, v), oracle.commute(u, v)});
  };
  if (a.pairs.empty()) {
    for (Vertex u = 0; u < net.size(); ++u)
      for (Vertex v = u + 1; v < net.size(); ++v) add(u, v);
  } else {
    for (const auto& p : a.pairs) {
      const auto vs = parse_vertex_list(p, net);
      if (vs.size() != 2) throw ParseError("--pair expects u,v");
      add(vs[0], vs[1]);
    }
  }
  print_table(t, c.format, std::cout);
  return 0;
}

// ---------------------------------------------------------------- gff-sample

struct GffArgs {
  std::size_t count = 1;
  std::string mode = "pinned";
  std::size_t estimate = 0;
  long long ground = -1;
};

int cmd_gff(const Common& c, const GffArgs& a) {
  const Network net = load(c);
  const std::uint64_t seed = resolve_seed(c);
  ResistanceOracle::Options opt;
  if (a.ground >= 0) opt.ground = static_cast<Vertex>(a.ground);
  const ResistanceOracle oracle(net, opt);
  const auto sampler = a.mode == "pinned" ? GFFSampler::pinned(oracle) : GFFSampler::pseudoroot(net);
  if (a.estimate > 0) {
    Table t{"gff-sample", {"statistic", "mean", "se", "samples"}, {}};
    if (a.mode == "pinned") {
      const auto e = estimate_sup(sampler, a.estimate, seed, Parallelism{c.threads});
      t.rows.push_back({std::string("sup"), e.mean, e.std_error, static_cast<long long>(e.samples)});
    } else {
      const auto e = estimate_sup_norm(sampler, a.estimate, seed, Parallelism{c.threads});
      t.rows.push_back({std::string("sup_norm"), e.norm.mean, e.norm.std_error, static_cast<long long>(e.norm.samples)});
      t.rows.push_back({std::string("sup_norm_squared"), e.norm_squared.mean, e.norm_squared.std_error,
                        static_cast<long long>(e.norm_squared.samples)});
    }
    print_table(t, c.format, std::cout);
    return 0;
  }
  Table t{"gff-sample", {"sample"}, {}};
  for (Vertex x = 0; x < net.size(); ++x) t.columns.push_back(net.label(x));
  auto rng = stream(seed, 0);
  const Eigen::MatrixXd draws = sampler.draw(rng, static_cast<Eigen::Index>(a.count));
  for (Eigen::Index s = 0; s < draws.cols(); ++s) {
    std::vector<Cell> row{static_cast<long long>(s)};
    for (Eigen::Index x = 0; x < draws.rows(); ++x) row.emplace_back(draws(x, s));
    t.rows.push_back(std::move(row));
  }
  print_table(t, c.format, std::cout);
  return 0;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  double t = 1.0;
  std::size_t reps = 0;
  Vertex v0 = 0;
  long long vertex = -1;
  long long target = -1;
  std::size_t samples = 100000;
};

struct Check {
  std::string check;
  double statistic;
  double threshold;
  bool pass;
};

Table check_table(const std::vector<Check>& checks) {
  Table t{"verify", {"check", "statistic", "threshold", "pass"}, {}};
  for (const auto& c : checks) t.rows.push_back({c.check, c.statistic, c.threshold, c.pass});
  return t;
}

std::vector<Check> verify_foster(const Network& net) {
  const double res = std::abs(foster_residual(net));
  const double thr = 1e-8 * static_cast<double>(net.size());
  return {{"foster_residual", res, thr, res <= thr}};
}

std::vector<Check> verify_commute(const Network& net) {
  const ResistanceOracle oracle(net);
  const auto table = hitting_times(net);
  double worst = 0.0;
  for (Vertex u = 0; u < net.size(); ++u)
    for (Vertex v = u + 1; v < net.size(); ++v) {
      const auto a = static_cast<Eigen::Index>(u), b = static_cast<Eigen::Index>(v);
      const double k = oracle.commute(u, v);
      worst = std::max(worst, std::abs(table.H(a, b) + table.H(b, a) - k) / k);
    }
  return {{"commute_max_rel_err", worst, 1e-8, worst <= 1e-8}};
}

std::vector<Check> verify_starmesh(const Network& net, const VerifyArgs& a) {
  const Vertex x = a.vertex >= 0 ? static_cast<Vertex>(a.vertex) : net.size() - 1;
  if (x >= net.size()) throw InvalidParamError("--vertex out of range");
  const auto red = star_mesh_reduce(net, x);
  const ResistanceOracle before(net), after(red.network);
  double worst = 0.0, cond = 0.0;
  const std::size_t m = red.network.size();
  for (Vertex u = 0; u < m; ++u) {
    const double want = net.conductance(red.original[u]);
    cond = std::max(cond, std::abs(red.network.conductance(u) + red.self_loop[u] - want) / want);
    for (Vertex v = u + 1; v < m; ++v) {
      const double r0 = before.r_eff(red.original[u], red.original[v]);
      worst = std::max(worst, std::abs(after.r_eff(u, v) - r0) / r0);
    }
  }
  return {{"starmesh_max_rel_err", worst, 1e-8, worst <= 1e-8},
          {"starmesh_vertex_conductance_rel_err", cond, 1e-12, cond <= 1e-12}};
}

std::vector<Check> verify_rayknight(const Network& net, const VerifyArgs& a, std::uint64_t seed, Parallelism par) {
  const std::size_t reps = a.reps ? a.reps : 50000;
  if (reps < 10000) throw InvalidParamError("rayknight: --reps must be at least 10000");
  if (a.v0 >= net.size()) throw InvalidParamError("--v0 out of range");
  const auto rep = rayknight_check(net, a.v0, a.t, reps, seed, par);
  std::vector<Check> out;
  for (const auto& c : rep.coordinates) {
    const std::string x = net.label(c.vertex);
    out.push_back({"local_time_mean_z[" + x + "]", std::abs(c.local_time_z), 3.0, std::abs(c.local_time_z) <= 3.0});
    out.push_back({"mean_z[" + x + "]", std::abs(c.mean_z), 3.0, std::abs(c.mean_z) <= 3.0});
    out.push_back({"second_moment_z[" + x + "]", std::abs(c.second_z), 4.0, std::abs(c.second_z) <= 4.0});
  }
  return out;
}

std::vector<Check> verify_sketch(const Network& net, std::uint64_t seed) {
  const ResistanceOracle oracle(net);
  const auto sk = build_sketch(oracle, seed);
  return {{"sketch_min_ratio", sk.min_ratio, 1.0, sk.min_ratio >= 1.0},
          {"sketch_max_ratio", sk.max_ratio, 2.0, sk.max_ratio <= 2.0}};
}

std::vector<Check> verify_escape(const Network& net, const VerifyArgs& a, std::uint64_t seed, Parallelism par) {
  const std::size_t reps = a.reps ? a.reps : 100000;
  if (a.v0 >= net.size()) throw InvalidParamError("--v0 out of range");
  const ResistanceOracle oracle(net);
  Vertex u;
  if (a.target >= 0) {
    u = static_cast<Vertex>(a.target);
    if (u >= net.size() || u == a.v0) throw InvalidParamError("--target must be a vertex other than --v0");
  } else {
    // Farthest vertex in resistance.
    u = a.v0 == 0 ? 1 : 0;
    for (Vertex y = 0; y < net.size(); ++y)
      if (y != a.v0 && oracle.r_eff(a.v0, y) > oracle.r_eff(a.v0, u)) u = y;
  }
  const double exact = escape_probability(oracle, a.v0, u);
  const auto emp = empirical_escape_probability(net, a.v0, u, reps, seed, par);
  const double z = emp.se > 0.0 ? std::abs(emp.mean - exact) / emp.se : (emp.mean == exact ? 0.0 : INFINITY);
  return {{"escape_z[" + net.label(a.v0) + "->" + net.label(u) + "]", z, 3.0, z <= 3.0}};
}

// Empirical increment variances of the pinned field against R_eff.
std::vector<Check> verify_isometry(const Network& net, const VerifyArgs& a, std::uint64_t seed) {
  const ResistanceOracle oracle(net);
  const auto sampler = GFFSampler::pinned(oracle);
  const std::size_t n = net.size();
  std::vector<std::pair<Vertex, Vertex>> pairs;
  if (n <= 12) {
    for (Vertex u = 0; u < n; ++u)
      for (Vertex v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  } else {
    auto rng = stream(derive_seed(seed, 7), 0);
    std::uniform_int_distribution<Vertex> pick(0, n - 1);
    while (pairs.size() < 64) {
      const Vertex u = pick(rng), v = pick(rng);
      if (u != v) pairs.emplace_back(u, v);
    }
  }
  std::vector<std::vector<double>> sq(pairs.size(), std::vector<double>(a.samples));
  const std::size_t blocks = (a.samples + detail::kBlock - 1) / detail::kBlock;
  for (std::size_t b = 0; b < blocks; ++b) {
    auto rng = stream(seed, b);
    const std::size_t first = b * detail::kBlock;
    const auto count = static_cast<Eigen::Index>(std::min(detail::kBlock, a.samples - first));
    const Eigen::MatrixXd eta = sampler.draw(rng, count);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      for (Eigen::Index s = 0; s < count; ++s) {
        const double d = eta(static_cast<Eigen::Index>(pairs[p].first), s) -
                         eta(static_cast<Eigen::Index>(pairs[p].second), s);
        sq[p][first + static_cast<std::size_t>(s)] = d * d;
      }
  }
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto m = mean_se(sq[p]);
    const double z = std::abs(m.mean - oracle.r_eff(pairs[p].first, pairs[p].second)) / m.se;
    worst = std::max(worst, z);
  }
  return {{"isometry_max_z", worst, 5.0, worst <= 5.0}};
}

int cmd_verify(const Common& c, const std::string& which, const VerifyArgs& a) {
  const Network net = load(c);
  const std::uint64_t seed = resolve_seed(c);
  const Parallelism par{c.threads};
  std::vector<Check> checks;
  if (which == "foster") checks = verify_foster(net);
  else if (which == "commute") checks = verify_commute(net);
  else if (which == "starmesh") checks = verify_starmesh(net, a);
  else if (which == "rayknight") checks = verify_rayknight(net, a, seed, par);
  else if (which == "sketch") checks = verify_sketch(net, seed);
  else if (which == "escape") checks = verify_escape(net, a, seed, par);
  else if (which == "isometry") checks = verify_isometry(net, a, seed);
  print_table(check_table(checks), c.format, std::cout);
  const bool ok = std::all_of(checks.begin(), checks.end(), [](const Check& k) { return k.pass; });
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------- asymptotics

struct AsymArgs {
  std::string family = "complete";
  std::vector<std::size_t> sizes;
  std::size_t samples = 2000;
  std::size_t reps = 200;
};

int cmd_asymptotics(const Common& c, const AsymArgs& a) {
  AsymptoticConfig cfg;
  cfg.seed = resolve_seed(c);
  cfg.sup_samples = a.samples;
  cfg.cover_reps = a.reps;
  cfg.par.threads = c.threads;
  const Family fam = a.family == "complete" ? Family::complete : Family::bary_tree;
  auto sizes = a.sizes;
  if (sizes.empty()) sizes = fam == Family::complete ? std::vector<std::size_t>{16, 64, 256} : std::vector<std::size_t>{3, 4, 5};
  const auto rows = asymptotic_check(fam, sizes, cfg);
  Table t{"asymptotics",
          {"size", "n", "edges", "esup", "esup_se", "sup_ratio", "predicted", "reference", "predicted_over_reference",
           "cover", "cover_se", "predicted_over_cover", "target"},
          {}};
  for (const auto& r : rows) {
    t.rows.push_back({static_cast<long long>(r.size_parameter), static_cast<long long>(r.n),
                      static_cast<long long>(r.edges), r.sup.mean, r.sup.std_error, r.sup_ratio, r.predicted,
                      r.reference, r.predicted / r.reference, r.cover ? r.cover->mean : NAN,
                      r.cover ? r.cover->se : NAN, r.ratio ? *r.ratio : NAN, r.target});
  }
  print_table(t, c.format, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cover and blanket time estimation via the Gaussian free field"};
  app.require_subcommand(1);

  Common common;
  EstimateArgs est;
  SimulateArgs sim;
  Gamma2Args g2;
  ResistanceArgs res;
  GffArgs gff;
  VerifyArgs ver;
  AsymArgs asym;

  auto* info = app.add_subcommand("info", "Network summary");
  add_common(info, common);

  auto* estimate = app.add_subcommand("estimate", "Full cover-time report");
  add_common(estimate, common);
  estimate->add_option("--samples", est.samples, "Gaussian Monte Carlo samples")->check(CLI::Range(2, 100000000));
  estimate->add_option("--reps", est.reps, "Cover-time replicas")->check(CLI::Range(10, 100000000));
  estimate->add_option("--start", est.start, "Start vertex of simulated walks");
  estimate->add_option("--skip", est.skip, "Estimators to skip")->delimiter(',');
  estimate->add_option("--r", est.r, "Scale base of the gamma_2 approximation")->check(CLI::Range(16, 1 << 20));
  estimate->add_option("--tight-c", est.tight_c, "Constant in the tight upper bound");
  estimate->add_flag("--timings", est.timings, "Record wall-clock durations");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo stopping times");
  add_common(simulate, common);
  simulate->add_option("--rule", sim.rule, "Stopping rule")
      ->check(CLI::IsMember({"cover", "cover-return", "blanket-weak", "blanket-strong", "blanket-continuous",
                             "inverse-local"}));
  simulate->add_option("--delta", sim.delta, "Blanket parameter in (0,1)");
  simulate->add_option("--t", sim.t, "Local time level for inverse-local");
  simulate->add_option("--reps", sim.reps, "Replicas")->check(CLI::Range(10, 100000000));
  simulate->add_option("--start", sim.start, "Start vertex (root for inverse-local)");
  simulate->add_option("--trace", sim.trace, "Write replica 0 as CSV (jump_index,vertex,holding_time)");
  simulate->add_option("--budget", sim.budget, "Step budget per replica");

  auto* gamma2 = app.add_subcommand("gamma2", "Deterministic gamma_2 approximation");
  add_common(gamma2, common);
  gamma2->add_option("--metric", g2.metric, "Distance table CSV instead of a graph");
  gamma2->add_option("--r", g2.r, "Scale base")->check(CLI::Range(16, 1 << 20));
  gamma2->add_option("--certificate", g2.certificate, "Write the certificate tree as JSON");
  gamma2->add_flag("--brute-force", g2.brute_force, "Also compute the exact value (at most 10 points)");

  auto* resistance = app.add_subcommand("resistance", "Effective resistances");
  add_common(resistance, common);
  resistance->add_option("--pair", res.pairs, "Vertex pair u,v (repeatable); default all pairs");
  resistance->add_option("--ground", res.ground, "Ground vertex");

  auto* gffcmd = app.add_subcommand("gff-sample", "Draw Gaussian free field samples");
  add_common(gffcmd, common);
  gffcmd->add_option("--count", gff.count, "Number of draws")->check(CLI::PositiveNumber);
  gffcmd->add_option("--mode", gff.mode, "Field")->check(CLI::IsMember({"pinned", "pseudoroot"}));
  gffcmd->add_option("--estimate", gff.estimate, "Estimate E sup over this many draws instead of printing them");
  gffcmd->add_option("--ground", gff.ground, "Pinned vertex");

  auto* verify = app.add_subcommand("verify", "Identity and distribution checks");
  verify->require_subcommand(1);
  std::string which;
  for (const char* name : {"foster", "commute", "starmesh", "rayknight", "sketch", "escape", "isometry"}) {
    auto* sub = verify->add_subcommand(name);
    add_common(sub, common);
    sub->add_option("--t", ver.t, "Local time level (rayknight)");
    sub->add_option("--reps", ver.reps, "Replicas (rayknight, escape)");
    sub->add_option("--v0", ver.v0, "Root vertex (rayknight, escape)");
    sub->add_option("--vertex", ver.vertex, "Vertex to eliminate (starmesh)");
    sub->add_option("--target", ver.target, "Target vertex (escape)");
    sub->add_option("--samples", ver.samples, "GFF draws (isometry)")->check(CLI::Range(2, 100000000));
    sub->callback([&which, name] { which = name; });
  }

  auto* asymptotics = app.add_subcommand("asymptotics", "Edge count times squared GFF maximum against cover time");
  add_common(asymptotics, common, false);
  asymptotics->add_option("--family", asym.family, "Family")->check(CLI::IsMember({"complete", "tree"}));
  asymptotics->add_option("--sizes", asym.sizes, "n for complete graphs, heights for binary trees")->delimiter(',');
  asymptotics->add_option("--samples", asym.samples, "Gaussian samples")->check(CLI::Range(2, 100000000));
  asymptotics->add_option("--reps", asym.reps, "Cover-time replicas (0 skips)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*info) return cmd_info(common);
    if (*estimate) return cmd_estimate(common, est);
    if (*simulate) return cmd_simulate(common, sim);
    if (*gamma2) return cmd_gamma2(common, g2);
    if (*resistance) return cmd_resistance(common, res);
    if (*gffcmd) return cmd_gff(common, gff);
    if (*verify) return cmd_verify(common, which, ver);
    if (*asymptotics) return cmd_asymptotics(common, asym);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const StepBudgetExceeded& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
