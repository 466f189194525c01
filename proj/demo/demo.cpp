// Walks through the main estimators on a small weighted network:
//   covertime_demo [edge-list]
// Without an argument it builds the same network as demo/barbell.edges.

#include <iostream>

#include <covertime/covertime.hpp>

using namespace covertime;

int main(int argc, char** argv) {
  Network net = argc > 1 ? io::read_network_file(argv[1])
                         : build_network({{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {2, 3, 0.5}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}});

  const ResistanceOracle oracle(net);
  std::cout << "n = " << net.size() << ", total conductance = " << net.total_conductance() << '\n';
  std::cout << "R_eff(0, " << net.size() - 1 << ") = " << oracle.r_eff(0, net.size() - 1) << '\n';
  std::cout << "Foster residual = " << foster_residual(oracle) << '\n';

  const auto sup = estimate_sup(GFFSampler::pinned(oracle), 20000, kDefaultSeed);
  std::cout << "E sup eta = " << sup.mean << " +- " << sup.std_error << '\n';
  std::cout << "gamma_2 approximation A = " << gamma2_of_network(oracle) << '\n';

  ReportConfig config;
  const auto report = full_report(net, config, argc > 1 ? argv[1] : "demo");
  std::cout << to_json(report).dump(2) << '\n';
}
