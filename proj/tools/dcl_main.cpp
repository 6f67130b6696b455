// dcl <experiment> [--algo a,b] [--seed S] [--horizon-ms T] [--alpha A] [--eta E]
//     [--record-every R] [--out FILE.csv] [--bounds]

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcl/dcl.h"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

int exit_code(dcl_status s) {
  switch (s) {
    case DCL_OK:
      return 0;
    case DCL_NO_CONVERGENCE:
    case DCL_FACTORIZATION_MISMATCH:
    case DCL_NOT_POSITIVE_DEFINITE:
    case DCL_CONNECTIVITY_FAILURE:
    case DCL_DEGENERATE_START:
    case DCL_INTERNAL_ERROR:
      return kNumericalError;
    default:
      return kConfigError;
  }
}

int report(dcl_status s) {
  std::fprintf(stderr, "dcl: %s: %s\n", dcl_status_name(s), dcl_last_error());
  return exit_code(s);
}

using ExperimentPtr = std::unique_ptr<dcl_experiment, decltype(&dcl_experiment_free)>;

int print_bounds(dcl_experiment* exp) {
  dcl_bounds b{};
  std::vector<double> q(256);
  if (auto s = dcl_experiment_bounds(exp, &b, q.data(), static_cast<int>(q.size())); s != DCL_OK) return report(s);
  q.resize(static_cast<std::size_t>(b.agents));
  std::printf("agents        %d\n", b.agents);
  std::printf("edges         %d\n", b.edges);
  std::printf("rho_min       %.10g\n", b.rho_min);
  std::printf("kappa         %.10g\n", b.kappa);
  std::printf("L             %.10g\n", b.lipschitz);
  std::printf("2 rho_min/L   %.10g\n", b.alpha_bound);
  std::printf("q             ");
  for (std::size_t i = 0; i < q.size(); ++i) std::printf("%s%.6f", i ? " " : "", q[i]);
  std::printf("\nq_min         %.10g\n", b.q_min);
  std::printf("observed tau  %ld\n", b.observed_tau);
  std::printf("eta_max       %.10g\n", b.eta_max);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synchronous and asynchronous decentralized proximal algorithms on simulated networks"};
  app.set_version_flag("--version", "dcl 0.1.0");

  std::string experiment;
  std::string algos = "pg-extra,async-pd";
  std::uint64_t seed = 0;
  std::optional<double> horizon, alpha, eta;
  long record_every = 10;
  std::string out = "-";
  bool bounds = false;
  bool quiet = false;

  app.add_option("experiment", experiment, "cs, logistic, matcomp or geomedian")->required();
  app.add_option("--algo", algos, "comma-separated: pg-extra, async-pd, prox-dgd, async-prox-dgd");
  app.add_option("--seed", seed, "instance and timing seed");
  app.add_option("--horizon-ms", horizon, "simulated time budget (ms)");
  app.add_option("--alpha", alpha, "step size for every algorithm");
  app.add_option("--eta", eta, "global relaxation for the asynchronous algorithms");
  app.add_option("--record-every", record_every, "agent updates between CSV rows");
  app.add_option("--out", out, "CSV path, - for stdout");
  app.add_flag("--bounds", bounds, "print network and step-size bounds and exit");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  dcl_set_warnings(quiet ? 0 : 1);

  dcl_experiment* raw = nullptr;
  if (auto s = dcl_experiment_create(experiment.c_str(), seed, &raw); s != DCL_OK) return report(s);
  ExperimentPtr exp(raw, &dcl_experiment_free);

  dcl_status s = dcl_experiment_set_algorithms(exp.get(), algos.c_str());
  if (s == DCL_OK && horizon) s = dcl_experiment_set_horizon(exp.get(), *horizon);
  if (s == DCL_OK && alpha) s = dcl_experiment_set_alpha(exp.get(), *alpha);
  if (s == DCL_OK && eta) s = dcl_experiment_set_eta(exp.get(), *eta);
  if (s == DCL_OK) s = dcl_experiment_set_record_every(exp.get(), record_every);
  if (s != DCL_OK) return report(s);

  if (bounds) return print_bounds(exp.get());
  if (s = dcl_experiment_run(exp.get(), out.c_str()); s != DCL_OK) return report(s);
  return 0;
}
