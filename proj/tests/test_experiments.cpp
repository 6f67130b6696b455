#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dcl/csv.hpp"
#include "dcl/error.hpp"
#include "dcl/experiments.hpp"
#include "oracles.hpp"

using namespace dcl;
using namespace dcl::experiments;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("dcl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("name parsing") {
  CHECK(parse_experiment("cs") == ExperimentKind::CompressedSensing);
  CHECK(parse_experiment("matcomp") == ExperimentKind::MatrixCompletion);
  CHECK(to_string(parse_experiment("geomedian")) == "geomedian");
  CHECK(parse_algorithm("async-prox-dgd") == AlgorithmKind::AsyncProxDgd);
  CHECK(to_string(AlgorithmKind::PgExtra) == "pg-extra");
  CHECK(is_async(AlgorithmKind::AsyncPd));
  CHECK_FALSE(is_async(AlgorithmKind::ProxDgd));
  CHECK(code_of([] { parse_experiment("admm"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_algorithm("extra"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("compressed sensing instance") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Instance inst = gen_cs_instance(seed);
    CHECK(inst.topo.agents() == 10);
    CHECK(inst.prob.p == 50);
    CHECK((inst.x_true.array() != 0.0).count() == 10);
    int rows = 0;
    for (int i = 0; i < 10; ++i) {
      const auto& f = dynamic_cast<const problems::LeastSquaresL1&>(inst.prob.objective(i));
      CHECK(f.A().rows() == 3);
      CHECK(f.A().cols() == 50);
      CHECK(f.theta() == 0.01);
      CHECK(std::abs(Eigen::JacobiSVD<Mat>(f.A()).singularValues()(0) - 1.0) < 1e-10);
      rows += static_cast<int>(f.A().rows());
    }
    CHECK(rows == 30);
  }
  CHECK(gen_cs_instance(3).x_true == gen_cs_instance(3).x_true);
  CHECK(gen_cs_instance(3).topo.net == gen_cs_instance(3).topo.net);
}

TEST_CASE("logistic instance") {
  Instance inst = gen_logistic_instance(2);
  CHECK(inst.topo.agents() == 10);
  CHECK((inst.x_true.array() == 0.0).count() == 40);
  int plus = 0, total = 0;
  for (int i = 0; i < 10; ++i) {
    const auto& f = dynamic_cast<const problems::LogisticL1&>(inst.prob.objective(i));
    CHECK(f.features().rows() == 3);
    for (int j = 0; j < f.labels().size(); ++j) {
      CHECK(std::abs(f.labels()(j)) == 1.0);
      plus += f.labels()(j) > 0;
      ++total;
    }
  }
  CHECK(plus > 0);
  CHECK(plus < total);
}

TEST_CASE("geometric median instance") {
  Instance inst = gen_geomedian_instance(1);
  CHECK(inst.topo.agents() == 11);
  CHECK(inst.prob.p == 4);
  CHECK(inst.prob.lipschitz() == 0.0);
  CHECK(inst.x_true.size() == 0);
  CHECK(code_of([] { make_instance(ExperimentKind::MatrixCompletion, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("median of simple point sets") {
  auto line = graph::Topology::build(graph::NetworkSpec(3, {{0, 1}, {1, 2}}));
  SUBCASE("coincident points") {
    Vec b(2);
    b << 1.5, -2.0;
    problems::ProblemInstance prob(2, {problems::geometric_median(b), problems::geometric_median(b),
                                       problems::geometric_median(b)});
    auto ref = solvers::solve_reference(prob, line, 1e-12, 1000000);
    CHECK((ref.x - b).norm() < 1e-8);
  }
  SUBCASE("three points on a line") {
    std::vector<problems::ObjectivePtr> objs;
    for (double v : {0.0, 1.0, 10.0}) objs.push_back(problems::geometric_median(Vec::Constant(1, v)));
    problems::ProblemInstance prob(1, objs);
    auto ref = solvers::solve_reference(prob, line, 1e-12, 1000000);
    CHECK(std::abs(ref.x(0) - 1.0) < 1e-8);
  }
  SUBCASE("generated instance against Weiszfeld") {
    Instance inst = gen_geomedian_instance(4);
    Mat B(4, 11);
    for (int i = 0; i < 11; ++i) {
      B.col(i) = dynamic_cast<const problems::GeometricMedianTerm&>(inst.prob.objective(i)).anchor();
    }
    auto ref = solvers::solve_reference(inst.prob, inst.topo, 1e-12, 1000000);
    CHECK(std::abs(oracle::median_objective(B, ref.x) - oracle::median_objective(B, oracle::weiszfeld(B))) < 1e-9);
  }
}

TEST_CASE("relative error") {
  Mat star = Mat::Ones(3, 2), x0 = Mat::Zero(3, 2);
  CHECK(relative_error(star, star, x0) == 0.0);
  CHECK(relative_error(x0, star, x0) == 1.0);
  CHECK(relative_error((x0 + star) / 2, star, x0) == doctest::Approx(0.5));
  CHECK(code_of([&] { relative_error(x0, star, star); }) == ErrorCode::DegenerateStart);
  CHECK(code_of([&] { relative_error(Mat::Zero(2, 2), star, x0); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("defaults") {
  CHECK(defaults_for(ExperimentKind::CompressedSensing, AlgorithmKind::AsyncPd).eta == doctest::Approx(0.288));
  CHECK(defaults_for(ExperimentKind::Logistic, AlgorithmKind::PgExtra).alpha == doctest::Approx(0.4));
  CHECK(defaults_for(ExperimentKind::Logistic, AlgorithmKind::AsyncPd).eta == doctest::Approx(0.224));
  CHECK(defaults_for(ExperimentKind::MatrixCompletion, AlgorithmKind::AsyncPd).eta == doctest::Approx(0.204));
  CHECK(defaults_for(ExperimentKind::GeometricMedian, AlgorithmKind::AsyncPd).alpha == 1.0);
  CHECK(defaults_for(ExperimentKind::GeometricMedian, AlgorithmKind::AsyncPd).eta == doctest::Approx(0.4));
  CHECK(defaults_for(ExperimentKind::CompressedSensing, AlgorithmKind::ProxDgd).alpha == doctest::Approx(0.05));
  CHECK(defaults_for(ExperimentKind::CompressedSensing, AlgorithmKind::AsyncProxDgd).eta == doctest::Approx(0.36));
  CHECK(default_horizon_ms(ExperimentKind::CompressedSensing) == 2760.0);
}

TEST_CASE("config validation") {
  ExperimentConfig cfg;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::InvalidArgument);
  cfg.algorithms = {AlgorithmKind::PgExtra};
  validate(cfg);
  cfg.record_every = 0;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::InvalidArgument);
  cfg.record_every = 1;
  cfg.alpha = -1.0;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::NonPositiveScale);
  cfg.alpha.reset();
  cfg.horizon_ms = -5;
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::HorizonZero);
  cfg.horizon_ms = 0;
  cfg.kind = ExperimentKind::MatrixCompletion;
  cfg.algorithms = {AlgorithmKind::ProxDgd};
  CHECK(code_of([&] { validate(cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("CSV is loss-free") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-30, 30);
  std::vector<TrajectoryRecord> rows;
  for (int t = 0; t < 500; ++t) {
    TrajectoryRecord r;
    r.algo = t % 2 ? "async-pd" : "pg-extra";
    r.seed = gen();
    r.k = static_cast<long>(gen() % 1000000);
    r.sim_time_ms = std::pow(10.0, u(gen) / 10.0) * u(gen);
    r.rel_error = std::pow(10.0, u(gen));
    r.residual = t % 50 == 0 ? std::numeric_limits<double>::denorm_min() : std::pow(10.0, u(gen));
    rows.push_back(r);
  }
  std::stringstream buf;
  csv::write_trajectory(buf, rows);
  CHECK(buf.str().rfind(std::string(csv::kHeader) + "\n", 0) == 0);
  auto back = csv::read_trajectory(buf);
  CHECK(back == rows);

  std::stringstream nan;
  TrajectoryRecord r;
  r.algo = "x";
  r.residual = std::numeric_limits<double>::quiet_NaN();
  csv::write_trajectory(nan, {r});
  auto nan_back = csv::read_trajectory(nan);
  REQUIRE(nan_back.size() == 1);
  CHECK(std::isnan(nan_back[0].residual));

  std::stringstream bad("algo,seed\n");
  CHECK(code_of([&] { csv::read_trajectory(bad); }) == ErrorCode::InvalidArgument);
  std::stringstream short_row(std::string(csv::kHeader) + "\npg-extra,1,2\n");
  CHECK(code_of([&] { csv::read_trajectory(short_row); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("experiment runs are reproducible and cached") {
  const fs::path dir = scratch("runs");
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::CompressedSensing;
  cfg.algorithms = {AlgorithmKind::PgExtra, AlgorithmKind::AsyncPd, AlgorithmKind::ProxDgd,
                    AlgorithmKind::AsyncProxDgd};
  cfg.seed = 4;
  cfg.horizon_ms = 150;
  cfg.cache_dir = dir;
  set_warnings_enabled(false);
  run_experiment_to_csv(cfg, (dir / "a.csv").string());
  CHECK(fs::exists(dir / "reference_cs_4.json"));
  run_experiment_to_csv(cfg, (dir / "b.csv").string());
  cfg.cache_dir.clear();
  run_experiment_to_csv(cfg, (dir / "c.csv").string());
  set_warnings_enabled(true);
  const std::string a = slurp(dir / "a.csv");
  CHECK(a == slurp(dir / "b.csv"));
  CHECK(a == slurp(dir / "c.csv"));

  std::istringstream in(a);
  auto rows = csv::read_trajectory(in);
  for (const char* algo : {"pg-extra", "async-pd", "prox-dgd", "async-prox-dgd"}) {
    long count = 0;
    for (const auto& r : rows) {
      if (r.algo != algo) continue;
      if (count == 0) {
        CHECK(r.k == 0);
        CHECK(r.rel_error == 1.0);
      }
      CHECK(r.sim_time_ms <= 150.0);
      ++count;
    }
    CHECK(count > 1);
  }
}

TEST_CASE("a failed write leaves nothing behind") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::GeometricMedian;
  cfg.algorithms = {AlgorithmKind::AsyncPd};
  cfg.horizon_ms = 50;
  const fs::path target = scratch("io") / "missing" / "out.csv";
  CHECK(code_of([&] { run_experiment_to_csv(cfg, target.string()); }) == ErrorCode::Io);
  CHECK_FALSE(fs::exists(target));
}

TEST_CASE("bounds report") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::CompressedSensing;
  cfg.algorithms = {AlgorithmKind::AsyncPd};
  cfg.seed = 0;
  BoundsReport r = compute_bounds(cfg);
  CHECK(r.agents == 10);
  CHECK(r.q.size() == 10);
  CHECK(r.lipschitz == doctest::Approx(1.0));
  CHECK(r.alpha_bound == doctest::Approx(2 * r.rho_min));
  CHECK(r.observed_tau > 0);
  const double qmin = *std::min_element(r.q.begin(), r.q.end());
  CHECK(r.eta_max == doctest::Approx(async::eta_max_bound(10, qmin, r.kappa, r.observed_tau)));
  cfg.kind = ExperimentKind::GeometricMedian;
  CHECK(std::isinf(compute_bounds(cfg).alpha_bound));
}
