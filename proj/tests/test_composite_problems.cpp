#include <cmath>
#include <random>

#include "doctest.h"
#include "dcl/composite_problems.hpp"
#include "dcl/error.hpp"
#include "oracles.hpp"

using namespace dcl;
using namespace dcl::problems;

namespace {

Vec randn(int p, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(p);
  for (int k = 0; k < p; ++k) v(k) = nd(gen);
  return v;
}

Mat randn(int r, int c, std::mt19937_64& gen) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = nd(gen);
  return M;
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

double rel_gap(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("least squares gradient and constant") {
  LeastSquaresL1 f(Mat::Identity(2, 2), Vec::Zero(2), 0.01);
  CHECK(f.gradient(vec({1, 2})).isApprox(vec({1, 2})));
  CHECK(f.lipschitz() == doctest::Approx(1.0));
  CHECK(f.theta() == 0.01);
  CHECK(f.value(vec({1, 2})) == doctest::Approx(2.5 + 0.03));

  std::mt19937_64 gen(1);
  Mat A = randn(3, 50, gen);
  A /= Eigen::JacobiSVD<Mat>(A).singularValues()(0);
  LeastSquaresL1 g(A, randn(3, gen), 0.01);
  // Power iteration on A^T A.
  Vec v = Vec::Ones(50);
  double lam = 0.0;
  for (int it = 0; it < 2000; ++it) {
    Vec w = A.transpose() * (A * v);
    lam = w.norm() / v.norm();
    v = w / w.norm();
  }
  CHECK(std::abs(g.lipschitz() - 1.0) < 1e-10);
  CHECK(std::abs(lam - 1.0) < 1e-10);

  CHECK(code_of([] { LeastSquaresL1(Mat::Identity(2, 2), Vec::Zero(3), 0.1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("logistic gradient by hand") {
  Mat H(1, 2);
  H << 1, 0;
  LogisticL1 f(H, vec({1.0}), 0.1);
  CHECK(f.gradient(Vec::Zero(2)).isApprox(vec({-0.5, 0.0})));
  Vec far = vec({1e3, 0});
  CHECK(f.gradient(far).norm() < 1e-12);
  CHECK(std::isfinite(f.smooth_value(vec({-1e3, 0}))));
  CHECK(f.lipschitz() == doctest::Approx(0.25));
  CHECK(code_of([] { LogisticL1(Mat::Ones(1, 2), vec({0.5}), 0.1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { LogisticL1(Mat::Zero(0, 2), Vec::Zero(0), 0.1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("logistic constant bounds the gradient variation") {
  std::mt19937_64 gen(2);
  LogisticL1 f(randn(3, 50, gen), vec({1, -1, 1}), 0.1);
  for (int t = 0; t < 50; ++t) {
    Vec a = randn(50, gen, 3.0), b = randn(50, gen, 3.0);
    CHECK((f.gradient(a) - f.gradient(b)).norm() <= f.lipschitz() * (a - b).norm() * (1 + 1e-12));
  }
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 gen(3);
  std::vector<ObjectivePtr> objs{least_squares_l1(randn(3, 50, gen), randn(3, gen), 0.01),
                                 logistic_l1(randn(3, 50, gen), vec({1, -1, -1}), 0.1)};
  for (const auto& obj : objs) {
    auto s = [&](const Vec& x) { return obj->smooth_value(x); };
    for (int t = 0; t < 50; ++t) {
      Vec x = randn(50, gen);
      CHECK(rel_gap(obj->gradient(x), oracle::central_gradient(s, x)) < 1e-5);
    }
  }
}

TEST_CASE("prox closed forms") {
  CHECK(prox_l1(vec({3, -0.5, 0}), 1.0).isApprox(vec({2, 0, 0})));
  CHECK(prox_l1(Vec::Zero(4), 7.0) == Vec::Zero(4));
  CHECK(prox_l2norm(vec({3, 0}), Vec::Zero(2), 5.0) == Vec::Zero(2));
  CHECK(prox_l2norm(vec({3, 0}), Vec::Zero(2), 1.0).isApprox(vec({2, 0})));
  CHECK(prox_l2norm(vec({1, 1}), vec({1, 1}), 0.3) == vec({1, 1}));

  Mat T(2, 2);
  T << 1, 2, 3, 4;
  CHECK(prox_quadratic_matrix(Mat::Zero(2, 2), T, 1.0).isApprox(T / 2));
  CHECK(prox_quadratic_matrix(T, T, 3.0).isApprox(T));
  Mat U = Mat::Constant(2, 2, 9.0);
  CHECK((prox_quadratic_matrix(U, T, 1e-12) - U).cwiseAbs().maxCoeff() < 1e-10);

  GeometricMedianTerm g(vec({0, 0}));
  CHECK(g.prox(vec({3, 0}), 1.0).isApprox(vec({2, 0})));
  CHECK(g.gradient(vec({5, 5})) == Vec::Zero(2));

  CHECK(code_of([] { prox_l1(Vec::Zero(2), 0.0); }) == ErrorCode::NonPositiveScale);
  CHECK(code_of([] { prox_l2norm(Vec::Zero(2), Vec::Zero(3), 1.0); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { prox_quadratic_matrix(Mat::Zero(2, 2), Mat::Zero(2, 3), 1.0); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("prox operators against a brute-force grid") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> ul(0.1, 2.0);
  for (int t = 0; t < 50; ++t) {
    const double lam = ul(gen);
    const Vec u = randn(2, gen, 2.0);
    const Vec b = randn(2, gen);
    const double theta = 0.7;

    LeastSquaresL1 ls(Mat::Identity(2, 2), Vec::Zero(2), theta);
    auto r1 = [&](const Vec& z) { return theta * z.lpNorm<1>(); };
    CHECK((ls.prox(u, lam) - oracle::grid_prox(r1, u, lam, 3.0, 0.01)).cwiseAbs().maxCoeff() < 1e-3);

    GeometricMedianTerm gm(b);
    auto r2 = [&](const Vec& z) { return (z - b).norm(); };
    CHECK((gm.prox(u, lam) - oracle::grid_prox(r2, u, lam, 3.0, 0.01)).cwiseAbs().maxCoeff() < 1e-3);

    QuadraticProximity qp(b);
    auto r3 = [&](const Vec& z) { return 0.5 * (z - b).squaredNorm(); };
    CHECK((qp.prox(u, lam) - oracle::grid_prox(r3, u, lam, 6.0, 0.01)).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("prox operators dominate random candidates") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 50; ++t) {
    const int p = 1 + static_cast<int>(gen() % 20);
    const double lam = 0.05 + 2.0 * std::uniform_real_distribution<double>(0, 1)(gen);
    const Vec u = randn(p, gen, 2.0);
    const Vec b = randn(p, gen);

    auto l1 = [&](const Vec& z) { return 0.3 * z.lpNorm<1>(); };
    CHECK(oracle::best_candidate_gain(l1, prox_l1(u, 0.3 * lam), u, lam, gen) <= 1e-8);

    auto l2 = [&](const Vec& z) { return (z - b).norm(); };
    CHECK(oracle::best_candidate_gain(l2, prox_l2norm(u, b, lam), u, lam, gen) <= 1e-8);

    QuadraticProximity qp(b);
    auto sq = [&](const Vec& z) { return 0.5 * (z - b).squaredNorm(); };
    CHECK(oracle::best_candidate_gain(sq, qp.prox(u, lam), u, lam, gen) <= 1e-8);

    LogisticL1 lg(randn(2, p, gen), vec({1, -1}), 0.1);
    auto l1b = [&](const Vec& z) { return 0.1 * z.lpNorm<1>(); };
    CHECK(oracle::best_candidate_gain(l1b, lg.prox(u, lam), u, lam, gen) <= 1e-8);
  }
}

TEST_CASE("prox operators are nonexpansive") {
  std::mt19937_64 gen(6);
  for (int t = 0; t < 100; ++t) {
    Vec a = randn(6, gen, 3.0), c = randn(6, gen, 3.0), b = randn(6, gen);
    CHECK((prox_l1(a, 0.5) - prox_l1(c, 0.5)).norm() <= (a - c).norm() + 1e-14);
    CHECK((prox_l2norm(a, b, 0.5) - prox_l2norm(c, b, 0.5)).norm() <= (a - c).norm() + 1e-14);
  }
}

TEST_CASE("problem instance") {
  std::mt19937_64 gen(7);
  ProblemInstance prob(3, {least_squares_l1(randn(2, 3, gen), randn(2, gen), 0.01),
                           logistic_l1(randn(4, 3, gen), vec({1, 1, -1, 1}), 0.1), geometric_median(randn(3, gen))});
  CHECK(prob.agents() == 3);
  CHECK(prob.lipschitz() == doctest::Approx(std::max(prob.objective(0).lipschitz(), prob.objective(1).lipschitz())));
  Vec x = randn(3, gen);
  double avg = 0.0;
  for (int i = 0; i < 3; ++i) avg += prob.objective(i).value(x) / 3.0;
  CHECK(prob.average_value(x) == doctest::Approx(avg));

  SUBCASE("JSON round trip is exact") {
    prob.reference_solution = randn(3, gen);
    ProblemInstance back = problem_from_json(to_json(prob));
    REQUIRE(back.agents() == 3);
    CHECK(back.p == 3);
    CHECK(*back.reference_solution == *prob.reference_solution);
    for (int t = 0; t < 5; ++t) {
      Vec z = randn(3, gen);
      for (int i = 0; i < 3; ++i) {
        CHECK(back.objective(i).value(z) == prob.objective(i).value(z));
        CHECK(back.objective(i).gradient(z) == prob.objective(i).gradient(z));
      }
    }
  }
  SUBCASE("shape and kind errors") {
    CHECK(code_of([&] { ProblemInstance(4, prob.objectives); }) == ErrorCode::DimensionMismatch);
    CHECK(code_of([] { problem_from_json(nlohmann::json{{"p", 1}, {"objectives", {{{"kind", "huber"}}}}}); }) ==
          ErrorCode::InvalidArgument);
  }
}
