#include "dcl/composite_problems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcl/error.hpp"

namespace dcl::problems {

namespace {

void require_positive_scale(double lam) {
  if (!(lam > 0.0)) fail(ErrorCode::NonPositiveScale, "prox scale must be positive, got " + std::to_string(lam));
}

void require_size(const Vec& x, int p, const char* what) {
  if (x.size() != p) {
    fail(ErrorCode::DimensionMismatch,
         std::string(what) + ": expected dimension " + std::to_string(p) + ", got " + std::to_string(x.size()));
  }
}

// Largest eigenvalue of M M^T through the smaller Gram matrix.
double largest_squared_singular_value(const Mat& M) {
  if (M.size() == 0) return 0.0;
  const Mat gram = M.rows() <= M.cols() ? Mat(M * M.transpose()) : Mat(M.transpose() * M);
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

// ln(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// 1 / (1 + exp(t)) without overflow.
double logistic_of_neg(double t) {
  if (t >= 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

nlohmann::json matrix_json(const Mat& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Mat matrix_from_json(const nlohmann::json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.at(0).size());
  Mat M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != c) fail(ErrorCode::DimensionMismatch, "ragged matrix rows");
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return M;
}

Vec vector_from_json(const nlohmann::json& arr) {
  const auto values = arr.get<std::vector<double>>();
  return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Vec prox_l1(const Vec& u, double lam) {
  require_positive_scale(lam);
  return u.unaryExpr([lam](double t) {
    const double mag = std::abs(t) - lam;
    return mag > 0.0 ? std::copysign(mag, t) : 0.0;
  });
}

Vec prox_l2norm(const Vec& u, const Vec& b, double lam) {
  require_positive_scale(lam);
  if (u.size() != b.size()) fail(ErrorCode::DimensionMismatch, "prox_l2norm: u and b differ in size");
  const Vec diff = u - b;
  const double dist = diff.norm();
  if (dist <= lam) return b;
  return u - (lam / dist) * diff;
}

Mat prox_quadratic_matrix(const Mat& U, const Mat& target, double lam) {
  require_positive_scale(lam);
  if (U.rows() != target.rows() || U.cols() != target.cols()) {
    fail(ErrorCode::DimensionMismatch, "prox_quadratic_matrix: shapes differ");
  }
  return (U + lam * target) / (1.0 + lam);
}

// ---------------------------------------------------------------------------

LeastSquaresL1::LeastSquaresL1(Mat A, Vec b, double theta) : A_(std::move(A)), b_(std::move(b)), theta_(theta) {
  if (A_.rows() != b_.size()) fail(ErrorCode::DimensionMismatch, "least squares: rows(A) != size(b)");
  if (!(theta_ >= 0.0)) fail(ErrorCode::InvalidArgument, "theta must be nonnegative");
  lipschitz_ = largest_squared_singular_value(A_);
}

Vec LeastSquaresL1::gradient(const Vec& x) const {
  require_size(x, dimension(), "least squares gradient");
  return A_.transpose() * (A_ * x - b_);
}

Vec LeastSquaresL1::prox(const Vec& u, double scale) const {
  require_positive_scale(scale);
  if (theta_ == 0.0) return u;
  return prox_l1(u, scale * theta_);
}

double LeastSquaresL1::smooth_value(const Vec& x) const { return 0.5 * (A_ * x - b_).squaredNorm(); }

double LeastSquaresL1::nonsmooth_value(const Vec& x) const { return theta_ * x.lpNorm<1>(); }

nlohmann::json LeastSquaresL1::to_json() const {
  return {{"kind", "least_squares_l1"}, {"A", matrix_json(A_)}, {"b", vector_json(b_)}, {"theta", theta_}};
}

// ---------------------------------------------------------------------------

LogisticL1::LogisticL1(Mat features, Vec labels, double theta)
    : H_(std::move(features)), d_(std::move(labels)), theta_(theta) {
  if (H_.rows() < 1) fail(ErrorCode::InvalidArgument, "logistic objective needs at least one sample");
  if (H_.rows() != d_.size()) fail(ErrorCode::DimensionMismatch, "logistic: one label per sample required");
  for (Eigen::Index j = 0; j < d_.size(); ++j) {
    if (d_(j) != 1.0 && d_(j) != -1.0) fail(ErrorCode::InvalidArgument, "logistic labels must be +1 or -1");
  }
  if (!(theta_ >= 0.0)) fail(ErrorCode::InvalidArgument, "theta must be nonnegative");
  lipschitz_ = largest_squared_singular_value(H_) / (4.0 * static_cast<double>(H_.rows()));
}

Vec LogisticL1::gradient(const Vec& x) const {
  require_size(x, dimension(), "logistic gradient");
  const Vec margins = d_.cwiseProduct(H_ * x);
  Vec weights(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j) weights(j) = -d_(j) * logistic_of_neg(margins(j));
  return H_.transpose() * weights / static_cast<double>(H_.rows());
}

Vec LogisticL1::prox(const Vec& u, double scale) const {
  require_positive_scale(scale);
  if (theta_ == 0.0) return u;
  return prox_l1(u, scale * theta_);
}

double LogisticL1::smooth_value(const Vec& x) const {
  const Vec margins = d_.cwiseProduct(H_ * x);
  double total = 0.0;
  for (Eigen::Index j = 0; j < margins.size(); ++j) total += softplus(-margins(j));
  return total / static_cast<double>(H_.rows());
}

double LogisticL1::nonsmooth_value(const Vec& x) const { return theta_ * x.lpNorm<1>(); }

nlohmann::json LogisticL1::to_json() const {
  return {{"kind", "logistic_l1"}, {"H", matrix_json(H_)}, {"d", vector_json(d_)}, {"theta", theta_}};
}

// ---------------------------------------------------------------------------

GeometricMedianTerm::GeometricMedianTerm(Vec anchor) : b_(std::move(anchor)) {}

Vec GeometricMedianTerm::prox(const Vec& u, double scale) const { return prox_l2norm(u, b_, scale); }

nlohmann::json GeometricMedianTerm::to_json() const {
  return {{"kind", "geometric_median"}, {"b", vector_json(b_)}};
}

QuadraticProximity::QuadraticProximity(Vec target) : target_(std::move(target)) {}

Vec QuadraticProximity::prox(const Vec& u, double scale) const {
  require_positive_scale(scale);
  if (u.size() != target_.size()) fail(ErrorCode::DimensionMismatch, "quadratic prox: size mismatch");
  return (u + scale * target_) / (1.0 + scale);
}

nlohmann::json QuadraticProximity::to_json() const {
  return {{"kind", "quadratic_proximity"}, {"target", vector_json(target_)}};
}

ObjectivePtr least_squares_l1(Mat A, Vec b, double theta) {
  return std::make_shared<LeastSquaresL1>(std::move(A), std::move(b), theta);
}

ObjectivePtr logistic_l1(Mat features, Vec labels, double theta) {
  return std::make_shared<LogisticL1>(std::move(features), std::move(labels), theta);
}

ObjectivePtr geometric_median(Vec anchor) { return std::make_shared<GeometricMedianTerm>(std::move(anchor)); }

// ---------------------------------------------------------------------------

ProblemInstance::ProblemInstance(int dimension, std::vector<ObjectivePtr> objs)
    : p(dimension), objectives(std::move(objs)) {
  for (const auto& obj : objectives) {
    if (!obj) fail(ErrorCode::InvalidArgument, "null objective");
    if (obj->dimension() != p) {
      fail(ErrorCode::DimensionMismatch, "objective of dimension " + std::to_string(obj->dimension()) +
                                             " in a problem of dimension " + std::to_string(p));
    }
  }
}

double ProblemInstance::lipschitz() const {
  double L = 0.0;
  for (const auto& obj : objectives) L = std::max(L, obj->lipschitz());
  return L;
}

double ProblemInstance::average_value(const Vec& x) const {
  double total = 0.0;
  for (const auto& obj : objectives) total += obj->value(x);
  return objectives.empty() ? 0.0 : total / static_cast<double>(objectives.size());
}

nlohmann::json to_json(const ProblemInstance& prob) {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& obj : prob.objectives) objs.push_back(obj->to_json());
  nlohmann::json doc = {{"p", prob.p}, {"objectives", std::move(objs)}};
  if (prob.reference_solution) doc["reference_solution"] = vector_json(*prob.reference_solution);
  return doc;
}

ProblemInstance problem_from_json(const nlohmann::json& doc) {
  try {
    std::vector<ObjectivePtr> objs;
    for (const auto& o : doc.at("objectives")) {
      const auto kind = o.at("kind").get<std::string>();
      if (kind == "least_squares_l1") {
        objs.push_back(least_squares_l1(matrix_from_json(o.at("A")), vector_from_json(o.at("b")),
                                        o.at("theta").get<double>()));
      } else if (kind == "logistic_l1") {
        objs.push_back(logistic_l1(matrix_from_json(o.at("H")), vector_from_json(o.at("d")),
                                   o.at("theta").get<double>()));
      } else if (kind == "geometric_median") {
        objs.push_back(geometric_median(vector_from_json(o.at("b"))));
      } else if (kind == "quadratic_proximity") {
        objs.push_back(std::make_shared<QuadraticProximity>(vector_from_json(o.at("target"))));
      } else {
        fail(ErrorCode::InvalidArgument, "unknown objective kind '" + kind + "'");
      }
    }
    ProblemInstance prob(doc.at("p").get<int>(), std::move(objs));
    if (doc.contains("reference_solution")) prob.reference_solution = vector_from_json(doc.at("reference_solution"));
    return prob;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::InvalidArgument, std::string("malformed problem document: ") + ex.what());
  }
}

}  // namespace dcl::problems
