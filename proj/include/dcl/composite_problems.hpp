#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dcl::problems {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Private objective f_i = s_i + r_i of one agent: s_i smooth with an
// L_i-Lipschitz gradient, r_i proximable.
class AgentObjective {
 public:
  virtual ~AgentObjective() = default;

  virtual int dimension() const = 0;
  /// Gradient of s_i.
  virtual Vec gradient(const Vec& x) const = 0;
  /// argmin_z r_i(z) + ||z - u||^2 / (2 scale), scale > 0.
  virtual Vec prox(const Vec& u, double scale) const = 0;
  virtual double lipschitz() const = 0;
  virtual double smooth_value(const Vec& x) const = 0;
  virtual double nonsmooth_value(const Vec& x) const = 0;
  virtual nlohmann::json to_json() const = 0;

  double value(const Vec& x) const { return smooth_value(x) + nonsmooth_value(x); }
};

using ObjectivePtr = std::shared_ptr<const AgentObjective>;

// s = 1/2 ||A x - b||^2, r = theta ||x||_1, L = sigma_max(A)^2.
class LeastSquaresL1 final : public AgentObjective {
 public:
  LeastSquaresL1(Mat A, Vec b, double theta);

  int dimension() const override { return static_cast<int>(A_.cols()); }
  Vec gradient(const Vec& x) const override;
  Vec prox(const Vec& u, double scale) const override;
  double lipschitz() const override { return lipschitz_; }
  double smooth_value(const Vec& x) const override;
  double nonsmooth_value(const Vec& x) const override;
  nlohmann::json to_json() const override;

  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  double theta() const { return theta_; }

 private:
  Mat A_;
  Vec b_;
  double theta_;
  double lipschitz_;
};

// s = (1/m) sum_j ln(1 + exp(-d_j h_j^T x)), r = theta ||x||_1.
// Rows of `features` are the h_j; labels are +1 / -1.
class LogisticL1 final : public AgentObjective {
 public:
  LogisticL1(Mat features, Vec labels, double theta);

  int dimension() const override { return static_cast<int>(H_.cols()); }
  Vec gradient(const Vec& x) const override;
  Vec prox(const Vec& u, double scale) const override;
  double lipschitz() const override { return lipschitz_; }
  double smooth_value(const Vec& x) const override;
  double nonsmooth_value(const Vec& x) const override;
  nlohmann::json to_json() const override;

  const Mat& features() const { return H_; }
  const Vec& labels() const { return d_; }

 private:
  Mat H_;
  Vec d_;
  double theta_;
  double lipschitz_;
};

// s = 0, r = ||x - b||_2.
class GeometricMedianTerm final : public AgentObjective {
 public:
  explicit GeometricMedianTerm(Vec anchor);

  int dimension() const override { return static_cast<int>(b_.size()); }
  Vec gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
  Vec prox(const Vec& u, double scale) const override;
  double lipschitz() const override { return 0.0; }
  double smooth_value(const Vec&) const override { return 0.0; }
  double nonsmooth_value(const Vec& x) const override { return (x - b_).norm(); }
  nlohmann::json to_json() const override;

  const Vec& anchor() const { return b_; }

 private:
  Vec b_;
};

// s = 0, r = 1/2 ||x - target||^2. A matrix target is stored flattened
// row-major; the consensus step of matrix completion uses this form.
class QuadraticProximity final : public AgentObjective {
 public:
  explicit QuadraticProximity(Vec target);

  int dimension() const override { return static_cast<int>(target_.size()); }
  Vec gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
  Vec prox(const Vec& u, double scale) const override;
  double lipschitz() const override { return 0.0; }
  double smooth_value(const Vec&) const override { return 0.0; }
  double nonsmooth_value(const Vec& x) const override { return 0.5 * (x - target_).squaredNorm(); }
  nlohmann::json to_json() const override;

  const Vec& target() const { return target_; }

 private:
  Vec target_;
};

ObjectivePtr least_squares_l1(Mat A, Vec b, double theta);
ObjectivePtr logistic_l1(Mat features, Vec labels, double theta);
ObjectivePtr geometric_median(Vec anchor);

// Componentwise soft thresholding sign(u) max(|u| - lam, 0).
Vec prox_l1(const Vec& u, double lam);
// Prox of lam ||x - b||_2: snaps to b inside the ball of radius lam, else
// moves lam toward b along the ray.
Vec prox_l2norm(const Vec& u, const Vec& b, double lam);
// Prox of lam/2 ||X - target||_F^2: (U + lam target) / (1 + lam).
Mat prox_quadratic_matrix(const Mat& U, const Mat& target, double lam);

struct ProblemInstance {
  int p = 0;
  std::vector<ObjectivePtr> objectives;
  std::optional<Vec> reference_solution;

  ProblemInstance() = default;
  ProblemInstance(int dimension, std::vector<ObjectivePtr> objs);

  int agents() const { return static_cast<int>(objectives.size()); }
  const AgentObjective& objective(int i) const { return *objectives.at(static_cast<std::size_t>(i)); }
  /// max_i L_i
  double lipschitz() const;
  /// (1/n) sum_i f_i(x)
  double average_value(const Vec& x) const;
};

nlohmann::json to_json(const ProblemInstance& prob);
ProblemInstance problem_from_json(const nlohmann::json& doc);

}  // namespace dcl::problems
