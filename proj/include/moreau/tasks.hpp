#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace moreau {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Convexity { kStronglyConvex, kConvex, kNonconvex };

std::string_view to_string(Convexity c);
Convexity convexity_from_string(std::string_view name);

/// f(z) = 1/2 (z - c)^T A (z - c). The closed-form prox descriptor.
struct QuadraticModel {
  Matrix A;
  Vector c;
};

/// f(w) = 1/m sum_j log(1 + exp(-y_j x_j^T w)) + reg/2 |w|^2, labels in {-1, +1}.
struct LogisticModel {
  Matrix X;  // m x d, one sample per row
  Vector y;
  double reg = 0.0;
};

struct CustomModel {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// A differentiable task loss with declared constants: L-smooth, and
/// mu-strongly convex when the class is kStronglyConvex.
class TaskLoss {
 public:
  static TaskLoss quadratic(Matrix A, Vector c, double mu, double L);
  /// L = lambda_max(X^T X) / (4m) + reg, mu = reg.
  static TaskLoss logistic(Matrix X, Vector y, double reg);
  static TaskLoss custom(int dimension, std::function<double(const Vector&)> value,
                         std::function<Vector(const Vector&)> gradient, double L, double mu,
                         Convexity convexity);

  int dimension() const { return dimension_; }
  double smoothness() const { return L_; }
  double strong_convexity() const { return mu_; }
  Convexity convexity() const { return convexity_; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;

  /// Non-null iff the task has a closed-form prox.
  const QuadraticModel* quadratic_model() const { return std::get_if<QuadraticModel>(&model_); }
  const LogisticModel* logistic_model() const { return std::get_if<LogisticModel>(&model_); }

 private:
  using Model = std::variant<QuadraticModel, LogisticModel, CustomModel>;
  TaskLoss(int dimension, double L, double mu, Convexity convexity, Model model);

  void check_dimension(const Vector& x) const;

  int dimension_;
  double L_;
  double mu_;
  Convexity convexity_;
  Model model_;
};

enum class SuiteFamily { kQuadratic, kLogistic };

std::string_view to_string(SuiteFamily f);
SuiteFamily suite_family_from_string(std::string_view name);

/// Everything needed to regenerate a suite. Suites are never serialized raw.
/// Task i draws its parameters from Rng::stream(seed, i + 1); stream 0 holds
/// quantities shared across tasks.
struct SuiteDescriptor {
  SuiteFamily family = SuiteFamily::kQuadratic;
  int n = 1;
  int d = 1;
  double mu = 1.0;  // quadratic only
  double L = 1.0;   // quadratic only
  double spread = 0.0;
  int samples_per_task = 50;  // logistic only
  double reg = 0.0;           // logistic only
  std::uint64_t seed = 0;

  bool operator==(const SuiteDescriptor&) const = default;
};

class TaskSuite {
 public:
  TaskSuite(SuiteDescriptor descriptor, std::vector<TaskLoss> tasks);

  const SuiteDescriptor& descriptor() const { return descriptor_; }
  const std::vector<TaskLoss>& tasks() const { return tasks_; }
  const TaskLoss& task(int i) const { return tasks_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(tasks_.size()); }
  int dimension() const { return tasks_.front().dimension(); }

  /// Largest L over tasks.
  double smoothness() const;
  /// Smallest mu over tasks.
  double strong_convexity() const;
  /// Weakest convexity class over tasks.
  Convexity convexity() const;
  bool all_quadratic() const;

 private:
  SuiteDescriptor descriptor_;
  std::vector<TaskLoss> tasks_;
};

TaskSuite make_quadratic_suite(int n, int d, double mu, double L, double center_spread,
                               std::uint64_t seed);
TaskSuite make_logistic_suite(int n, int d, int samples_per_task, double reg, std::uint64_t seed,
                              double spread = 1.0);
TaskSuite make_suite(const SuiteDescriptor& descriptor);

inline double eval_value(const TaskLoss& task, const Vector& x) { return task.value(x); }
inline Vector eval_grad(const TaskLoss& task, const Vector& x) { return task.gradient(x); }

}  // namespace moreau
