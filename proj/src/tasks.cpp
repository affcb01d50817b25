#include "moreau/tasks.hpp"

#include "moreau/error.hpp"
#include "moreau/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace moreau {

std::string_view to_string(Convexity c) {
  switch (c) {
    case Convexity::kStronglyConvex: return "strongly-convex";
    case Convexity::kConvex: return "convex";
    case Convexity::kNonconvex: return "nonconvex";
  }
  return "unknown";
}

Convexity convexity_from_string(std::string_view name) {
  if (name == "strongly-convex") return Convexity::kStronglyConvex;
  if (name == "convex") return Convexity::kConvex;
  if (name == "nonconvex") return Convexity::kNonconvex;
  throw Error(ErrorCode::kInvalidConfig, "unknown convexity class '" + std::string(name) + "'");
}

std::string_view to_string(SuiteFamily f) {
  switch (f) {
    case SuiteFamily::kQuadratic: return "quadratic";
    case SuiteFamily::kLogistic: return "logistic";
  }
  return "unknown";
}

SuiteFamily suite_family_from_string(std::string_view name) {
  if (name == "quadratic") return SuiteFamily::kQuadratic;
  if (name == "logistic") return SuiteFamily::kLogistic;
  throw Error(ErrorCode::kInvalidConfig, "unknown suite family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// TaskLoss

TaskLoss::TaskLoss(int dimension, double L, double mu, Convexity convexity, Model model)
    : dimension_(dimension), L_(L), mu_(mu), convexity_(convexity), model_(std::move(model)) {
  if (dimension_ < 1) throw Error(ErrorCode::kInvalidDimension, "task dimension must be >= 1");
  if (!(L_ > 0.0) || !std::isfinite(L_)) {
    throw Error(ErrorCode::kInvalidConstants, "smoothness constant must be positive and finite");
  }
  if (convexity_ == Convexity::kStronglyConvex && !(mu_ > 0.0 && mu_ <= L_)) {
    throw Error(ErrorCode::kInvalidConstants, "strongly convex task needs 0 < mu <= L");
  }
  if (convexity_ != Convexity::kStronglyConvex) mu_ = 0.0;
}

TaskLoss TaskLoss::quadratic(Matrix A, Vector c, double mu, double L) {
  const auto d = static_cast<int>(c.size());
  if (A.rows() != d || A.cols() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "quadratic matrix must be d x d");
  }
  if (!A.isApprox(A.transpose(), 1e-12)) {
    throw Error(ErrorCode::kInvalidConstants, "quadratic matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double slack = 1e-9 * std::max(1.0, L);
  if (lo < mu - slack || hi > L + slack) {
    std::ostringstream os;
    os << "spectrum [" << lo << ", " << hi << "] outside declared [" << mu << ", " << L << "]";
    throw Error(ErrorCode::kInvalidConstants, os.str());
  }
  const Convexity cls = mu > 0.0 ? Convexity::kStronglyConvex : Convexity::kConvex;
  return TaskLoss(d, L, mu, cls, QuadraticModel{std::move(A), std::move(c)});
}

TaskLoss TaskLoss::logistic(Matrix X, Vector y, double reg) {
  if (X.rows() < 1) throw Error(ErrorCode::kInvalidCount, "logistic task needs >= 1 sample");
  if (y.size() != X.rows()) throw Error(ErrorCode::kDimensionMismatch, "one label per sample");
  if (!(reg >= 0.0)) throw Error(ErrorCode::kInvalidConstants, "reg must be >= 0");
  const auto m = static_cast<double>(X.rows());
  const Matrix gram = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double L = 0.25 * eig.eigenvalues().maxCoeff() / m + reg;
  const auto d = static_cast<int>(X.cols());
  const Convexity cls = reg > 0.0 ? Convexity::kStronglyConvex : Convexity::kConvex;
  return TaskLoss(d, L, reg, cls, LogisticModel{std::move(X), std::move(y), reg});
}

TaskLoss TaskLoss::custom(int dimension, std::function<double(const Vector&)> value,
                          std::function<Vector(const Vector&)> gradient, double L, double mu,
                          Convexity convexity) {
  return TaskLoss(dimension, L, mu, convexity, CustomModel{std::move(value), std::move(gradient)});
}

void TaskLoss::check_dimension(const Vector& x) const {
  if (x.size() != dimension_) {
    std::ostringstream os;
    os << "expected length " << dimension_ << ", got " << x.size();
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

namespace {

// log(1 + exp(t)) without overflow
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double TaskLoss::value(const Vector& x) const {
  check_dimension(x);
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticModel>) {
          const Vector r = x - m.c;
          return 0.5 * r.dot(m.A * r);
        } else if constexpr (std::is_same_v<M, LogisticModel>) {
          const Vector margins = m.X * x;
          double sum = 0.0;
          for (Eigen::Index j = 0; j < margins.size(); ++j) sum += softplus(-m.y[j] * margins[j]);
          return sum / static_cast<double>(m.X.rows()) + 0.5 * m.reg * x.squaredNorm();
        } else {
          return m.value(x);
        }
      },
      model_);
}

Vector TaskLoss::gradient(const Vector& x) const {
  check_dimension(x);
  return std::visit(
      [&](const auto& m) -> Vector {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, QuadraticModel>) {
          return m.A * (x - m.c);
        } else if constexpr (std::is_same_v<M, LogisticModel>) {
          const Vector margins = m.X * x;
          Vector weights(margins.size());
          for (Eigen::Index j = 0; j < margins.size(); ++j) {
            weights[j] = -m.y[j] * sigmoid(-m.y[j] * margins[j]);
          }
          Vector g = m.X.transpose() * weights;
          g /= static_cast<double>(m.X.rows());
          g += m.reg * x;
          return g;
        } else {
          Vector g = m.gradient(x);
          if (g.size() != dimension_) {
            throw Error(ErrorCode::kDimensionMismatch, "custom gradient returned wrong length");
          }
          return g;
        }
      },
      model_);
}

// ---------------------------------------------------------------------------
// TaskSuite

TaskSuite::TaskSuite(SuiteDescriptor descriptor, std::vector<TaskLoss> tasks)
    : descriptor_(descriptor), tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw Error(ErrorCode::kInvalidCount, "suite needs at least one task");
  const int d = tasks_.front().dimension();
  for (const auto& t : tasks_) {
    if (t.dimension() != d) throw Error(ErrorCode::kDimensionMismatch, "tasks must share d");
  }
}

double TaskSuite::smoothness() const {
  double L = 0.0;
  for (const auto& t : tasks_) L = std::max(L, t.smoothness());
  return L;
}

double TaskSuite::strong_convexity() const {
  double mu = tasks_.front().strong_convexity();
  for (const auto& t : tasks_) mu = std::min(mu, t.strong_convexity());
  return mu;
}

Convexity TaskSuite::convexity() const {
  auto rank = [](Convexity c) {
    return c == Convexity::kStronglyConvex ? 0 : (c == Convexity::kConvex ? 1 : 2);
  };
  Convexity worst = Convexity::kStronglyConvex;
  for (const auto& t : tasks_) {
    if (rank(t.convexity()) > rank(worst)) worst = t.convexity();
  }
  return worst;
}

bool TaskSuite::all_quadratic() const {
  return std::all_of(tasks_.begin(), tasks_.end(),
                     [](const TaskLoss& t) { return t.quadratic_model() != nullptr; });
}

// ---------------------------------------------------------------------------
// Generators

namespace {

Vector gaussian_vector(Rng& rng, int d) {
  Vector v(d);
  for (int j = 0; j < d; ++j) v[j] = rng.normal();
  return v;
}

Matrix random_orthogonal(Rng& rng, int d) {
  Matrix G(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) G(r, c) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

void validate_shape(int n, int d) {
  if (d < 1) throw Error(ErrorCode::kInvalidDimension, "d must be >= 1");
  if (n < 1) throw Error(ErrorCode::kInvalidCount, "n must be >= 1");
}

}  // namespace

TaskSuite make_quadratic_suite(int n, int d, double mu, double L, double center_spread,
                               std::uint64_t seed) {
  if (!(mu > 0.0) || !(L >= mu) || !std::isfinite(L)) {
    throw Error(ErrorCode::kInvalidConstants, "need 0 < mu <= L");
  }
  validate_shape(n, d);
  if (!(center_spread >= 0.0)) throw Error(ErrorCode::kInvalidConstants, "spread must be >= 0");

  const double log_mu = std::log(mu);
  const double log_L = std::log(L);
  std::vector<TaskLoss> tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i) + 1);
    Vector eigenvalues(d);
    for (int j = 0; j < d; ++j) eigenvalues[j] = std::exp(log_mu + rng.uniform() * (log_L - log_mu));
    if (d >= 2) {
      Eigen::Index lo = 0;
      Eigen::Index hi = 0;
      eigenvalues.minCoeff(&lo);
      eigenvalues.maxCoeff(&hi);
      if (lo == hi) hi = (lo + 1) % d;
      eigenvalues[lo] = mu;
      eigenvalues[hi] = L;
    }
    eigenvalues = eigenvalues.cwiseMax(mu).cwiseMin(L);
    const Matrix Q = random_orthogonal(rng, d);
    Matrix A = Q * eigenvalues.asDiagonal() * Q.transpose();
    A = (0.5 * (A + A.transpose())).eval();
    Vector c = (center_spread / std::sqrt(static_cast<double>(d))) * gaussian_vector(rng, d);
    tasks.push_back(TaskLoss::quadratic(std::move(A), std::move(c), mu, L));
  }
  SuiteDescriptor desc;
  desc.family = SuiteFamily::kQuadratic;
  desc.n = n;
  desc.d = d;
  desc.mu = mu;
  desc.L = L;
  desc.spread = center_spread;
  desc.seed = seed;
  return TaskSuite(desc, std::move(tasks));
}

TaskSuite make_logistic_suite(int n, int d, int samples_per_task, double reg, std::uint64_t seed,
                              double spread) {
  validate_shape(n, d);
  if (samples_per_task < 1) throw Error(ErrorCode::kInvalidCount, "samples_per_task must be >= 1");
  if (!(reg >= 0.0)) throw Error(ErrorCode::kInvalidConstants, "reg must be >= 0");
  if (!(spread >= 0.0)) throw Error(ErrorCode::kInvalidConstants, "spread must be >= 0");

  constexpr double kLabelNoise = 0.1;
  Rng shared = Rng::stream(seed, 0);
  const Vector w_shared = gaussian_vector(shared, d);
  const double scale = spread / std::sqrt(static_cast<double>(d));

  std::vector<TaskLoss> tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i) + 1);
    const Vector w_task = w_shared + scale * gaussian_vector(rng, d);
    Matrix X(samples_per_task, d);
    Vector y(samples_per_task);
    for (int j = 0; j < samples_per_task; ++j) {
      for (int k = 0; k < d; ++k) X(j, k) = rng.normal();
      double label = X.row(j).dot(w_task) >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform() < kLabelNoise) label = -label;
      y[j] = label;
    }
    tasks.push_back(TaskLoss::logistic(std::move(X), std::move(y), reg));
  }
  SuiteDescriptor desc;
  desc.family = SuiteFamily::kLogistic;
  desc.n = n;
  desc.d = d;
  desc.spread = spread;
  desc.samples_per_task = samples_per_task;
  desc.reg = reg;
  desc.seed = seed;
  return TaskSuite(desc, std::move(tasks));
}

TaskSuite make_suite(const SuiteDescriptor& descriptor) {
  switch (descriptor.family) {
    case SuiteFamily::kQuadratic:
      return make_quadratic_suite(descriptor.n, descriptor.d, descriptor.mu, descriptor.L,
                                  descriptor.spread, descriptor.seed);
    case SuiteFamily::kLogistic:
      return make_logistic_suite(descriptor.n, descriptor.d, descriptor.samples_per_task,
                                 descriptor.reg, descriptor.seed, descriptor.spread);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown suite family");
}

}  // namespace moreau
