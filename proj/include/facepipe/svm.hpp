#ifndef FACEPIPE_SVM_HPP_
#define FACEPIPE_SVM_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace facepipe::svm {

struct KernelSpec {
  enum class Kind { linear, rbf, polynomial };
  Kind kind = Kind::linear;
  double sigma = 1.0;  // RBF width: K = exp(-|x-y|^2 / (2 sigma^2))
  int degree = 2;      // polynomial: K = (x.y + 1)^n
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

/// Kernel Gram matrix K(a_i, b_j).
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& b);

struct TrainSet {
  Eigen::MatrixXd points;  // N x dim
  Eigen::VectorXd labels;  // entries in {-1, +1}
};

struct SvmModel {
  Eigen::MatrixXd support_vectors;  // n_sv x dim
  Eigen::VectorXd coefficients;     // alpha_i * y_i per support vector
  double bias = 0.0;
  KernelSpec kernel;
  double box = 0.0;  // C
};

struct TrainOptions {
  double box = 10.0;                  // C
  double tol = 1e-3;                  // KKT tolerance
  std::uint64_t max_steps = 1000000;  // SMO iteration cap
};

struct TrainResult {
  SvmModel model;
  Eigen::VectorXd alpha;  // per training point, incl. zeros
  double dual_objective = 0.0;
  std::uint64_t steps = 0;
};

/// Maximizes the soft-margin dual by SMO (working set of two, second-order
/// selection of the second index). The bias is the average over free support
/// vectors. Throws NoConvergence when the step cap is hit.
TrainResult train(const TrainSet& data, const KernelSpec& kernel,
                  const TrainOptions& options = {});

/// sum_i alpha_i y_i K(sv_i, x) + b — the pre-sign value of the decision rule.
double decision_value(const SvmModel& model, const Eigen::VectorXd& x);

/// sign(decision_value); a value of exactly 0 resolves to +1.
int classify(const SvmModel& model, const Eigen::VectorXd& x);

/// w = sum_i alpha_i y_i x_i. Linear kernels only.
Eigen::VectorXd linear_weight(const SvmModel& model);

/// Default RBF width: sigma^2 = dim * (mean per-feature variance).
double default_rbf_sigma(const Eigen::MatrixXd& points);

/// JSON header {kernel, C, b, n_sv, dim} + float64 blocks for the support
/// vectors (row-major) and the alpha*y coefficients.
void write_model(std::ostream& out, const SvmModel& model);
SvmModel read_model(std::istream& in);

}  // namespace facepipe::svm

#endif  // FACEPIPE_SVM_HPP_
