#include "facepipe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "facepipe/detail/binio.hpp"
#include "facepipe/error.hpp"

namespace facepipe::svm {

namespace {

using nlohmann::json;

constexpr double kTau = 1e-12;  // curvature floor for non-PD kernel pairs

void validate_kernel(const KernelSpec& spec) {
  if (spec.kind == KernelSpec::Kind::rbf && !(spec.sigma > 0.0))
    throw Error(Errc::invalid_argument, "RBF sigma must be positive");
  if (spec.kind == KernelSpec::Kind::polynomial && spec.degree < 1)
    throw Error(Errc::invalid_argument, "polynomial degree must be >= 1");
}

const char* kind_name(KernelSpec::Kind kind) {
  switch (kind) {
    case KernelSpec::Kind::linear: return "linear";
    case KernelSpec::Kind::rbf: return "rbf";
    case KernelSpec::Kind::polynomial: return "polynomial";
  }
  return "?";
}

KernelSpec::Kind kind_from_name(const std::string& name) {
  if (name == "linear") return KernelSpec::Kind::linear;
  if (name == "rbf") return KernelSpec::Kind::rbf;
  if (name == "polynomial") return KernelSpec::Kind::polynomial;
  throw Error(Errc::corrupt_file, "unknown kernel kind: " + name);
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  validate_kernel(spec);
  if (x.size() != y.size())
    throw Error(Errc::dimension_mismatch, "kernel arguments differ in length");
  switch (spec.kind) {
    case KernelSpec::Kind::linear:
      return x.dot(y);
    case KernelSpec::Kind::rbf:
      return std::exp(-(x - y).squaredNorm() / (2.0 * spec.sigma * spec.sigma));
    case KernelSpec::Kind::polynomial:
      return std::pow(x.dot(y) + 1.0, spec.degree);
  }
  return 0.0;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a,
                            const Eigen::MatrixXd& b) {
  validate_kernel(spec);
  if (a.cols() != b.cols())
    throw Error(Errc::dimension_mismatch, "gram arguments differ in width");
  Eigen::MatrixXd dots = a * b.transpose();
  switch (spec.kind) {
    case KernelSpec::Kind::linear:
      return dots;
    case KernelSpec::Kind::rbf: {
      const Eigen::VectorXd an = a.rowwise().squaredNorm();
      const Eigen::VectorXd bn = b.rowwise().squaredNorm();
      const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
      for (Eigen::Index i = 0; i < dots.rows(); ++i)
        for (Eigen::Index j = 0; j < dots.cols(); ++j)
          dots(i, j) = std::exp(-(an[i] + bn[j] - 2.0 * dots(i, j)) * inv);
      return dots;
    }
    case KernelSpec::Kind::polynomial:
      return (dots.array() + 1.0).pow(spec.degree).matrix();
  }
  return dots;
}

TrainResult train(const TrainSet& data, const KernelSpec& kernel,
                  const TrainOptions& options) {
  validate_kernel(kernel);
  const Eigen::Index n = data.points.rows();
  if (n < 2) throw Error(Errc::invalid_argument, "training needs at least 2 points");
  if (data.labels.size() != n)
    throw Error(Errc::dimension_mismatch, "label count does not match point count");
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.labels[i] == 1.0) has_pos = true;
    else if (data.labels[i] == -1.0) has_neg = true;
    else throw Error(Errc::invalid_argument, "labels must be -1 or +1");
  }
  if (!has_pos || !has_neg)
    throw Error(Errc::single_class, "training set must contain both labels");
  if (!(options.box > 0.0))
    throw Error(Errc::invalid_argument, "box constraint C must be positive");

  const double c = options.box;
  const Eigen::VectorXd& y = data.labels;
  const Eigen::MatrixXd k = gram_matrix(kernel, data.points, data.points);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  // Gradient of (1/2) a^T Q a - e^T a, with Q_ij = y_i y_j K_ij.
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

  const auto in_up = [&](Eigen::Index t) {
    return (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
  };
  const auto in_low = [&](Eigen::Index t) {
    return (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
  };

  std::uint64_t step = 0;
  bool converged = false;
  double m_final = 0.0, big_m_final = 0.0;
  for (; step < options.max_steps; ++step) {
    // Most-violating pair: first index maximizes -y*grad over I_up, second
    // minimizes the second-order objective decrease over I_low.
    Eigen::Index i = -1;
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > m) {
        m = -y[t] * grad[t];
        i = t;
      }
    }
    double big_m = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_low(t)) big_m = std::min(big_m, -y[t] * grad[t]);
    }
    m_final = m;
    big_m_final = big_m;
    if (i < 0 || m - big_m <= options.tol) {
      converged = true;
      break;
    }

    Eigen::Index j = -1;
    double best = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double diff = m + y[t] * grad[t];  // m - (-y_t grad_t)
      if (diff <= 0.0) continue;
      double quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
      if (quad <= 0.0) quad = kTau;
      const double gain = -(diff * diff) / quad;
      if (gain < best) {
        best = gain;
        j = t;
      }
    }
    if (j < 0) {
      converged = true;  // no admissible partner: KKT holds up to tol
      break;
    }

    // Two-variable analytic update on (alpha_i, alpha_j). Bounds are written
    // exactly and the partner derived from the conserved pair quantity, so a
    // clipped variable leaves its violating set cleanly.
    double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
    if (quad <= 0.0) quad = kTau;
    const double step = (m + y[j] * grad[j]) / quad;  // change of y_i alpha_i
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    double ai = old_i + y[i] * step;
    double aj = old_j - y[j] * step;
    if (y[i] != y[j]) {
      const double diff = old_i - old_j;  // conserved
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
        if (ai > c) {
          ai = c;
          aj = c - diff;
        }
      } else {
        if (ai < 0.0) {
          ai = 0.0;
          aj = -diff;
        }
        if (aj > c) {
          aj = c;
          ai = c + diff;
        }
      }
    } else {
      const double sum = old_i + old_j;  // conserved
      if (sum > c) {
        if (ai > c) {
          ai = c;
          aj = sum - c;
        }
        if (aj > c) {
          aj = c;
          ai = sum - c;
        }
      } else {
        if (aj < 0.0) {
          aj = 0.0;
          ai = sum;
        }
        if (ai < 0.0) {
          ai = 0.0;
          aj = sum;
        }
      }
    }
    alpha[i] = ai;
    alpha[j] = aj;
    const double delta_i = ai - old_i;
    const double delta_j = aj - old_j;
    grad += (delta_i * y[i]) * (y.array() * k.col(i).array()).matrix() +
            (delta_j * y[j]) * (y.array() * k.col(j).array()).matrix();
  }

  const double dual = alpha.sum() -
                      0.5 * alpha.dot((y.array() *
                                       (k * (alpha.array() * y.array()).matrix()).array())
                                          .matrix());
  if (!converged)
    throw Error(Errc::no_convergence,
                "SMO step cap " + std::to_string(options.max_steps) +
                    " reached; best dual value " + std::to_string(dual));

  // Bias from free support vectors; fall back to the KKT interval midpoint.
  double bias;
  int free_count = 0;
  double free_sum = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < c) {
      free_sum += -y[t] * grad[t];
      ++free_count;
    }
  }
  if (free_count > 0) {
    bias = free_sum / free_count;
  } else {
    double lo = m_final, hi = big_m_final;
    if (!std::isfinite(lo)) lo = hi;
    if (!std::isfinite(hi)) hi = lo;
    bias = (lo + hi) / 2.0;
  }

  TrainResult result;
  result.alpha = alpha;
  result.dual_objective = dual;
  result.steps = step;
  result.model.kernel = kernel;
  result.model.box = c;
  result.model.bias = bias;
  Eigen::Index n_sv = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha[t] > 0.0) ++n_sv;
  result.model.support_vectors.resize(n_sv, data.points.cols());
  result.model.coefficients.resize(n_sv);
  Eigen::Index sv = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      result.model.support_vectors.row(sv) = data.points.row(t);
      result.model.coefficients[sv] = alpha[t] * y[t];
      ++sv;
    }
  }
  return result;
}

double decision_value(const SvmModel& model, const Eigen::VectorXd& x) {
  if (model.support_vectors.cols() != x.size())
    throw Error(Errc::dimension_mismatch,
                "probe length " + std::to_string(x.size()) + " != model dimension " +
                    std::to_string(model.support_vectors.cols()));
  double value = model.bias;
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i)
    value += model.coefficients[i] *
             kernel_eval(model.kernel, model.support_vectors.row(i).transpose(), x);
  return value;
}

int classify(const SvmModel& model, const Eigen::VectorXd& x) {
  return decision_value(model, x) >= 0.0 ? 1 : -1;
}

Eigen::VectorXd linear_weight(const SvmModel& model) {
  if (model.kernel.kind != KernelSpec::Kind::linear)
    throw Error(Errc::non_linear_kernel, "weight vector exists only for linear kernels");
  return model.support_vectors.transpose() * model.coefficients;
}

double default_rbf_sigma(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2 || d < 1) return 1.0;
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const double mean_var =
      (points.rowwise() - mean).squaredNorm() / static_cast<double>((n - 1) * d);
  const double sigma_sq = static_cast<double>(d) * mean_var;
  return sigma_sq > 0.0 ? std::sqrt(sigma_sq) : 1.0;
}

void write_model(std::ostream& out, const SvmModel& model) {
  json header;
  header["kernel"] = {{"kind", kind_name(model.kernel.kind)},
                      {"sigma", model.kernel.sigma},
                      {"degree", model.kernel.degree}};
  header["C"] = model.box;
  header["b"] = model.bias;
  header["n_sv"] = model.support_vectors.rows();
  header["dim"] = model.support_vectors.cols();
  const std::string text = header.dump();
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  // Support vectors row-major, then coefficients.
  for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i) {
    const Eigen::RowVectorXd row = model.support_vectors.row(i);
    detail::write_f64_block(out, row.data(), row.size());
  }
  detail::write_f64_block(out, model.coefficients.data(), model.coefficients.size());
}

SvmModel read_model(std::istream& in) {
  const auto header_len = detail::read_le<std::uint32_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (in.gcount() != static_cast<std::streamsize>(header_len))
    throw Error(Errc::corrupt_file, "truncated SVM header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_file, std::string("bad SVM header: ") + e.what());
  }

  SvmModel model;
  model.kernel.kind = kind_from_name(header.at("kernel").at("kind").get<std::string>());
  model.kernel.sigma = header.at("kernel").at("sigma").get<double>();
  model.kernel.degree = header.at("kernel").at("degree").get<int>();
  model.box = header.at("C").get<double>();
  model.bias = header.at("b").get<double>();
  const auto n_sv = header.at("n_sv").get<Eigen::Index>();
  const auto dim = header.at("dim").get<Eigen::Index>();
  model.support_vectors.resize(n_sv, dim);
  model.coefficients.resize(n_sv);
  for (Eigen::Index i = 0; i < n_sv; ++i) {
    Eigen::RowVectorXd row(dim);
    detail::read_f64_block(in, row.data(), dim);
    model.support_vectors.row(i) = row;
  }
  detail::read_f64_block(in, model.coefficients.data(), n_sv);
  return model;
}

}  // namespace facepipe::svm
