#include "facepipe/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "facepipe/detail/binio.hpp"
#include "facepipe/error.hpp"

namespace facepipe::subspace {

namespace {

using nlohmann::json;

// Make the largest-magnitude component positive; ties resolve to the first.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) v = -v;
}

}  // namespace

void validate(const LabeledDataset& data) {
  if (data.num_classes < 1)
    throw Error(Errc::empty_dataset, "dataset has no classes");
  if (data.samples.rows() == 0)
    throw Error(Errc::empty_dataset, "dataset has no samples");
  if (static_cast<Eigen::Index>(data.labels.size()) != data.samples.rows())
    throw Error(Errc::invalid_argument, "label count does not match sample count");
  std::vector<int> counts(data.num_classes, 0);
  for (int label : data.labels) {
    if (label < 0 || label >= data.num_classes)
      throw Error(Errc::invalid_argument, "label out of range: " + std::to_string(label));
    ++counts[label];
  }
  for (int j = 0; j < data.num_classes; ++j) {
    if (counts[j] == 0)
      throw Error(Errc::empty_class, "class " + std::to_string(j) + " has no samples");
  }
}

ClassStats class_stats(const LabeledDataset& data) {
  validate(data);
  ClassStats stats;
  stats.class_means = Eigen::MatrixXd::Zero(data.dim(), data.num_classes);
  stats.class_sizes.assign(data.num_classes, 0);
  for (Eigen::Index i = 0; i < data.sample_count(); ++i) {
    stats.class_means.col(data.labels[i]) += data.samples.row(i).transpose();
    ++stats.class_sizes[data.labels[i]];
  }
  for (int j = 0; j < data.num_classes; ++j)
    stats.class_means.col(j) /= stats.class_sizes[j];
  stats.grand_mean = stats.class_means.rowwise().mean();
  return stats;
}

Eigen::MatrixXd between_scatter(const Eigen::MatrixXd& class_means,
                                const Eigen::VectorXd& grand_mean) {
  const Eigen::Index c = class_means.cols();
  if (c < 2)
    throw Error(Errc::single_class, "between-class scatter needs at least 2 classes");
  if (class_means.rows() != grand_mean.size())
    throw Error(Errc::dimension_mismatch, "class means and grand mean disagree");
  const Eigen::MatrixXd centered = class_means.colwise() - grand_mean;
  return (centered * centered.transpose()) / static_cast<double>(c - 1);
}

Eigen::MatrixXd pooled_covariance(const LabeledDataset& data,
                                  const Eigen::MatrixXd& class_means) {
  validate(data);
  if (data.sample_count() < 2)
    throw Error(Errc::invalid_argument, "pooled covariance needs at least 2 samples");
  if (class_means.rows() != data.dim() || class_means.cols() != data.num_classes)
    throw Error(Errc::dimension_mismatch, "class means do not match the dataset");

  Eigen::MatrixXd deviations(data.sample_count(), data.dim());
  for (Eigen::Index i = 0; i < data.sample_count(); ++i)
    deviations.row(i) = data.samples.row(i) - class_means.col(data.labels[i]).transpose();
  return (deviations.transpose() * deviations) /
         static_cast<double>(data.sample_count() - 1);
}

CanonicalProjection fit(const LabeledDataset& data, const FitOptions& options) {
  validate(data);
  const Eigen::Index n = data.sample_count();
  const int c = data.num_classes;
  if (c < 2) throw Error(Errc::single_class, "fit needs at least 2 classes");
  if (n <= c)
    throw Error(Errc::rank_deficient, "need more samples than classes to estimate scatter");

  int k = options.target_dim == 0 ? c - 1 : options.target_dim;
  if (k < 1 || k > c - 1)
    throw Error(Errc::target_too_large,
                "target dimension " + std::to_string(k) + " exceeds C-1 = " +
                    std::to_string(c - 1));
  int r = options.pca_rank == 0 ? static_cast<int>(n) - c : options.pca_rank;
  if (r < 1 || r > n - 1)
    throw Error(Errc::rank_deficient,
                "PCA rank " + std::to_string(r) + " outside [1, N-1]");

  CanonicalProjection proj;
  proj.ridge = options.ridge;
  proj.pca_mean = data.samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.samples.rowwise() - proj.pca_mean.transpose();

  if (data.dim() <= n) {
    // Direct covariance PCA.
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> cov_eig(cov);
    if (cov_eig.info() != Eigen::Success)
      throw Error(Errc::rank_deficient, "covariance eigendecomposition failed");
    const Eigen::VectorXd vals = cov_eig.eigenvalues();  // ascending
    const Eigen::Index d = data.dim();
    const double val_floor = std::max(vals[d - 1], 0.0) * d * 1e-12;
    int available = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      if (vals[i] > val_floor) ++available;
    r = std::min<int>({r, available, static_cast<int>(d)});
    if (r < 1)
      throw Error(Errc::rank_deficient, "data has no variance to span a PCA basis");
    proj.pca_basis.resize(d, r);
    for (int j = 0; j < r; ++j) {
      proj.pca_basis.col(j) = cov_eig.eigenvectors().col(d - 1 - j);
      fix_sign(proj.pca_basis.col(j));
    }
  } else {
    // Snapshot PCA through the N x N Gram matrix; d is typically much larger
    // than N for Gabor features.
    const Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(gram);
    if (gram_eig.info() != Eigen::Success)
      throw Error(Errc::rank_deficient, "Gram eigendecomposition failed");

    const Eigen::VectorXd gram_vals = gram_eig.eigenvalues();  // ascending
    const double val_floor = std::max(gram_vals[n - 1], 0.0) * n * 1e-12;
    int available = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (gram_vals[i] > val_floor) ++available;
    r = std::min(r, available);
    if (r < 1)
      throw Error(Errc::rank_deficient, "data has no variance to span a PCA basis");

    proj.pca_basis.resize(data.dim(), r);
    for (int j = 0; j < r; ++j) {
      const Eigen::Index src = n - 1 - j;  // descending order
      proj.pca_basis.col(j) =
          centered.transpose() * gram_eig.eigenvectors().col(src) /
          std::sqrt(gram_vals[src]);
      fix_sign(proj.pca_basis.col(j));
    }
  }

  // The whitened problem yields r eigenpairs; k cannot exceed that.
  k = std::min(k, r);

  // Scatter matrices in PCA coordinates.
  LabeledDataset reduced;
  reduced.samples = centered * proj.pca_basis;
  reduced.labels = data.labels;
  reduced.num_classes = c;
  const ClassStats stats = class_stats(reduced);
  const Eigen::MatrixXd between = between_scatter(stats.class_means, stats.grand_mean);
  Eigen::MatrixXd within = pooled_covariance(reduced, stats.class_means);

  double scale = within.trace() / r;
  if (!(scale > 0.0)) scale = 1.0;  // all samples equal their class mean
  within.diagonal().array() += options.ridge * scale;

  const Eigen::LLT<Eigen::MatrixXd> llt(within);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::rank_deficient,
                "pooled covariance not positive definite; increase the ridge");

  // Whitened symmetric problem: L^-1 B L^-T shares the spectrum of Sigma'^-1 B.
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd whitened =
      l.triangularView<Eigen::Lower>().solve(between);
  whitened = l.triangularView<Eigen::Lower>()
                 .solve(whitened.transpose())
                 .transpose();
  whitened = 0.5 * (whitened + whitened.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> canon_eig(whitened);
  if (canon_eig.info() != Eigen::Success)
    throw Error(Errc::rank_deficient, "whitened eigendecomposition failed");

  proj.canon_basis.resize(r, k);
  proj.eigenvalues.resize(k);
  for (int j = 0; j < k; ++j) {
    const Eigen::Index src = r - 1 - j;
    proj.eigenvalues[j] = std::max(canon_eig.eigenvalues()[src], 0.0);
    Eigen::VectorXd v = l.transpose()
                            .triangularView<Eigen::Upper>()
                            .solve(canon_eig.eigenvectors().col(src));
    v.normalize();
    fix_sign(v);
    proj.canon_basis.col(j) = v;
  }
  return proj;
}

Eigen::VectorXd project(const CanonicalProjection& projection,
                        const Eigen::VectorXd& x) {
  if (x.size() != projection.in_dim())
    throw Error(Errc::dimension_mismatch,
                "feature length " + std::to_string(x.size()) + " != fitted dimension " +
                    std::to_string(projection.in_dim()));
  return projection.canon_basis.transpose() *
         (projection.pca_basis.transpose() * (x - projection.pca_mean));
}

Eigen::MatrixXd project_rows(const CanonicalProjection& projection,
                             const Eigen::MatrixXd& samples) {
  if (samples.cols() != projection.in_dim())
    throw Error(Errc::dimension_mismatch, "sample width != fitted dimension");
  return (samples.rowwise() - projection.pca_mean.transpose()) *
         projection.pca_basis * projection.canon_basis;
}

void write_projection(std::ostream& out, const CanonicalProjection& projection) {
  json header;
  header["d"] = projection.in_dim();
  header["r"] = projection.pca_rank();
  header["k"] = projection.out_dim();
  header["eps"] = projection.ridge;
  header["eigenvalues"] = std::vector<double>(
      projection.eigenvalues.data(),
      projection.eigenvalues.data() + projection.eigenvalues.size());
  const std::string text = header.dump();
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::write_f64_block(out, projection.pca_mean.data(), projection.pca_mean.size());
  detail::write_f64_block(out, projection.pca_basis.data(), projection.pca_basis.size());
  detail::write_f64_block(out, projection.canon_basis.data(),
                          projection.canon_basis.size());
}

CanonicalProjection read_projection(std::istream& in) {
  const auto header_len = detail::read_le<std::uint32_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (in.gcount() != static_cast<std::streamsize>(header_len))
    throw Error(Errc::corrupt_file, "truncated projection header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_file, std::string("bad projection header: ") + e.what());
  }

  CanonicalProjection proj;
  const auto d = header.at("d").get<Eigen::Index>();
  const auto r = header.at("r").get<Eigen::Index>();
  const auto k = header.at("k").get<Eigen::Index>();
  proj.ridge = header.at("eps").get<double>();
  const auto eigenvalues = header.at("eigenvalues").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(eigenvalues.size()) != k)
    throw Error(Errc::corrupt_file, "eigenvalue count does not match k");
  proj.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eigenvalues.data(), k);
  proj.pca_mean.resize(d);
  proj.pca_basis.resize(d, r);
  proj.canon_basis.resize(r, k);
  detail::read_f64_block(in, proj.pca_mean.data(), proj.pca_mean.size());
  detail::read_f64_block(in, proj.pca_basis.data(), proj.pca_basis.size());
  detail::read_f64_block(in, proj.canon_basis.data(), proj.canon_basis.size());
  return proj;
}

}  // namespace facepipe::subspace
