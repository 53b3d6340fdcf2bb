#ifndef FACEPIPE_SUBSPACE_HPP_
#define FACEPIPE_SUBSPACE_HPP_

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

namespace facepipe::subspace {

/// Per-class sample collection. One row per sample; labels are class indices
/// in [0, num_classes).
struct LabeledDataset {
  Eigen::MatrixXd samples;  // N x d
  std::vector<int> labels;  // size N
  int num_classes = 0;

  Eigen::Index sample_count() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

/// Throws on inconsistent labels or an empty class.
void validate(const LabeledDataset& data);

struct ClassStats {
  Eigen::MatrixXd class_means;  // d x C
  Eigen::VectorXd grand_mean;   // unweighted mean of the class means
  std::vector<int> class_sizes;
};

/// Class means and the (unweighted) mean of class means. Class sizes do not
/// weight the grand mean.
ClassStats class_stats(const LabeledDataset& data);

/// Between-class scatter: sum of outer products of mean deviations over C-1.
Eigen::MatrixXd between_scatter(const Eigen::MatrixXd& class_means,
                                const Eigen::VectorXd& grand_mean);

/// Pooled within-class covariance: per-class deviations summed over N-1.
Eigen::MatrixXd pooled_covariance(const LabeledDataset& data,
                                  const Eigen::MatrixXd& class_means);

/// PCA pre-basis composed with the canonical eigenbasis.
struct CanonicalProjection {
  Eigen::MatrixXd pca_basis;    // d x r, orthonormal columns
  Eigen::VectorXd pca_mean;     // d (pooled sample mean)
  Eigen::MatrixXd canon_basis;  // r x k, unit-norm columns
  Eigen::VectorXd eigenvalues;  // k, descending, non-negative
  double ridge = 0.0;           // relative ridge used on the pooled covariance

  Eigen::Index in_dim() const { return pca_basis.rows(); }
  Eigen::Index pca_rank() const { return pca_basis.cols(); }
  Eigen::Index out_dim() const { return canon_basis.cols(); }
};

struct FitOptions {
  int target_dim = 0;  // k; 0 selects C - 1
  int pca_rank = 0;    // r; 0 selects N - C (clamped to the data rank)
  double ridge = 1e-4; // eps, relative to the mean eigenvalue of the pooled covariance
};

/// Centers by the pooled mean, reduces to the PCA subspace, regularizes the
/// pooled covariance with a relative ridge, and solves the symmetric
/// whitened eigenproblem. Eigenvector signs are fixed by making the
/// largest-magnitude component positive.
CanonicalProjection fit(const LabeledDataset& data, const FitOptions& options = {});

/// y = canon_basis^T * pca_basis^T * (x - pca_mean).
Eigen::VectorXd project(const CanonicalProjection& projection,
                        const Eigen::VectorXd& x);

/// Row-wise projection of a sample matrix (N x d -> N x k).
Eigen::MatrixXd project_rows(const CanonicalProjection& projection,
                             const Eigen::MatrixXd& samples);

/// Streams the projection as a JSON header line {d, r, k, eps, eigenvalues}
/// followed by little-endian float64 blocks for pca_mean, pca_basis and
/// canon_basis (column-major).
void write_projection(std::ostream& out, const CanonicalProjection& projection);
CanonicalProjection read_projection(std::istream& in);

}  // namespace facepipe::subspace

#endif  // FACEPIPE_SUBSPACE_HPP_
