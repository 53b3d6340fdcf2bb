#include <doctest.h>

#include <cmath>
#include <random>

#include "facepipe/error.hpp"
#include "facepipe/subspace.hpp"
#include "testutil.hpp"

#include <sstream>

using facepipe::Errc;
using facepipe::Error;
using namespace facepipe::subspace;

namespace {

LabeledDataset two_class_2d() {
  // class 0: {(0,0),(2,0)}, class 1: {(0,2),(2,2)}
  LabeledDataset data;
  data.samples.resize(4, 2);
  data.samples << 0, 0, 2, 0, 0, 2, 2, 2;
  data.labels = {0, 0, 1, 1};
  data.num_classes = 2;
  return data;
}

// Gaussian 2-class dataset with configurable means.
LabeledDataset gaussian_two_class(std::mt19937_64& rng, int dim, int per_class,
                                  const Eigen::VectorXd& mu0,
                                  const Eigen::VectorXd& mu1, double noise) {
  std::normal_distribution<double> normal(0.0, noise);
  LabeledDataset data;
  data.samples.resize(2 * per_class, dim);
  data.num_classes = 2;
  for (int i = 0; i < 2 * per_class; ++i) {
    const int cls = i < per_class ? 0 : 1;
    data.labels.push_back(cls);
    for (int j = 0; j < dim; ++j)
      data.samples(i, j) = (cls == 0 ? mu0[j] : mu1[j]) + normal(rng);
  }
  return data;
}

// Scatter pair recomputed in PCA coordinates, as fit sees them.
struct PcaScatter {
  Eigen::MatrixXd between;
  Eigen::MatrixXd within_ridged;
};

PcaScatter pca_space_scatter(const LabeledDataset& data,
                             const CanonicalProjection& proj) {
  LabeledDataset reduced;
  reduced.samples = (data.samples.rowwise() - proj.pca_mean.transpose()) * proj.pca_basis;
  reduced.labels = data.labels;
  reduced.num_classes = data.num_classes;
  const ClassStats stats = class_stats(reduced);
  PcaScatter s;
  s.between = between_scatter(stats.class_means, stats.grand_mean);
  s.within_ridged = pooled_covariance(reduced, stats.class_means);
  double scale = s.within_ridged.trace() / proj.pca_rank();
  if (!(scale > 0.0)) scale = 1.0;
  s.within_ridged.diagonal().array() += proj.ridge * scale;
  return s;
}

}  // namespace

TEST_SUITE("subspace_stats") {
  TEST_CASE("grand mean averages class means, not samples") {
    LabeledDataset data;
    data.samples.resize(100, 2);
    data.labels.assign(100, 1);
    data.labels[0] = 0;  // class 0 has a single sample at (1,3)
    data.samples.row(0) << 1, 3;
    for (int i = 1; i < 100; ++i) data.samples.row(i) << 1, 3;  // same mean
    data.num_classes = 2;
    const ClassStats stats = class_stats(data);
    CHECK(stats.grand_mean[0] == doctest::Approx(1.0));
    CHECK(stats.grand_mean[1] == doctest::Approx(3.0));
  }

  TEST_CASE("two simple classes") {
    LabeledDataset data;
    data.samples.resize(2, 2);
    data.samples << 0, 0, 2, 2;
    data.labels = {0, 1};
    data.num_classes = 2;
    const ClassStats stats = class_stats(data);
    CHECK(stats.grand_mean[0] == doctest::Approx(1.0));
    CHECK(stats.grand_mean[1] == doctest::Approx(1.0));
  }

  TEST_CASE("single class of one sample is its own mean") {
    LabeledDataset data;
    data.samples.resize(1, 3);
    data.samples << 4, 5, 6;
    data.labels = {0};
    data.num_classes = 1;
    const ClassStats stats = class_stats(data);
    CHECK(stats.class_means(0, 0) == doctest::Approx(4.0));
    CHECK(stats.grand_mean[2] == doctest::Approx(6.0));
  }

  TEST_CASE("empty class is rejected") {
    LabeledDataset data;
    data.samples.resize(2, 1);
    data.samples << 1, 2;
    data.labels = {0, 0};
    data.num_classes = 2;  // class 1 empty
    try {
      class_stats(data);
      FAIL("expected EmptyClass");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_class);
    }
  }
}

TEST_SUITE("subspace_scatter") {
  TEST_CASE("between-scatter of two means") {
    Eigen::MatrixXd means(2, 2);
    means << 0, 2, 0, 2;  // mu0 = (0,0), mu1 = (2,2)
    Eigen::VectorXd grand(2);
    grand << 1, 1;
    const Eigen::MatrixXd beta = between_scatter(means, grand);
    CHECK(beta(0, 0) == doctest::Approx(2.0));
    CHECK(beta(0, 1) == doctest::Approx(2.0));
    CHECK(beta(1, 0) == doctest::Approx(2.0));
    CHECK(beta(1, 1) == doctest::Approx(2.0));
  }

  TEST_CASE("equal class means give a zero matrix") {
    Eigen::MatrixXd means(3, 4);
    for (int j = 0; j < 4; ++j) means.col(j) << 1, 2, 3;
    Eigen::VectorXd grand(3);
    grand << 1, 2, 3;
    CHECK(between_scatter(means, grand).norm() == doctest::Approx(0.0));
  }

  TEST_CASE("collinear means have rank one") {
    Eigen::MatrixXd means(3, 3);
    means.col(0) << 0, 0, 0;
    means.col(1) << 1, 2, 3;
    means.col(2) << 2, 4, 6;
    const Eigen::VectorXd grand = means.rowwise().mean();
    const Eigen::MatrixXd beta = between_scatter(means, grand);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(beta);
    int positive = 0;
    for (int i = 0; i < 3; ++i)
      if (eig.eigenvalues()[i] > 1e-10) ++positive;
    CHECK(positive == 1);
  }

  TEST_CASE("a single class cannot produce scatter") {
    Eigen::MatrixXd means(2, 1);
    means << 1, 2;
    Eigen::VectorXd grand(2);
    grand << 1, 2;
    try {
      between_scatter(means, grand);
      FAIL("expected SingleClass");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::single_class);
    }
  }

  TEST_CASE("pooled covariance of the 4-point example") {
    const LabeledDataset data = two_class_2d();
    const ClassStats stats = class_stats(data);
    const Eigen::MatrixXd sigma = pooled_covariance(data, stats.class_means);
    CHECK(sigma(0, 0) == doctest::Approx(4.0 / 3.0));
    CHECK(sigma(0, 1) == doctest::Approx(0.0));
    CHECK(sigma(1, 0) == doctest::Approx(0.0));
    CHECK(sigma(1, 1) == doctest::Approx(0.0));
  }

  TEST_CASE("samples equal to their class means give zero covariance") {
    LabeledDataset data;
    data.samples.resize(4, 2);
    data.samples << 1, 1, 1, 1, 5, 2, 5, 2;
    data.labels = {0, 0, 1, 1};
    data.num_classes = 2;
    const ClassStats stats = class_stats(data);
    CHECK(pooled_covariance(data, stats.class_means).norm() == doctest::Approx(0.0));
  }

  TEST_CASE("one class, 1-D: matches the hand sum") {
    LabeledDataset data;
    data.samples.resize(2, 1);
    data.samples << 0, 2;
    data.labels = {0, 0};
    data.num_classes = 1;
    const ClassStats stats = class_stats(data);
    const Eigen::MatrixXd sigma = pooled_covariance(data, stats.class_means);
    CHECK(sigma(0, 0) == doctest::Approx(2.0));
  }

  TEST_CASE("scatter matrices are symmetric on random data") {
    std::mt19937_64 rng(31);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd mu1 = Eigen::VectorXd::Ones(5);
    const LabeledDataset data = gaussian_two_class(rng, 5, 12, mu0, mu1, 1.0);
    const ClassStats stats = class_stats(data);
    const Eigen::MatrixXd beta = between_scatter(stats.class_means, stats.grand_mean);
    const Eigen::MatrixXd sigma = pooled_covariance(data, stats.class_means);
    CHECK((beta - beta.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_SUITE("subspace_fit") {
  TEST_CASE("isotropic 2-class clouds: leading direction and eigenvalue") {
    // mu0 = (0,0), mu1 = (2,0), within-covariance ~ I. The leading canonical
    // direction must align with (1,0) and its eigenvalue approach 2.
    std::mt19937_64 rng(32);
    Eigen::VectorXd mu0(2), mu1(2);
    mu0 << 0, 0;
    mu1 << 2, 0;
    const LabeledDataset data = gaussian_two_class(rng, 2, 4000, mu0, mu1, 1.0);
    FitOptions options;
    options.pca_rank = 2;
    options.target_dim = 1;
    const CanonicalProjection proj = fit(data, options);

    const Eigen::VectorXd direction = proj.pca_basis * proj.canon_basis.col(0);
    CHECK(std::abs(direction[0]) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(direction[1]) < 0.05);
    CHECK(proj.eigenvalues[0] == doctest::Approx(2.0).epsilon(0.2));
  }

  TEST_CASE("spectrum respects rank(beta) <= C - 1") {
    // Three classes with exactly collinear means: beta has rank 1, so the
    // second canonical eigenvalue must vanish even though k = C - 1 = 2.
    LabeledDataset data;
    data.samples.resize(6, 3);
    Eigen::Vector3d direction(1, 2, 3);
    Eigen::Vector3d deviation(0.1, -0.2, 0.05);
    for (int c = 0; c < 3; ++c) {
      data.samples.row(2 * c) = (c * direction + deviation).transpose();
      data.samples.row(2 * c + 1) = (c * direction - deviation).transpose();
      data.labels.push_back(c);
      data.labels.push_back(c);
    }
    data.num_classes = 3;
    FitOptions options;
    options.target_dim = 2;
    const CanonicalProjection proj = fit(data, options);
    CHECK(proj.eigenvalues[0] > 1e-6);
    CHECK(proj.eigenvalues[1] < 1e-8 * proj.eigenvalues[0]);

    options.target_dim = 3;
    try {
      fit(data, options);
      FAIL("expected TargetTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::target_too_large);
    }
  }

  TEST_CASE("duplicated feature column survives with a ridge") {
    std::mt19937_64 rng(34);
    LabeledDataset data;
    const int n = 16;
    data.samples.resize(n, 3);
    data.num_classes = 2;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      const int cls = i % 2;
      data.labels.push_back(cls);
      const double a = cls * 3.0 + normal(rng);
      const double b = normal(rng);
      data.samples.row(i) << a, b, b;  // identical coordinates 1 and 2
    }
    FitOptions options;
    options.ridge = 1e-4;
    const CanonicalProjection proj = fit(data, options);
    CHECK(proj.eigenvalues[0] > 0.0);
  }

  TEST_CASE("whitened eigenpairs satisfy beta v = lambda sigma' v") {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd mu0 = Eigen::VectorXd::Random(3);
      Eigen::VectorXd mu1 = Eigen::VectorXd::Random(3) * 2.0;
      const LabeledDataset data = gaussian_two_class(rng, 3, 10, mu0, mu1, 0.7);
      FitOptions options;
      options.pca_rank = 3;
      const CanonicalProjection proj = fit(data, options);
      const PcaScatter s = pca_space_scatter(data, proj);
      for (int j = 0; j < proj.out_dim(); ++j) {
        const Eigen::VectorXd v = proj.canon_basis.col(j);
        const Eigen::VectorXd residual =
            s.between * v - proj.eigenvalues[j] * (s.within_ridged * v);
        const double scale = std::max(1.0, (s.between * v).norm());
        CHECK(residual.norm() / scale < 1e-6);
      }
    }
  }

  TEST_CASE("leading direction maximizes the Rayleigh quotient") {
    std::mt19937_64 rng(36);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd mu1(3);
    mu1 << 1.5, -0.5, 1.0;
    const LabeledDataset data = gaussian_two_class(rng, 3, 15, mu0, mu1, 0.8);
    FitOptions options;
    options.pca_rank = 3;
    options.target_dim = 1;
    const CanonicalProjection proj = fit(data, options);
    const PcaScatter s = pca_space_scatter(data, proj);

    const auto quotient = [&](const Eigen::VectorXd& v) {
      return v.dot(s.between * v) / v.dot(s.within_ridged * v);
    };
    const double best = quotient(proj.canon_basis.col(0));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd v(3);
      for (int j = 0; j < 3; ++j) v[j] = normal(rng);
      v.normalize();
      CHECK(quotient(v) <= best * (1.0 + 1e-9) + 1e-12);
    }
  }

  TEST_CASE("Fisher equivalence for two classes") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd mu0 = Eigen::VectorXd::Random(3);
      Eigen::VectorXd mu1 = mu0 + Eigen::VectorXd::Random(3) + Eigen::VectorXd::Ones(3);
      const LabeledDataset data = gaussian_two_class(rng, 3, 20, mu0, mu1, 0.6);
      FitOptions options;
      options.pca_rank = 3;
      options.target_dim = 1;
      const CanonicalProjection proj = fit(data, options);
      const PcaScatter s = pca_space_scatter(data, proj);

      LabeledDataset reduced;
      reduced.samples =
          (data.samples.rowwise() - proj.pca_mean.transpose()) * proj.pca_basis;
      reduced.labels = data.labels;
      reduced.num_classes = 2;
      const ClassStats stats = class_stats(reduced);
      const Eigen::VectorXd fisher =
          s.within_ridged.ldlt().solve(stats.class_means.col(0) - stats.class_means.col(1));
      const Eigen::VectorXd lead = proj.canon_basis.col(0);
      const double cosine =
          std::abs(fisher.normalized().dot(lead.normalized()));
      CHECK(std::acos(std::min(1.0, cosine)) < 1e-6);
    }
  }

  TEST_CASE("training projections of separated classes do not overlap") {
    std::mt19937_64 rng(38);
    Eigen::VectorXd mu0(2), mu1(2);
    mu0 << 0, 0;
    mu1 << 10, 0;
    const LabeledDataset data = gaussian_two_class(rng, 2, 20, mu0, mu1, 0.5);
    FitOptions options;
    options.target_dim = 1;
    options.pca_rank = 2;
    const CanonicalProjection proj = fit(data, options);

    double max0 = -1e300, min1 = 1e300, min0 = 1e300, max1 = -1e300;
    for (int i = 0; i < data.samples.rows(); ++i) {
      const double y = project(proj, data.samples.row(i).transpose())[0];
      if (data.labels[i] == 0) {
        max0 = std::max(max0, y);
        min0 = std::min(min0, y);
      } else {
        min1 = std::min(min1, y);
        max1 = std::max(max1, y);
      }
    }
    const bool disjoint = max0 < min1 || max1 < min0;
    CHECK(disjoint);
  }

  TEST_CASE("projection centering and affinity") {
    std::mt19937_64 rng(39);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd mu1 = Eigen::VectorXd::Ones(4) * 2.0;
    const LabeledDataset data = gaussian_two_class(rng, 4, 10, mu0, mu1, 1.0);
    const CanonicalProjection proj = fit(data, {});

    CHECK(project(proj, proj.pca_mean).norm() == doctest::Approx(0.0));

    const Eigen::VectorXd x = data.samples.row(3).transpose();
    for (double a : {-1.5, 0.25, 2.0}) {
      const Eigen::VectorXd mixed = a * x + (1.0 - a) * proj.pca_mean;
      const Eigen::VectorXd lhs = project(proj, mixed);
      const Eigen::VectorXd rhs = a * project(proj, x);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
    }

    Eigen::VectorXd wrong(5);
    wrong.setZero();
    try {
      project(proj, wrong);
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::dimension_mismatch);
    }
  }

  TEST_CASE("feature permutation leaves projections unchanged") {
    std::mt19937_64 rng(40);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Random(4);
    Eigen::VectorXd mu1 = mu0 + Eigen::VectorXd::Ones(4);
    const LabeledDataset data = gaussian_two_class(rng, 4, 12, mu0, mu1, 0.5);

    std::vector<int> perm = {2, 0, 3, 1};
    LabeledDataset permuted = data;
    for (int j = 0; j < 4; ++j) permuted.samples.col(j) = data.samples.col(perm[j]);

    FitOptions options;
    options.target_dim = 1;
    const CanonicalProjection p1 = fit(data, options);
    const CanonicalProjection p2 = fit(permuted, options);
    for (int i = 0; i < data.samples.rows(); ++i) {
      const double y1 = project(p1, data.samples.row(i).transpose())[0];
      const double y2 = project(p2, permuted.samples.row(i).transpose())[0];
      CHECK(std::abs(y1 - y2) < 1e-8);
    }
  }

  TEST_CASE("basis orthonormality and eigenvalue ordering") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 5; ++trial) {
      LabeledDataset data;
      const int c = 4, per_class = 5, dim = 40;  // d > N exercises the Gram path
      data.samples.resize(c * per_class, dim);
      data.num_classes = c;
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int i = 0; i < c * per_class; ++i) {
        data.labels.push_back(i / per_class);
        for (int j = 0; j < dim; ++j)
          data.samples(i, j) = 1.5 * (i / per_class) * (j % 3 == 0) + normal(rng);
      }
      const CanonicalProjection proj = fit(data, {});
      const Eigen::MatrixXd gram =
          proj.pca_basis.transpose() * proj.pca_basis;
      CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols()))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      for (int j = 1; j < proj.eigenvalues.size(); ++j)
        CHECK(proj.eigenvalues[j] <= proj.eigenvalues[j - 1] + 1e-12);
      for (int j = 0; j < proj.canon_basis.cols(); ++j)
        CHECK(proj.canon_basis.col(j).norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("invalid ranks are rejected") {
    const LabeledDataset data = two_class_2d();
    FitOptions options;
    options.pca_rank = 4;  // N - 1 = 3
    try {
      fit(data, options);
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::rank_deficient);
    }
  }
}

TEST_SUITE("subspace_serialization") {
  TEST_CASE("write/read round-trip is exact") {
    std::mt19937_64 rng(41);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd mu1 = Eigen::VectorXd::Ones(6);
    const LabeledDataset data = gaussian_two_class(rng, 6, 8, mu0, mu1, 0.9);
    const CanonicalProjection proj = fit(data, {});

    std::stringstream stream;
    write_projection(stream, proj);
    const CanonicalProjection back = read_projection(stream);
    CHECK(back.ridge == proj.ridge);
    CHECK((back.pca_mean - proj.pca_mean).norm() == 0.0);
    CHECK((back.pca_basis - proj.pca_basis).norm() == 0.0);
    CHECK((back.canon_basis - proj.canon_basis).norm() == 0.0);
    CHECK((back.eigenvalues - proj.eigenvalues).norm() == 0.0);
  }
}
