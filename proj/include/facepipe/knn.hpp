#ifndef FACEPIPE_KNN_HPP_
#define FACEPIPE_KNN_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace facepipe::knn {

enum class Metric { euclidean, cosine };

/// euclidean: ||a - b||; cosine: 1 - a.b / (||a|| ||b||).
/// Cosine throws ZeroVector on a zero-length argument.
double distance(Metric metric, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct Gallery {
  struct Template {
    std::string subject_id;
    Eigen::VectorXd vector;
  };
  std::vector<Template> templates;
};

struct NnScore {
  double score = 0.0;           // -(mean distance of the k nearest claimed templates)
  std::string best_match;       // argmin over the whole gallery
};

/// Scores a claimed identity: the negated distance to the claimed subject's
/// nearest template(s), so higher means more genuine. best_match ties break
/// to the lowest subject_id, then the lowest template index.
NnScore nn_score(const Gallery& gallery, const Eigen::VectorXd& probe,
                 const std::string& claimed_subject, Metric metric, int k = 1);

}  // namespace facepipe::knn

#endif  // FACEPIPE_KNN_HPP_
