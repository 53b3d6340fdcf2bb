#include "facepipe/knn.hpp"

#include <algorithm>
#include <cmath>

#include "facepipe/error.hpp"

namespace facepipe::knn {

double distance(Metric metric, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw Error(Errc::dimension_mismatch, "distance arguments differ in length");
  switch (metric) {
    case Metric::euclidean:
      return (a - b).norm();
    case Metric::cosine: {
      const double na = a.norm();
      const double nb = b.norm();
      if (na == 0.0 || nb == 0.0)
        throw Error(Errc::zero_vector, "cosine distance undefined for zero vectors");
      return 1.0 - a.dot(b) / (na * nb);
    }
  }
  return 0.0;
}

NnScore nn_score(const Gallery& gallery, const Eigen::VectorXd& probe,
                 const std::string& claimed_subject, Metric metric, int k) {
  if (gallery.templates.empty())
    throw Error(Errc::empty_dataset, "empty gallery");
  if (k < 1) throw Error(Errc::invalid_argument, "k must be >= 1");

  std::vector<double> claimed_distances;
  NnScore result;
  double best = 0.0;
  bool have_best = false;
  for (const auto& tmpl : gallery.templates) {
    const double d = distance(metric, probe, tmpl.vector);
    if (tmpl.subject_id == claimed_subject) claimed_distances.push_back(d);
    if (!have_best || d < best ||
        (d == best && tmpl.subject_id < result.best_match)) {
      best = d;
      result.best_match = tmpl.subject_id;
      have_best = true;
    }
  }
  if (claimed_distances.empty())
    throw Error(Errc::unknown_subject, "no templates for subject " + claimed_subject);

  const std::size_t take = std::min<std::size_t>(k, claimed_distances.size());
  std::partial_sort(claimed_distances.begin(), claimed_distances.begin() + take,
                    claimed_distances.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += claimed_distances[i];
  result.score = -(sum / static_cast<double>(take));
  return result;
}

}  // namespace facepipe::knn
