#ifndef FACEPIPE_PIPELINE_HPP_
#define FACEPIPE_PIPELINE_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "facepipe/config.hpp"
#include "facepipe/dataset.hpp"
#include "facepipe/eval.hpp"
#include "facepipe/gabor.hpp"
#include "facepipe/knn.hpp"
#include "facepipe/subspace.hpp"
#include "facepipe/svm.hpp"

namespace facepipe::pipeline {

/// Feature-space verification task: one row per sample, labels are class
/// indices into subject_ids. This is the seam between image ingestion and
/// the reduction/classification stages, and what synthetic experiments feed.
struct FeatureDataset {
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd train_features;
  std::vector<int> train_labels;
  Eigen::MatrixXd test_features;
  std::vector<int> test_labels;
};

/// Everything needed to score probes for one method.
struct TrainedModels {
  Method method = Method::svm_rbf;
  subspace::CanonicalProjection projection;
  std::vector<std::string> subject_ids;
  std::vector<svm::SvmModel> svm_models;  // per subject, SVM methods
  knn::Gallery gallery;                   // NN methods
  int knn_k = 1;
  double svm_c = 0.0;      // hyperparameters actually used
  double svm_sigma = 0.0;  // 0 for non-RBF kernels
};

/// Fits the canonical projection on the training partition only, then trains
/// one genuine-vs-rest SVM per subject (or builds the NN gallery).
TrainedModels fit_models(const FeatureDataset& data, const ExperimentConfig& config);

/// Scores every (probe, claimed subject) pair; higher = more genuine.
eval::ScoreSet score_probes(const TrainedModels& models,
                            const Eigen::MatrixXd& test_features,
                            const std::vector<int>& test_labels);

/// fit_models + score_probes + report assembly.
eval::EvalReport evaluate_features(const FeatureDataset& data,
                                   const ExperimentConfig& config,
                                   TrainedModels* out_models = nullptr);

/// Loads, registers (when enabled) and equalizes one dataset image.
Image preprocess_entry(const ManifestEntry& entry, const ExperimentConfig& config);

/// ingest -> split -> preprocess -> Gabor features for both partitions.
FeatureDataset features_for_config(const ExperimentConfig& config);

/// Builds the Gabor bank described by the config.
gabor::GaborBank config_bank(const ExperimentConfig& config);

/// Image-level experiment: ingest -> split -> preprocess -> Gabor features ->
/// evaluate_features. Report CSVs land in resolve_output_dir(config);
/// partially written outputs are removed on failure.
struct RunResult {
  eval::EvalReport report;
  std::filesystem::path output_dir;
};
RunResult run_experiment(const ExperimentConfig& config);

/// Serialized CanonicalProjection + per-subject SvmModels with a version byte
/// and a CRC32 trailer. NN methods have nothing to persist and are rejected.
void save_models(const std::filesystem::path& path, const TrainedModels& models);
TrainedModels load_models(const std::filesystem::path& path);

/// CLI `preprocess`: writes normalized P5 PGMs under dir/preprocessed/.
void preprocess_dataset(const ExperimentConfig& config,
                        const std::filesystem::path& dir);

/// CLI `extract`: one little-endian float32 record per image (manifest order,
/// protocol-filtered) in features.bin plus a features.json sidecar.
void dump_features(const ExperimentConfig& config, const std::filesystem::path& dir);

}  // namespace facepipe::pipeline

#endif  // FACEPIPE_PIPELINE_HPP_
