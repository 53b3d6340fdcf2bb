#ifndef FACEPIPE_CONFIG_HPP_
#define FACEPIPE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace facepipe::pipeline {

enum class Protocol { frontal, frontal_left_right };
enum class Method { svm_rbf, svm_linear, nn_euclidean, nn_cosine };

const char* protocol_tag(Protocol p);   // "F" / "FLR" (used in file names)
const char* method_name(Method m);      // "svm-rbf", ...
Protocol parse_protocol(const std::string& text);
Method parse_method(const std::string& text);

/// Flat key=value experiment configuration. Every key has a default; unknown
/// keys are rejected.
struct ExperimentConfig {
  std::filesystem::path dataset_root;
  Protocol protocol = Protocol::frontal;
  Method method = Method::svm_rbf;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;  // empty: runs/<config hash>
  bool register_faces = true;

  // Expected per-subject image counts; 0 skips the check.
  int frontal_count = 0;
  int left_count = 0;
  int right_count = 0;

  // preprocess
  int crop_width = 200;
  int crop_height = 220;
  double inter_eye = 80.0;
  double eye_row = 70.0;

  // gabor
  int gabor_frequencies = 5;
  int gabor_orientations = 8;
  double gabor_sigma_factor = 0.5;
  bool gabor_literal = false;
  int downsample = 4;

  // subspace
  int subspace_rank = 0;  // 0: N - C
  int subspace_dim = 0;   // 0: C - 1
  double ridge = 1e-4;

  // svm
  double svm_c = 10.0;
  double svm_sigma = 0.0;  // 0: dimension * mean feature variance
  double svm_tol = 1e-3;
  bool svm_grid = false;
  std::vector<double> svm_c_grid = {1.0, 10.0, 100.0};
  std::vector<double> svm_sigma_grid;  // empty: {0.5, 1, 2} x auto sigma

  // knn
  int knn_k = 1;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text);

/// Canonical key=value rendering (sorted keys); the config hash is FNV-1a64
/// over this text, so semantically identical configs share a run directory.
std::string canonical_config(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

/// output_dir, or runs/<config hash> when unset.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace facepipe::pipeline

#endif  // FACEPIPE_CONFIG_HPP_
