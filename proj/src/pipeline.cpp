#include "facepipe/pipeline.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "facepipe/detail/binio.hpp"
#include "facepipe/error.hpp"
#include "facepipe/gabor.hpp"
#include "facepipe/image_io.hpp"

namespace facepipe::pipeline {

namespace {

using nlohmann::json;

constexpr char kModelMagic[4] = {'F', 'P', 'M', 'D'};
constexpr std::uint8_t kModelVersion = 1;

svm::KernelSpec kernel_for(Method method, double sigma) {
  svm::KernelSpec spec;
  if (method == Method::svm_rbf) {
    spec.kind = svm::KernelSpec::Kind::rbf;
    spec.sigma = sigma;
  } else {
    spec.kind = svm::KernelSpec::Kind::linear;
  }
  return spec;
}

bool is_svm(Method method) {
  return method == Method::svm_rbf || method == Method::svm_linear;
}

void run_parallel(std::size_t jobs, const std::function<void(std::size_t)>& work) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) work(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < jobs; i += workers) work(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<svm::SvmModel> train_per_subject(const Eigen::MatrixXd& features,
                                             const std::vector<int>& labels,
                                             std::size_t num_subjects,
                                             const svm::KernelSpec& kernel,
                                             double box, double tol) {
  std::vector<svm::SvmModel> models(num_subjects);
  run_parallel(num_subjects, [&](std::size_t s) {
    svm::TrainSet set;
    set.points = features;
    set.labels.resize(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
      set.labels[i] = labels[i] == static_cast<int>(s) ? 1.0 : -1.0;
    svm::TrainOptions options;
    options.box = box;
    options.tol = tol;
    models[s] = svm::train(set, kernel, options).model;
  });
  return models;
}

// Verification EER of a (C, sigma) candidate under 5-fold CV on the training
// partition. Folds are assigned round-robin within each class.
double cv_eer(const Eigen::MatrixXd& features, const std::vector<int>& labels,
              std::size_t num_subjects, Method method, double c, double sigma,
              double tol) {
  constexpr int kFolds = 5;
  const Eigen::Index n = features.rows();
  std::vector<int> fold(n);
  {
    std::vector<int> seen(num_subjects, 0);
    for (Eigen::Index i = 0; i < n; ++i) fold[i] = seen[labels[i]]++ % kFolds;
  }

  double total_eer = 0.0;
  int used_folds = 0;
  for (int f = 0; f < kFolds; ++f) {
    std::vector<Eigen::Index> fit_rows, probe_rows;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold[i] == f ? probe_rows : fit_rows).push_back(i);
    if (probe_rows.empty() || fit_rows.empty()) continue;

    std::vector<int> present(num_subjects, 0);
    for (Eigen::Index i : fit_rows) ++present[labels[i]];

    Eigen::MatrixXd fit_feats(fit_rows.size(), features.cols());
    std::vector<int> fit_labels(fit_rows.size());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) {
      fit_feats.row(i) = features.row(fit_rows[i]);
      fit_labels[i] = labels[fit_rows[i]];
    }

    std::vector<svm::SvmModel> models(num_subjects);
    std::vector<char> trained(num_subjects, 0);
    const svm::KernelSpec kernel = kernel_for(method, sigma);
    run_parallel(num_subjects, [&](std::size_t s) {
      if (present[s] == 0) return;
      svm::TrainSet set;
      set.points = fit_feats;
      set.labels.resize(fit_feats.rows());
      for (Eigen::Index i = 0; i < fit_feats.rows(); ++i)
        set.labels[i] = fit_labels[i] == static_cast<int>(s) ? 1.0 : -1.0;
      svm::TrainOptions options;
      options.box = c;
      options.tol = tol;
      models[s] = svm::train(set, kernel, options).model;
      trained[s] = 1;
    });

    eval::ScoreSet scores;
    for (Eigen::Index probe : probe_rows) {
      if (!trained[labels[probe]]) continue;
      const Eigen::VectorXd x = features.row(probe).transpose();
      for (std::size_t s = 0; s < num_subjects; ++s) {
        if (!trained[s]) continue;
        const double value = svm::decision_value(models[s], x);
        if (static_cast<int>(s) == labels[probe])
          scores.genuine.push_back(value);
        else
          scores.impostor.push_back(value);
      }
    }
    if (scores.genuine.empty() || scores.impostor.empty()) continue;
    total_eer +=
        eval::equal_error_rate(eval::far_frr_curve(scores, eval::default_thresholds(scores)))
            .eer;
    ++used_folds;
  }
  return used_folds > 0 ? total_eer / used_folds
                        : std::numeric_limits<double>::infinity();
}

}  // namespace

gabor::GaborBank config_bank(const ExperimentConfig& config) {
  gabor::BankParams params;
  params.num_frequencies = config.gabor_frequencies;
  params.num_orientations = config.gabor_orientations;
  params.sigma_factor = config.gabor_sigma_factor;
  params.literal_frequencies = config.gabor_literal;
  return gabor::default_bank(params);
}

Image preprocess_entry(const ManifestEntry& entry, const ExperimentConfig& config) {
  Image img = io::load_image(entry.path);
  if (config.register_faces) {
    if (!entry.eyes)
      throw Error(Errc::file_not_found,
                  "no eye annotation for image " + entry.image_id +
                      " (provide eyes.csv or set register=0 for pre-cropped data)");
    preprocess::CropParams crop;
    crop.target_width = config.crop_width;
    crop.target_height = config.crop_height;
    crop.inter_eye_distance = config.inter_eye;
    crop.eye_row = config.eye_row;
    img = preprocess::geometric_normalize(img, *entry.eyes, crop);
  }
  return preprocess::histogram_equalize(img);
}

TrainedModels fit_models(const FeatureDataset& data, const ExperimentConfig& config) {
  const std::size_t num_subjects = data.subject_ids.size();
  if (num_subjects < 2) throw Error(Errc::single_class, "need at least 2 subjects");

  subspace::LabeledDataset train;
  train.samples = data.train_features;
  train.labels = data.train_labels;
  train.num_classes = static_cast<int>(num_subjects);

  subspace::FitOptions fit_options;
  fit_options.target_dim = config.subspace_dim;
  fit_options.pca_rank = config.subspace_rank;
  fit_options.ridge = config.ridge;

  TrainedModels models;
  models.method = config.method;
  models.subject_ids = data.subject_ids;
  models.knn_k = config.knn_k;
  models.projection = subspace::fit(train, fit_options);

  const Eigen::MatrixXd reduced =
      subspace::project_rows(models.projection, data.train_features);

  if (is_svm(config.method)) {
    double sigma = config.svm_sigma;
    if (config.method == Method::svm_rbf && sigma <= 0.0)
      sigma = svm::default_rbf_sigma(reduced);
    double box = config.svm_c;

    if (config.svm_grid) {
      std::vector<double> c_grid = config.svm_c_grid;
      if (c_grid.empty()) c_grid = {box};
      std::vector<double> sigma_grid;
      if (config.method == Method::svm_rbf) {
        sigma_grid = config.svm_sigma_grid;
        if (sigma_grid.empty()) sigma_grid = {0.5 * sigma, sigma, 2.0 * sigma};
      } else {
        sigma_grid = {0.0};
      }
      double best = std::numeric_limits<double>::infinity();
      for (double c_cand : c_grid) {
        for (double s_cand : sigma_grid) {
          const double eer = cv_eer(reduced, data.train_labels, num_subjects,
                                    config.method, c_cand, s_cand, config.svm_tol);
          if (eer < best) {
            best = eer;
            box = c_cand;
            sigma = s_cand;
          }
        }
      }
    }

    models.svm_c = box;
    models.svm_sigma = config.method == Method::svm_rbf ? sigma : 0.0;
    models.svm_models =
        train_per_subject(reduced, data.train_labels, num_subjects,
                          kernel_for(config.method, sigma), box, config.svm_tol);
  } else {
    models.gallery.templates.reserve(reduced.rows());
    for (Eigen::Index i = 0; i < reduced.rows(); ++i)
      models.gallery.templates.push_back(
          {data.subject_ids[data.train_labels[i]], reduced.row(i).transpose()});
  }
  return models;
}

eval::ScoreSet score_probes(const TrainedModels& models,
                            const Eigen::MatrixXd& test_features,
                            const std::vector<int>& test_labels) {
  if (static_cast<Eigen::Index>(test_labels.size()) != test_features.rows())
    throw Error(Errc::invalid_argument, "test label count != test feature rows");

  const Eigen::MatrixXd reduced =
      subspace::project_rows(models.projection, test_features);

  std::vector<eval::Probe> probes;
  probes.reserve(test_labels.size());
  for (std::size_t i = 0; i < test_labels.size(); ++i) {
    if (test_labels[i] < 0 ||
        test_labels[i] >= static_cast<int>(models.subject_ids.size()))
      throw Error(Errc::unknown_subject,
                  "test label out of range: " + std::to_string(test_labels[i]));
    probes.push_back({models.subject_ids[test_labels[i]], i});
  }

  const bool svm_method = is_svm(models.method);
  const knn::Metric metric = models.method == Method::nn_euclidean
                                 ? knn::Metric::euclidean
                                 : knn::Metric::cosine;

  return eval::build_scores(
      models.subject_ids, probes,
      [&](const std::string& claimed, std::size_t probe_index) {
        const Eigen::VectorXd x = reduced.row(probe_index).transpose();
        if (svm_method) {
          const auto it = std::find(models.subject_ids.begin(),
                                    models.subject_ids.end(), claimed);
          const auto s = static_cast<std::size_t>(it - models.subject_ids.begin());
          return svm::decision_value(models.svm_models[s], x);
        }
        return knn::nn_score(models.gallery, x, claimed, metric, models.knn_k).score;
      });
}

eval::EvalReport evaluate_features(const FeatureDataset& data,
                                   const ExperimentConfig& config,
                                   TrainedModels* out_models) {
  TrainedModels models = fit_models(data, config);
  const eval::ScoreSet scores =
      score_probes(models, data.test_features, data.test_labels);
  eval::EvalReport report = eval::make_report(
      method_name(config.method), protocol_tag(config.protocol), scores);
  if (out_models) *out_models = std::move(models);
  return report;
}

namespace {

void check_counts(const DatasetManifest& manifest, const ExperimentConfig& config) {
  const auto expect = [&](char view) {
    switch (view) {
      case 'F': return config.frontal_count;
      case 'L': return config.left_count;
      default: return config.right_count;
    }
  };
  const std::string used =
      config.protocol == Protocol::frontal ? "F" : "FLR";
  for (const auto& [subject_id, entries] : manifest.subjects) {
    for (char view : used) {
      const int want = expect(view);
      if (want == 0) continue;
      int have = 0;
      for (const auto& e : entries)
        if (e.view == view) ++have;
      if (have != want)
        throw Error(Errc::insufficient_images,
                    "subject " + subject_id + " has " + std::to_string(have) + " " +
                        std::string(1, view) + " images, expected " +
                        std::to_string(want));
    }
  }
}

FeatureDataset extract_split_features(const Split& split_result,
                                      const ExperimentConfig& config) {
  const gabor::GaborBank bank = config_bank(config);

  const auto featurize = [&](const std::vector<SplitItem>& items,
                             Eigen::MatrixXd& features, std::vector<int>& labels) {
    std::vector<std::vector<double>> rows(items.size());
    int width = -1, height = -1;
    std::mutex size_mutex;
    run_parallel(items.size(), [&](std::size_t i) {
      const Image img = preprocess_entry(*items[i].entry, config);
      {
        std::lock_guard<std::mutex> lock(size_mutex);
        if (width < 0) {
          width = img.width;
          height = img.height;
        } else if (img.width != width || img.height != height) {
          throw Error(Errc::dimension_mismatch,
                      "image " + items[i].entry->image_id +
                          " differs in size; register faces or pre-crop uniformly");
        }
      }
      rows[i] = gabor::extract_features(img, bank, config.downsample);
    });
    if (items.empty()) throw Error(Errc::empty_dataset, "empty partition");
    features.resize(items.size(), rows[0].size());
    labels.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      features.row(i) =
          Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), rows[i].size());
      labels[i] = items[i].subject_index;
    }
  };

  FeatureDataset data;
  data.subject_ids = split_result.subject_ids;
  featurize(split_result.train, data.train_features, data.train_labels);
  featurize(split_result.test, data.test_features, data.test_labels);
  return data;
}

}  // namespace

FeatureDataset features_for_config(const ExperimentConfig& config) {
  const DatasetManifest manifest = ingest(config.dataset_root);
  check_counts(manifest, config);
  const Split split_result = split(manifest, config.protocol, config.seed);
  return extract_split_features(split_result, config);
}

RunResult run_experiment(const ExperimentConfig& config) {
  const FeatureDataset data = features_for_config(config);

  RunResult result;
  result.report = evaluate_features(data, config);
  result.output_dir = resolve_output_dir(config);

  const bool existed = std::filesystem::exists(result.output_dir);
  try {
    std::filesystem::create_directories(result.output_dir);
    eval::emit_report(result.report, result.output_dir);
    std::ofstream cfg(result.output_dir / "config.txt", std::ios::trunc);
    cfg << canonical_config(config);
    if (!cfg) throw Error(Errc::io_error, "cannot write config.txt");
  } catch (...) {
    if (!existed) {
      std::error_code ec;
      std::filesystem::remove_all(result.output_dir, ec);
    }
    throw;
  }
  return result;
}

void save_models(const std::filesystem::path& path, const TrainedModels& models) {
  if (!is_svm(models.method))
    throw Error(Errc::invalid_argument,
                "nn methods train no persistent model; use the run subcommand");
  if (models.svm_models.size() != models.subject_ids.size())
    throw Error(Errc::invalid_argument, "one SVM per subject required");

  std::ostringstream payload;
  json header;
  header["format"] = "facepipe-models";
  header["method"] = method_name(models.method);
  header["svm_c"] = models.svm_c;
  header["svm_sigma"] = models.svm_sigma;
  header["n_subjects"] = models.subject_ids.size();
  const std::string text = header.dump();
  detail::write_le<std::uint32_t>(payload, static_cast<std::uint32_t>(text.size()));
  payload.write(text.data(), static_cast<std::streamsize>(text.size()));
  subspace::write_projection(payload, models.projection);
  for (std::size_t s = 0; s < models.subject_ids.size(); ++s) {
    const std::string& id = models.subject_ids[s];
    detail::write_le<std::uint32_t>(payload, static_cast<std::uint32_t>(id.size()));
    payload.write(id.data(), static_cast<std::streamsize>(id.size()));
    svm::write_model(payload, models.svm_models[s]);
  }

  const std::string body = payload.str();
  const auto crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, nullptr, 0),
            reinterpret_cast<const Bytef*>(body.data()),
            static_cast<uInt>(body.size())));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  detail::write_le<std::uint8_t>(out, kModelVersion);
  detail::write_le<std::uint64_t>(out, body.size());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  detail::write_le<std::uint32_t>(out, crc);
  if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
}

TrainedModels load_models(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, "cannot open " + path.string());

  char magic[4];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kModelMagic, 4) != 0)
    throw Error(Errc::corrupt_file, "not a facepipe model file: " + path.string());
  const auto version = detail::read_le<std::uint8_t>(in);
  if (version != kModelVersion)
    throw Error(Errc::version_mismatch,
                "model version " + std::to_string(version) + ", expected " +
                    std::to_string(kModelVersion));
  const auto body_len = detail::read_le<std::uint64_t>(in);
  std::string body(body_len, '\0');
  in.read(body.data(), static_cast<std::streamsize>(body_len));
  if (in.gcount() != static_cast<std::streamsize>(body_len))
    throw Error(Errc::corrupt_file, "truncated model file: " + path.string());
  const auto stored_crc = detail::read_le<std::uint32_t>(in);
  const auto actual_crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, nullptr, 0), reinterpret_cast<const Bytef*>(body.data()),
            static_cast<uInt>(body.size())));
  if (stored_crc != actual_crc)
    throw Error(Errc::corrupt_file, "model checksum mismatch: " + path.string());

  std::istringstream payload(body);
  const auto header_len = detail::read_le<std::uint32_t>(payload);
  std::string text(header_len, '\0');
  payload.read(text.data(), header_len);
  if (payload.gcount() != static_cast<std::streamsize>(header_len))
    throw Error(Errc::corrupt_file, "truncated model header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_file, std::string("bad model header: ") + e.what());
  }
  if (header.value("format", "") != "facepipe-models")
    throw Error(Errc::corrupt_file, "unexpected payload format");

  TrainedModels models;
  models.method = parse_method(header.at("method").get<std::string>());
  models.svm_c = header.at("svm_c").get<double>();
  models.svm_sigma = header.at("svm_sigma").get<double>();
  const auto n_subjects = header.at("n_subjects").get<std::size_t>();
  models.projection = subspace::read_projection(payload);
  models.subject_ids.reserve(n_subjects);
  models.svm_models.reserve(n_subjects);
  for (std::size_t s = 0; s < n_subjects; ++s) {
    const auto id_len = detail::read_le<std::uint32_t>(payload);
    std::string id(id_len, '\0');
    payload.read(id.data(), id_len);
    if (payload.gcount() != static_cast<std::streamsize>(id_len))
      throw Error(Errc::corrupt_file, "truncated subject id");
    models.subject_ids.push_back(id);
    models.svm_models.push_back(svm::read_model(payload));
  }
  return models;
}

void preprocess_dataset(const ExperimentConfig& config,
                        const std::filesystem::path& dir) {
  const DatasetManifest manifest = ingest(config.dataset_root);
  const std::filesystem::path out_root = dir / "preprocessed";
  std::filesystem::create_directories(out_root);
  for (const auto& [subject_id, entries] : manifest.subjects) {
    std::filesystem::create_directories(out_root / subject_id);
    for (const ManifestEntry& entry : entries) {
      const Image img = preprocess_entry(entry, config);
      std::filesystem::path name = entry.image_id;
      name.replace_extension(".pgm");
      io::save_pgm(img, out_root / subject_id / name);
    }
  }
}

void dump_features(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const DatasetManifest manifest = ingest(config.dataset_root);
  const gabor::GaborBank bank = config_bank(config);
  std::filesystem::create_directories(dir);

  std::ofstream bin(dir / "features.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw Error(Errc::io_error, "cannot write features.bin");

  json records = json::array();
  std::size_t dim = 0;
  for (const auto& [subject_id, entries] : manifest.subjects) {
    for (const ManifestEntry& entry : entries) {
      const Image img = preprocess_entry(entry, config);
      const std::vector<double> feats =
          gabor::extract_features(img, bank, config.downsample);
      if (dim == 0) dim = feats.size();
      if (feats.size() != dim)
        throw Error(Errc::dimension_mismatch,
                    "inconsistent feature length for " + entry.image_id);
      std::vector<float> row(feats.begin(), feats.end());
      detail::write_f32_block(bin, row.data(), row.size());
      records.push_back({{"subject_id", subject_id},
                         {"image_id", entry.image_id},
                         {"view", std::string(1, entry.view)}});
    }
  }
  if (!bin) throw Error(Errc::io_error, "write failed: features.bin");
  bin.close();

  json sidecar;
  sidecar["dim"] = dim;
  sidecar["dtype"] = "float32-le";
  sidecar["layout"] = "filter-major, then row-major pixels";
  sidecar["bank"] = {{"frequencies", config.gabor_frequencies},
                     {"orientations", config.gabor_orientations},
                     {"sigma_factor", config.gabor_sigma_factor},
                     {"literal_frequencies", config.gabor_literal},
                     {"downsample", config.downsample}};
  sidecar["records"] = records;
  std::ofstream meta(dir / "features.json", std::ios::trunc);
  if (!meta) throw Error(Errc::io_error, "cannot write features.json");
  meta << sidecar.dump(2) << "\n";
}

}  // namespace facepipe::pipeline
