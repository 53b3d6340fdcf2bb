#ifndef FACEPIPE_DATASET_HPP_
#define FACEPIPE_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facepipe/config.hpp"
#include "facepipe/preprocess.hpp"

namespace facepipe::pipeline {

struct ManifestEntry {
  std::string image_id;  // file name within the subject directory
  std::filesystem::path path;
  char view = 'F';  // F, L or R
  std::optional<preprocess::EyeAnnotation> eyes;
};

struct DatasetManifest {
  // Sorted by subject_id, entries sorted by image_id.
  std::vector<std::pair<std::string, std::vector<ManifestEntry>>> subjects;
  bool has_view_tags = false;  // views.csv was present
  bool has_eyes = false;       // eyes.csv was present
};

/// Scans root (one directory per subject, *.pgm / *.png inside) and the
/// optional views.csv (image_id,view) and eyes.csv
/// (subject_id,image_id,lx,ly,rx,ry) sidecars.
DatasetManifest ingest(const std::filesystem::path& root);

struct SplitItem {
  int subject_index = 0;
  const ManifestEntry* entry = nullptr;
};

struct Split {
  std::vector<std::string> subject_ids;  // class index -> subject id
  std::vector<SplitItem> train;
  std::vector<SplitItem> test;
};

/// Deterministic per-subject, per-view stratified half split of the images
/// selected by the protocol (odd group: extra image to train). Identical
/// (manifest, protocol, seed) produce identical partitions.
Split split(const DatasetManifest& manifest, Protocol protocol, std::uint64_t seed);

}  // namespace facepipe::pipeline

#endif  // FACEPIPE_DATASET_HPP_
