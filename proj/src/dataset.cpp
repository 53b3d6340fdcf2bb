#include "facepipe/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "facepipe/error.hpp"

namespace facepipe::pipeline {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_image_file(const std::filesystem::path& p) {
  const std::string ext = lowercase(p.extension().string());
  return ext == ".pgm" || ext == ".png";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// view tags keyed by image_id
std::map<std::string, char> load_views(const std::filesystem::path& file) {
  std::map<std::string, char> views;
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_error, "cannot read " + file.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("image_id", 0) == 0) continue;  // header
    const auto fields = split_csv_line(line);
    if (fields.size() != 2 || fields[1].size() != 1 ||
        (fields[1] != "F" && fields[1] != "L" && fields[1] != "R"))
      throw Error(Errc::corrupt_file,
                  file.string() + ":" + std::to_string(line_no) + ": expected image_id,{F|L|R}");
    views[fields[0]] = fields[1][0];
  }
  return views;
}

// eye annotations keyed by (subject_id, image_id)
std::map<std::pair<std::string, std::string>, preprocess::EyeAnnotation> load_eyes(
    const std::filesystem::path& file) {
  std::map<std::pair<std::string, std::string>, preprocess::EyeAnnotation> eyes;
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_error, "cannot read " + file.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("subject_id", 0) == 0) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      throw Error(Errc::corrupt_file,
                  file.string() + ":" + std::to_string(line_no) +
                      ": expected subject_id,image_id,lx,ly,rx,ry");
    preprocess::EyeAnnotation a;
    a.subject_id = fields[0];
    a.image_id = fields[1];
    try {
      a.left_eye = {std::stod(fields[2]), std::stod(fields[3])};
      a.right_eye = {std::stod(fields[4]), std::stod(fields[5])};
    } catch (const std::exception&) {
      throw Error(Errc::corrupt_file,
                  file.string() + ":" + std::to_string(line_no) + ": bad coordinate");
    }
    if (!(a.left_eye.x < a.right_eye.x))
      throw Error(Errc::corrupt_file,
                  file.string() + ":" + std::to_string(line_no) +
                      ": left eye must be left of the right eye");
    eyes[{a.subject_id, a.image_id}] = a;
  }
  return eyes;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Fisher-Yates with explicit rejection sampling so the partition does not
// depend on the standard library's shuffle implementation.
void deterministic_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw;
    do {
      draw = rng();
    } while (draw >= limit);
    std::swap(items[i - 1], items[draw % bound]);
  }
}

}  // namespace

DatasetManifest ingest(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root))
    throw Error(Errc::file_not_found, "dataset root not found: " + root.string());

  DatasetManifest manifest;
  std::map<std::string, char> views;
  std::map<std::pair<std::string, std::string>, preprocess::EyeAnnotation> eyes;
  if (std::filesystem::exists(root / "views.csv")) {
    manifest.has_view_tags = true;
    views = load_views(root / "views.csv");
  }
  if (std::filesystem::exists(root / "eyes.csv")) {
    manifest.has_eyes = true;
    eyes = load_eyes(root / "eyes.csv");
  }

  for (const auto& subject_entry : std::filesystem::directory_iterator(root)) {
    if (!subject_entry.is_directory()) continue;
    const std::string subject_id = subject_entry.path().filename().string();
    std::vector<ManifestEntry> entries;
    for (const auto& file : std::filesystem::directory_iterator(subject_entry.path())) {
      if (!file.is_regular_file() || !is_image_file(file.path())) continue;
      ManifestEntry e;
      e.image_id = file.path().filename().string();
      e.path = file.path();
      const auto view_it = views.find(e.image_id);
      e.view = view_it != views.end() ? view_it->second : 'F';
      const auto eyes_it = eyes.find({subject_id, e.image_id});
      if (eyes_it != eyes.end()) e.eyes = eyes_it->second;
      entries.push_back(std::move(e));
    }
    if (entries.empty()) continue;
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                return a.image_id < b.image_id;
              });
    manifest.subjects.emplace_back(subject_id, std::move(entries));
  }
  std::sort(manifest.subjects.begin(), manifest.subjects.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  if (manifest.subjects.empty())
    throw Error(Errc::empty_dataset, "no subject directories with images under " + root.string());
  return manifest;
}

Split split(const DatasetManifest& manifest, Protocol protocol, std::uint64_t seed) {
  if (protocol == Protocol::frontal_left_right && !manifest.has_view_tags)
    throw Error(Errc::missing_view_tags,
                "protocol F+L+R requires a views.csv with view tags");

  const std::string wanted_views =
      protocol == Protocol::frontal ? "F" : "FLR";

  Split result;
  for (std::size_t s = 0; s < manifest.subjects.size(); ++s) {
    const auto& [subject_id, entries] = manifest.subjects[s];
    result.subject_ids.push_back(subject_id);
    bool any = false;
    for (char view : wanted_views) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].view == view) group.push_back(i);
      if (group.empty()) continue;
      if (group.size() < 2)
        throw Error(Errc::insufficient_images,
                    "subject " + subject_id + " view " + std::string(1, view) +
                        " needs at least 2 images (1 train + 1 test)");
      deterministic_shuffle(group,
                            seed ^ fnv1a64(subject_id + "/" + std::string(1, view)));
      const std::size_t train_count = (group.size() + 1) / 2;
      for (std::size_t i = 0; i < group.size(); ++i) {
        SplitItem item{static_cast<int>(s), &entries[group[i]]};
        if (i < train_count)
          result.train.push_back(item);
        else
          result.test.push_back(item);
      }
      any = true;
    }
    if (!any)
      throw Error(Errc::insufficient_images,
                  "subject " + subject_id + " has no images for the protocol");
  }
  return result;
}

}  // namespace facepipe::pipeline
