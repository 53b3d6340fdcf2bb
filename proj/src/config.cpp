#include "facepipe/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "facepipe/error.hpp"

namespace facepipe::pipeline {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "config key " + key + ": bad number '" + value + "'");
  }
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "config key " + key + ": bad integer '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "0" || value == "false" || value == "no") return false;
  if (value == "1" || value == "true" || value == "yes") return true;
  throw Error(Errc::invalid_argument, "config key " + key + ": bad flag '" + value + "'");
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string render_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += render_double(values[i]);
  }
  return out;
}

}  // namespace

const char* protocol_tag(Protocol p) {
  return p == Protocol::frontal ? "F" : "FLR";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::svm_rbf: return "svm-rbf";
    case Method::svm_linear: return "svm-linear";
    case Method::nn_euclidean: return "nn-euclidean";
    case Method::nn_cosine: return "nn-cosine";
  }
  return "?";
}

Protocol parse_protocol(const std::string& text) {
  if (text == "F") return Protocol::frontal;
  if (text == "F+L+R" || text == "FLR") return Protocol::frontal_left_right;
  throw Error(Errc::invalid_argument, "unknown protocol: " + text);
}

Method parse_method(const std::string& text) {
  if (text == "svm-rbf") return Method::svm_rbf;
  if (text == "svm-linear") return Method::svm_linear;
  if (text == "nn-euclidean") return Method::nn_euclidean;
  if (text == "nn-cosine") return Method::nn_cosine;
  throw Error(Errc::invalid_argument, "unknown method: " + text);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::invalid_argument,
                  "config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "dataset_root") config.dataset_root = value;
    else if (key == "protocol") config.protocol = parse_protocol(value);
    else if (key == "method") config.method = parse_method(value);
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(to_long(key, value));
    else if (key == "output_dir") config.output_dir = value;
    else if (key == "register") config.register_faces = to_bool(key, value);
    else if (key == "split") {
      if (value != "half")
        throw Error(Errc::invalid_argument, "only the 'half' split rule is implemented");
    }
    else if (key == "frontal_count") config.frontal_count = static_cast<int>(to_long(key, value));
    else if (key == "left_count") config.left_count = static_cast<int>(to_long(key, value));
    else if (key == "right_count") config.right_count = static_cast<int>(to_long(key, value));
    else if (key == "crop_width") config.crop_width = static_cast<int>(to_long(key, value));
    else if (key == "crop_height") config.crop_height = static_cast<int>(to_long(key, value));
    else if (key == "inter_eye") config.inter_eye = to_double(key, value);
    else if (key == "eye_row") config.eye_row = to_double(key, value);
    else if (key == "gabor_frequencies") config.gabor_frequencies = static_cast<int>(to_long(key, value));
    else if (key == "gabor_orientations") config.gabor_orientations = static_cast<int>(to_long(key, value));
    else if (key == "gabor_sigma_factor") config.gabor_sigma_factor = to_double(key, value);
    else if (key == "gabor_literal") config.gabor_literal = to_bool(key, value);
    else if (key == "downsample") config.downsample = static_cast<int>(to_long(key, value));
    else if (key == "subspace_rank") config.subspace_rank = static_cast<int>(to_long(key, value));
    else if (key == "subspace_dim") config.subspace_dim = static_cast<int>(to_long(key, value));
    else if (key == "ridge") config.ridge = to_double(key, value);
    else if (key == "svm_c") config.svm_c = to_double(key, value);
    else if (key == "svm_sigma") config.svm_sigma = to_double(key, value);
    else if (key == "svm_tol") config.svm_tol = to_double(key, value);
    else if (key == "svm_grid") config.svm_grid = to_bool(key, value);
    else if (key == "svm_c_grid") config.svm_c_grid = to_double_list(key, value);
    else if (key == "svm_sigma_grid") config.svm_sigma_grid = to_double_list(key, value);
    else if (key == "knn_k") config.knn_k = static_cast<int>(to_long(key, value));
    else
      throw Error(Errc::invalid_argument, "unknown config key: " + key);
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string canonical_config(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv;
  kv["dataset_root"] = c.dataset_root.string();
  kv["protocol"] = protocol_tag(c.protocol);
  kv["method"] = method_name(c.method);
  kv["seed"] = std::to_string(c.seed);
  kv["output_dir"] = c.output_dir.string();
  kv["register"] = c.register_faces ? "1" : "0";
  kv["frontal_count"] = std::to_string(c.frontal_count);
  kv["left_count"] = std::to_string(c.left_count);
  kv["right_count"] = std::to_string(c.right_count);
  kv["crop_width"] = std::to_string(c.crop_width);
  kv["crop_height"] = std::to_string(c.crop_height);
  kv["inter_eye"] = render_double(c.inter_eye);
  kv["eye_row"] = render_double(c.eye_row);
  kv["gabor_frequencies"] = std::to_string(c.gabor_frequencies);
  kv["gabor_orientations"] = std::to_string(c.gabor_orientations);
  kv["gabor_sigma_factor"] = render_double(c.gabor_sigma_factor);
  kv["gabor_literal"] = c.gabor_literal ? "1" : "0";
  kv["downsample"] = std::to_string(c.downsample);
  kv["subspace_rank"] = std::to_string(c.subspace_rank);
  kv["subspace_dim"] = std::to_string(c.subspace_dim);
  kv["ridge"] = render_double(c.ridge);
  kv["svm_c"] = render_double(c.svm_c);
  kv["svm_sigma"] = render_double(c.svm_sigma);
  kv["svm_tol"] = render_double(c.svm_tol);
  kv["svm_grid"] = c.svm_grid ? "1" : "0";
  kv["svm_c_grid"] = render_list(c.svm_c_grid);
  kv["svm_sigma_grid"] = render_list(c.svm_sigma_grid);
  kv["knn_k"] = std::to_string(c.knn_k);

  std::string out;
  for (const auto& [key, value] : kv) out += key + "=" + value + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  // FNV-1a 64.
  const std::string text = canonical_config(config);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  return std::filesystem::path("runs") / config_hash(config);
}

}  // namespace facepipe::pipeline
