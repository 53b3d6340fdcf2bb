#include "facepipe/gabor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "facepipe/error.hpp"

namespace facepipe::gabor {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_spec(const GaborKernelSpec& spec) {
  if (!(spec.frequency > 0.0))
    throw Error(Errc::invalid_argument, "kernel frequency must be positive");
  if (!(spec.sigma_x > 0.0) || !(spec.sigma_y > 0.0))
    throw Error(Errc::invalid_argument, "kernel sigmas must be positive");
  if (spec.half_window < 1)
    throw Error(Errc::invalid_argument, "half_window must be >= 1");
}

}  // namespace

GaborKernel make_kernel(const GaborKernelSpec& spec) {
  validate_spec(spec);
  GaborKernel k;
  k.spec = spec;
  k.size = 2 * spec.half_window + 1;
  k.taps.resize(static_cast<std::size_t>(k.size) * k.size);

  const double st = std::sin(spec.theta);
  const double ct = std::cos(spec.theta);
  const double inv_sx2 = 1.0 / (spec.sigma_x * spec.sigma_x);
  const double inv_sy2 = 1.0 / (spec.sigma_y * spec.sigma_y);
  const int h = spec.half_window;
  std::size_t idx = 0;
  for (int y = -h; y <= h; ++y) {
    for (int x = -h; x <= h; ++x, ++idx) {
      const double u = x * st + y * ct;  // along the wave
      const double v = x * ct - y * st;  // across the wave
      const double envelope = std::exp(-0.5 * (u * u * inv_sx2 + v * v * inv_sy2));
      k.taps[idx] = envelope * std::cos(2.0 * kPi * spec.frequency * u);
    }
  }
  return k;
}

double ladder_frequency(int i, bool literal) {
  return literal ? kPi / std::pow(2.0, i) : 1.0 / std::pow(2.0, i + 1);
}

GaborBank default_bank(const BankParams& params) {
  if (params.num_frequencies < 1 || params.num_orientations < 1)
    throw Error(Errc::invalid_argument, "bank needs at least one frequency and orientation");
  if (!(params.sigma_factor > 0.0))
    throw Error(Errc::invalid_argument, "sigma_factor must be positive");

  GaborBank bank;
  bank.params = params;
  bank.kernels.reserve(static_cast<std::size_t>(params.num_frequencies) *
                       params.num_orientations);
  for (int i = 1; i <= params.num_frequencies; ++i) {
    const double f = ladder_frequency(i, params.literal_frequencies);
    const double sigma = params.sigma_factor / f;
    const int half_window = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    for (int k = 1; k <= params.num_orientations; ++k) {
      GaborKernelSpec spec;
      spec.frequency = f;
      spec.theta = k * kPi / params.num_orientations;
      spec.sigma_x = sigma;
      spec.sigma_y = sigma;
      spec.half_window = half_window;
      bank.kernels.push_back(make_kernel(spec));
    }
  }
  return bank;
}

namespace {

void check_kernel_fits(const RealImage& img, const GaborKernel& kernel) {
  if (kernel.size > img.width || kernel.size > img.height)
    throw Error(Errc::kernel_larger_than_image,
                "kernel " + std::to_string(kernel.size) + "x" + std::to_string(kernel.size) +
                    " exceeds image " + std::to_string(img.width) + "x" +
                    std::to_string(img.height));
}

double response_at(const RealImage& img, const GaborKernel& kernel, int x, int y) {
  const int h = kernel.spec.half_window;
  // Restrict (u, v) to taps whose source pixel is inside the image; the
  // zero-padded remainder contributes nothing.
  const int v_lo = std::max(-h, y - img.height + 1);
  const int v_hi = std::min(h, y);
  const int u_lo = std::max(-h, x - img.width + 1);
  const int u_hi = std::min(h, x);
  double acc = 0.0;
  for (int v = v_lo; v <= v_hi; ++v) {
    const double* src = &img.data[static_cast<std::size_t>(y - v) * img.width];
    const double* tap = &kernel.taps[static_cast<std::size_t>(v + h) * kernel.size + h];
    for (int u = u_lo; u <= u_hi; ++u) acc += tap[u] * src[x - u];
  }
  return acc;
}

}  // namespace

RealImage convolve(const RealImage& img, const GaborKernel& kernel) {
  check_kernel_fits(img, kernel);
  RealImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = response_at(img, kernel, x, y);
  return out;
}

std::vector<double> convolve_subsampled(const RealImage& img,
                                        const GaborKernel& kernel, int rho) {
  if (rho < 1) throw Error(Errc::invalid_argument, "downsample factor must be >= 1");
  check_kernel_fits(img, kernel);
  std::vector<double> out;
  out.reserve(feature_dim(img.width, img.height, 1, rho));
  for (int y = 0; y < img.height; y += rho)
    for (int x = 0; x < img.width; x += rho)
      out.push_back(response_at(img, kernel, x, y));
  return out;
}

std::size_t feature_dim(int width, int height, int kernels, int rho) {
  const auto cols = static_cast<std::size_t>((width + rho - 1) / rho);
  const auto rows = static_cast<std::size_t>((height + rho - 1) / rho);
  return static_cast<std::size_t>(kernels) * cols * rows;
}

std::vector<double> extract_features(const RealImage& img, const GaborBank& bank,
                                     int rho) {
  if (rho < 1) throw Error(Errc::invalid_argument, "downsample factor must be >= 1");
  if (bank.kernels.empty()) throw Error(Errc::invalid_argument, "empty bank");

  const std::size_t per_kernel = feature_dim(img.width, img.height, 1, rho);
  std::vector<double> features(per_kernel * bank.kernels.size());

  const auto run_kernel = [&](std::size_t ki) {
    const std::vector<double> response =
        convolve_subsampled(img, bank.kernels[ki], rho);
    std::copy(response.begin(), response.end(), features.data() + ki * per_kernel);
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(hw, bank.kernels.size());
  if (workers <= 1) {
    for (std::size_t ki = 0; ki < bank.kernels.size(); ++ki) run_kernel(ki);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t ki = w; ki < bank.kernels.size(); ki += workers)
          run_kernel(ki);
      });
    }
    for (auto& t : pool) t.join();
  }
  return features;
}

std::vector<double> extract_features(const Image& img, const GaborBank& bank,
                                     int rho) {
  return extract_features(to_real(img), bank, rho);
}

}  // namespace facepipe::gabor
