#ifndef FACEPIPE_GABOR_HPP_
#define FACEPIPE_GABOR_HPP_

#include <vector>

#include "facepipe/image.hpp"

namespace facepipe::gabor {

struct GaborKernelSpec {
  double frequency = 0.25;  // cycles per pixel of the sinusoid
  double theta = 0.0;       // orientation, radians
  double sigma_x = 2.0;     // Gaussian envelope along the wave direction
  double sigma_y = 2.0;     // Gaussian envelope across the wave direction
  int half_window = 6;      // taps span [-half_window, +half_window]^2
};

/// Sampled real (cosine) Gabor kernel. Taps are stored row-major over the
/// odd (2*half_window+1)^2 window; tap(0,0) is always 1.
struct GaborKernel {
  GaborKernelSpec spec;
  int size = 0;  // 2*half_window + 1
  std::vector<double> taps;

  double tap(int x, int y) const {
    const int h = spec.half_window;
    return taps[static_cast<std::size_t>(y + h) * size + (x + h)];
  }
};

struct BankParams {
  int num_frequencies = 5;
  int num_orientations = 8;
  // sigma = sigma_factor / frequency (default: half the wavelength).
  double sigma_factor = 0.5;
  // Use the frequency ladder pi/2^i verbatim inside cos(2*pi*f*u). The
  // default interprets pi/2^i as angular frequency, i.e. f = 1/2^(i+1),
  // which keeps every carrier above Nyquist.
  bool literal_frequencies = false;
};

struct GaborBank {
  std::vector<GaborKernel> kernels;  // frequency-major: i outer, k inner
  BankParams params;
};

/// Evaluates the Gaussian-windowed cosine at integer offsets over the window.
GaborKernel make_kernel(const GaborKernelSpec& spec);

/// Frequency of ladder step i (1-based) under the given interpretation.
double ladder_frequency(int i, bool literal);

/// The 5-frequency x 8-orientation default bank (40 kernels).
GaborBank default_bank(const BankParams& params = {});

/// 2-D convolution, "same" size, zero padding:
///   out(x, y) = sum_{u,v} tap(u, v) * img(x - u, y - v).
RealImage convolve(const RealImage& img, const GaborKernel& kernel);

/// The response values convolve() would produce at the rho-subsampled grid
/// (top-left anchored, row-major), without computing the rest.
std::vector<double> convolve_subsampled(const RealImage& img,
                                        const GaborKernel& kernel, int rho);

/// Convolves with every kernel in bank order, subsamples every rho-th
/// row/column (top-left anchored) and concatenates filter-major, row-major.
/// Resulting length: kernels * ceil(w/rho) * ceil(h/rho).
std::vector<double> extract_features(const RealImage& img, const GaborBank& bank,
                                     int rho);
std::vector<double> extract_features(const Image& img, const GaborBank& bank,
                                     int rho);

/// Feature length for a given raster size (one kernel contributes
/// ceil(w/rho) * ceil(h/rho) values).
std::size_t feature_dim(int width, int height, int kernels, int rho);

}  // namespace facepipe::gabor

#endif  // FACEPIPE_GABOR_HPP_
