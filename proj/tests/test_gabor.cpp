#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "facepipe/error.hpp"
#include "facepipe/gabor.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using facepipe::Errc;
using facepipe::Error;
using facepipe::RealImage;
using namespace facepipe::gabor;

namespace {

GaborKernelSpec random_spec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> freq(0.05, 0.45);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> sigma(0.8, 4.0);
  std::uniform_int_distribution<int> window(1, 5);
  GaborKernelSpec spec;
  spec.frequency = freq(rng);
  spec.theta = angle(rng);
  spec.sigma_x = sigma(rng);
  spec.sigma_y = sigma(rng);
  spec.half_window = window(rng);
  return spec;
}

}  // namespace

TEST_SUITE("gabor_kernel") {
  TEST_CASE("origin tap is exactly one") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const GaborKernel k = make_kernel(random_spec(rng));
      CHECK(k.tap(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  TEST_CASE("theta = 0 column reduces to a 1-D Gabor in y") {
    GaborKernelSpec spec;
    spec.frequency = 0.2;
    spec.theta = 0.0;
    spec.sigma_x = 2.0;
    spec.sigma_y = 3.0;
    spec.half_window = 5;
    const GaborKernel k = make_kernel(spec);
    for (int y = -5; y <= 5; ++y) {
      const double expected = std::exp(-y * y / (2.0 * spec.sigma_x * spec.sigma_x)) *
                              std::cos(2.0 * std::numbers::pi * spec.frequency * y);
      CHECK(k.tap(0, y) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("even symmetry under joint negation") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 50; ++trial) {
      const GaborKernel k = make_kernel(random_spec(rng));
      const int h = k.spec.half_window;
      for (int y = -h; y <= h; ++y)
        for (int x = -h; x <= h; ++x)
          CHECK(k.tap(-x, -y) == doctest::Approx(k.tap(x, y)).epsilon(1e-14));
    }
  }
}

TEST_SUITE("gabor_bank") {
  TEST_CASE("default bank holds 40 kernels: 5 frequencies x 8 orientations") {
    const GaborBank bank = default_bank();
    CHECK(bank.kernels.size() == 40);
    std::set<double> frequencies;
    std::set<double> orientations;
    std::set<std::pair<double, double>> pairs;
    for (const auto& k : bank.kernels) {
      frequencies.insert(k.spec.frequency);
      orientations.insert(k.spec.theta);
      pairs.insert({k.spec.frequency, k.spec.theta});
    }
    CHECK(frequencies.size() == 5);
    CHECK(orientations.size() == 8);
    CHECK(pairs.size() == 40);  // all (f, theta) pairs distinct
  }

  TEST_CASE("octave spacing of the frequency ladder") {
    const GaborBank bank = default_bank();
    CHECK(bank.kernels[0].spec.frequency ==
          doctest::Approx(2.0 * bank.kernels[8].spec.frequency).epsilon(1e-14));
    CHECK(ladder_frequency(1, true) == doctest::Approx(std::numbers::pi / 2));
    CHECK(ladder_frequency(1, false) == doctest::Approx(0.25));
    CHECK(ladder_frequency(5, false) == doctest::Approx(1.0 / 64.0));
  }

  TEST_CASE("frequency-major ordering: orientations cycle fastest") {
    const GaborBank bank = default_bank();
    for (int i = 0; i < 5; ++i)
      for (int k = 1; k < 8; ++k)
        CHECK(bank.kernels[i * 8 + k].spec.frequency ==
              doctest::Approx(bank.kernels[i * 8].spec.frequency));
  }
}

TEST_SUITE("gabor_convolve") {
  TEST_CASE("unit impulse reproduces the kernel") {
    GaborKernelSpec spec;
    spec.frequency = 0.25;
    spec.theta = 1.0;
    spec.sigma_x = spec.sigma_y = 1.5;
    spec.half_window = 3;
    const GaborKernel k = make_kernel(spec);

    RealImage img(11, 11, 0.0);
    img.at(5, 5) = 1.0;
    const RealImage out = convolve(img, k);
    for (int y = -3; y <= 3; ++y)
      for (int x = -3; x <= 3; ++x)
        CHECK(out.at(5 + x, 5 + y) == doctest::Approx(k.tap(x, y)).epsilon(1e-14));
  }

  TEST_CASE("constant image scales the tap sum away from borders") {
    GaborKernelSpec spec;
    spec.frequency = 0.2;
    spec.theta = 0.5;
    spec.sigma_x = spec.sigma_y = 1.0;
    spec.half_window = 2;
    const GaborKernel k = make_kernel(spec);
    double tap_sum = 0.0;
    for (double t : k.taps) tap_sum += t;

    const RealImage img(12, 9, 3.0);
    const RealImage out = convolve(img, k);
    for (int y = 2; y < img.height - 2; ++y)
      for (int x = 2; x < img.width - 2; ++x)
        CHECK(out.at(x, y) == doctest::Approx(3.0 * tap_sum).epsilon(1e-12));
  }

  TEST_CASE("matches the double-loop oracle on random pairs") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> size(6, 16);
    for (int trial = 0; trial < 50; ++trial) {
      const RealImage img = testutil::random_real_image(rng, size(rng), size(rng));
      GaborKernelSpec spec = random_spec(rng);
      spec.half_window = std::min(spec.half_window, 2);  // kernel <= 5x5
      const GaborKernel k = make_kernel(spec);
      const RealImage fast = convolve(img, k);
      const RealImage slow = oracles::convolve_reference(img, k);
      for (std::size_t i = 0; i < fast.data.size(); ++i)
        CHECK(std::abs(fast.data[i] - slow.data[i]) < 1e-12);
    }
  }

  TEST_CASE("kernel larger than image throws") {
    GaborKernelSpec spec;
    spec.half_window = 6;
    const GaborKernel k = make_kernel(spec);
    const RealImage img(5, 5, 1.0);
    try {
      convolve(img, k);
      FAIL("expected KernelLargerThanImage");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kernel_larger_than_image);
    }
  }
}

TEST_SUITE("gabor_features") {
  TEST_CASE("dimension bookkeeping matches the 200x220 cases") {
    CHECK(feature_dim(200, 220, 40, 1) == 1760000);
    CHECK(feature_dim(200, 220, 40, 4) == 110000);
    CHECK(feature_dim(200, 220, 40, 4) == 40u * 50u * 55u);
  }

  TEST_CASE("zero image yields a zero vector") {
    BankParams params;
    params.num_frequencies = 2;
    const GaborBank bank = default_bank(params);
    const RealImage img(40, 30, 0.0);
    const auto features = extract_features(img, bank, 3);
    CHECK(features.size() == feature_dim(40, 30, bank.kernels.size(), 3));
    for (double f : features) CHECK(f == 0.0);
  }

  TEST_CASE("extraction is linear in the image") {
    std::mt19937_64 rng(24);
    BankParams params;
    params.num_frequencies = 2;
    const GaborBank bank = default_bank(params);
    const RealImage img = testutil::random_real_image(rng, 36, 28);
    RealImage scaled = img;
    const double a = -2.75;
    for (auto& v : scaled.data) v *= a;

    const auto base = extract_features(img, bank, 2);
    const auto big = extract_features(scaled, bank, 2);
    REQUIRE(base.size() == big.size());
    for (std::size_t i = 0; i < base.size(); ++i)
      CHECK(big[i] == doctest::Approx(a * base[i]).epsilon(1e-10));
  }

  TEST_CASE("strided convolution equals convolve-then-subsample bit for bit") {
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_int_distribution<int> size(8, 24);
      std::uniform_int_distribution<int> stride(1, 5);
      const RealImage img = testutil::random_real_image(rng, size(rng), size(rng));
      GaborKernelSpec spec = random_spec(rng);
      spec.half_window = std::min(spec.half_window, 3);
      const GaborKernel k = make_kernel(spec);
      const int rho = stride(rng);
      const auto strided = convolve_subsampled(img, k, rho);
      const RealImage full = convolve(img, k);
      std::size_t at = 0;
      for (int y = 0; y < img.height; y += rho)
        for (int x = 0; x < img.width; x += rho)
          CHECK(strided[at++] == full.at(x, y));
      CHECK(at == strided.size());
    }
  }

  TEST_CASE("subsampling is top-left anchored in filter-major order") {
    BankParams params;
    params.num_frequencies = 1;
    params.num_orientations = 2;
    const GaborBank bank = default_bank(params);
    std::mt19937_64 rng(25);
    const RealImage img = testutil::random_real_image(rng, 21, 17);
    const int rho = 4;
    const auto features = extract_features(img, bank, rho);

    const std::size_t cols = (21 + rho - 1) / rho;
    const std::size_t rows = (17 + rho - 1) / rho;
    REQUIRE(features.size() == bank.kernels.size() * cols * rows);
    for (std::size_t ki = 0; ki < bank.kernels.size(); ++ki) {
      const RealImage response = convolve(img, bank.kernels[ki]);
      std::size_t at = ki * cols * rows;
      for (int y = 0; y < img.height; y += rho)
        for (int x = 0; x < img.width; x += rho)
          CHECK(features[at++] == response.at(x, y));
    }
  }
}
