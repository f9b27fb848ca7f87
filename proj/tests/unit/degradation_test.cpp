// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <fstream>
#include <map>
#include <set>

#include "manet/degrade.hpp"
#include "manet/metrics.hpp"
#include "oracles.hpp"

namespace dg = manet::degradation;
constexpr double kPi = std::numbers::pi;

namespace {

dg::Image random_image(int h, int w, std::uint64_t seed, int channels = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  dg::Image img(channels, h, w);
  for (double& v : img.data) v = d(rng);
  return img;
}

double max_abs_diff(const dg::Image& a, const dg::Image& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double max_tap_diff(const dg::Kernel& a, const dg::Kernel& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.taps.size(); ++i) m = std::max(m, std::abs(a.taps[i] - b.taps[i]));
  return m;
}

// Discrete second-moment principal direction computed directly.
double principal_angle(const dg::Kernel& k) {
  const int r = k.size / 2;
  double xx = 0, yy = 0, xy = 0;
  for (int i = 0; i < k.size; ++i)
    for (int j = 0; j < k.size; ++j) {
      xx += k.at(i, j) * (j - r) * (j - r);
      yy += k.at(i, j) * (i - r) * (i - r);
      xy += k.at(i, j) * (j - r) * (i - r);
    }
  // Largest eigenvector of [[xx, xy], [xy, yy]].
  const double lambda = 0.5 * (xx + yy) + std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
  return std::atan2(lambda - xx, xy);
}

}  // namespace

TEST(SynthKernel, IsotropicIgnoresAngleAndRotation) {
  const auto base = dg::synth_kernel(dg::KernelParams::make(1, 1, 0));
  for (double th : {0.3, 1.0, 2.5}) EXPECT_LT(max_tap_diff(base, dg::synth_kernel(dg::KernelParams::make(1, 1, th))), 1e-15);
  const int n = base.size;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) EXPECT_NEAR(base.at(i, j), base.at(j, n - 1 - i), 1e-15);
}

TEST(SynthKernel, FigureFourKernelAlongDiagonal) {
  const auto k = dg::synth_kernel(dg::KernelParams::make(6, 1, kPi / 4));
  const double angle = principal_angle(k);
  double diff = std::fmod(std::abs(angle - kPi / 4), kPi);
  diff = std::min(diff, kPi - diff);
  EXPECT_LT(diff, kPi / 180.0);
  const auto m = dg::kernel_moments(k);
  EXPECT_NEAR(m.angle, kPi / 4, kPi / 180.0);
  EXPECT_GT(m.major, 4 * m.minor);
}

TEST(SynthKernel, AxisSwapIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = dg::sample_training_params(rng, 4);
    const auto a = dg::synth_kernel(p);
    const auto b = dg::synth_kernel(dg::KernelParams{p.sigma2, p.sigma1, p.theta + kPi / 2});
    EXPECT_LT(max_tap_diff(a, b), 1e-12);
  }
}

TEST(SynthKernel, ValidityAndErrors) {
  const auto k = dg::synth_kernel(dg::KernelParams::make(3, 0.7, 1.1), 21);
  double s = 0;
  for (double t : k.taps) {
    EXPECT_GE(t, 0.0);
    s += t;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (std::size_t i = 0; i < k.taps.size(); ++i) EXPECT_NEAR(k.taps[i], k.taps[k.taps.size() - 1 - i], 1e-9);
  EXPECT_THROW(dg::KernelParams::make(0, 1, 0), manet::ArgumentError);
  EXPECT_THROW(dg::KernelParams::make(1, -1, 0), manet::ArgumentError);
  EXPECT_THROW(dg::synth_kernel(dg::KernelParams{}, 20), manet::ArgumentError);
  EXPECT_NEAR(dg::KernelParams::make(1, 2, kPi).theta, 0.0, 1e-15);
  EXPECT_NEAR(dg::KernelParams::make(1, 2, -kPi / 4).theta, 3 * kPi / 4, 1e-15);
}

TEST(TrainingParams, RangeDeterminismAndMean) {
  std::mt19937_64 a(9), b(9);
  double mean = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto p = dg::sample_training_params(a, 4);
    const auto q = dg::sample_training_params(b, 4);
    ASSERT_EQ(p.sigma1, q.sigma1);
    ASSERT_EQ(p.theta, q.theta);
    ASSERT_GE(p.sigma1, 0.7);
    ASSERT_LE(p.sigma1, 10.0);
    ASSERT_GE(p.sigma2, 0.7);
    ASSERT_LE(p.sigma2, 10.0);
    ASSERT_GE(p.theta, 0.0);
    ASSERT_LT(p.theta, kPi);
    mean += p.sigma1;
  }
  mean /= n;
  const double expect = (0.175 * 4 + 2.5 * 4) / 2;
  EXPECT_LT(std::abs(mean - expect) / expect, 0.01);
}

TEST(EvalGrid, NineDistinctKernels) {
  const std::map<int, std::set<double>> widths{{2, {1, 3, 5}}, {3, {1, 4, 7}}, {4, {1, 5, 9}}};
  for (const auto& [s, allowed] : widths) {
    const auto grid = dg::eval_kernel_grid(s);
    ASSERT_EQ(grid.size(), 9u);
    int iso = 0;
    for (const auto& p : grid) {
      EXPECT_TRUE(allowed.count(p.sigma1));
      EXPECT_TRUE(allowed.count(p.sigma2));
      if (p.sigma1 == p.sigma2) ++iso;
    }
    EXPECT_EQ(iso, 3);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t j = i + 1; j < grid.size(); ++j)
        EXPECT_GT(max_tap_diff(dg::synth_kernel(grid[i]), dg::synth_kernel(grid[j])), 1e-6);
  }
  EXPECT_THROW(dg::eval_kernel_grid(5), manet::ArgumentError);
}

TEST(KernelField, TypeFormulas) {
  std::mt19937_64 rng(1);
  const auto [a, b] = dg::field_widths(4);
  EXPECT_DOUBLE_EQ(a, 9.3);
  EXPECT_DOUBLE_EQ(b, 0.7);
  const auto f1 = dg::make_kernel_field(1, 200, 200, 40, 4, rng);
  EXPECT_EQ(f1.rows, 5);
  EXPECT_EQ(f1.cols, 5);
  for (int r = 0; r < f1.rows; ++r) {
    for (int c = 0; c < f1.cols; ++c) {
      EXPECT_DOUBLE_EQ(f1.patch(r, c).sigma1, a + b);
      EXPECT_DOUBLE_EQ(f1.patch(r, c).sigma2, a * c / 4.0 + b);
      if (c > 0) EXPECT_GT(f1.patch(r, c).sigma2, f1.patch(r, c - 1).sigma2);
    }
  }
  const auto f3 = dg::make_kernel_field(3, 120, 200, 40, 4, rng);
  for (int r = 0; r < f3.rows; ++r) {
    const auto k0 = dg::synth_kernel(f3.patch(r, 0));
    const auto k1 = dg::synth_kernel(f3.patch(r, f3.cols - 1));
    EXPECT_LT(max_tap_diff(k0, k1), 1e-12);
  }
  EXPECT_THROW(dg::make_kernel_field(6, 40, 40, 40, 4, rng), manet::ArgumentError);
  EXPECT_THROW(dg::make_kernel_field(0, 40, 40, 40, 4, rng), manet::ArgumentError);
}

TEST(KernelField, RandomTypeIsSeeded) {
  std::mt19937_64 a(7), b(7);
  const auto f = dg::make_kernel_field(5, 100, 90, 40, 3, a);
  const auto g = dg::make_kernel_field(5, 100, 90, 40, 3, b);
  ASSERT_EQ(f.patches.size(), 9u);
  const auto [ra, rb] = dg::field_widths(3);
  for (std::size_t i = 0; i < f.patches.size(); ++i) {
    EXPECT_EQ(f.patches[i].sigma1, g.patches[i].sigma1);
    EXPECT_EQ(f.patches[i].theta, g.patches[i].theta);
    EXPECT_GE(f.patches[i].sigma1, rb);
    EXPECT_LE(f.patches[i].sigma1, ra + rb);
  }
  // Every pixel maps to one patch, partial patches included.
  EXPECT_EQ(f.patch_index_of(99, 89), 8u);
}

TEST(BlurInvariant, DeltaConstantAndOracle) {
  const auto img = random_image(16, 16, 1);
  dg::Kernel delta{5, std::vector<double>(25, 0.0)};
  delta.taps[12] = 1.0;
  EXPECT_EQ(max_abs_diff(dg::blur_invariant(img, delta), img), 0.0);

  const dg::Image flat(1, 20, 20, 0.37);
  const auto k = dg::synth_kernel(dg::KernelParams::make(2, 1, 0.4), 11);
  EXPECT_LT(max_abs_diff(dg::blur_invariant(flat, k), flat), 1e-15);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  dg::Kernel rk{7, std::vector<double>(49)};
  for (double& t : rk.taps) t = u(rng);
  EXPECT_LT(max_abs_diff(dg::blur_invariant(img, rk), oracle::convolve(img, rk)), 1e-10);

  EXPECT_THROW(dg::blur_invariant(random_image(10, 30, 3), dg::synth_kernel({}, 21)), manet::ArgumentError);
}

TEST(BlurVariant, DegeneratesToInvariant) {
  for (int t = 0; t < 5; ++t) {
    const auto img = random_image(24, 24, 10 + t);
    const auto p = dg::KernelParams::make(1.5 + t, 0.8, 0.3 * t);
    const auto field = dg::constant_field(p, 24, 24, 8);
    EXPECT_LT(max_abs_diff(dg::blur_variant(img, field), dg::blur_invariant(img, dg::synth_kernel(p))), 1e-10);
  }
}

TEST(BlurVariant, ConstantImageAndTwoPatchOracle) {
  std::mt19937_64 rng(5);
  const auto field = dg::make_kernel_field(5, 30, 30, 20, 2, rng);
  const dg::Image flat(1, 30, 30, 0.6);
  EXPECT_LT(max_abs_diff(dg::blur_variant(flat, field), flat), 1e-14);

  const auto img = random_image(22, 40, 6);
  dg::KernelField two = dg::constant_field(dg::KernelParams::make(1, 1, 0), 22, 40, 22, 1);
  ASSERT_EQ(two.patches.size(), 2u);
  two.patches[1] = dg::KernelParams::make(4, 1, 0.9);
  std::vector<dg::Kernel> kernels{dg::synth_kernel(two.patches[0]), dg::synth_kernel(two.patches[1])};
  std::vector<int> owner(22 * 40);
  for (int i = 0; i < 22; ++i)
    for (int j = 0; j < 40; ++j) owner[static_cast<std::size_t>(i * 40 + j)] = j < 22 ? 0 : 1;
  EXPECT_LT(max_abs_diff(dg::blur_variant(img, two), oracle::correlate_per_pixel(img, kernels, owner)), 1e-10);

  EXPECT_THROW(dg::blur_variant(random_image(22, 41, 1), two), manet::DimensionError);
}

TEST(BlurWithMap, MatchesBlurVariant) {
  std::mt19937_64 rng(8);
  const auto field = dg::make_kernel_field(4, 48, 48, 16, 2, rng);
  const auto img = random_image(48, 48, 9);
  const auto map = dg::KernelMap::from_field(field);
  EXPECT_LT(max_abs_diff(dg::blur_with_map(img, map), dg::blur_variant(img, field)), 1e-12);
}

TEST(Decimate, KeepsTopLeftAndErrors) {
  const dg::Image flat(1, 12, 12, 0.25);
  const auto d = dg::decimate(flat, 3);
  EXPECT_EQ(d.height, 4);
  for (double v : d.data) EXPECT_EQ(v, 0.25);
  const auto img = random_image(8, 8, 4);
  const auto e = dg::decimate(img, 2);
  EXPECT_EQ(e.at(0, 1, 2), img.at(0, 2, 4));
  EXPECT_EQ(e.role, dg::ImageRole::LR);
  EXPECT_THROW(dg::decimate(img, 3), manet::ArgumentError);
}

TEST(Noise, ZeroIsIdentityAndStdMatches) {
  const auto img = random_image(64, 64, 11);
  std::mt19937_64 rng(1);
  EXPECT_EQ(max_abs_diff(dg::add_noise(img, 0.0, rng), img), 0.0);
  const dg::Image flat(1, 256, 256, 0.5);
  const auto noisy = dg::add_noise(flat, 10.0, rng);
  double var = 0;
  for (double v : noisy.data) var += (v - 0.5) * (v - 0.5);
  var /= static_cast<double>(noisy.data.size());
  EXPECT_NEAR(std::sqrt(var), 10.0 / 255.0, 0.002);
  EXPECT_THROW(dg::add_noise(img, -1, rng), manet::ArgumentError);
}

TEST(Degrade, ShapesAndDeterminism) {
  const auto hr = random_image(192, 192, 12);
  std::mt19937_64 rng(3);
  const auto field = dg::make_kernel_field(5, 192, 192, 40, 4, rng);
  dg::DegradationConfig cfg{4, 5.0, 77};
  const auto a = dg::degrade(hr, field, cfg);
  const auto b = dg::degrade(hr, field, cfg);
  EXPECT_EQ(a.lr.height, 48);
  EXPECT_EQ(a.lr.width, 48);
  EXPECT_EQ(a.gt.taps_per_site(), 441);
  EXPECT_EQ(a.gt.height, 192);
  EXPECT_EQ(a.gt.width, 192);
  EXPECT_EQ(max_abs_diff(a.lr, b.lr), 0.0);
  EXPECT_GT(max_abs_diff(a.lr, a.lr_clean), 0.0);
  EXPECT_THROW(dg::degrade(random_image(190, 192, 1), dg::constant_field({}, 190, 192), cfg), manet::ArgumentError);
}

TEST(Metrics, PsnrCasesAndOracle) {
  const auto a = random_image(32, 32, 13);
  EXPECT_EQ(dg::psnr(a, a), 100.0);
  EXPECT_NEAR(dg::ssim(a, a), 1.0, 1e-12);
  dg::Image b = a;
  for (double& v : b.data) v += 0.1;
  EXPECT_NEAR(dg::psnr(a, b), 20.0, 1e-9);
  const auto c = random_image(32, 32, 14);
  EXPECT_NEAR(dg::psnr(a, c), oracle::psnr(a, c), 1e-6);
  EXPECT_NEAR(dg::ssim(a, c), oracle::ssim(a, c), 1e-6);
  dg::Image d = a;
  for (std::size_t i = 0; i < d.data.size(); i += 3) d.data[i] *= 0.8;
  EXPECT_NEAR(dg::ssim(a, d), oracle::ssim(a, d), 1e-6);
  EXPECT_THROW(dg::psnr(a, random_image(32, 31, 1)), manet::DimensionError);
  EXPECT_THROW(dg::ssim(a, random_image(31, 32, 1)), manet::DimensionError);
}

TEST(Metrics, ReblurMatchesFullPipeline) {
  const auto hr = random_image(64, 64, 15);
  std::mt19937_64 rng(1);
  const auto field = dg::make_kernel_field(2, 64, 64, 20, 4, rng);
  const auto map = dg::KernelMap::from_field(field);
  EXPECT_LT(max_abs_diff(dg::reblur_decimate(hr, map, 4), dg::decimate(dg::blur_variant(hr, field), 4)), 1e-12);
}

TEST(Metrics, FidelityWindowCropsElevenPixels) {
  const auto w = dg::fidelity_window(192, 192, 4, 11);
  EXPECT_EQ(w.top, 3);  // 3 * 4 = 12 >= 11
  EXPECT_EQ(w.top + w.height - 1, 45);  // 45 * 4 = 180 <= 191 - 11
  EXPECT_EQ(w.width, 43);
}

TEST(Metrics, LrFidelityOrdering) {
  // Structured image: bright rectangle and a diagonal edge.
  dg::Image hr(1, 96, 96, 0.2);
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < 96; ++j) {
      if (i > 30 && i < 60 && j > 20 && j < 70) hr.at(0, i, j) = 0.9;
      if (i + j > 130) hr.at(0, i, j) = 0.6;
    }
  std::mt19937_64 rng(4);
  const auto field = dg::make_kernel_field(4, 96, 96, 40, 4, rng);
  const auto d = dg::degrade(hr, field, {4, 0.0, 1});
  const auto exact = dg::lr_fidelity(hr, d.lr_clean, d.gt, 4);
  EXPECT_EQ(exact.psnr, 100.0);
  EXPECT_NEAR(exact.ssim, 1.0, 1e-9);
  const dg::Kernel uniform{21, std::vector<double>(441, 1.0 / 441.0)};
  const auto flat = dg::lr_fidelity(hr, d.lr_clean, dg::KernelMap::broadcast(uniform, 96, 96), 4);
  EXPECT_LT(flat.psnr, exact.psnr);
  EXPECT_LT(flat.psnr, 60.0);
}

TEST(Image, PgmRoundTripAndRejects) {
  const auto dir = std::filesystem::temp_directory_path() / "manet_pgm_test";
  std::filesystem::create_directories(dir);
  dg::Image img(1, 5, 7);
  for (int i = 0; i < 35; ++i) img.data[static_cast<std::size_t>(i)] = i / 34.0;
  dg::write_pgm(dir / "a.pgm", img);
  const auto back = dg::read_pgm(dir / "a.pgm");
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.width, 7);
  EXPECT_LT(max_abs_diff(back, img), 0.5 / 255 + 1e-12);
  {
    std::ofstream f(dir / "bad.pgm");
    f << "P2\n1 1\n255\n0\n";
  }
  EXPECT_THROW(dg::read_pgm(dir / "bad.pgm"), manet::FormatError);
  EXPECT_THROW(dg::read_pgm(dir / "missing.pgm"), manet::FormatError);
}

TEST(KernelIo, MapAndFieldRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "manet_io_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(2);
  auto field = dg::make_kernel_field(5, 50, 70, 20, 3, rng);
  field.seed = 99;
  dg::save_kernel_field(dir / "f.mant", field);
  const auto f2 = dg::load_kernel_field(dir / "f.mant");
  EXPECT_EQ(f2.field_type, 5);
  EXPECT_EQ(f2.seed, 99u);
  ASSERT_EQ(f2.patches.size(), field.patches.size());
  for (std::size_t i = 0; i < field.patches.size(); ++i) EXPECT_EQ(f2.patches[i].sigma2, field.patches[i].sigma2);

  const auto map = dg::KernelMap::from_field(field, 9);
  dg::save_kernel_map(dir / "m.mant", map, {{"s", "3"}});
  const auto m2 = dg::load_kernel_map(dir / "m.mant");
  EXPECT_EQ(m2.kernel_size, 9);
  EXPECT_EQ(m2.taps, map.taps);
  EXPECT_TRUE(std::filesystem::exists(dir / "m.mant.meta"));
}
