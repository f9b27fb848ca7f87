// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "manet/serialize.hpp"

namespace manet::degradation {

KernelMap::KernelMap(int size, int h, int w) : kernel_size(size), height(h), width(w) {
  if (size < 1 || size % 2 == 0) throw ArgumentError("kernel map: kernel size must be odd");
  if (h < 0 || w < 0) throw ArgumentError("kernel map: negative extent");
  taps.assign(static_cast<std::size_t>(taps_per_site()) * plane(), 0.0);
}

Kernel KernelMap::kernel_at(int i, int j) const {
  Kernel k{kernel_size, std::vector<double>(static_cast<std::size_t>(taps_per_site()))};
  for (int t = 0; t < taps_per_site(); ++t) k.taps[static_cast<std::size_t>(t)] = at(t, i, j);
  return k;
}

void KernelMap::set_kernel(int i, int j, const Kernel& k) {
  if (k.size != kernel_size) throw DimensionError("kernel map: kernel size mismatch");
  for (int t = 0; t < taps_per_site(); ++t) at(t, i, j) = k.taps[static_cast<std::size_t>(t)];
}

KernelMap KernelMap::broadcast(const Kernel& k, int h, int w) {
  KernelMap m(k.size, h, w);
  for (int t = 0; t < m.taps_per_site(); ++t) {
    std::fill(m.taps.begin() + static_cast<std::ptrdiff_t>(t * m.plane()),
              m.taps.begin() + static_cast<std::ptrdiff_t>((t + 1) * m.plane()), k.taps[static_cast<std::size_t>(t)]);
  }
  return m;
}

KernelMap KernelMap::from_field(const KernelField& field, int size) {
  KernelMap m(size, field.height, field.width);
  std::vector<Kernel> kernels;
  kernels.reserve(field.patches.size());
  for (const auto& p : field.patches) kernels.push_back(synth_kernel(p, size));
  for (int i = 0; i < field.height; ++i) {
    for (int j = 0; j < field.width; ++j) m.set_kernel(i, j, kernels[field.patch_index_of(i, j)]);
  }
  return m;
}

template <typename T>
KernelMap KernelMap::from_tensor(const nn::Tensor<T>& t, int n) {
  const nn::Shape& s = t.shape();
  const int size = static_cast<int>(std::lround(std::sqrt(static_cast<double>(s.c))));
  if (size * size != s.c) throw DimensionError("kernel map tensor channel count " + std::to_string(s.c) + " is not square");
  if (n < 0 || n >= s.n) throw DimensionError("kernel map: batch index out of range");
  KernelMap m(size, s.h, s.w);
  const T* src = t.plane(n, 0);
  for (std::size_t i = 0; i < m.taps.size(); ++i) m.taps[i] = static_cast<double>(src[i]);
  return m;
}

template <typename T>
nn::Tensor<T> KernelMap::to_tensor() const {
  nn::Tensor<T> t(nn::Shape{1, taps_per_site(), height, width});
  for (std::size_t i = 0; i < taps.size(); ++i) t[i] = static_cast<T>(taps[i]);
  return t;
}

template KernelMap KernelMap::from_tensor<float>(const nn::Tensor<float>&, int);
template KernelMap KernelMap::from_tensor<double>(const nn::Tensor<double>&, int);
template nn::Tensor<float> KernelMap::to_tensor<float>() const;
template nn::Tensor<double> KernelMap::to_tensor<double>() const;

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

namespace {

void check_fits(const Image& img, int size) {
  if (size > img.height || size > img.width) {
    throw ArgumentError("kernel of size " + std::to_string(size) + " larger than image " + img.extent_str());
  }
}

// Reflect-padded copy of one channel with `r` extra pixels on every side.
std::vector<double> padded_plane(const Image& img, int c, int r) {
  const int ph = img.height + 2 * r;
  const int pw = img.width + 2 * r;
  std::vector<double> out(static_cast<std::size_t>(ph) * pw);
  for (int i = 0; i < ph; ++i) {
    const int si = reflect_index(i - r, img.height);
    for (int j = 0; j < pw; ++j) {
      out[static_cast<std::size_t>(i) * pw + j] = img.at(c, si, reflect_index(j - r, img.width));
    }
  }
  return out;
}

// Correlation of one site: sum_{a,b} taps[a][b] * padded[i + a][j + b].
template <typename TapFn>
double correlate_site(const std::vector<double>& padded, int pw, int i, int j, int size, TapFn&& tap) {
  double acc = 0.0;
  for (int a = 0; a < size; ++a) {
    const double* row = padded.data() + static_cast<std::size_t>(i + a) * pw + j;
    for (int b = 0; b < size; ++b) acc += tap(a * size + b) * row[b];
  }
  return acc;
}

}  // namespace

Image blur_invariant(const Image& img, const Kernel& k) {
  check_fits(img, k.size);
  const int r = k.radius();
  // Convolution flips the kernel; correlate with the flipped taps.
  std::vector<double> flipped(k.taps.rbegin(), k.taps.rend());
  Image out(img.channels, img.height, img.width);
  out.role = img.role;
  out.scale = img.scale;
  const int pw = img.width + 2 * r;
  for (int c = 0; c < img.channels; ++c) {
    const auto padded = padded_plane(img, c, r);
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j) {
        out.at(c, i, j) = correlate_site(padded, pw, i, j, k.size, [&](int t) { return flipped[static_cast<std::size_t>(t)]; });
      }
    }
  }
  return out;
}

Image blur_variant(const Image& img, const KernelField& field, int kernel_size) {
  if (field.height != img.height || field.width != img.width) {
    throw DimensionError("kernel field extent " + std::to_string(field.height) + "x" + std::to_string(field.width) +
                         " does not match image " + img.extent_str());
  }
  check_fits(img, kernel_size);
  std::vector<Kernel> kernels;
  kernels.reserve(field.patches.size());
  for (const auto& p : field.patches) kernels.push_back(synth_kernel(p, kernel_size));
  const int r = kernel_size / 2;
  const int pw = img.width + 2 * r;
  Image out(img.channels, img.height, img.width);
  out.role = img.role;
  out.scale = img.scale;
  for (int c = 0; c < img.channels; ++c) {
    const auto padded = padded_plane(img, c, r);
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j) {
        const Kernel& k = kernels[field.patch_index_of(i, j)];
        out.at(c, i, j) = correlate_site(padded, pw, i, j, kernel_size, [&](int t) { return k.taps[static_cast<std::size_t>(t)]; });
      }
    }
  }
  return out;
}

Image blur_with_map(const Image& img, const KernelMap& map) {
  if (map.height != img.height || map.width != img.width) {
    throw DimensionError("kernel map extent " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                         " does not match image " + img.extent_str());
  }
  check_fits(img, map.kernel_size);
  const int r = map.kernel_size / 2;
  const int pw = img.width + 2 * r;
  Image out(img.channels, img.height, img.width);
  out.role = img.role;
  out.scale = img.scale;
  for (int c = 0; c < img.channels; ++c) {
    const auto padded = padded_plane(img, c, r);
    for (int i = 0; i < img.height; ++i) {
      for (int j = 0; j < img.width; ++j) {
        out.at(c, i, j) = correlate_site(padded, pw, i, j, map.kernel_size, [&](int t) { return map.at(t, i, j); });
      }
    }
  }
  return out;
}

Image decimate(const Image& img, int scale) {
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  if (img.height % scale != 0 || img.width % scale != 0) {
    throw ArgumentError("image extent " + img.extent_str() + " not divisible by scale " + std::to_string(scale));
  }
  Image out(img.channels, img.height / scale, img.width / scale);
  out.role = ImageRole::LR;
  out.scale = img.scale * scale;
  for (int c = 0; c < img.channels; ++c) {
    for (int i = 0; i < out.height; ++i) {
      for (int j = 0; j < out.width; ++j) out.at(c, i, j) = img.at(c, i * scale, j * scale);
    }
  }
  return out;
}

Image add_noise(const Image& img, double sigma, std::mt19937_64& rng) {
  if (!(sigma >= 0.0)) throw ArgumentError("noise level must be >= 0");
  if (sigma == 0.0) return img;
  std::normal_distribution<double> noise(0.0, sigma / 255.0);
  Image out = img;
  for (double& v : out.data) v += noise(rng);
  return out;
}

Degraded degrade(const Image& hr, const KernelField& field, const DegradationConfig& cfg) {
  if (cfg.scale < 1) throw ArgumentError("scale must be >= 1");
  if (hr.height % cfg.scale != 0 || hr.width % cfg.scale != 0) {
    throw ArgumentError("HR extent " + hr.extent_str() + " not divisible by scale " + std::to_string(cfg.scale));
  }
  std::mt19937_64 rng(cfg.seed);
  Degraded d;
  d.lr_clean = decimate(blur_variant(hr, field, cfg.kernel_size), cfg.scale);
  d.lr_clean.scale = cfg.scale;
  d.lr = add_noise(d.lr_clean, cfg.noise_sigma, rng);
  d.gt = KernelMap::from_field(field, cfg.kernel_size);
  return d;
}

void save_kernel_map(const std::filesystem::path& path, const KernelMap& map,
                     const std::vector<std::pair<std::string, std::string>>& meta) {
  nn::save_tensor(path, map.to_tensor<double>(), 3);
  auto kv = meta;
  kv.emplace_back("kernel_size", std::to_string(map.kernel_size));
  kv.emplace_back("height", std::to_string(map.height));
  kv.emplace_back("width", std::to_string(map.width));
  nn::save_key_values(path.string() + ".meta", kv);
}

KernelMap load_kernel_map(const std::filesystem::path& path) {
  return KernelMap::from_tensor(nn::load_tensor<double>(path));
}

void save_kernel_field(const std::filesystem::path& path, const KernelField& field) {
  nn::Tensor<double> t(nn::Shape{1, 3, field.rows, field.cols});
  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      const auto& p = field.patch(r, c);
      t.at(0, 0, r, c) = p.sigma1;
      t.at(0, 1, r, c) = p.sigma2;
      t.at(0, 2, r, c) = p.theta;
    }
  }
  nn::save_tensor(path, t, 3);
  nn::save_key_values(path.string() + ".meta", {{"field_type", std::to_string(field.field_type)},
                                                 {"s", std::to_string(field.scale)},
                                                 {"patch_size", std::to_string(field.patch_size)},
                                                 {"seed", std::to_string(field.seed)},
                                                 {"height", std::to_string(field.height)},
                                                 {"width", std::to_string(field.width)}});
}

KernelField load_kernel_field(const std::filesystem::path& path) {
  const auto t = nn::load_tensor<double>(path);
  const auto meta = nn::load_key_values(path.string() + ".meta");
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError(path.string() + ".meta: missing key " + key);
    return it->second;
  };
  KernelField f;
  f.field_type = std::stoi(get("field_type"));
  f.scale = std::stoi(get("s"));
  f.patch_size = std::stoi(get("patch_size"));
  f.seed = std::stoull(get("seed"));
  f.height = std::stoi(get("height"));
  f.width = std::stoi(get("width"));
  f.rows = t.shape().h;
  f.cols = t.shape().w;
  if (t.shape().c != 3 || f.rows != (f.height + f.patch_size - 1) / f.patch_size ||
      f.cols != (f.width + f.patch_size - 1) / f.patch_size) {
    throw FormatError(path.string() + ": field tensor does not match its sidecar");
  }
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      f.patches.push_back(KernelParams::make(t.at(0, 0, r, c), t.at(0, 1, r, c), t.at(0, 2, r, c)));
    }
  }
  return f;
}

}  // namespace manet::degradation
