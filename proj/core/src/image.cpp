// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace manet::degradation {

Image::Image(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
  if (c < 1 || h < 0 || w < 0) throw ArgumentError("invalid image extent");
  data.assign(static_cast<std::size_t>(c) * plane(), fill);
}

std::string Image::extent_str() const {
  return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
}

Image to_gray(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw ArgumentError("to_gray expects 1 or 3 channels");
  Image out(1, img.height, img.width);
  out.role = img.role;
  out.scale = img.scale;
  for (std::size_t p = 0; p < img.plane(); ++p) {
    out.data[p] = 0.299 * img.data[p] + 0.587 * img.data[img.plane() + p] + 0.114 * img.data[2 * img.plane() + p];
  }
  return out;
}

Image crop(const Image& img, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > img.height || left + width > img.width) {
    throw DimensionError("crop window does not fit image " + img.extent_str());
  }
  Image out(img.channels, height, width);
  out.role = img.role;
  out.scale = img.scale;
  for (int c = 0; c < img.channels; ++c) {
    for (int i = 0; i < height; ++i) {
      for (int j = 0; j < width; ++j) out.at(c, i, j) = img.at(c, top + i, left + j);
    }
  }
  return out;
}

Image crop_to_multiple(const Image& img, int multiple) {
  if (multiple < 1) throw ArgumentError("crop multiple must be positive");
  const int h = img.height / multiple * multiple;
  const int w = img.width / multiple * multiple;
  if (h == 0 || w == 0) throw DimensionError("image " + img.extent_str() + " smaller than " + std::to_string(multiple));
  if (h == img.height && w == img.width) return img;
  return crop(img, 0, 0, h, w);
}

namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (next_token(in) != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed PGM header");
  }
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255) {
    throw FormatError(path.string() + ": unsupported PGM header (8-bit only)");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError(path.string() + ": truncated PGM payload");
  }
  Image img(1, h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = static_cast<double>(bytes[i]) / maxval;
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  const Image gray = img.channels == 1 ? img : to_gray(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "P5\n" << gray.width << ' ' << gray.height << "\n255\n";
  std::vector<unsigned char> bytes(gray.plane());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(gray.data[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

template <typename T>
nn::Tensor<T> to_tensor(const Image& img) {
  nn::Tensor<T> t(nn::Shape{1, img.channels, img.height, img.width});
  for (std::size_t i = 0; i < img.data.size(); ++i) t[i] = static_cast<T>(img.data[i]);
  return t;
}

template <typename T>
Image from_tensor(const nn::Tensor<T>& t, int n) {
  const nn::Shape& s = t.shape();
  if (n < 0 || n >= s.n) throw DimensionError("batch index out of range");
  Image img(s.c, s.h, s.w);
  const T* src = t.plane(n, 0);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(src[i]);
  return img;
}

template nn::Tensor<float> to_tensor<float>(const Image&);
template nn::Tensor<double> to_tensor<double>(const Image&);
template Image from_tensor<float>(const nn::Tensor<float>&, int);
template Image from_tensor<double>(const nn::Tensor<double>&, int);

}  // namespace manet::degradation
