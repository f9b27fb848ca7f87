// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace manet::nn {

namespace {

constexpr std::array<char, 4> kTensorMagic{'M', 'A', 'N', 'T'};
constexpr std::array<char, 4> kCheckpointMagic{'M', 'A', 'N', 'C'};

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw FormatError("unexpected end of container");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  return value;
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  if (!in.read(got.data(), 4) || got != magic) {
    throw FormatError(std::string("bad magic, expected ") + std::string(magic.begin(), magic.end()));
  }
}

}  // namespace

template <typename T>
void write_tensor(std::ostream& out, const Tensor<T>& t, int ndim) {
  if (ndim < 1 || ndim > 4) throw ArgumentError("write_tensor: ndim must be in 1..4");
  const Shape& s = t.shape();
  const std::array<int, 4> ext{s.n, s.c, s.h, s.w};
  for (int i = 0; i < 4 - ndim; ++i) {
    if (ext[static_cast<std::size_t>(i)] != 1) {
      throw ArgumentError("write_tensor: cannot drop extent " + std::to_string(ext[static_cast<std::size_t>(i)]) +
                          " of shape " + s.str());
    }
  }
  out.write(kTensorMagic.data(), 4);
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype_of<T>()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(ndim));
  for (int i = 4 - ndim; i < 4; ++i) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ext[static_cast<std::size_t>(i)]));
  for (T v : t.data()) {
    if constexpr (std::is_same_v<T, float>) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw FormatError("write_tensor: stream failure");
}

DType peek_dtype(std::istream& in) {
  const auto start = in.tellg();
  expect_magic(in, kTensorMagic);
  get_le<std::uint32_t>(in);
  const auto dtype = get_le<std::uint8_t>(in);
  in.seekg(start);
  if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype));
  return static_cast<DType>(dtype);
}

template <typename T>
Tensor<T> read_tensor(std::istream& in) {
  expect_magic(in, kTensorMagic);
  const auto version = get_le<std::uint32_t>(in);
  if (version != kContainerVersion) throw FormatError("unsupported tensor version " + std::to_string(version));
  const auto dtype = get_le<std::uint8_t>(in);
  if (dtype > 1) throw FormatError("unknown dtype code " + std::to_string(dtype));
  const auto ndim = get_le<std::uint8_t>(in);
  if (ndim < 1 || ndim > 4) throw FormatError("unsupported ndim " + std::to_string(ndim));
  std::array<int, 4> ext{1, 1, 1, 1};
  for (int i = 4 - ndim; i < 4; ++i) {
    const auto e = get_le<std::uint32_t>(in);
    if (e > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) throw FormatError("extent overflow");
    ext[static_cast<std::size_t>(i)] = static_cast<int>(e);
  }
  const Shape shape{ext[0], ext[1], ext[2], ext[3]};
  std::vector<T> data(shape.numel());
  for (auto& v : data) {
    if (dtype == 0) {
      v = static_cast<T>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
    } else {
      v = static_cast<T>(std::bit_cast<double>(get_le<std::uint64_t>(in)));
    }
  }
  return Tensor<T>(shape, std::move(data));
}

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t, int ndim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, t, ndim);
}

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor<T>(in);
}

template <typename T>
void write_checkpoint(std::ostream& out, const TensorList<T>& records) {
  out.write(kCheckpointMagic.data(), 4);
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& [name, tensor] : records) {
    if (name.size() > 0xFFFF) throw ArgumentError("checkpoint record name too long: " + name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, tensor);
  }
  if (!out) throw FormatError("write_checkpoint: stream failure");
}

template <typename T>
TensorList<T> read_checkpoint(std::istream& in) {
  expect_magic(in, kCheckpointMagic);
  const auto version = get_le<std::uint32_t>(in);
  if (version != kContainerVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(in);
  TensorList<T> records;
  records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("truncated checkpoint record name");
    records.emplace_back(std::move(name), read_tensor<T>(in));
  }
  return records;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const TensorList<T>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, records);
}

template <typename T>
TensorList<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_checkpoint<T>(in);
}

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_key_values(in);
}

void save_key_values(const std::filesystem::path& path,
                     const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

#define MANET_INSTANTIATE_IO(T)                                                          \
  template void write_tensor<T>(std::ostream&, const Tensor<T>&, int);                   \
  template Tensor<T> read_tensor<T>(std::istream&);                                      \
  template void save_tensor<T>(const std::filesystem::path&, const Tensor<T>&, int);     \
  template Tensor<T> load_tensor<T>(const std::filesystem::path&);                       \
  template void write_checkpoint<T>(std::ostream&, const TensorList<T>&);                \
  template TensorList<T> read_checkpoint<T>(std::istream&);                              \
  template void save_checkpoint<T>(const std::filesystem::path&, const TensorList<T>&);  \
  template TensorList<T> load_checkpoint<T>(const std::filesystem::path&);

MANET_INSTANTIATE_IO(float)
MANET_INSTANTIATE_IO(double)

#undef MANET_INSTANTIATE_IO

}  // namespace manet::nn
