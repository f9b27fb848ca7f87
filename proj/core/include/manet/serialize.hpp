// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary containers.
//
// Tensor ("MANT"):  magic "MANT" | u32 version = 1 | u8 dtype (0 f32, 1 f64)
//                   | u8 ndim | ndim x u32 extents | little-endian payload.
// Checkpoint ("MANC"): magic "MANC" | u32 version = 1 | u32 count
//                   | count x (u16 name length | UTF-8 name | tensor container).
//
// Tensors are always 4-D in memory; files may carry 1 to 4 extents, which are
// right-aligned onto (n, c, h, w) when read back.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "manet/tensor.hpp"

namespace manet::nn {

inline constexpr std::uint32_t kContainerVersion = 1;

/// Writes `t` with `ndim` extents (trailing dims of the 4-D shape). Leading
/// extents that are dropped must be 1.
template <typename T>
void write_tensor(std::ostream& out, const Tensor<T>& t, int ndim = 4);

/// Reads a container and converts its payload to T.
template <typename T>
Tensor<T> read_tensor(std::istream& in);

/// DType recorded in the next container without consuming it.
DType peek_dtype(std::istream& in);

template <typename T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t, int ndim = 4);

template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path);

/// Named tensors in record order.
template <typename T>
using TensorList = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
void write_checkpoint(std::ostream& out, const TensorList<T>& records);

template <typename T>
TensorList<T> read_checkpoint(std::istream& in);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const TensorList<T>& records);

template <typename T>
TensorList<T> load_checkpoint(const std::filesystem::path& path);

/// Plain-text key=value file. `#` starts a comment; blank lines are skipped.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::filesystem::path& path);
void save_key_values(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace manet::nn
