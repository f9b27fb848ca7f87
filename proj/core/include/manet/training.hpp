// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Data synthesis, the kernel loss, a resumable training loop and the
// LR-reconstruction evaluation harness.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "manet/degrade.hpp"
#include "manet/image.hpp"
#include "manet/kernel.hpp"
#include "manet/network.hpp"
#include "manet/optim.hpp"
#include "manet/serialize.hpp"

namespace manet::training {

namespace dg = manet::degradation;

/// Seed of the generator for sample `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// ---------------------------------------------------------------------------
// Images.

/// Piecewise-constant star polygons, oriented half-plane edges and crosses
/// over a smooth gradient. `density` scales the number of shapes per 48x48
/// area; any density > 0 places at least one high-contrast shape inside the
/// image.
dg::Image procedural_image(int height, int width, std::uint64_t seed, double density = 1.0);

class DatasetSource {
 public:
  /// Image `index` is procedural_image(extent, extent, derive_seed(seed, index)).
  /// With `single` every index returns image 0.
  static DatasetSource procedural(std::uint64_t seed, int extent, double density = 1.0, bool single = false);
  /// Every *.pgm in `dir`, sorted by file name, converted to gray. Indices
  /// cycle through the files with a fresh permutation per pass.
  static DatasetSource directory(const std::filesystem::path& dir, std::uint64_t seed);
  /// Fixed in-memory images, in order, without reshuffling.
  static DatasetSource images(std::vector<dg::Image> images);

  bool is_procedural() const { return procedural_; }
  /// Distinct images available; 0 means unbounded.
  std::size_t size() const { return procedural_ ? (single_ ? 1 : 0) : images_.size(); }
  dg::Image image(std::uint64_t index) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  bool procedural_ = true;
  bool single_ = false;
  std::uint64_t seed_ = 0;
  int extent_ = 192;
  double density_ = 1.0;
  bool shuffle_ = false;
  std::vector<dg::Image> images_;
  std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Configuration.

struct TrainConfig {
  int scale = 4;
  int crop = 192;
  int batch = 4;
  int steps = 1000;
  double learning_rate = 1e-4;
  std::vector<int> lr_halve_at;  // steps after which the rate halves
  double noise_max = 0.0;        // per-sample sigma_n ~ U(0, noise_max), 0..255 units
  std::uint64_t seed = 0;
  int checkpoint_every = 0;      // 0: final checkpoint only
  int log_every = 1;
  int in_channels = 1;
  std::array<int, 3> channels{128, 256, 128};
  int splits = 2;
  int kernel_size = dg::kDefaultKernelSize;
  bool augment = true;
  std::optional<dg::KernelParams> fixed_kernel;
  bool double_precision = false;
  std::string dataset_dir;       // empty: procedural generator
  double density = 1.0;
  bool single_image = false;

  void validate() const;
  model::MANetConfig net_config() const;
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  /// Unknown keys raise ArgumentError.
  static TrainConfig from_key_values(const nn::KeyValues& kv);
  DatasetSource make_source() const;
};

// ---------------------------------------------------------------------------
// Samples and loss.

struct TrainSample {
  dg::Image lr;
  dg::Image lr_clean;
  dg::Kernel kernel;  // the ground-truth map broadcasts this kernel
  dg::KernelParams params;
  double noise_sigma = 0.0;
  int dihedral = 0;   // 0..7
};

/// Applies one of the 8 rotations/flips: bit 0 transposes, bits 1-2 select a
/// quarter-turn count after it.
dg::Image dihedral(const dg::Image& img, int variant);

/// crop -> dihedral -> blur -> decimate -> noise, all drawn from
/// derive_seed(cfg.seed, index).
TrainSample make_sample(const DatasetSource& source, const TrainConfig& cfg, std::uint64_t index);

template <typename T>
struct Batch {
  nn::Tensor<T> lr;  // N x C x h x w
  nn::Tensor<T> gt;  // N x taps x H x W
  std::vector<TrainSample> samples;
};

/// Samples batch * step .. batch * step + batch - 1.
template <typename T>
Batch<T> make_batch(const DatasetSource& source, const TrainConfig& cfg, std::uint64_t step);

/// sum |K - G| / (N H W): the tap sum is the L1 norm, not averaged.
template <typename T>
nn::Var<T> kernel_loss(const nn::Var<T>& prediction, const nn::Var<T>& target);

// ---------------------------------------------------------------------------
// Training loop.

struct LogEntry {
  std::int64_t step = 0;
  double loss = 0.0;
  double seconds = 0.0;
};

template <typename T>
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);
  Trainer(TrainConfig cfg, DatasetSource source);

  const TrainConfig& config() const { return cfg_; }
  model::MANet<T>& net() { return net_; }
  const nn::AdamState<T>& optimizer() const { return adam_; }
  std::int64_t step() const { return step_; }

  /// One optimizer step on batch `step()`; returns the batch loss. A
  /// non-finite loss raises NumericError naming the step and batch seeds.
  double train_step();

  /// Runs until cfg.steps, appending to `<out>/metrics.tsv`, writing
  /// checkpoints at the cadence and `<out>/final.manc`. The resolved config
  /// is written to `<out>/config.txt` on the first call.
  std::vector<LogEntry> run(const std::filesystem::path& out_dir,
                            const std::function<void(const LogEntry&)>& on_log = {});

  nn::TensorList<T> state() const;
  void save(const std::filesystem::path& path) const;
  /// Restores network, optimizer and step; throws StateError on mismatch.
  void resume(const std::filesystem::path& path);

 private:
  double current_lr() const;

  TrainConfig cfg_;
  DatasetSource source_;
  model::MANet<T> net_;
  nn::AdamState<T> adam_;
  std::int64_t step_ = 0;
  std::chrono::steady_clock::time_point started_;
};

/// Smoothed loss: mean of the last `window` entries ending at `index`.
double smoothed_loss(const std::vector<LogEntry>& log, std::size_t index, std::size_t window);

// ---------------------------------------------------------------------------
// Evaluation.

enum class EvalMode { invariant, variant };

struct EvalOptions {
  EvalMode mode = EvalMode::invariant;
  int scale = 4;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int patch_size = 40;
  std::vector<int> field_types{1, 2, 3, 4, 5};
  bool oracle_gt = false;  // score the ground-truth map instead of the network
};

struct EvalRow {
  std::string image;
  std::string degradation;  // "s1=..,s2=..,theta=.." or "field=N"
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr() const;
  double mean_ssim() const;
  void write_text(std::ostream& out) const;
  void write_key_values(std::ostream& out) const;
};

/// `net` may be null when options.oracle_gt is set.
template <typename T>
EvalReport evaluate(model::MANet<T>* net, const std::vector<std::pair<std::string, dg::Image>>& images,
                    const EvalOptions& options);

}  // namespace manet::training
