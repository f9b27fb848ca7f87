// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "manet/analysis.hpp"
#include "manet/metrics.hpp"
#include "manet/ops.hpp"

namespace manet::training {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

// ---------------------------------------------------------------------------

namespace {

struct Polygon {
  std::vector<std::pair<double, double>> pts;  // (row, col)
  double value;

  bool contains(double r, double c) const {
    bool inside = false;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
      const auto [ri, ci] = pts[i];
      const auto [rj, cj] = pts[j];
      if ((ri > r) != (rj > r) && c < (cj - ci) * (r - ri) / (rj - ri) + ci) inside = !inside;
    }
    return inside;
  }
};

}  // namespace

dg::Image procedural_image(int height, int width, std::uint64_t seed, double density) {
  if (height < 1 || width < 1) throw ArgumentError("procedural image extent must be positive");
  if (density < 0.0) throw ArgumentError("structure density must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  dg::Image img(1, height, width);

  // Smooth background.
  const double base = 0.3 + 0.4 * unit(rng);
  const double gr = (unit(rng) - 0.5) * 0.3 / height;
  const double gc = (unit(rng) - 0.5) * 0.3 / width;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) img.at(0, i, j) = base + gr * (i - height / 2.0) + gc * (j - width / 2.0);
  }
  if (density == 0.0) return img;

  const int count = std::max(1, static_cast<int>(std::lround(density * height * width / (48.0 * 48.0))));
  const double extent = std::min(height, width);
  auto contrasting = [&](double under) {
    // At least 0.25 away from the value underneath, kept inside [0.05, 0.95].
    const double delta = 0.25 + 0.35 * unit(rng);
    return under > 0.5 ? std::max(0.05, under - delta) : std::min(0.95, under + delta);
  };

  for (int n = 0; n < count; ++n) {
    const int kind = n == 0 ? 0 : static_cast<int>(unit(rng) * 3.0);
    const double cr = unit(rng) * (height - 1);
    const double cc = unit(rng) * (width - 1);
    const double under = img.at(0, static_cast<int>(cr), static_cast<int>(cc));
    const double value = contrasting(under);
    if (kind == 0) {
      // Star-shaped polygon around (cr, cc).
      const int verts = 3 + static_cast<int>(unit(rng) * 5.0);
      const double radius = std::max(6.0, extent * (0.08 + 0.2 * unit(rng)));
      // Jittered, evenly spaced angles keep the centre inside the polygon.
      std::vector<double> angles(static_cast<std::size_t>(verts));
      for (int v = 0; v < verts; ++v) angles[v] = (v + 0.6 * unit(rng)) * 2.0 * std::numbers::pi / verts;
      Polygon poly{{}, value};
      for (double a : angles) {
        const double r = radius * (0.5 + 0.5 * unit(rng));
        poly.pts.emplace_back(cr + r * std::sin(a), cc + r * std::cos(a));
      }
      for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
          if (poly.contains(i + 0.5, j + 0.5)) img.at(0, i, j) = value;
        }
      }
    } else if (kind == 1) {
      // Oriented edge through (cr, cc), limited to a disc.
      const double a = unit(rng) * std::numbers::pi;
      const double radius = std::max(8.0, extent * (0.15 + 0.25 * unit(rng)));
      const double nr = std::sin(a);
      const double nc = std::cos(a);
      for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
          const double dr = i - cr;
          const double dc = j - cc;
          if (dr * dr + dc * dc <= radius * radius && dr * nr + dc * nc >= 0.0) img.at(0, i, j) = value;
        }
      }
    } else {
      // Corner cross: two bars meeting at (cr, cc).
      const double half = 1.0 + unit(rng) * 3.0;
      const double len = std::max(8.0, extent * (0.1 + 0.25 * unit(rng)));
      for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
          const double dr = std::abs(i - cr);
          const double dc = std::abs(j - cc);
          if ((dr <= half && dc <= len) || (dc <= half && dr <= len)) img.at(0, i, j) = value;
        }
      }
    }
  }
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

DatasetSource DatasetSource::procedural(std::uint64_t seed, int extent, double density, bool single) {
  if (extent < 1) throw ArgumentError("procedural extent must be positive");
  DatasetSource s;
  s.procedural_ = true;
  s.seed_ = seed;
  s.extent_ = extent;
  s.density_ = density;
  s.single_ = single;
  return s;
}

DatasetSource DatasetSource::directory(const std::filesystem::path& dir, std::uint64_t seed) {
  if (!std::filesystem::is_directory(dir)) throw ArgumentError("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ArgumentError("dataset directory has no .pgm images: " + dir.string());
  DatasetSource s;
  s.procedural_ = false;
  s.seed_ = seed;
  s.shuffle_ = true;
  for (const auto& f : files) {
    s.images_.push_back(dg::to_gray(dg::read_pgm(f)));
    s.names_.push_back(f.filename().string());
  }
  return s;
}

DatasetSource DatasetSource::images(std::vector<dg::Image> images) {
  if (images.empty()) throw ArgumentError("dataset needs at least one image");
  DatasetSource s;
  s.procedural_ = false;
  s.images_ = std::move(images);
  for (std::size_t i = 0; i < s.images_.size(); ++i) s.names_.push_back("image" + std::to_string(i));
  return s;
}

dg::Image DatasetSource::image(std::uint64_t index) const {
  if (procedural_) {
    return procedural_image(extent_, extent_, derive_seed(seed_, single_ ? 0 : index), density_);
  }
  const std::uint64_t n = images_.size();
  const std::uint64_t pass = index / n;
  std::uint64_t pos = index % n;
  if (shuffle_) {
    std::vector<std::uint64_t> order(n);
    for (std::uint64_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(seed_ ^ 0x5eedULL, pass));
    std::shuffle(order.begin(), order.end(), rng);
    pos = order[pos];
  }
  return images_[pos];
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  if (crop < 1 || crop % scale != 0) {
    throw ArgumentError("crop " + std::to_string(crop) + " must be positive and divisible by scale " +
                        std::to_string(scale));
  }
  if (batch < 1 || steps < 0 || log_every < 1 || checkpoint_every < 0) {
    throw ArgumentError("batch, log cadence must be positive; steps and checkpoint cadence non-negative");
  }
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning rate must be >= 0");
  if (!(noise_max >= 0.0)) throw ArgumentError("noise level must be >= 0");
  if (!(density >= 0.0)) throw ArgumentError("density must be >= 0");
  net_config().validate();
}

model::MANetConfig TrainConfig::net_config() const {
  model::MANetConfig c;
  c.in_channels = in_channels;
  c.channels = channels;
  c.splits = splits;
  c.kernel_size = kernel_size;
  c.scale = scale;
  return c;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename Fn>
auto parse_value(const std::string& key, const std::string& value, Fn&& fn) {
  try {
    std::size_t used = 0;
    auto v = fn(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("invalid value '" + value + "' for " + key);
  }
}

int to_int(const std::string& k, const std::string& v) {
  return parse_value(k, v, [](const std::string& s, std::size_t* u) { return std::stoi(s, u); });
}
double to_double(const std::string& k, const std::string& v) {
  return parse_value(k, v, [](const std::string& s, std::size_t* u) { return std::stod(s, u); });
}
std::uint64_t to_u64(const std::string& k, const std::string& v) {
  return parse_value(k, v, [](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
}
bool to_bool(const std::string& k, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ArgumentError("invalid value '" + v + "' for " + k + " (expected 0/1)");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> TrainConfig::to_key_values() const {
  std::string halve;
  for (std::size_t i = 0; i < lr_halve_at.size(); ++i) halve += (i ? "," : "") + std::to_string(lr_halve_at[i]);
  std::string fixed;
  if (fixed_kernel) {
    fixed = fmt_double(fixed_kernel->sigma1) + "," + fmt_double(fixed_kernel->sigma2) + "," +
            fmt_double(fixed_kernel->theta);
  }
  return {{"scale", std::to_string(scale)},
          {"crop", std::to_string(crop)},
          {"batch", std::to_string(batch)},
          {"steps", std::to_string(steps)},
          {"lr", fmt_double(learning_rate)},
          {"lr_halve_at", halve},
          {"noise_max", fmt_double(noise_max)},
          {"seed", std::to_string(seed)},
          {"checkpoint_every", std::to_string(checkpoint_every)},
          {"log_every", std::to_string(log_every)},
          {"in_channels", std::to_string(in_channels)},
          {"channels", std::to_string(channels[0]) + "," + std::to_string(channels[1]) + "," +
                           std::to_string(channels[2])},
          {"splits", std::to_string(splits)},
          {"kernel_size", std::to_string(kernel_size)},
          {"augment", augment ? "1" : "0"},
          {"fixed_kernel", fixed},
          {"precision", double_precision ? "f64" : "f32"},
          {"dataset_dir", dataset_dir},
          {"density", fmt_double(density)},
          {"single_image", single_image ? "1" : "0"}};
}

TrainConfig TrainConfig::from_key_values(const nn::KeyValues& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "scale") c.scale = to_int(k, v);
    else if (k == "crop") c.crop = to_int(k, v);
    else if (k == "batch") c.batch = to_int(k, v);
    else if (k == "steps") c.steps = to_int(k, v);
    else if (k == "lr") c.learning_rate = to_double(k, v);
    else if (k == "lr_halve_at") {
      c.lr_halve_at.clear();
      for (const auto& s : split_list(v)) c.lr_halve_at.push_back(to_int(k, s));
    } else if (k == "noise_max") c.noise_max = to_double(k, v);
    else if (k == "seed") c.seed = to_u64(k, v);
    else if (k == "checkpoint_every") c.checkpoint_every = to_int(k, v);
    else if (k == "log_every") c.log_every = to_int(k, v);
    else if (k == "in_channels") c.in_channels = to_int(k, v);
    else if (k == "channels") {
      const auto parts = split_list(v);
      if (parts.size() != 3) throw ArgumentError("channels expects three comma-separated values");
      for (int i = 0; i < 3; ++i) c.channels[static_cast<std::size_t>(i)] = to_int(k, parts[static_cast<std::size_t>(i)]);
    } else if (k == "splits") c.splits = to_int(k, v);
    else if (k == "kernel_size") c.kernel_size = to_int(k, v);
    else if (k == "augment") c.augment = to_bool(k, v);
    else if (k == "fixed_kernel") {
      if (v.empty()) {
        c.fixed_kernel.reset();
      } else {
        const auto parts = split_list(v);
        if (parts.size() != 3) throw ArgumentError("fixed_kernel expects sigma1,sigma2,theta");
        c.fixed_kernel = dg::KernelParams::make(to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2]));
      }
    } else if (k == "precision") {
      if (v != "f32" && v != "f64") throw ArgumentError("precision must be f32 or f64");
      c.double_precision = v == "f64";
    } else if (k == "dataset_dir") c.dataset_dir = v;
    else if (k == "density") c.density = to_double(k, v);
    else if (k == "single_image") c.single_image = to_bool(k, v);
    else throw ArgumentError("unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

DatasetSource TrainConfig::make_source() const {
  if (!dataset_dir.empty()) return DatasetSource::directory(dataset_dir, seed);
  return DatasetSource::procedural(seed, crop, density, single_image);
}

// ---------------------------------------------------------------------------

dg::Image dihedral(const dg::Image& img, int variant) {
  if (variant < 0 || variant > 7) throw ArgumentError("dihedral variant must be in 0..7");
  dg::Image cur = img;
  if (variant & 1) {
    dg::Image t(cur.channels, cur.width, cur.height);
    t.role = cur.role;
    t.scale = cur.scale;
    for (int c = 0; c < cur.channels; ++c) {
      for (int i = 0; i < cur.height; ++i) {
        for (int j = 0; j < cur.width; ++j) t.at(c, j, i) = cur.at(c, i, j);
      }
    }
    cur = std::move(t);
  }
  for (int q = 0; q < (variant >> 1); ++q) {
    // Quarter turn counter-clockwise.
    dg::Image t(cur.channels, cur.width, cur.height);
    t.role = cur.role;
    t.scale = cur.scale;
    for (int c = 0; c < cur.channels; ++c) {
      for (int i = 0; i < cur.height; ++i) {
        for (int j = 0; j < cur.width; ++j) t.at(c, cur.width - 1 - j, i) = cur.at(c, i, j);
      }
    }
    cur = std::move(t);
  }
  return cur;
}

TrainSample make_sample(const DatasetSource& source, const TrainConfig& cfg, std::uint64_t index) {
  std::mt19937_64 rng(derive_seed(cfg.seed, index));
  const dg::Image img = dg::to_gray(source.image(index));
  if (img.height < cfg.crop || img.width < cfg.crop) {
    throw ArgumentError("image " + img.extent_str() + " smaller than crop " + std::to_string(cfg.crop));
  }
  std::uniform_int_distribution<int> top(0, img.height - cfg.crop);
  std::uniform_int_distribution<int> left(0, img.width - cfg.crop);
  const int t = top(rng);
  const int l = left(rng);
  TrainSample s;
  dg::Image patch = dg::crop(img, t, l, cfg.crop, cfg.crop);
  if (cfg.augment) {
    s.dihedral = std::uniform_int_distribution<int>(0, 7)(rng);
    patch = dihedral(patch, s.dihedral);
  }
  s.params = cfg.fixed_kernel ? *cfg.fixed_kernel : dg::sample_training_params(rng, cfg.scale);
  s.kernel = dg::synth_kernel(s.params, cfg.kernel_size);
  s.lr_clean = dg::decimate(dg::blur_invariant(patch, s.kernel), cfg.scale);
  s.lr_clean.scale = cfg.scale;
  if (cfg.noise_max > 0.0) s.noise_sigma = std::uniform_real_distribution<double>(0.0, cfg.noise_max)(rng);
  s.lr = dg::add_noise(s.lr_clean, s.noise_sigma, rng);
  return s;
}

template <typename T>
Batch<T> make_batch(const DatasetSource& source, const TrainConfig& cfg, std::uint64_t step) {
  const int n = cfg.batch;
  const int h = cfg.crop / cfg.scale;
  const int taps = cfg.kernel_size * cfg.kernel_size;
  Batch<T> b;
  b.lr = nn::Tensor<T>(nn::Shape{n, cfg.in_channels, h, h});
  b.gt = nn::Tensor<T>(nn::Shape{n, taps, cfg.crop, cfg.crop});
  for (int i = 0; i < n; ++i) {
    TrainSample s = make_sample(source, cfg, step * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(i));
    for (int c = 0; c < cfg.in_channels; ++c) {
      T* dst = b.lr.plane(i, c);
      for (std::size_t p = 0; p < s.lr.plane(); ++p) dst[p] = static_cast<T>(s.lr.data[p]);
    }
    for (int t = 0; t < taps; ++t) {
      T* dst = b.gt.plane(i, t);
      std::fill(dst, dst + b.gt.shape().plane(), static_cast<T>(s.kernel.taps[static_cast<std::size_t>(t)]));
    }
    b.samples.push_back(std::move(s));
  }
  return b;
}

template <typename T>
nn::Var<T> kernel_loss(const nn::Var<T>& prediction, const nn::Var<T>& target) {
  const nn::Shape& a = prediction.shape();
  if (!(a == target.shape())) {
    throw DimensionError("kernel loss: prediction " + a.str() + " vs target " + target.shape().str());
  }
  const double sites = static_cast<double>(a.n) * a.h * a.w;
  return nn::l1_distance(prediction, target, sites);
}

// ---------------------------------------------------------------------------

template <typename T>
Trainer<T>::Trainer(TrainConfig cfg) : Trainer(cfg, cfg.make_source()) {}

template <typename T>
Trainer<T>::Trainer(TrainConfig cfg, DatasetSource source)
    : cfg_(std::move(cfg)),
      source_(std::move(source)),
      net_((cfg_.validate(), cfg_.net_config()), derive_seed(cfg_.seed, ~0ULL)),
      adam_(nn::AdamOptions{cfg_.learning_rate}) {}

template <typename T>
double Trainer<T>::current_lr() const {
  double lr = cfg_.learning_rate;
  for (int m : cfg_.lr_halve_at) {
    if (step_ >= m) lr *= 0.5;
  }
  return lr;
}

template <typename T>
double Trainer<T>::train_step() {
  const auto batch = make_batch<T>(source_, cfg_, static_cast<std::uint64_t>(step_));
  auto params = net_.params();
  nn::Tape<T> tape;
  double loss_value = 0.0;
  try {
    const auto pred = net_.forward(nn::constant(batch.lr), &tape);
    const auto loss = kernel_loss(pred, nn::constant(batch.gt));
    loss_value = static_cast<double>(loss.value()[0]);
    if (!std::isfinite(loss_value)) throw NumericError("non-finite loss");
    tape.backward(loss);
  } catch (const NumericError& e) {
    std::string seeds;
    for (int i = 0; i < cfg_.batch; ++i) {
      const auto idx = static_cast<std::uint64_t>(step_) * static_cast<std::uint64_t>(cfg_.batch) + static_cast<std::uint64_t>(i);
      seeds += (i ? "," : "") + std::to_string(derive_seed(cfg_.seed, idx));
    }
    nn::zero_grads(params);
    throw NumericError(std::string(e.what()) + " at step " + std::to_string(step_) + " (seed " +
                       std::to_string(cfg_.seed) + ", sample seeds " + seeds + ")");
  }
  adam_.set_learning_rate(current_lr());
  adam_.update(params);
  nn::zero_grads(params);
  ++step_;
  net_.trained_steps = step_;
  return loss_value;
}

template <typename T>
std::vector<LogEntry> Trainer<T>::run(const std::filesystem::path& out_dir,
                                      const std::function<void(const LogEntry&)>& on_log) {
  std::filesystem::create_directories(out_dir);
  nn::save_key_values(out_dir / "config.txt", cfg_.to_key_values());
  std::ofstream metrics(out_dir / "metrics.tsv", step_ == 0 ? std::ios::trunc : std::ios::app);
  if (!metrics) throw FormatError("cannot write " + (out_dir / "metrics.tsv").string());
  metrics << std::setprecision(9);
  started_ = std::chrono::steady_clock::now();
  std::vector<LogEntry> log;
  while (step_ < cfg_.steps) {
    const std::int64_t step = step_;
    double loss = 0.0;
    try {
      loss = train_step();
    } catch (const NumericError& e) {
      std::ofstream dump(out_dir / ("nonfinite_step_" + std::to_string(step) + ".txt"));
      dump << "error=" << e.what() << "\nstep=" << step << "\nseed=" << cfg_.seed << "\n";
      throw;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    LogEntry entry{step, loss, secs};
    log.push_back(entry);
    if (step % cfg_.log_every == 0 || step_ == cfg_.steps) {
      metrics << entry.step << '\t' << entry.loss << '\t' << std::fixed << std::setprecision(3) << entry.seconds
              << std::defaultfloat << std::setprecision(9) << '\n';
      metrics.flush();
      if (on_log) on_log(entry);
    }
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
      save(out_dir / ("ckpt_" + std::to_string(step_) + ".manc"));
    }
  }
  save(out_dir / "final.manc");
  return log;
}

template <typename T>
nn::TensorList<T> Trainer<T>::state() const {
  auto records = net_.state();
  auto params = const_cast<model::MANet<T>&>(net_).params();
  adam_.save(records, params);
  records.emplace_back("train.step", nn::Tensor<T>(nn::Shape{1, 1, 1, 1}, static_cast<T>(step_)));
  return records;
}

template <typename T>
void Trainer<T>::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, state());
}

template <typename T>
void Trainer<T>::resume(const std::filesystem::path& path) {
  const auto records = nn::load_checkpoint<T>(path);
  net_.load_state(records);
  auto params = net_.params();
  adam_.load(records, params);
  const nn::Tensor<T>* step = nullptr;
  for (const auto& [name, t] : records) {
    if (name == "train.step") step = &t;
  }
  if (step == nullptr) throw StateError(path.string() + " is a network checkpoint without training state");
  step_ = static_cast<std::int64_t>(std::llround(static_cast<double>((*step)[0])));
  net_.trained_steps = step_;
}

double smoothed_loss(const std::vector<LogEntry>& log, std::size_t index, std::size_t window) {
  if (log.empty() || index >= log.size() || window == 0) throw ArgumentError("smoothed_loss: bad range");
  const std::size_t first = index + 1 >= window ? index + 1 - window : 0;
  double acc = 0.0;
  for (std::size_t i = first; i <= index; ++i) acc += log[i].loss;
  return acc / static_cast<double>(index + 1 - first);
}

// ---------------------------------------------------------------------------

double EvalReport::mean_psnr() const {
  double acc = 0.0;
  for (const auto& r : rows) acc += r.psnr;
  return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

double EvalReport::mean_ssim() const {
  double acc = 0.0;
  for (const auto& r : rows) acc += r.ssim;
  return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
}

void EvalReport::write_text(std::ostream& out) const {
  out << std::left << std::setw(24) << "image" << std::setw(34) << "degradation" << std::right << std::setw(10)
      << "psnr" << std::setw(10) << "ssim" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::left << std::setw(24) << r.image << std::setw(34) << r.degradation << std::right
        << std::setprecision(3) << std::setw(10) << r.psnr << std::setprecision(5) << std::setw(10) << r.ssim << '\n';
  }
  out << std::left << std::setw(58) << "mean" << std::right << std::setprecision(3) << std::setw(10) << mean_psnr()
      << std::setprecision(5) << std::setw(10) << mean_ssim() << '\n';
  out << std::defaultfloat;
}

void EvalReport::write_key_values(std::ostream& out) const {
  out << std::setprecision(17);
  out << "rows=" << rows.size() << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << "row." << i << ".image=" << r.image << '\n';
    out << "row." << i << ".degradation=" << r.degradation << '\n';
    out << "row." << i << ".psnr=" << r.psnr << '\n';
    out << "row." << i << ".ssim=" << r.ssim << '\n';
  }
  out << "mean_psnr=" << mean_psnr() << '\n';
  out << "mean_ssim=" << mean_ssim() << '\n';
  out << std::defaultfloat;
}

namespace {

std::string describe(const dg::KernelParams& p) {
  std::ostringstream os;
  os << std::setprecision(4) << "s1=" << p.sigma1 << ",s2=" << p.sigma2 << ",theta=" << p.theta;
  return os.str();
}

}  // namespace

template <typename T>
EvalReport evaluate(model::MANet<T>* net, const std::vector<std::pair<std::string, dg::Image>>& images,
                    const EvalOptions& options) {
  if (images.empty()) throw ArgumentError("evaluation needs at least one image");
  if (net == nullptr && !options.oracle_gt) throw ArgumentError("evaluation needs a network or the oracle flag");
  const int s = options.scale;
  if (net != nullptr && net->config().scale != s) {
    throw StateError("network scale " + std::to_string(net->config().scale) + " differs from evaluation scale " +
                     std::to_string(s));
  }
  const bool color = net != nullptr && net->config().in_channels == 3;
  EvalReport report;
  for (std::size_t idx = 0; idx < images.size(); ++idx) {
    const auto& [name, raw] = images[idx];
    const dg::Image hr = dg::crop_to_multiple(color ? raw : dg::to_gray(raw), s);
    auto score = [&](const dg::KernelField& field, std::uint64_t seed, std::string label) {
      dg::DegradationConfig dc;
      dc.scale = s;
      dc.noise_sigma = options.noise;
      dc.seed = seed;
      dc.kernel_size = net != nullptr ? net->config().kernel_size : dg::kDefaultKernelSize;
      const dg::Degraded d = dg::degrade(hr, field, dc);
      const dg::KernelMap est = options.oracle_gt ? d.gt : model::estimate_kernel_map(*net, d.lr);
      const dg::Fidelity f = dg::lr_fidelity(hr, d.lr_clean, est, s);
      report.rows.push_back({name, std::move(label), f.psnr, f.ssim});
    };
    if (options.mode == EvalMode::invariant) {
      const auto grid = dg::eval_kernel_grid(s);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto field = dg::constant_field(grid[k], hr.height, hr.width, options.patch_size, s);
        score(field, derive_seed(options.seed, idx * 64 + k), describe(grid[k]));
      }
    } else {
      for (int type : options.field_types) {
        const std::uint64_t seed = derive_seed(options.seed, idx * 64 + 32 + static_cast<std::uint64_t>(type));
        std::mt19937_64 rng(seed);
        auto field = dg::make_kernel_field(type, hr.height, hr.width, options.patch_size, s, rng);
        field.seed = seed;
        score(field, seed, "field=" + std::to_string(type));
      }
    }
  }
  return report;
}

template Batch<float> make_batch<float>(const DatasetSource&, const TrainConfig&, std::uint64_t);
template Batch<double> make_batch<double>(const DatasetSource&, const TrainConfig&, std::uint64_t);
template nn::Var<float> kernel_loss<float>(const nn::Var<float>&, const nn::Var<float>&);
template nn::Var<double> kernel_loss<double>(const nn::Var<double>&, const nn::Var<double>&);
template class Trainer<float>;
template class Trainer<double>;
template EvalReport evaluate<float>(model::MANet<float>*, const std::vector<std::pair<std::string, dg::Image>>&,
                                    const EvalOptions&);
template EvalReport evaluate<double>(model::MANet<double>*, const std::vector<std::pair<std::string, dg::Image>>&,
                                     const EvalOptions&);

}  // namespace manet::training
