// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0
//
// manet: command line front end.

#ifdef MANET_CLI11_PACKAGED
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manet/analysis.hpp"
#include "manet/degrade.hpp"
#include "manet/metrics.hpp"
#include "manet/network.hpp"
#include "manet/render.hpp"
#include "manet/serialize.hpp"
#include "manet/training.hpp"

namespace fs = std::filesystem;
namespace dg = manet::degradation;
namespace md = manet::model;
namespace nn = manet::nn;
namespace tr = manet::training;

namespace {

constexpr int kExitArgument = 2;
constexpr int kExitState = 3;
constexpr int kExitNumeric = 4;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

/// Resolved settings of one invocation: echoed to stdout and written next to
/// every artifact as `<artifact>.config`.
class Resolved {
 public:
  explicit Resolved(std::string command) { add("command", std::move(command)); }

  void add(const std::string& key, const std::string& value) { kv_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "1" : "0")); }

  void echo() const {
    for (const auto& [k, v] : kv_) std::cout << "config." << k << '=' << v << '\n';
  }
  void sidecar(const fs::path& artifact) const { nn::save_key_values(artifact.string() + ".config", kv_); }
  const std::vector<std::pair<std::string, std::string>>& values() const { return kv_; }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

dg::Image read_gray(const fs::path& p) { return dg::to_gray(dg::read_pgm(p)); }

std::vector<std::pair<std::string, dg::Image>> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw manet::ArgumentError("dataset directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw manet::ArgumentError("dataset directory has no .pgm images: " + dir.string());
  std::vector<std::pair<std::string, dg::Image>> images;
  for (const auto& f : files) images.emplace_back(f.filename().string(), dg::read_pgm(f));
  return images;
}

// ---------------------------------------------------------------------------
// synth-kernel

struct SynthKernelArgs {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double theta = 0.0;
  int size = dg::kDefaultKernelSize;
  int zoom = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::string pgm;
};

int run_synth_kernel(const SynthKernelArgs& a) {
  const auto params = dg::KernelParams::make(a.sigma1, a.sigma2, a.theta);
  const dg::Kernel k = dg::synth_kernel(params, a.size);
  const fs::path out = a.out;
  const fs::path pgm = a.pgm.empty() ? fs::path(out).replace_extension(".pgm") : fs::path(a.pgm);

  Resolved r("synth-kernel");
  r.add("sigma1", params.sigma1);
  r.add("sigma2", params.sigma2);
  r.add("theta", params.theta);
  r.add("size", a.size);
  r.add("zoom", a.zoom);
  r.add("seed", a.seed);
  r.add("out", out.string());
  r.add("pgm", pgm.string());
  r.echo();

  nn::Tensor<double> t(nn::Shape{1, 1, a.size, a.size});
  std::copy(k.taps.begin(), k.taps.end(), t.raw());
  ensure_parent(out);
  ensure_parent(pgm);
  nn::save_tensor(out, t, 2);
  dg::write_pgm(pgm, dg::render_kernel(k, a.zoom));
  r.sidecar(out);
  r.sidecar(pgm);

  const auto m = dg::kernel_moments(k);
  std::cout << "kernel_shape=" << a.size << 'x' << a.size << '\n'
            << "moment_major=" << fmt(m.major) << "\nmoment_minor=" << fmt(m.minor) << "\nmoment_angle="
            << fmt(m.angle) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// degrade

struct DegradeArgs {
  int scale = 4;
  int field_type = 0;
  int patch_size = 40;
  double noise = 0.0;
  std::uint64_t seed = 0;
  double sigma1 = 2.0;
  double sigma2 = 2.0;
  double theta = 0.0;
  int kernel_size = dg::kDefaultKernelSize;
  std::string in;
  std::string out;
  std::string gt_kernels;
  std::string gt_field;
  std::string clean;
};

int run_degrade(const DegradeArgs& a) {
  if (a.scale < 1) throw manet::ArgumentError("scale must be >= 1");
  const dg::Image hr = read_gray(a.in);
  if (hr.height % a.scale != 0 || hr.width % a.scale != 0) {
    throw manet::DimensionError("input " + std::to_string(hr.height) + "x" + std::to_string(hr.width) +
                                " is not divisible by scale " + std::to_string(a.scale));
  }
  dg::KernelField field;
  if (a.field_type == 0) {
    field = dg::constant_field(dg::KernelParams::make(a.sigma1, a.sigma2, a.theta), hr.height, hr.width, a.patch_size,
                               a.scale);
  } else {
    std::mt19937_64 rng(tr::derive_seed(a.seed, 1));
    field = dg::make_kernel_field(a.field_type, hr.height, hr.width, a.patch_size, a.scale, rng);
  }
  field.seed = a.seed;

  Resolved r("degrade");
  r.add("in", a.in);
  r.add("out", a.out);
  r.add("scale", a.scale);
  r.add("field_type", a.field_type);
  r.add("patch_size", a.patch_size);
  r.add("noise", a.noise);
  r.add("seed", a.seed);
  if (a.field_type == 0) {
    r.add("sigma1", a.sigma1);
    r.add("sigma2", a.sigma2);
    r.add("theta", a.theta);
  }
  r.add("kernel_size", a.kernel_size);
  r.add("gt_kernels", a.gt_kernels);
  r.add("gt_field", a.gt_field);
  r.add("clean", a.clean);
  r.echo();

  dg::DegradationConfig dc;
  dc.scale = a.scale;
  dc.noise_sigma = a.noise;
  dc.seed = tr::derive_seed(a.seed, 2);
  dc.kernel_size = a.kernel_size;
  const dg::Degraded d = dg::degrade(hr, field, dc);

  ensure_parent(a.out);
  dg::write_pgm(a.out, d.lr);
  r.sidecar(a.out);
  if (!a.clean.empty()) {
    ensure_parent(a.clean);
    dg::write_pgm(a.clean, d.lr_clean);
    r.sidecar(a.clean);
  }
  if (!a.gt_kernels.empty()) {
    ensure_parent(a.gt_kernels);
    dg::save_kernel_map(a.gt_kernels, d.gt,
                        {{"field_type", std::to_string(a.field_type)},
                         {"s", std::to_string(a.scale)},
                         {"patch_size", std::to_string(a.patch_size)},
                         {"seed", std::to_string(a.seed)}});
    r.sidecar(a.gt_kernels);
  }
  if (!a.gt_field.empty()) {
    ensure_parent(a.gt_field);
    dg::save_kernel_field(a.gt_field, field);
    r.sidecar(a.gt_field);
  }
  std::cout << "lr_shape=" << d.lr.height << 'x' << d.lr.width << '\n'
            << "kernel_map_shape=" << d.gt.taps_per_site() << 'x' << d.gt.height << 'x' << d.gt.width << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config;
  std::string out;
  std::string resume;
  std::vector<std::pair<std::string, std::string>> overrides;  // filled from flags
};

template <typename T>
int train_with(const tr::TrainConfig& cfg, const TrainArgs& a) {
  tr::Trainer<T> trainer(cfg);
  if (!a.resume.empty()) trainer.resume(a.resume);
  std::cout << "start_step=" << trainer.step() << '\n';
  const auto log = trainer.run(a.out, [](const tr::LogEntry& e) {
    std::cout << "step=" << e.step << " loss=" << fmt(e.loss) << " seconds=" << std::fixed << std::setprecision(3)
              << e.seconds << std::defaultfloat << '\n';
  });
  if (!log.empty()) {
    std::cout << "final_loss=" << fmt(log.back().loss) << '\n'
              << "smoothed_final_loss=" << fmt(tr::smoothed_loss(log, log.size() - 1, 50)) << '\n';
  }
  std::cout << "checkpoint=" << (fs::path(a.out) / "final.manc").string() << '\n';
  return 0;
}

int run_train(const TrainArgs& a) {
  nn::KeyValues kv;
  if (!a.config.empty()) kv = nn::load_key_values(a.config);
  for (const auto& [k, v] : a.overrides) kv[k] = v;
  const tr::TrainConfig cfg = tr::TrainConfig::from_key_values(kv);
  cfg.validate();

  Resolved r("train");
  for (const auto& [k, v] : cfg.to_key_values()) r.add(k, v);
  r.add("out", a.out);
  r.add("resume", a.resume);
  r.echo();
  fs::create_directories(a.out);
  r.sidecar(fs::path(a.out) / "final.manc");

  return cfg.double_precision ? train_with<double>(cfg, a) : train_with<float>(cfg, a);
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string checkpoint;
  std::string config;
  std::string in;
  std::string out_kernels;
  std::string out_viz;
  int scale = 0;
  int grid = 4;
  int zoom = 1;
  std::uint64_t seed = 0;
};

md::MANetConfig config_from_file(const fs::path& path) {
  return tr::TrainConfig::from_key_values(nn::load_key_values(path)).net_config();
}

/// Raises StateError naming both signatures when `expected` and `stored` differ.
void require_match(const md::MANetConfig& expected, const md::MANetConfig& stored, const std::string& checkpoint) {
  if (!(expected == stored)) {
    throw manet::StateError("checkpoint " + checkpoint + " has [" + stored.signature() + "] but config expects [" +
                            expected.signature() + "]");
  }
}

int run_estimate(const EstimateArgs& a) {
  const md::MANetConfig stored = md::read_checkpoint_config(a.checkpoint);
  if (!a.config.empty()) require_match(config_from_file(a.config), stored, a.checkpoint);
  if (a.scale != 0 && a.scale != stored.scale) {
    auto expected = stored;
    expected.scale = a.scale;
    require_match(expected, stored, a.checkpoint);
  }
  auto net = md::MANet<float>::load(a.checkpoint);
  const dg::Image lr = read_gray(a.in);
  const int s = stored.scale;

  Resolved r("estimate");
  r.add("checkpoint", a.checkpoint);
  r.add("network", stored.signature());
  r.add("trained_steps", std::to_string(net.trained_steps));
  r.add("in", a.in);
  r.add("out_kernels", a.out_kernels);
  r.add("out_viz", a.out_viz);
  r.add("grid", a.grid);
  r.add("zoom", a.zoom);
  r.add("seed", a.seed);
  r.echo();

  const dg::KernelMap map = md::estimate_kernel_map(net, lr);
  std::cout << "kernel_map_shape=" << map.taps_per_site() << 'x' << map.height << 'x' << map.width << '\n';
  if (!a.out_kernels.empty()) {
    ensure_parent(a.out_kernels);
    dg::save_kernel_map(a.out_kernels, map,
                        {{"s", std::to_string(s)}, {"checkpoint", a.checkpoint}, {"source", a.in}});
    r.sidecar(a.out_kernels);
  }
  if (!a.out_viz.empty()) {
    // Sample even sites whose receptive window stays off the zero padding.
    const md::Window w = md::receptive_window(stored, 0);
    const int margin = std::max(-w.lo, w.hi);
    const auto sites = dg::montage_sites(lr.height, lr.width, a.grid, margin);
    ensure_parent(a.out_viz);
    dg::write_pgm(a.out_viz, dg::kernel_montage(lr, map, s, sites, a.zoom));
    r.sidecar(a.out_viz);
    std::cout << "viz_sites=";
    for (std::size_t i = 0; i < sites.size(); ++i) {
      std::cout << (i ? ";" : "") << sites[i].first << ',' << sites[i].second;
    }
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string dataset_dir;
  std::string mode = "invariant";
  std::string report;
  int scale = 0;
  int patch_size = 40;
  double noise = 0.0;
  std::vector<int> field_types{1, 2, 3, 4, 5};
  bool oracle_gt = false;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() && !a.oracle_gt) throw manet::ArgumentError("eval needs --checkpoint or --oracle-gt");
  tr::EvalOptions opt;
  if (a.mode == "invariant") {
    opt.mode = tr::EvalMode::invariant;
  } else if (a.mode == "variant") {
    opt.mode = tr::EvalMode::variant;
  } else {
    throw manet::ArgumentError("mode must be invariant or variant, got " + a.mode);
  }
  std::optional<md::MANet<float>> net;
  if (!a.checkpoint.empty()) net = md::MANet<float>::load(a.checkpoint);
  opt.scale = a.scale != 0 ? a.scale : (net ? net->config().scale : 4);
  opt.noise = a.noise;
  opt.seed = a.seed;
  opt.patch_size = a.patch_size;
  opt.field_types = a.field_types;
  opt.oracle_gt = a.oracle_gt;
  const auto images = load_dataset(a.dataset_dir);

  Resolved r("eval");
  r.add("checkpoint", a.checkpoint);
  if (net) r.add("network", net->config().signature());
  r.add("dataset_dir", a.dataset_dir);
  r.add("images", static_cast<int>(images.size()));
  r.add("mode", a.mode);
  r.add("scale", opt.scale);
  r.add("noise", opt.noise);
  r.add("patch_size", opt.patch_size);
  std::string types;
  for (std::size_t i = 0; i < a.field_types.size(); ++i) types += (i ? "," : "") + std::to_string(a.field_types[i]);
  r.add("field_types", types);
  r.add("oracle_gt", a.oracle_gt);
  r.add("seed", a.seed);
  r.add("report", a.report);
  r.echo();

  const auto report = tr::evaluate<float>(net ? &*net : nullptr, images, opt);
  report.write_text(std::cout);
  report.write_key_values(std::cout);
  if (!a.report.empty()) {
    ensure_parent(a.report);
    std::ofstream text(a.report);
    report.write_text(text);
    std::ofstream kv(a.report + ".kv");
    report.write_key_values(kv);
    if (!text || !kv) throw manet::FormatError("cannot write report " + a.report);
    r.sidecar(a.report);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectArgs {
  std::string config;
  std::string checkpoint;
  int extent = 256;
  bool probe = true;
  std::uint64_t seed = 0;
};

int run_inspect(const InspectArgs& a) {
  if (!a.config.empty() && !a.checkpoint.empty()) {
    throw manet::ArgumentError("inspect takes --config or --checkpoint, not both");
  }
  md::MANet<double> net;
  if (!a.checkpoint.empty()) {
    net = md::MANet<double>::load(a.checkpoint);
  } else {
    net = md::MANet<double>(a.config.empty() ? md::MANetConfig{} : config_from_file(a.config), a.seed);
  }
  const md::MANetConfig& cfg = net.config();

  Resolved r("inspect");
  r.add("config", a.config);
  r.add("checkpoint", a.checkpoint);
  r.add("network", cfg.signature());
  r.add("extent", a.extent);
  r.add("probe", a.probe);
  r.add("seed", a.seed);
  r.echo();

  const auto counted = md::count_params(net);
  std::cout << "params_total=" << counted.params(true) << '\n'
            << "params_total_no_bias=" << counted.params(false) << '\n';

  std::vector<md::MAConvConfig> seen;
  for (const auto& block : net.blocks()) {
    for (const auto& layer : block.layers()) {
      const auto& c = layer.config();
      if (std::find_if(seen.begin(), seen.end(), [&](const md::MAConvConfig& o) {
            return o.in_channels == c.in_channels && o.out_channels == c.out_channels && o.splits == c.splits;
          }) != seen.end()) {
        continue;
      }
      seen.push_back(c);
      const std::string tag = std::to_string(c.in_channels) + "x" + std::to_string(c.out_channels);
      std::cout << "maconv_params_" << tag << "_s" << c.splits << '='
                << md::maconv_param_formula(c.in_channels, c.out_channels, c.splits) << '\n'
                << "plain_conv_params_" << tag << '=' << md::plain_conv_params(c.in_channels, c.out_channels) << '\n';
    }
  }

  const auto flops = md::count_flops(cfg, a.extent, a.extent);
  const std::string at = std::to_string(a.extent) + "x" + std::to_string(a.extent);
  std::cout << "flops_at_" << at << '=' << flops.macs() << '\n';

  const auto [rf_h, rf_w] = md::receptive_field_analytic(cfg);
  std::cout << "receptive_field_h=" << rf_h << '\n' << "receptive_field_w=" << rf_w << '\n';

  if (a.probe) {
    const auto current = md::receptive_field_probe(net, a.seed);
    auto positive = md::positive_weights_copy(net);
    const auto full = md::receptive_field_probe(positive, a.seed);
    std::cout << "probe_receptive_field_h=" << full.support_rows.extent() << '\n'
              << "probe_receptive_field_w=" << full.support_cols.extent() << '\n'
              << "probe_contained=" << (full.contained && current.contained ? 1 : 0) << '\n'
              << "probe_current_weights_h=" << current.support_rows.extent() << '\n'
              << "probe_current_weights_w=" << current.support_cols.extent() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// viz

struct VizArgs {
  std::string in;
  std::string out;
  std::string image;
  int scale = 4;
  int grid = 4;
  int zoom = 1;
  std::uint64_t seed = 0;
};

int run_viz(const VizArgs& a) {
  const auto t = nn::load_tensor<double>(a.in);
  const nn::Shape s = t.shape();

  Resolved r("viz");
  r.add("in", a.in);
  r.add("out", a.out);
  r.add("image", a.image);
  r.add("grid", a.grid);
  r.add("zoom", a.zoom);
  r.add("seed", a.seed);

  ensure_parent(a.out);
  if (s.n == 1 && s.c == 1 && s.h == s.w && s.h % 2 == 1) {
    // A single kernel.
    r.echo();
    dg::Kernel k{s.h, std::vector<double>(t.data().begin(), t.data().end())};
    dg::write_pgm(a.out, dg::render_kernel(k, a.zoom));
    r.sidecar(a.out);
    std::cout << "rendered=kernel\n";
    return 0;
  }
  const dg::KernelMap map = dg::KernelMap::from_tensor(t);
  dg::Image lr;
  int scale = a.scale;
  if (!a.image.empty()) {
    lr = read_gray(a.image);
    if (lr.height < 1 || map.height % lr.height != 0 || map.height / lr.height != map.width / lr.width) {
      throw manet::DimensionError("image " + lr.extent_str() + " is not a decimation of the kernel map");
    }
    scale = map.height / lr.height;
  } else {
    if (scale < 1 || map.height % scale != 0 || map.width % scale != 0) {
      throw manet::DimensionError("kernel map extent is not divisible by scale " + std::to_string(scale));
    }
    lr = dg::Image(1, map.height / scale, map.width / scale);
  }
  r.add("scale", scale);
  r.echo();
  const auto sites = dg::montage_sites(lr.height, lr.width, a.grid, 0);
  dg::write_pgm(a.out, dg::kernel_montage(lr, map, scale, sites, a.zoom));
  r.sidecar(a.out);
  std::cout << "rendered=montage\nsites=" << sites.size() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

int fail(const std::string& kind, int code, const std::string& message) {
  std::cerr << "manet: error kind=" << kind << " exit=" << code << " message=\"" << one_line(message) << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially variant blur kernel estimation"};
  app.require_subcommand(1);
  int exit_code = 0;

  SynthKernelArgs sk;
  auto* c_sk = app.add_subcommand("synth-kernel", "Render one anisotropic Gaussian kernel");
  c_sk->add_option("--sigma1", sk.sigma1, "Width along the first principal axis")->required();
  c_sk->add_option("--sigma2", sk.sigma2, "Width along the second principal axis")->required();
  c_sk->add_option("--theta", sk.theta, "Rotation in radians");
  c_sk->add_option("--size", sk.size, "Odd kernel extent")->capture_default_str();
  c_sk->add_option("--zoom", sk.zoom, "Pixels per tap in the PGM rendering")->capture_default_str();
  c_sk->add_option("--seed", sk.seed, "Recorded for reproducibility");
  c_sk->add_option("--out", sk.out, "Tensor output path")->required();
  c_sk->add_option("--pgm", sk.pgm, "Rendering path (default: --out with .pgm)");
  c_sk->callback([&] { exit_code = run_synth_kernel(sk); });

  DegradeArgs dgr;
  auto* c_dg = app.add_subcommand("degrade", "Blur, decimate and add noise to an HR image");
  c_dg->add_option("in", dgr.in, "HR input (PGM)")->required();
  c_dg->add_option("out", dgr.out, "LR output (PGM)")->required();
  c_dg->add_option("--scale", dgr.scale)->capture_default_str();
  c_dg->add_option("--field-type", dgr.field_type, "0 constant, 1..5 variant families")
      ->check(CLI::Range(0, 5))
      ->capture_default_str();
  c_dg->add_option("--patch-size", dgr.patch_size)->capture_default_str();
  c_dg->add_option("--noise", dgr.noise, "Noise sigma in 0..255 units")->capture_default_str();
  c_dg->add_option("--seed", dgr.seed)->capture_default_str();
  c_dg->add_option("--sigma1", dgr.sigma1, "Field type 0 only")->capture_default_str();
  c_dg->add_option("--sigma2", dgr.sigma2, "Field type 0 only")->capture_default_str();
  c_dg->add_option("--theta", dgr.theta, "Field type 0 only")->capture_default_str();
  c_dg->add_option("--kernel-size", dgr.kernel_size)->capture_default_str();
  c_dg->add_option("--gt-kernels", dgr.gt_kernels, "Ground-truth kernel map output");
  c_dg->add_option("--gt-field", dgr.gt_field, "Kernel field parameters output");
  c_dg->add_option("--clean", dgr.clean, "Noise-free LR output");
  c_dg->callback([&] { exit_code = run_degrade(dgr); });

  TrainArgs ta;
  auto* c_tr = app.add_subcommand("train", "Train a kernel estimator");
  c_tr->add_option("--config", ta.config, "key=value config file");
  c_tr->add_option("--out", ta.out, "Run directory")->required();
  c_tr->add_option("--resume", ta.resume, "Checkpoint with training state");
  // Every config key can be overridden by the flag of the same name.
  struct TrainFlag {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
  };
  const auto train_defaults = tr::TrainConfig{}.to_key_values();
  std::vector<TrainFlag> train_flags;
  train_flags.reserve(train_defaults.size());
  for (const auto& [key, value] : train_defaults) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    auto& f = train_flags.emplace_back(TrainFlag{key, "", nullptr});
    f.option = c_tr->add_option("--" + flag, f.value, "default: " + (value.empty() ? "unset" : value));
  }
  c_tr->callback([&] {
    for (const auto& f : train_flags) {
      if (f.option->count() > 0) ta.overrides.emplace_back(f.key, f.value);
    }
    exit_code = run_train(ta);
  });

  EstimateArgs ea;
  auto* c_es = app.add_subcommand("estimate", "Estimate the per-pixel kernel map of an LR image");
  c_es->add_option("--checkpoint", ea.checkpoint)->required();
  c_es->add_option("--config", ea.config, "Expected network config; a mismatch is a state error");
  c_es->add_option("--scale", ea.scale, "Expected scale; a mismatch is a state error");
  c_es->add_option("in", ea.in, "LR input (PGM)")->required();
  c_es->add_option("--out-kernels", ea.out_kernels, "Kernel map output");
  c_es->add_option("--out-viz", ea.out_viz, "Montage output (PGM)");
  c_es->add_option("--grid", ea.grid, "Sample sites per axis in the montage")->capture_default_str();
  c_es->add_option("--zoom", ea.zoom, "Pixels per tap in the montage")->capture_default_str();
  c_es->add_option("--seed", ea.seed);
  c_es->callback([&] { exit_code = run_estimate(ea); });

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Score kernel estimates by LR reconstruction");
  c_ev->add_option("--checkpoint", ev.checkpoint);
  c_ev->add_option("--dataset-dir", ev.dataset_dir, "Directory of HR PGM images")->required();
  c_ev->add_option("--mode", ev.mode, "invariant or variant")->capture_default_str();
  c_ev->add_option("--scale", ev.scale, "Default: the checkpoint's scale");
  c_ev->add_option("--report", ev.report, "Plain-text report; key=value copy at <report>.kv");
  c_ev->add_option("--patch-size", ev.patch_size)->capture_default_str();
  c_ev->add_option("--noise", ev.noise)->capture_default_str();
  c_ev->add_option("--field-types", ev.field_types, "Variant mode families")->delimiter(',');
  c_ev->add_flag("--oracle-gt", ev.oracle_gt, "Score the ground-truth kernel map");
  c_ev->add_option("--seed", ev.seed)->capture_default_str();
  c_ev->callback([&] { exit_code = run_eval(ev); });

  InspectArgs in;
  auto* c_in = app.add_subcommand("inspect", "Parameter, cost and receptive field report");
  auto* in_cfg = c_in->add_option("--config", in.config, "key=value config file (default config if absent)");
  auto* in_ckpt = c_in->add_option("--checkpoint", in.checkpoint);
  in_cfg->excludes(in_ckpt);
  c_in->add_option("--extent", in.extent, "LR extent for the FLOP count")->capture_default_str();
  c_in->add_flag("!--no-probe", in.probe, "Skip the gradient probe");
  c_in->add_option("--seed", in.seed, "Weight seed when building from a config")->capture_default_str();
  c_in->callback([&] { exit_code = run_inspect(in); });

  VizArgs vz;
  auto* c_vz = app.add_subcommand("viz", "Render a kernel or a kernel map");
  c_vz->add_option("in", vz.in, "Kernel or kernel map tensor")->required();
  c_vz->add_option("--out", vz.out, "PGM output")->required();
  c_vz->add_option("--image", vz.image, "LR background for a kernel map");
  c_vz->add_option("--scale", vz.scale, "Used without --image")->capture_default_str();
  c_vz->add_option("--grid", vz.grid)->capture_default_str();
  c_vz->add_option("--zoom", vz.zoom)->capture_default_str();
  c_vz->add_option("--seed", vz.seed);
  c_vz->callback([&] { exit_code = run_viz(vz); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", kExitArgument, e.what());
  } catch (const manet::StateError& e) {
    return fail(e.kind(), kExitState, e.what());
  } catch (const manet::NumericError& e) {
    return fail(e.kind(), kExitNumeric, e.what());
  } catch (const manet::Error& e) {
    return fail(e.kind(), kExitArgument, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail("format", kExitArgument, e.what());
  } catch (const std::exception& e) {
    return fail("internal", 1, e.what());
  }
  return exit_code;
}
