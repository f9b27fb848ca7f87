// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "manet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace manet::nn {

namespace {

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t max_coords, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_coords == 0 || max_coords >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(max_coords);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void note(GradCheckResult& r, double a, double n) {
  const double e = relative_error(a, n);
  if (r.checked == 0 || e > r.max_rel_error) {
    r.max_rel_error = e;
    r.worst_analytic = a;
    r.worst_numeric = n;
  }
  ++r.checked;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check(const std::function<Var<double>(const Var<double>&)>& f, const Tensor<double>& x,
                           double eps, std::size_t max_coords, std::uint64_t seed) {
  Tape<double> tape;
  Var<double> input = leaf(x, tape);
  Var<double> loss = f(input);
  tape.backward(loss);
  const Tensor<double> analytic = input.grad();

  auto eval = [&](const Tensor<double>& at) { return f(constant(at)).value()[0]; };
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  Tensor<double> probe = x;
  for (std::size_t i : pick_coords(x.size(), max_coords, rng)) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = eval(probe);
    probe[i] = orig - eps;
    const double down = eval(probe);
    probe[i] = orig;
    note(result, analytic[i], (up - down) / (2.0 * eps));
  }
  return result;
}

GradCheckResult grad_check_params(const std::function<Var<double>(Tape<double>*)>& f,
                                  std::span<Parameter<double>* const> params, double eps,
                                  std::size_t max_coords_per_param, std::uint64_t seed) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    Var<double> loss = f(&tape);
    tape.backward(loss);
  }
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto* p : params) {
    for (std::size_t i : pick_coords(p->value.size(), max_coords_per_param, rng)) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double up = f(nullptr).value()[0];
      p->value[i] = orig - eps;
      const double down = f(nullptr).value()[0];
      p->value[i] = orig;
      note(result, p->grad[i], (up - down) / (2.0 * eps));
    }
  }
  return result;
}

}  // namespace manet::nn
