// Copyright (c) 2026, The manet-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "manet/autograd.hpp"

namespace manet::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of the scalar `f` at `x` with central
/// differences (f(x + eps) - f(x - eps)) / (2 eps). When `max_coords` is
/// nonzero only that many coordinates, drawn from `seed`, are perturbed.
GradCheckResult grad_check(const std::function<Var<double>(const Var<double>&)>& f, const Tensor<double>& x,
                           double eps = 1e-5, std::size_t max_coords = 0, std::uint64_t seed = 0);

/// Same comparison for parameters. `f` receives the tape to bind parameters
/// to, or nullptr for the plain function evaluations.
GradCheckResult grad_check_params(const std::function<Var<double>(Tape<double>*)>& f,
                                  std::span<Parameter<double>* const> params, double eps = 1e-5,
                                  std::size_t max_coords_per_param = 0, std::uint64_t seed = 0);

}  // namespace manet::nn
