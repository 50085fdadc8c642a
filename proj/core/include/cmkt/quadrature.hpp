#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cmkt/valuations.hpp"

namespace cmkt {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  std::size_t max_intervals = 4000;
};

struct QuadratureResult {
  std::vector<double> value;
  double error = 0.0;  // max-norm estimate over components
  std::size_t evaluations = 0;
};

// f(x, out) writes `width` values for the point x.
using VectorIntegrand1D = std::function<void(double, std::span<double>)>;

// Globally adaptive Gauss-Kronrod (7/15) over [breaks[0], breaks.back()],
// with the initial partition given by `breaks`. Each interval also probes its
// own endpoints from the inside so that jumps sitting between an endpoint and
// the outermost node are not missed.
QuadratureResult integrate_intervals(const VectorIntegrand1D& f, std::size_t width,
                                     std::span<const double> breaks,
                                     const QuadratureOptions& opts);

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, double* error = nullptr);

// f(x, out) where x holds one value per dimension.
using VectorIntegrandND = std::function<void(std::span<const double>, std::span<double>)>;

// E[f(X)] for independent X_d ~ dims[d] by nested quadrature in quantile
// space. The u-axis of every dimension is split at its piece boundaries and
// at F(h) for each hint value h, so that integrands with jumps at known
// values stay cheap.
QuadratureResult expect_over(std::span<const UnitDistribution* const> dims,
                             const VectorIntegrandND& f, std::size_t width,
                             const QuadratureOptions& opts,
                             std::span<const double> hints = {});

struct MonteCarloOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;
  std::size_t min_per_piece = 16;
};

struct MonteCarloResult {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t samples = 0;
};

// Monte Carlo estimate of E[f(X)]. Every dimension is stratified by its CDF
// pieces (each piece gets at least min_per_piece jittered draws, so rare
// atoms are always visited) and dimensions are paired by random permutation.
// Standard errors come from independent replicates.
MonteCarloResult stratified_monte_carlo(std::span<const UnitDistribution* const> dims,
                                        const VectorIntegrandND& f, std::size_t width,
                                        const MonteCarloOptions& opts);

}  // namespace cmkt
