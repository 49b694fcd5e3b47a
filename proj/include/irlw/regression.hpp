#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "irlw/errors.hpp"

namespace irlw {

/// Ordinary least squares of log y against log x.
struct SlopeFit
{
  double slope{0.0};
  double intercept{0.0}; ///< natural-log intercept
  double stderr_slope{0.0};
  double residual_rms{0.0};
  std::size_t points{0};
};

/**
 * \brief Log-log slope over x[begin, end) and y[begin, end).
 *
 * Pairs with a non-positive or non-finite entry are dropped; fewer than five remaining points is
 * an error. \p end = npos means "to the end".
 */
inline SlopeFit convergence_slope(std::span<const double> x, std::span<const double> y,
                                  std::size_t begin = 0,
                                  std::size_t end = std::numeric_limits<std::size_t>::max())
{
  if (x.size() != y.size())
    throw PreconditionError("convergence_slope: series lengths differ");
  end = std::min(end, x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 5)
    throw PreconditionError("convergence_slope: only " + std::to_string(n) +
                            " positive points in window, need 5");
  const double nn = double(n);
  const double mx = sx / nn;
  const double my = sy / nn;
  // Centered sums from a second pass for accuracy.
  double cxx = 0, cxy = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      continue;
    const double dx = std::log(x[i]) - mx;
    cxx += dx * dx;
    cxy += dx * (std::log(y[i]) - my);
  }
  if (!(cxx > 0.0))
    throw PreconditionError("convergence_slope: x values are all equal");
  SlopeFit fit;
  fit.points = n;
  fit.slope = cxy / cxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      continue;
    const double res = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
    ssr += res * res;
  }
  fit.residual_rms = std::sqrt(ssr / nn);
  fit.stderr_slope = n > 2 ? std::sqrt(ssr / (nn - 2.0) / cxx) : 0.0;
  return fit;
}

} // namespace irlw
