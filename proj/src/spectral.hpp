#pragma once

#include <cstdint>
#include <vector>

#include "grid.hpp"

namespace curvetomo {

/// Mean |F f| over integer radial frequency shells k = 0 .. nx/2 (cycles per grid width).
std::vector<double> radial_spectrum(const ImageGrid& img);

/// Random field with Fourier content restricted to shells k in [k_lo, k_hi],
/// multiplied by the cutoff taper of a disk of radius `radius`, unit L2 norm.
ImageGrid band_limited_field(const GridSpec& grid, double k_lo, double k_hi, double radius, std::uint64_t seed);

/// Orthogonal projection onto the shells [k_lo, k_hi].
ImageGrid band_project(const ImageGrid& img, double k_lo, double k_hi);

/// exp(-|x - c|^2 / (2 sigma^2)) sampled at pixel centres.
ImageGrid gaussian_image(const GridSpec& grid, double sigma, Vec2 center = {});

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Smooth random data: low-order sine modes in s (vanishing at the window ends)
/// times low harmonics in t, unit norm in the data inner product.
Sinogram random_smooth_sinogram(const SinogramSpec& spec, std::uint64_t seed, int s_modes = 8, int t_modes = 4);

}  // namespace curvetomo
