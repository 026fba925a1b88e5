#pragma once

#include <cstddef>
#include <vector>

#include "common.hpp"

namespace curvetomo {

/// Square image grid covering [-extent, extent]^2 with n x n pixels.
struct GridSpec {
    std::size_t n = 128;
    double extent = 1.0;
    double support_radius = 1.0;
};

/// Object f on a pixel grid. values[iy * nx + ix]; pixel centres at origin + (ix, iy) * spacing.
struct ImageGrid {
    std::size_t nx = 0, ny = 0;
    double spacing = 1.0;
    Vec2 origin;
    double support_radius = kInf;
    std::vector<double> values;

    static ImageGrid zeros(const GridSpec& spec);
    ImageGrid zeros_like() const;

    std::size_t size() const { return values.size(); }
    double& at(std::size_t ix, std::size_t iy) { return values[iy * nx + ix]; }
    double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }
    Vec2 center(std::size_t ix, std::size_t iy) const {
        return {origin.x + spacing * static_cast<double>(ix), origin.y + spacing * static_cast<double>(iy)};
    }
    Vec2 center(std::size_t k) const { return center(k % nx, k / nx); }
    bool in_support(Vec2 p) const { return dot(p, p) <= support_radius * support_radius; }
    /// Bilinear interpolation of the pixel values, zero outside the grid.
    double bilinear(Vec2 p) const;
    /// Zeroes every pixel whose centre lies outside support_radius.
    void enforce_support();
    GridSpec spec() const;
};

/// Discrete image inner product, weighted by spacing^2.
double image_dot(const ImageGrid& a, const ImageGrid& b);
double image_norm(const ImageGrid& a);
/// ||a - b|| / ||b|| restricted to pixels with |x| <= radius.
double relative_l2_error(const ImageGrid& a, const ImageGrid& b, double radius = kInf);

struct SinogramSpec {
    std::size_t ns = 192;
    std::size_t nt = 360;
    double s_min = -1.05;
    double s_max = 1.05;
    TimeRange t_range = TimeRange::full();
};

/// Data g(s, t) on a uniform (s, t) grid. values[jt * ns + is].
struct Sinogram {
    std::size_t ns = 0, nt = 0;
    double s_min = 0.0, s_max = 0.0;
    TimeRange t_range;
    std::vector<double> values;

    static Sinogram zeros(const SinogramSpec& spec);
    Sinogram zeros_like() const;
    SinogramSpec spec() const { return {ns, nt, s_min, s_max, t_range}; }

    double ds() const { return (s_max - s_min) / static_cast<double>(ns - 1); }
    double s_at(std::size_t is) const { return s_min + ds() * static_cast<double>(is); }
    double t_at(std::size_t jt) const;
    /// Quadrature weight of row jt: uniform for periodic ranges, trapezoid otherwise.
    double t_weight(std::size_t jt) const;
    double& at(std::size_t is, std::size_t jt) { return values[jt * ns + is]; }
    double at(std::size_t is, std::size_t jt) const { return values[jt * ns + is]; }
    /// Linear interpolation in s on row jt; zero outside [s_min, s_max].
    double interp_s(double s, std::size_t jt) const;
};

/// Discrete data inner product, weighted by ds * t_weight.
double sino_dot(const Sinogram& a, const Sinogram& b);
double sino_norm(const Sinogram& a);
double relative_l2_error(const Sinogram& a, const Sinogram& b);

}  // namespace curvetomo
