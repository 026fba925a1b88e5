#pragma once

#include <vector>

#include "grid.hpp"

namespace curvetomo {

struct EllipseSpec {
    Vec2 center;
    double a = 1.0;  // semi-axis along the rotated x direction
    double b = 1.0;
    double angle = 0.0;
    double density = 1.0;

    bool contains(Vec2 p) const;
    /// Exact line integral over {x . omega(theta) = s}.
    double line_integral(double s, double theta) const;
    Vec2 boundary_point(double param) const;
    Vec2 outward_normal(double param) const;
};

/// Circle, tilted thin ellipse and small disk of contrasting densities.
std::vector<EllipseSpec> default_phantom();
std::vector<EllipseSpec> disk_phantom(double radius, double density = 1.0, Vec2 center = {});

/// Sum of densities, antialiased by 4 x 4 supersampling per pixel.
ImageGrid render_phantom(const std::vector<EllipseSpec>& specs, const GridSpec& grid);
/// Analytic density at a point (no antialiasing).
double phantom_density(const std::vector<EllipseSpec>& specs, Vec2 p);

struct CovectorSample {
    Vec2 x;
    Vec2 xi;
    Vec2 unit_dir;
};

CovectorSample make_covector(Vec2 x, Vec2 xi);

struct WavefrontSample {
    CovectorSample cov;
    std::size_t ellipse = 0;
};

/// Uniform parameter samples on each boundary with analytic outward unit normals.
std::vector<WavefrontSample> boundary_wavefront(const std::vector<EllipseSpec>& specs,
                                                std::size_t n_per_ellipse);

}  // namespace curvetomo
