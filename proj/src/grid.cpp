#include "grid.hpp"

#include <cmath>

#include "parallel.hpp"

namespace curvetomo {

ImageGrid ImageGrid::zeros(const GridSpec& spec) {
    if (spec.n < 2) throw ConfigError("grid needs at least 2 pixels per side");
    if (!(spec.extent > 0)) throw ConfigError("grid extent must be positive");
    if (!(spec.support_radius > 0)) throw ConfigError("support radius must be positive");
    ImageGrid g;
    g.nx = g.ny = spec.n;
    g.spacing = 2.0 * spec.extent / static_cast<double>(spec.n);
    g.origin = {-spec.extent + 0.5 * g.spacing, -spec.extent + 0.5 * g.spacing};
    g.support_radius = spec.support_radius;
    g.values.assign(spec.n * spec.n, 0.0);
    return g;
}

ImageGrid ImageGrid::zeros_like() const {
    ImageGrid g = *this;
    std::fill(g.values.begin(), g.values.end(), 0.0);
    return g;
}

GridSpec ImageGrid::spec() const {
    return {nx, 0.5 * spacing * static_cast<double>(nx), support_radius};
}

double ImageGrid::bilinear(Vec2 p) const {
    const double fx = (p.x - origin.x) / spacing;
    const double fy = (p.y - origin.y) / spacing;
    if (!(fx > -1.0 && fy > -1.0 && fx < static_cast<double>(nx) && fy < static_cast<double>(ny)))
        return 0.0;
    const double flx = std::floor(fx), fly = std::floor(fy);
    const long ix = static_cast<long>(flx), iy = static_cast<long>(fly);
    const double ax = fx - flx, ay = fy - fly;
    const long mx = static_cast<long>(nx), my = static_cast<long>(ny);
    auto v = [&](long i, long j) -> double {
        if (i < 0 || j < 0 || i >= mx || j >= my) return 0.0;
        return values[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)];
    };
    return (1 - ay) * ((1 - ax) * v(ix, iy) + ax * v(ix + 1, iy)) +
           ay * ((1 - ax) * v(ix, iy + 1) + ax * v(ix + 1, iy + 1));
}

void ImageGrid::enforce_support() {
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!in_support(center(k))) values[k] = 0.0;
}

double image_dot(const ImageGrid& a, const ImageGrid& b) {
    if (a.values.size() != b.values.size()) throw ConfigError("image sizes differ");
    return a.spacing * a.spacing * chunked_sum(a.values.size(), [&](std::size_t k) { return a.values[k] * b.values[k]; });
}

double image_norm(const ImageGrid& a) { return std::sqrt(image_dot(a, a)); }

double relative_l2_error(const ImageGrid& a, const ImageGrid& b, double radius) {
    if (a.values.size() != b.values.size()) throw ConfigError("image sizes differ");
    const double r2 = radius * radius;
    auto inside = [&](std::size_t k) {
        const Vec2 p = b.center(k);
        return radius == kInf || dot(p, p) <= r2;
    };
    const double num = chunked_sum(a.values.size(), [&](std::size_t k) {
        const double d = a.values[k] - b.values[k];
        return inside(k) ? d * d : 0.0;
    });
    const double den = chunked_sum(a.values.size(), [&](std::size_t k) {
        return inside(k) ? b.values[k] * b.values[k] : 0.0;
    });
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

Sinogram Sinogram::zeros(const SinogramSpec& spec) {
    if (spec.ns < 2 || spec.nt < 2) throw ConfigError("sinogram needs ns >= 2 and nt >= 2");
    if (!(spec.s_max > spec.s_min)) throw ConfigError("sinogram s range is empty");
    if (!(spec.t_range.hi > spec.t_range.lo)) throw ConfigError("t range is empty");
    Sinogram g;
    g.ns = spec.ns;
    g.nt = spec.nt;
    g.s_min = spec.s_min;
    g.s_max = spec.s_max;
    g.t_range = spec.t_range;
    g.values.assign(spec.ns * spec.nt, 0.0);
    return g;
}

Sinogram Sinogram::zeros_like() const {
    Sinogram g = *this;
    std::fill(g.values.begin(), g.values.end(), 0.0);
    return g;
}

double Sinogram::t_at(std::size_t jt) const {
    const double L = t_range.length();
    const double dt = t_range.periodic ? L / static_cast<double>(nt) : L / static_cast<double>(nt - 1);
    return t_range.lo + dt * static_cast<double>(jt);
}

double Sinogram::t_weight(std::size_t jt) const {
    const double L = t_range.length();
    if (t_range.periodic) return L / static_cast<double>(nt);
    const double dt = L / static_cast<double>(nt - 1);
    return (jt == 0 || jt + 1 == nt) ? 0.5 * dt : dt;
}

double Sinogram::interp_s(double s, std::size_t jt) const {
    const double f = (s - s_min) / ds();
    if (!(f >= 0.0 && f <= static_cast<double>(ns - 1))) return 0.0;
    std::size_t i = static_cast<std::size_t>(f);
    if (i >= ns - 1) i = ns - 2;
    const double a = f - static_cast<double>(i);
    const double* row = values.data() + jt * ns;
    return (1 - a) * row[i] + a * row[i + 1];
}

double sino_dot(const Sinogram& a, const Sinogram& b) {
    if (a.values.size() != b.values.size()) throw ConfigError("sinogram sizes differ");
    const double ds = a.ds();
    return ds * chunked_sum(a.values.size(), [&](std::size_t k) {
        return a.t_weight(k / a.ns) * a.values[k] * b.values[k];
    });
}

double sino_norm(const Sinogram& a) { return std::sqrt(sino_dot(a, a)); }

double relative_l2_error(const Sinogram& a, const Sinogram& b) {
    if (a.values.size() != b.values.size()) throw ConfigError("sinogram sizes differ");
    const double num = chunked_sum(a.values.size(), [&](std::size_t k) {
        const double d = a.values[k] - b.values[k];
        return std::isfinite(d) ? d * d : 0.0;
    });
    const double den = chunked_sum(a.values.size(), [&](std::size_t k) { return b.values[k] * b.values[k]; });
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace curvetomo
