#include "phantom.hpp"

#include <cmath>

#include "parallel.hpp"

namespace curvetomo {

bool EllipseSpec::contains(Vec2 p) const {
    const Vec2 q = Mat2::rotation(-angle) * (p - center);
    return (q.x * q.x) / (a * a) + (q.y * q.y) / (b * b) <= 1.0;
}

double EllipseSpec::line_integral(double s, double theta) const {
    const double c = std::cos(theta - angle), sn = std::sin(theta - angle);
    const double alpha2 = a * a * c * c + b * b * sn * sn;
    const double d = s - dot(center, unit_from_angle(theta));
    if (d * d >= alpha2) return 0.0;
    return 2.0 * density * a * b * std::sqrt(alpha2 - d * d) / alpha2;
}

Vec2 EllipseSpec::boundary_point(double param) const {
    return center + Mat2::rotation(angle) * Vec2{a * std::cos(param), b * std::sin(param)};
}

Vec2 EllipseSpec::outward_normal(double param) const {
    const Vec2 n = Mat2::rotation(angle) * Vec2{std::cos(param) / a, std::sin(param) / b};
    return n / norm(n);
}

std::vector<EllipseSpec> default_phantom() {
    return {
        {{-0.1, 0.0}, 0.55, 0.55, 0.0, 1.0},
        {{0.25, 0.2}, 0.3, 0.08, 0.6, 0.5},
        {{-0.35, -0.3}, 0.1, 0.1, 0.0, 0.8},
    };
}

std::vector<EllipseSpec> disk_phantom(double radius, double density, Vec2 center) {
    return {{center, radius, radius, 0.0, density}};
}

double phantom_density(const std::vector<EllipseSpec>& specs, Vec2 p) {
    double v = 0.0;
    for (const auto& e : specs)
        if (e.contains(p)) v += e.density;
    return v;
}

ImageGrid render_phantom(const std::vector<EllipseSpec>& specs, const GridSpec& grid) {
    for (const auto& e : specs)
        if (!(e.a > 0 && e.b > 0)) throw ConfigError("ellipse semi-axes must be positive");
    ImageGrid img = ImageGrid::zeros(grid);
    constexpr int kSub = 4;
    parallel_for(img.values.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Vec2 c = img.center(k);
            double acc = 0.0;
            for (int j = 0; j < kSub; ++j)
                for (int i = 0; i < kSub; ++i) {
                    const Vec2 p = c + img.spacing * Vec2{(i + 0.5) / kSub - 0.5, (j + 0.5) / kSub - 0.5};
                    acc += phantom_density(specs, p);
                }
            img.values[k] = acc / (kSub * kSub);
        }
    });
    img.enforce_support();
    return img;
}

CovectorSample make_covector(Vec2 x, Vec2 xi) {
    const double n = norm(xi);
    if (!(n > 0)) throw ConfigError("covector must be nonzero");
    return {x, xi, xi / n};
}

std::vector<WavefrontSample> boundary_wavefront(const std::vector<EllipseSpec>& specs,
                                                std::size_t n_per_ellipse) {
    if (n_per_ellipse < 8) throw ConfigError("need at least 8 wavefront samples per ellipse");
    std::vector<WavefrontSample> out;
    out.reserve(specs.size() * n_per_ellipse);
    for (std::size_t e = 0; e < specs.size(); ++e) {
        for (std::size_t k = 0; k < n_per_ellipse; ++k) {
            const double param = kTwoPi * static_cast<double>(k) / static_cast<double>(n_per_ellipse);
            const Vec2 n = specs[e].outward_normal(param);
            out.push_back({{specs[e].boundary_point(param), n, n}, e});
        }
    }
    return out;
}

}  // namespace curvetomo
