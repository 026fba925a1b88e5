#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace curvetomo {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double a) const { return {x * a, y * a}; }
    constexpr Vec2 operator/(double a) const { return {x / a, y / a}; }
    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double a, Vec2 v) { return {a * v.x, a * v.y}; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
/// det[a, b] with a, b as columns.
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Counter-clockwise rotation by pi/2.
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 unit_from_angle(double t) { return {std::cos(t), std::sin(t)}; }

/// 2x2 matrix, row-major: [[a11, a12], [a21, a22]].
struct Mat2 {
    double a11 = 1.0, a12 = 0.0, a21 = 0.0, a22 = 1.0;

    static constexpr Mat2 identity() { return {}; }
    static Mat2 rotation(double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        return {c, -s, s, c};
    }
    constexpr Vec2 operator*(Vec2 v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    constexpr Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
    constexpr Mat2 operator+(const Mat2& o) const {
        return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    constexpr Mat2 transposed() const { return {a11, a21, a12, a22}; }
    constexpr double det() const { return a11 * a22 - a12 * a21; }
    constexpr Mat2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }
};

/// Axis-aligned rectangle, used for the computational domain of a phase function.
struct Rect {
    double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;

    bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
    bool contains_interior(Vec2 p, double margin) const {
        return p.x >= xmin + margin && p.x <= xmax - margin && p.y >= ymin + margin &&
               p.y <= ymax - margin;
    }
    double diameter() const { return std::hypot(xmax - xmin, ymax - ymin); }
    static Rect centered_square(double half_width) {
        return {-half_width, half_width, -half_width, half_width};
    }
};

/// Acquisition interval [lo, hi]; `periodic` marks a full turn sampled without the end point.
struct TimeRange {
    double lo = 0.0;
    double hi = kTwoPi;
    bool periodic = true;

    double length() const { return hi - lo; }
    bool contains(double t) const { return t >= lo && t <= hi; }
    static TimeRange full() { return {0.0, kTwoPi, true}; }
    static TimeRange limited(double lo, double hi) { return {lo, hi, false}; }
};

enum class ErrorCode {
    Config = 2,
    Numeric = 3,
    Coverage = 4,
    Domain = 5,
    Branch = 6,
    SeedProjection = 7,
    Stall = 8,
    DegenerateSymbol = 9,
    Divergence = 10,
    OutOfRange = 11,
    Io = 12,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

#define CURVETOMO_DEFINE_ERROR(Name, Code)                                          \
    class Name : public Error {                                                     \
    public:                                                                         \
        explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {}    \
    };

CURVETOMO_DEFINE_ERROR(ConfigError, Config)
CURVETOMO_DEFINE_ERROR(NumericError, Numeric)
CURVETOMO_DEFINE_ERROR(CoverageError, Coverage)
CURVETOMO_DEFINE_ERROR(DomainError, Domain)
CURVETOMO_DEFINE_ERROR(BranchError, Branch)
CURVETOMO_DEFINE_ERROR(SeedProjectionError, SeedProjection)
CURVETOMO_DEFINE_ERROR(StallError, Stall)
CURVETOMO_DEFINE_ERROR(DegenerateSymbolError, DegenerateSymbol)
CURVETOMO_DEFINE_ERROR(DivergenceError, Divergence)
CURVETOMO_DEFINE_ERROR(OutOfRangeError, OutOfRange)
CURVETOMO_DEFINE_ERROR(IoError, Io)

#undef CURVETOMO_DEFINE_ERROR

}  // namespace curvetomo
