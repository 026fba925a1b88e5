#pragma once

#include <string>
#include <vector>

#include "geometry.hpp"

namespace curvetomo {

/// C^2 cutoff profile in the normalized distance u = d / radius:
/// 1 on [0, 0.5], 0 on [1, inf), 1 - S((u - 0.5) / 0.5) between with
/// S(v) = v - sin(2 pi v) / (2 pi).
double cutoff_taper(double u);

/// One chart of the localization: chi_X is radial about x_center, chi_Y is a
/// product of profiles in s and t (t measured periodically when the range is).
struct Chart {
    Vec2 x_center;
    double x_radius = kInf;
    double s_center = 0.0;
    double s_radius = kInf;
    double t_center = 0.0;
    double t_radius = kInf;
};

class CutoffAtlas {
public:
    CutoffAtlas() = default;
    CutoffAtlas(std::vector<Chart> charts, TimeRange t_range)
        : charts_(std::move(charts)), t_range_(t_range) {}

    static CutoffAtlas trivial(TimeRange t_range = TimeRange::full());

    std::size_t size() const { return charts_.size(); }
    const std::vector<Chart>& charts() const { return charts_; }
    const TimeRange& t_range() const { return t_range_; }

    double chi_x(std::size_t i, Vec2 x) const;
    /// s is the stored level coordinate phi - level_offset(t).
    double chi_y(std::size_t i, double s, double t) const;
    double sum_chi_x(Vec2 x) const;
    /// One chart with unbounded radii: every cutoff is identically 1.
    bool is_trivial() const;

private:
    std::vector<Chart> charts_;
    TimeRange t_range_;
};

/// Target compact set K: a closed disk.
struct CompactSet {
    Vec2 center;
    double radius = 0.9;
};

struct CoverageReport {
    std::size_t points_checked = 0;
    std::size_t directions_checked = 0;
    double min_sum_chi = 0.0;
    double max_sum_chi = 0.0;
    std::vector<double> invisible_directions;  // angles in radians, unique
    std::vector<Vec2> uncovered_points;
    bool covered() const { return invisible_directions.empty() && uncovered_points.empty(); }
    std::string describe() const;
};

/// n_charts = 1 gives the trivial atlas. Otherwise an n x n lattice of x charts
/// over the bounding box of K with spacing d and radius d (50% overlap); each
/// chart's s window covers phi over the chart support for every t.
/// Covering is verified on a lattice of K times 16 directions; a failure
/// throws CoverageError when require_coverage is set.
CutoffAtlas build_default_atlas(const PhaseFunction& pf, const CompactSet& K, std::size_t n_charts,
                                bool require_coverage = true, CoverageReport* report = nullptr);

}  // namespace curvetomo
