#pragma once

#include <string>

#include "atlas.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "operators.hpp"

namespace curvetomo {

struct MotionConfig {
    std::string kind = "identity";  // identity | rotation | breathing | affine
    double rate = 0.0;              // rotation
    double amplitude = 0.0;         // breathing, affine
    double taper_radius = 1.0;      // breathing
};

struct WeightConfig {
    std::string kind = "constant";  // constant | bump
    double value = 1.0;
    double amplitude = 0.0;         // bump
    Vec2 center;
    double width = 0.3;
    /// Wrap the material weight so the level-set form reproduces moving-object
    /// line integrals (dynamic phase only).
    bool lagrangian = false;
};

struct AtlasConfig {
    std::size_t charts = 1;
    bool require_coverage = true;
    double k_radius = 0.9;
};

/// Everything needed to rebuild a geometry. Serializes to JSON and back exactly;
/// unknown keys are rejected.
struct GeometryConfig {
    std::string phase = "static";   // static | dynamic | fanbeam
    MotionConfig motion;
    double fan_radius = 3.0;
    WeightConfig weight;
    TimeRange t_range = TimeRange::full();
    GridSpec grid{128, 1.0, 0.9};
    std::size_t ns = 192;
    std::size_t nt = 360;
    AtlasConfig atlas;
    std::size_t chunk_size = 4096;
};

GeometryConfig config_from_json(const Json& j);
Json config_to_json(const GeometryConfig& c);
/// Parses text; syntax errors carry line:column.
GeometryConfig parse_config(const std::string& text, const std::string& origin = "<config>");
GeometryConfig load_config(const std::string& path);
/// CRC-64 of the canonical serialization, hex.
std::string config_hash(const GeometryConfig& c);

Rect phase_domain(const GeometryConfig& c);
MotionPtr build_motion(const GeometryConfig& c);
PhasePtr build_phase(const GeometryConfig& c);
WeightPtr build_weight(const GeometryConfig& c);
SinogramSpec build_sinogram_spec(const GeometryConfig& c, const PhaseFunction& pf);
CutoffAtlas build_atlas(const GeometryConfig& c, const PhaseFunction& pf, CoverageReport* report = nullptr);

}  // namespace curvetomo
