#include "config.hpp"

#include <set>

namespace curvetomo {

namespace {

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

void read_vec(const Json& j, const char* key, Vec2& out, const std::string& where) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("'" + std::string(key) + "' in " + where + " must be [x, y]");
    out = {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

GeometryConfig config_from_json(const Json& j) {
    GeometryConfig c;
    // shorthand {"motion": "rotation", "rate": -1.0} implies a dynamic phase
    const bool flat_motion = j.is_object() && j.contains("motion") && j["motion"].is_string();
    if (flat_motion) {
        check_keys(j, "config", {"phase", "motion", "rate", "amplitude", "taper_radius", "fan_radius", "weight",
                                 "t_range", "grid", "sinogram", "atlas", "chunk_size"});
        c.phase = "dynamic";
        c.motion.kind = j["motion"].get<std::string>();
        read(j, "rate", c.motion.rate, "config");
        read(j, "amplitude", c.motion.amplitude, "config");
        read(j, "taper_radius", c.motion.taper_radius, "config");
    } else {
        check_keys(j, "config", {"phase", "motion", "fan_radius", "weight", "t_range", "grid", "sinogram", "atlas",
                                 "chunk_size"});
    }
    read(j, "phase", c.phase, "config");
    read(j, "fan_radius", c.fan_radius, "config");
    read(j, "chunk_size", c.chunk_size, "config");
    if (j.contains("motion") && !flat_motion) {
        const Json& m = j["motion"];
        check_keys(m, "motion", {"kind", "rate", "amplitude", "taper_radius"});
        read(m, "kind", c.motion.kind, "motion");
        read(m, "rate", c.motion.rate, "motion");
        read(m, "amplitude", c.motion.amplitude, "motion");
        read(m, "taper_radius", c.motion.taper_radius, "motion");
    }
    if (j.contains("weight")) {
        const Json& w = j["weight"];
        check_keys(w, "weight", {"kind", "value", "amplitude", "center", "width", "lagrangian"});
        read(w, "kind", c.weight.kind, "weight");
        read(w, "value", c.weight.value, "weight");
        read(w, "amplitude", c.weight.amplitude, "weight");
        read_vec(w, "center", c.weight.center, "weight");
        read(w, "width", c.weight.width, "weight");
        read(w, "lagrangian", c.weight.lagrangian, "weight");
    }
    if (j.contains("t_range")) {
        const Json& t = j["t_range"];
        check_keys(t, "t_range", {"lo", "hi", "periodic"});
        read(t, "lo", c.t_range.lo, "t_range");
        read(t, "hi", c.t_range.hi, "t_range");
        read(t, "periodic", c.t_range.periodic, "t_range");
    }
    if (j.contains("grid")) {
        const Json& g = j["grid"];
        check_keys(g, "grid", {"n", "extent", "support_radius"});
        read(g, "n", c.grid.n, "grid");
        read(g, "extent", c.grid.extent, "grid");
        read(g, "support_radius", c.grid.support_radius, "grid");
    }
    if (j.contains("sinogram")) {
        const Json& s = j["sinogram"];
        check_keys(s, "sinogram", {"ns", "nt"});
        read(s, "ns", c.ns, "sinogram");
        read(s, "nt", c.nt, "sinogram");
    }
    if (j.contains("atlas")) {
        const Json& a = j["atlas"];
        check_keys(a, "atlas", {"charts", "require_coverage", "k_radius"});
        read(a, "charts", c.atlas.charts, "atlas");
        read(a, "require_coverage", c.atlas.require_coverage, "atlas");
        read(a, "k_radius", c.atlas.k_radius, "atlas");
    }

    if (c.phase != "static" && c.phase != "dynamic" && c.phase != "fanbeam")
        throw ConfigError("phase must be static, dynamic or fanbeam (got '" + c.phase + "')");
    if (c.grid.n < 8) throw ConfigError("grid.n must be at least 8");
    if (!(c.grid.extent > 0) || !(c.grid.support_radius > 0)) throw ConfigError("grid extent and support must be positive");
    if (c.ns < 2 || c.nt < 2) throw ConfigError("sinogram ns and nt must be at least 2");
    if (!(c.t_range.hi > c.t_range.lo)) throw ConfigError("t_range needs hi > lo");
    if (c.chunk_size == 0) throw ConfigError("chunk_size must be positive");
    if (c.atlas.charts == 0) throw ConfigError("atlas.charts must be positive");
    return c;
}

Json config_to_json(const GeometryConfig& c) {
    Json j;
    j["phase"] = c.phase;
    j["motion"] = {{"kind", c.motion.kind}, {"rate", c.motion.rate}, {"amplitude", c.motion.amplitude},
                   {"taper_radius", c.motion.taper_radius}};
    j["fan_radius"] = c.fan_radius;
    j["weight"] = {{"kind", c.weight.kind},         {"value", c.weight.value},
                   {"amplitude", c.weight.amplitude}, {"center", {c.weight.center.x, c.weight.center.y}},
                   {"width", c.weight.width},         {"lagrangian", c.weight.lagrangian}};
    j["t_range"] = {{"lo", c.t_range.lo}, {"hi", c.t_range.hi}, {"periodic", c.t_range.periodic}};
    j["grid"] = {{"n", c.grid.n}, {"extent", c.grid.extent}, {"support_radius", c.grid.support_radius}};
    j["sinogram"] = {{"ns", c.ns}, {"nt", c.nt}};
    j["atlas"] = {{"charts", c.atlas.charts}, {"require_coverage", c.atlas.require_coverage},
                  {"k_radius", c.atlas.k_radius}};
    j["chunk_size"] = c.chunk_size;
    return j;
}

GeometryConfig parse_config(const std::string& text, const std::string& origin) {
    return config_from_json(parse_json_text(text, origin));
}

GeometryConfig load_config(const std::string& path) { return parse_config(read_text(path), path); }

std::string config_hash(const GeometryConfig& c) {
    const std::string s = config_to_json(c).dump();
    return hex64(crc64(s.data(), s.size()));
}

Rect phase_domain(const GeometryConfig& c) { return Rect::centered_square(1.1 * c.grid.extent); }

MotionPtr build_motion(const GeometryConfig& c) {
    const auto& m = c.motion;
    if (m.kind == "identity") return make_identity_motion();
    if (m.kind == "rotation") return make_rotation_motion(m.rate);
    if (m.kind == "breathing") return make_breathing_motion(m.amplitude, m.taper_radius);
    if (m.kind == "affine") return make_affine_motion(m.amplitude);
    throw ConfigError("unknown motion kind '" + m.kind + "'");
}

PhasePtr build_phase(const GeometryConfig& c) {
    const Rect dom = phase_domain(c);
    if (c.phase == "static") return make_static_phase(dom, c.t_range);
    if (c.phase == "dynamic") return make_dynamic_phase(build_motion(c), dom, c.t_range);
    return make_fanbeam_phase(c.fan_radius, dom, c.t_range);
}

WeightPtr build_weight(const GeometryConfig& c) {
    const auto& w = c.weight;
    WeightPtr base;
    if (w.kind == "constant") {
        base = make_constant_weight(w.value);
    } else if (w.kind == "bump") {
        base = std::make_shared<BumpWeight>(make_constant_weight(w.value), w.amplitude, w.center, w.width);
    } else {
        throw ConfigError("unknown weight kind '" + w.kind + "'");
    }
    if (w.lagrangian) {
        if (c.phase != "dynamic") throw ConfigError("weight.lagrangian needs the dynamic phase");
        return std::make_shared<LagrangianWeight>(build_motion(c), base);
    }
    return base;
}

SinogramSpec build_sinogram_spec(const GeometryConfig& c, const PhaseFunction& pf) {
    return default_sinogram_spec(pf, c.grid, c.ns, c.nt, c.t_range);
}

CutoffAtlas build_atlas(const GeometryConfig& c, const PhaseFunction& pf, CoverageReport* report) {
    return build_default_atlas(pf, CompactSet{{}, c.atlas.k_radius}, c.atlas.charts, c.atlas.require_coverage, report);
}

}  // namespace curvetomo
