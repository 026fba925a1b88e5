#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "config.hpp"
#include "io.hpp"
#include "phantom.hpp"
#include "pipeline.hpp"

using namespace curvetomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
    const fs::path d = fs::temp_directory_path() / "curvetomo_unit";
    fs::create_directories(d);
    return d / name;
}

}  // namespace

TEST_CASE("crc64 matches the XZ check value") {
    const char* msg = "123456789";
    CHECK(hex64(crc64(msg, 9)) == "995dc9bbdf1939fa");
}

TEST_CASE("image and sinogram files round-trip bit-exactly") {
    const ImageGrid img = render_phantom(default_phantom(), {32, 1.0, 0.9});
    const std::string stem = scratch("img").string();
    write_image(stem, img, "abc");
    GridFileInfo info;
    const ImageGrid back = read_image(stem, &info);
    CHECK(back.values == img.values);
    CHECK(back.nx == 32);
    CHECK(info.kind == "image");
    CHECK(info.geometry_hash == "abc");
    CHECK(grid_file_kind(stem) == "image");

    Sinogram g = Sinogram::zeros({16, 12, -0.7, 0.9, TimeRange::limited(0.2, 1.5)});
    for (std::size_t k = 0; k < g.values.size(); ++k) g.values[k] = 0.1 * static_cast<double>(k) - 3.0;
    const std::string gs = scratch("sino").string();
    write_sinogram(gs, g, "");
    const Sinogram gb = read_sinogram(gs);
    CHECK(gb.values == g.values);
    CHECK(gb.s_min == g.s_min);
    CHECK(gb.t_range.hi == g.t_range.hi);
    CHECK_FALSE(gb.t_range.periodic);
    CHECK_THROWS_AS(read_image(gs), IoError);
}

TEST_CASE("corrupted payload is rejected") {
    const ImageGrid img = render_phantom(default_phantom(), {16, 1.0, 0.9});
    const std::string stem = scratch("corrupt").string();
    write_image(stem, img, "");
    {
        std::fstream f(stem + ".bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8 * 17);
        const double junk = 42.0;
        f.write(reinterpret_cast<const char*>(&junk), sizeof junk);
    }
    CHECK_THROWS_AS(read_image(stem), IoError);
    fs::resize_file(stem + ".bin", 8);
    CHECK_THROWS_AS(read_image(stem), IoError);
}

TEST_CASE("json syntax errors carry line and column") {
    try {
        parse_json_text("{\n  \"a\": 1,\n  \"b\": ]\n}", "cfg.json");
        FAIL("no throw");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("cfg.json:3:", 0) == 0);
    }
}

TEST_CASE("config parsing validates keys and values") {
    CHECK_THROWS_AS(parse_config(R"({"phase": "static", "gird": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"phase": "wobble"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": 4}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": "big"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"t_range": {"lo": 1, "hi": 0}})"), ConfigError);
    CHECK_THROWS_AS(build_phase(parse_config(R"({"motion": "wobble"})")), ConfigError);

    const auto c = parse_config(R"({"motion": "rotation", "rate": -1.0})");
    CHECK(c.phase == "dynamic");
    CHECK(c.motion.kind == "rotation");
    CHECK(c.motion.rate == -1.0);

    // serialization is a fixed point and the hash follows content only
    const auto d = config_from_json(config_to_json(c));
    CHECK(config_to_json(d).dump() == config_to_json(c).dump());
    CHECK(config_hash(d) == config_hash(c));
    GeometryConfig e = c;
    e.nt += 1;
    CHECK(config_hash(e) != config_hash(c));
}

TEST_CASE("lagrangian weight needs a dynamic phase") {
    CHECK_THROWS_AS(build_weight(parse_config(R"({"weight": {"lagrangian": true}})")), ConfigError);
    CHECK_NOTHROW(build_weight(parse_config(R"({"motion": "breathing", "amplitude": 0.05,
                                                "weight": {"lagrangian": true}})")));
}

TEST_CASE("error codes map to exit statuses") {
    CHECK(exit_status_for(ErrorCode::Config) == 2);
    CHECK(exit_status_for(ErrorCode::Io) == 2);
    CHECK(exit_status_for(ErrorCode::Numeric) == 3);
    CHECK(exit_status_for(ErrorCode::Divergence) == 3);
    CHECK(exit_status_for(ErrorCode::Coverage) == 4);
}

TEST_CASE("pipeline rejects unknown commands and options") {
    CHECK_THROWS_AS(run_pipeline("explode", Json::object()), ConfigError);
    CHECK_THROWS_AS(run_pipeline("phantom", Json::array()), ConfigError);
    CHECK_THROWS_AS(run_pipeline("forward", Json{{"config_json", Json::object()}}), ConfigError);
}

TEST_CASE("manifest has no run-dependent fields") {
    const std::string out = scratch("manifest_run/ph").string();
    const Json cfg = config_to_json(parse_config(R"({"grid": {"n": 24}})"));
    const Json a = run_pipeline("phantom", Json{{"config_json", cfg}, {"out", out}});
    const std::string first = read_text(out + ".manifest.json");
    const Json b = run_pipeline("phantom", Json{{"config_json", cfg}, {"out", out}});
    CHECK(read_text(out + ".manifest.json") == first);
    CHECK(a.dump() == b.dump());
    for (const auto& [name, sum] : a["outputs"].items()) CHECK(name.find('/') == std::string::npos);
}
