#include "io.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace curvetomo {

namespace {

using Crc64Xz = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;

std::vector<unsigned char> to_le_bytes(const std::vector<double>& v) {
    std::vector<unsigned char> out(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(v[i]);
        for (int b = 0; b < 8; ++b) out[i * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
    }
    return out;
}

std::vector<double> from_le_bytes(const std::vector<unsigned char>& bytes) {
    std::vector<double> v(bytes.size() / 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        v[i] = std::bit_cast<double>(bits);
    }
    return v;
}

void write_bytes(const std::string& path, const void* data, std::size_t n) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write failed for '" + path + "'");
}

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(is), {});
}

Json time_range_json(const TimeRange& t) { return Json{{"lo", t.lo}, {"hi", t.hi}, {"periodic", t.periodic}}; }

void write_payload(const std::string& stem, const std::vector<double>& values, Json sidecar) {
    const auto bytes = to_le_bytes(values);
    const std::uint64_t crc = crc64(bytes.data(), bytes.size());
    write_bytes(stem + ".bin", bytes.data(), bytes.size());
    sidecar["checksum"] = "crc64:" + hex64(crc);
    write_json(stem + ".json", sidecar);
}

std::vector<double> read_payload(const std::string& stem, const Json& sidecar, std::size_t expected) {
    const auto bytes = read_bytes(stem + ".bin");
    if (bytes.size() != expected * 8)
        throw IoError("payload of '" + stem + ".bin' has " + std::to_string(bytes.size()) + " bytes, dims require " +
                      std::to_string(expected * 8));
    const std::string want = sidecar.at("checksum").get<std::string>();
    const std::string got = "crc64:" + hex64(crc64(bytes.data(), bytes.size()));
    if (want != got) throw IoError("checksum mismatch for '" + stem + "': sidecar " + want + ", payload " + got);
    return from_le_bytes(bytes);
}

Json read_sidecar(const std::string& stem) {
    return parse_json_text(read_text(stem + ".json"), stem + ".json");
}

void fill_info(const Json& j, GridFileInfo* info) {
    if (!info) return;
    info->kind = j.at("kind").get<std::string>();
    info->geometry_hash = j.value("geometry_hash", std::string());
    info->checksum = std::stoull(j.at("checksum").get<std::string>().substr(6), nullptr, 16);
    info->extra = j.value("meta", Json::object());
}

}  // namespace

std::uint64_t crc64(const void* data, std::size_t bytes) {
    Crc64Xz c;
    c.process_bytes(data, bytes);
    return c.checksum();
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t crc64_of_values(const std::vector<double>& v) {
    const auto bytes = to_le_bytes(v);
    return crc64(bytes.data(), bytes.size());
}

std::uint64_t crc64_of_file(const std::string& path) {
    const auto bytes = read_bytes(path);
    return crc64(bytes.data(), bytes.size());
}

void write_image(const std::string& stem, const ImageGrid& img, const std::string& geometry_hash, const Json& extra) {
    Json j;
    j["kind"] = "image";
    j["dims"] = {img.nx, img.ny};
    j["spacing"] = img.spacing;
    j["origin"] = {img.origin.x, img.origin.y};
    j["support_radius"] = img.support_radius;
    j["layout"] = "float64 little-endian, row-major values[iy * nx + ix]";
    j["geometry_hash"] = geometry_hash;
    j["meta"] = extra;
    write_payload(stem, img.values, j);
}

void write_sinogram(const std::string& stem, const Sinogram& g, const std::string& geometry_hash, const Json& extra) {
    Json j;
    j["kind"] = "sinogram";
    j["dims"] = {g.ns, g.nt};
    j["grids"] = {{"s_min", g.s_min}, {"s_max", g.s_max}, {"t_range", time_range_json(g.t_range)}};
    j["layout"] = "float64 little-endian, row-major values[jt * ns + is]";
    j["geometry_hash"] = geometry_hash;
    j["meta"] = extra;
    write_payload(stem, g.values, j);
}

ImageGrid read_image(const std::string& stem, GridFileInfo* info) {
    const Json j = read_sidecar(stem);
    try {
        if (j.at("kind") != "image") throw IoError("'" + stem + "' is not an image file");
        ImageGrid img;
        img.nx = j.at("dims").at(0).get<std::size_t>();
        img.ny = j.at("dims").at(1).get<std::size_t>();
        img.spacing = j.at("spacing").get<double>();
        img.origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
        img.support_radius = j.at("support_radius").get<double>();
        img.values = read_payload(stem, j, img.nx * img.ny);
        fill_info(j, info);
        return img;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed sidecar '" + stem + ".json': " + e.what());
    }
}

Sinogram read_sinogram(const std::string& stem, GridFileInfo* info) {
    const Json j = read_sidecar(stem);
    try {
        if (j.at("kind") != "sinogram") throw IoError("'" + stem + "' is not a sinogram file");
        Sinogram g;
        g.ns = j.at("dims").at(0).get<std::size_t>();
        g.nt = j.at("dims").at(1).get<std::size_t>();
        const Json& gr = j.at("grids");
        g.s_min = gr.at("s_min").get<double>();
        g.s_max = gr.at("s_max").get<double>();
        g.t_range = {gr.at("t_range").at("lo").get<double>(), gr.at("t_range").at("hi").get<double>(),
                     gr.at("t_range").at("periodic").get<bool>()};
        g.values = read_payload(stem, j, g.ns * g.nt);
        fill_info(j, info);
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed sidecar '" + stem + ".json': " + e.what());
    }
}

std::string grid_file_kind(const std::string& stem) {
    const Json j = read_sidecar(stem);
    return j.value("kind", std::string());
}

void write_pgm16(const std::string& path, const std::vector<double>& values, std::size_t nx, std::size_t ny) {
    double lo = kInf, hi = -kInf;
    for (double v : values)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!(hi > lo)) {
        lo = std::isfinite(lo) ? lo : 0.0;
        hi = lo + 1.0;
    }
    std::ostringstream hdr;
    hdr << "P5\n" << nx << " " << ny << "\n65535\n";
    std::string out = hdr.str();
    out.reserve(out.size() + nx * ny * 2);
    for (std::size_t r = 0; r < ny; ++r) {
        const std::size_t iy = ny - 1 - r;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double v = values[iy * nx + ix];
            const double u = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
            const auto q = static_cast<unsigned>(std::lround(std::clamp(u, 0.0, 1.0) * 65535.0));
            out.push_back(static_cast<char>(q >> 8));
            out.push_back(static_cast<char>(q & 0xff));
        }
    }
    write_bytes(path, out.data(), out.size());
}

void write_pgm16(const std::string& path, const ImageGrid& img) { write_pgm16(path, img.values, img.nx, img.ny); }

void write_text(const std::string& path, const std::string& text) { write_bytes(path, text.data(), text.size()); }

std::string read_text(const std::string& path) {
    const auto b = read_bytes(path);
    return std::string(b.begin(), b.end());
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line / column
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) msg = msg.substr(pos);
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace curvetomo
