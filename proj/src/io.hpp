#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "grid.hpp"

namespace curvetomo {

using Json = nlohmann::ordered_json;

/// CRC-64/XZ of a byte range.
std::uint64_t crc64(const void* data, std::size_t bytes);
std::string hex64(std::uint64_t v);
std::uint64_t crc64_of_values(const std::vector<double>& v);
std::uint64_t crc64_of_file(const std::string& path);

/// Grid file: <stem>.bin holds little-endian float64 values row-major,
/// <stem>.json the sidecar with kind, dims, grids, geometry hash and checksum.
struct GridFileInfo {
    std::string kind;            // "image" or "sinogram"
    std::string geometry_hash;
    std::uint64_t checksum = 0;
    Json extra = Json::object(); // producer metadata (fan radius, ...)
};

void write_image(const std::string& stem, const ImageGrid& img, const std::string& geometry_hash,
                 const Json& extra = Json::object());
void write_sinogram(const std::string& stem, const Sinogram& g, const std::string& geometry_hash,
                    const Json& extra = Json::object());
ImageGrid read_image(const std::string& stem, GridFileInfo* info = nullptr);
Sinogram read_sinogram(const std::string& stem, GridFileInfo* info = nullptr);
/// Kind recorded in a sidecar, without loading the payload.
std::string grid_file_kind(const std::string& stem);

/// 16-bit binary PGM, min..max mapped to 0..65535, first row = largest y.
void write_pgm16(const std::string& path, const std::vector<double>& values, std::size_t nx, std::size_t ny);
void write_pgm16(const std::string& path, const ImageGrid& img);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
/// Pretty JSON with a trailing newline.
void write_json(const std::string& path, const Json& j);

/// Parses JSON, turning syntax errors into ConfigError with line and column.
Json parse_json_text(const std::string& text, const std::string& origin);

/// Fixed-precision number formatting for CSV output (17 significant digits).
std::string fmt_num(double v);

}  // namespace curvetomo
