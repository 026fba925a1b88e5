#pragma once

#include <string>

#include "common.hpp"
#include "io.hpp"

namespace curvetomo {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

/// Runs one experiment command. `options` carries the command's inputs
/// (config path or inline object, file stems, numeric knobs); the returned
/// object holds the results that also go into the manifest. Throws Error.
Json run_pipeline(const std::string& command, const Json& options);

/// Process exit status for an error code: 2 config/io, 3 numeric, 4 coverage.
int exit_status_for(ErrorCode code);

}  // namespace curvetomo
