#pragma once

#include <cstdint>
#include <string>

#include "betaflow/preprocessing.hpp"

namespace betaflow {

// Doubles serialized with 17 significant digits round-trip losslessly.
std::string fmt17(double x);

// Strict reader for the panel schema (header t,Y,X_1..X_p); malformed rows
// abort with the 1-based line number.
LogPricePanel read_panel_csv(const std::string& path);

void write_panel_csv(const std::string& path, const LogPricePanel& panel);

// FNV-1a 64-bit digest of a file's bytes, as fixed-width hex.
std::string fnv1a_hex(const std::string& path);

}  // namespace betaflow
