#pragma once

namespace betaflow {
inline constexpr const char* kVersion = "0.1.0";
}
