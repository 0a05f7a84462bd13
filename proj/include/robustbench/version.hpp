#pragma once

// MAJOR: incompatible API changes. MINOR: new functionality or any change
// that can move benchmark numbers. PATCH: fixes that leave numbers unchanged.
#define ROBUSTBENCH_VERSION_MAJOR 1
#define ROBUSTBENCH_VERSION_MINOR 0
#define ROBUSTBENCH_VERSION_PATCH 0

namespace robustbench {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kReportSchemaVersion = 1;

}  // namespace robustbench
