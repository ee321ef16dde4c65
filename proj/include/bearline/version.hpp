#pragma once

namespace bearline {

inline constexpr const char* kToolVersion = "0.1.0";

// Bumped whenever the run-record schema changes incompatibly.
inline constexpr int kRecordFormatVersion = 1;

}  // namespace bearline
