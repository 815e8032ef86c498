#pragma once

namespace hegnn {

inline constexpr const char* kVersion = "1.0.0";

// Bumped when the on-disk layout of the respective artifact changes.
inline constexpr int kReportFormatVersion = 1;
inline constexpr int kBlobFormatVersion = 1;

}  // namespace hegnn
