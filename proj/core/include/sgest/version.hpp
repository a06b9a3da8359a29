#pragma once

namespace sgest {

inline constexpr const char* kVersion = "0.1.0";

/// Version of the on-disk artifact formats (CSV schema, report JSON,
/// manifest). Bumped whenever a column or key changes.
inline constexpr int kArtifactFormat = 1;

} // namespace sgest
