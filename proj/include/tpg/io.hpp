#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tpg/grid.hpp"

namespace tpg {

// Snapshot file: a 64-byte little-endian header followed by nx * ny doubles in
// row-major order (i fastest).
//
//   offset  size  field
//        0     8  magic "TPGSNAP\0"
//        8     4  u32 format version (1)
//       12     4  u32 component (0 = u, 1 = v, 2 = w)
//       16     4  u32 nx
//       20     4  u32 ny
//       24     8  f64 length_x
//       32     8  f64 length_y
//       40     8  f64 time
//       48    16  reserved, zero
inline constexpr std::array<char, 8> kSnapshotMagic = {'T', 'P', 'G', 'S', 'N', 'A', 'P', '\0'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderSize = 64;

struct Snapshot {
  int component = 0;
  double time = 0.0;
  Field field;
};

// Both throw Error{Config} on I/O failure or a malformed file.
void write_snapshot(const std::string& path, const Field& f, int component, double time);
Snapshot read_snapshot(const std::string& path);

// Binary PPM (P6), row j = ny - 1 at the top. Values map linearly from
// [min, max] onto a fixed nine-stop approximation of the viridis colormap;
// min and max are recorded in a header comment.
void write_heatmap(const std::string& path, const Field& f, const std::string& label);

std::array<std::uint8_t, 3> colormap(double t);

}  // namespace tpg
