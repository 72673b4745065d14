#include "tpg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "tpg/error.hpp"

namespace tpg {

namespace {

[[noreturn]] void io_error(const std::string& path, const char* reason) {
  throw Error(ErrorCode::Config, "path=" + path + " reason=\"" + reason + "\"");
}

template <class T>
void put_le(std::vector<unsigned char>& buf, std::size_t at, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t k = 0; k < sizeof(T); ++k) buf[at + k] = static_cast<unsigned char>(bits >> (8 * k));
}

template <class T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(p[k]) << (8 * k);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_snapshot(const std::string& path, const Field& f, int component, double time) {
  const GridSpec& g = f.grid();
  std::vector<unsigned char> buf(kSnapshotHeaderSize + 8 * f.size(), 0);
  std::memcpy(buf.data(), kSnapshotMagic.data(), kSnapshotMagic.size());
  put_le(buf, 8, kSnapshotVersion);
  put_le(buf, 12, static_cast<std::uint32_t>(component));
  put_le(buf, 16, static_cast<std::uint32_t>(g.nx));
  put_le(buf, 20, static_cast<std::uint32_t>(g.ny));
  put_le(buf, 24, g.length_x);
  put_le(buf, 32, g.length_y);
  put_le(buf, 40, time);
  for (std::size_t k = 0; k < f.size(); ++k) put_le(buf, kSnapshotHeaderSize + 8 * k, f[k]);
  std::ofstream os(path, std::ios::binary);
  if (!os) io_error(path, "cannot open for writing");
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) io_error(path, "write failed");
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) io_error(path, "cannot open for reading");
  std::vector<unsigned char> head(kSnapshotHeaderSize);
  is.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  if (!is || std::memcmp(head.data(), kSnapshotMagic.data(), kSnapshotMagic.size()) != 0)
    io_error(path, "not a snapshot file");
  if (get_le<std::uint32_t>(&head[8]) != kSnapshotVersion) io_error(path, "unsupported snapshot version");
  Snapshot s;
  s.component = static_cast<int>(get_le<std::uint32_t>(&head[12]));
  const int nx = static_cast<int>(get_le<std::uint32_t>(&head[16]));
  const int ny = static_cast<int>(get_le<std::uint32_t>(&head[20]));
  const double lx = get_le<double>(&head[24]);
  const double ly = get_le<double>(&head[32]);
  s.time = get_le<double>(&head[40]);
  s.field = Field(GridSpec::make(lx, ly, nx, ny));
  std::vector<unsigned char> data(8 * s.field.size());
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!is) io_error(path, "truncated data");
  for (std::size_t k = 0; k < s.field.size(); ++k) s.field[k] = get_le<double>(&data[8 * k]);
  return s;
}

std::array<std::uint8_t, 3> colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 9> stops = {{
      {68, 1, 84},
      {71, 44, 122},
      {59, 81, 139},
      {44, 113, 142},
      {33, 144, 141},
      {39, 173, 129},
      {92, 200, 99},
      {170, 220, 50},
      {253, 231, 37},
  }};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  const double a = t - static_cast<double>(k);
  std::array<std::uint8_t, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(std::lround((1.0 - a) * stops[k][c] + a * stops[k + 1][c]));
  return rgb;
}

void write_heatmap(const std::string& path, const Field& f, const std::string& label) {
  const GridSpec& g = f.grid();
  const double lo = f.min(), hi = f.max();
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream os(path, std::ios::binary);
  if (!os) io_error(path, "cannot open for writing");
  char comment[160];
  std::snprintf(comment, sizeof comment, "# component=%s min=%.17g max=%.17g\n", label.c_str(), lo, hi);
  os << "P6\n" << comment << g.nx << ' ' << g.ny << "\n255\n";
  std::vector<unsigned char> row(3 * static_cast<std::size_t>(g.nx));
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto rgb = colormap((f(i, j) - lo) / span);
      std::copy(rgb.begin(), rgb.end(), row.begin() + 3 * i);
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) io_error(path, "write failed");
}

}  // namespace tpg
