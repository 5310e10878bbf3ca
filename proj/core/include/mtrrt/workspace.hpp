#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtrrt {

/// Continuous planar point in pixel coordinates. `h` is the horizontal
/// axis (column direction), `v` the vertical axis (row direction).
struct Point {
  double h = 0.0;
  double v = 0.0;
};

double distance(const Point& a, const Point& b);

/// Rasterized workspace. Immutable after construction; safe for
/// concurrent reads by any number of planner trials.
class OccupancyGrid {
 public:
  OccupancyGrid(int width, int height, std::vector<std::uint8_t> cells);

  static OccupancyGrid empty(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  /// Raw cell lookup; (cx, cy) must be in bounds.
  bool occupied(int cx, int cy) const {
    return cells_[static_cast<std::size_t>(cy) * width_ + cx] != 0;
  }

  /// True iff p is in-bounds and the containing cell is unoccupied.
  /// Out-of-bounds points are never free (closed world).
  bool is_free(const Point& p) const;

  std::size_t free_cell_count() const { return free_cells_; }

  /// Dilates obstacles by a Euclidean disk of the given radius (pixels),
  /// used for a circular robot footprint. radius 0 returns a copy.
  OccupancyGrid inflated(double radius) const;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
  std::size_t free_cells_;
};

bool is_free(const OccupancyGrid& grid, const Point& p);

/// Checks samples along a->b at 0.5 px spacing, endpoints included.
/// Benchmark obstacles are >= 5 px thick, so this spacing cannot tunnel.
bool segment_collision_free(const OccupancyGrid& grid, const Point& a,
                            const Point& b);

struct MapFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses the plain-text grid format ("width height" header, then '.'/'#'
/// rows) or binary PGM P5 (gray < 128 = obstacle) from a memory buffer.
OccupancyGrid parse_map(const std::string& bytes);

/// Reads and parses a map file. Throws MapFormatError with line/byte
/// position on malformed input, std::runtime_error if unreadable.
OccupancyGrid load_map(const std::string& path);

/// Writes the plain-text grid format.
std::string format_map(const OccupancyGrid& grid);

/// A builtin benchmark environment: the grid plus its fixed query.
struct BuiltinWorld {
  OccupancyGrid grid;
  Point start;
  Point goal;
};

/// Deterministic procedural 450x350 environments: "room", "clutter",
/// "maze". Throws std::invalid_argument on unknown names.
BuiltinWorld builtin_map(const std::string& name);

const std::vector<std::string>& builtin_map_names();

}  // namespace mtrrt
