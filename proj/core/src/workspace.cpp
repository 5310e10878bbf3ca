#include "mtrrt/workspace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mtrrt {

double distance(const Point& a, const Point& b) {
  const double dh = a.h - b.h;
  const double dv = a.v - b.v;
  return std::sqrt(dh * dh + dv * dv);
}

OccupancyGrid::OccupancyGrid(int width, int height,
                             std::vector<std::uint8_t> cells)
    : width_(width), height_(height), cells_(std::move(cells)) {
  if (width_ < 1 || height_ < 1) {
    throw std::invalid_argument("OccupancyGrid: width and height must be >= 1");
  }
  if (cells_.size() != static_cast<std::size_t>(width_) * height_) {
    throw std::invalid_argument("OccupancyGrid: cell count != width * height");
  }
  free_cells_ = static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), std::uint8_t{0}));
}

OccupancyGrid OccupancyGrid::empty(int width, int height) {
  return OccupancyGrid(width, height,
                       std::vector<std::uint8_t>(
                           static_cast<std::size_t>(width) * height, 0));
}

bool OccupancyGrid::is_free(const Point& p) const {
  if (p.h < 0.0 || p.v < 0.0 || p.h >= width_ || p.v >= height_) return false;
  const int cx = static_cast<int>(std::floor(p.h));
  const int cy = static_cast<int>(std::floor(p.v));
  return !occupied(cx, cy);
}

bool is_free(const OccupancyGrid& grid, const Point& p) {
  return grid.is_free(p);
}

OccupancyGrid OccupancyGrid::inflated(double radius) const {
  if (radius <= 0.0) return *this;
  const int r = static_cast<int>(std::ceil(radius));
  std::vector<std::pair<int, int>> disk;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dx, dy);
    }
  }
  std::vector<std::uint8_t> out(cells_.size(), 0);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!occupied(x, y)) continue;
      for (const auto& [dx, dy] : disk) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx >= 0 && ny >= 0 && nx < width_ && ny < height_) {
          out[static_cast<std::size_t>(ny) * width_ + nx] = 1;
        }
      }
    }
  }
  return OccupancyGrid(width_, height_, std::move(out));
}

bool segment_collision_free(const OccupancyGrid& grid, const Point& a,
                            const Point& b) {
  const double len = distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(len / 0.5)));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    const Point p{a.h + t * (b.h - a.h), a.v + t * (b.v - a.v)};
    if (!grid.is_free(p)) return false;
  }
  return true;
}

namespace {

OccupancyGrid parse_text_map(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string header;
  if (!std::getline(in, header)) {
    throw MapFormatError("line 1: missing header");
  }
  std::istringstream hs(header);
  int width = 0;
  int height = 0;
  if (!(hs >> width >> height) || width < 1 || height < 1) {
    throw MapFormatError("line 1: malformed header, expected \"width height\"");
  }
  std::vector<std::uint8_t> cells;
  cells.reserve(static_cast<std::size_t>(width) * height);
  for (int row = 0; row < height; ++row) {
    std::string line;
    if (!std::getline(in, line)) {
      throw MapFormatError("row " + std::to_string(row) +
                           " (line " + std::to_string(row + 2) + "): missing");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<int>(line.size()) != width) {
      throw MapFormatError("row " + std::to_string(row) + " (line " +
                           std::to_string(row + 2) + "): length " +
                           std::to_string(line.size()) + ", expected " +
                           std::to_string(width));
    }
    for (int col = 0; col < width; ++col) {
      const char c = line[static_cast<std::size_t>(col)];
      if (c == '.') {
        cells.push_back(0);
      } else if (c == '#') {
        cells.push_back(1);
      } else {
        throw MapFormatError("row " + std::to_string(row) + ", col " +
                             std::to_string(col) + ": invalid character '" +
                             std::string(1, c) + "'");
      }
    }
  }
  return OccupancyGrid(width, height, std::move(cells));
}

OccupancyGrid parse_pgm_map(const std::string& bytes) {
  std::size_t pos = 2;  // past "P5"
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_ws();
    const std::size_t begin = pos;
    while (pos < bytes.size() &&
           std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    }
    if (pos == begin) {
      throw MapFormatError("byte " + std::to_string(begin) + ": expected " +
                           std::string(what));
    }
    return std::atoi(bytes.substr(begin, pos - begin).c_str());
  };
  const int width = read_int("width");
  const int height = read_int("height");
  const int maxval = read_int("maxval");
  if (width < 1 || height < 1) {
    throw MapFormatError("PGM header: non-positive dimensions");
  }
  if (maxval < 1 || maxval > 255) {
    throw MapFormatError("PGM header: unsupported maxval " +
                         std::to_string(maxval));
  }
  if (pos >= bytes.size()) {
    throw MapFormatError("byte " + std::to_string(pos) +
                         ": missing raster separator");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height;
  if (bytes.size() - pos < need) {
    throw MapFormatError("byte " + std::to_string(bytes.size()) +
                         ": raster truncated, need " + std::to_string(need) +
                         " bytes");
  }
  std::vector<std::uint8_t> cells(need);
  for (std::size_t i = 0; i < need; ++i) {
    const auto gray = static_cast<unsigned char>(bytes[pos + i]);
    cells[i] = gray < 128 ? 1 : 0;
  }
  return OccupancyGrid(width, height, std::move(cells));
}

}  // namespace

OccupancyGrid parse_map(const std::string& bytes) {
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    if (bytes[1] == '5') return parse_pgm_map(bytes);
    throw MapFormatError(std::string("byte 0: unsupported magic number \"") +
                         bytes.substr(0, 2) + "\"");
  }
  return parse_text_map(bytes);
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_map(buf.str());
  } catch (const MapFormatError& e) {
    throw MapFormatError(path + ": " + e.what());
  }
}

std::string format_map(const OccupancyGrid& grid) {
  std::string out = std::to_string(grid.width()) + " " +
                    std::to_string(grid.height()) + "\n";
  out.reserve(out.size() +
              static_cast<std::size_t>(grid.height()) * (grid.width() + 1));
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      out.push_back(grid.occupied(x, y) ? '#' : '.');
    }
    out.push_back('\n');
  }
  return out;
}

namespace {

constexpr int kMapWidth = 450;
constexpr int kMapHeight = 350;

class GridBuilder {
 public:
  GridBuilder(int w, int h)
      : w_(w), h_(h), cells_(static_cast<std::size_t>(w) * h, 0) {}

  // Half-open rectangle [x0, x1) x [y0, y1), clipped to the grid.
  void fill(int x0, int y0, int x1, int y1) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, w_);
    y1 = std::min(y1, h_);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        cells_[static_cast<std::size_t>(y) * w_ + x] = 1;
      }
    }
  }

  void clear(int x0, int y0, int x1, int y1) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, w_);
    y1 = std::min(y1, h_);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        cells_[static_cast<std::size_t>(y) * w_ + x] = 0;
      }
    }
  }

  void border(int thickness) {
    fill(0, 0, w_, thickness);
    fill(0, h_ - thickness, w_, h_);
    fill(0, 0, thickness, h_);
    fill(w_ - thickness, 0, w_, h_);
  }

  OccupancyGrid build() { return OccupancyGrid(w_, h_, std::move(cells_)); }

 private:
  int w_;
  int h_;
  std::vector<std::uint8_t> cells_;
};

// Small deterministic generator for procedural layouts; fixed constants so
// the builtin maps never change (see docs/ golden renders).
struct LayoutRng {
  std::uint64_t state;
  std::uint32_t next() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<std::uint32_t>(state >> 33);
  }
  int below(int n) { return static_cast<int>(next() % n); }
};

BuiltinWorld make_room() {
  GridBuilder b(kMapWidth, kMapHeight);
  b.border(8);
  // Goal room with a single entrance facing away from the start: the
  // straight line in is blocked and uninformed growth has to wrap around
  // the back to find the opening.
  b.fill(330, 130, 404, 138);  // top wall of the goal room
  b.fill(330, 212, 404, 220);  // bottom wall
  b.fill(330, 138, 338, 212);  // closed west side
  return BuiltinWorld{b.build(), Point{40, 175}, Point{370, 175}};
}

BuiltinWorld make_clutter() {
  GridBuilder b(kMapWidth, kMapHeight);
  b.border(8);
  const Point start{35, 35};
  const Point goal{415, 315};
  std::uint64_t clutter_seed = 0x9e3779b97f4a7c15ull;
  if (const char* s = std::getenv("MTRRT_CLUTTER_SEED")) clutter_seed = std::strtoull(s, nullptr, 10) * 0x9e3779b97f4a7c15ull + 1;
  LayoutRng rng{clutter_seed};
  // Large blocks define the passage structure; small blocks clog the
  // remaining gaps so uninformed search has to wander.
  int placed = 0;
  while (placed < 90) {
    const bool large = placed < 42;
    const int bw = large ? 30 + rng.below(50) : 12 + rng.below(14);
    const int bh = large ? 30 + rng.below(50) : 12 + rng.below(14);
    const int x0 = 12 + rng.below(kMapWidth - 24 - bw);
    const int y0 = 12 + rng.below(kMapHeight - 24 - bh);
    // Keep a clearance disk around start and goal.
    auto clear_of = [&](const Point& p) {
      const double ch = std::clamp(p.h, double(x0), double(x0 + bw));
      const double cv = std::clamp(p.v, double(y0), double(y0 + bh));
      return distance(Point{ch, cv}, p) > 40.0;
    };
    if (!clear_of(start) || !clear_of(goal)) continue;
    b.fill(x0, y0, x0 + bw, y0 + bh);
    ++placed;
  }
  return BuiltinWorld{b.build(), start, goal};
}

// Perfect maze over an 8x6 cell lattice: 45 px corridors, 10 px walls
// (bottom border absorbs the 10 px remainder).
BuiltinWorld make_maze() {
  constexpr int kCols = 8;
  constexpr int kRows = 6;
  constexpr int kWall = 10;
  constexpr int kCell = 45;
  constexpr int kPitch = kWall + kCell;  // 55

  GridBuilder b(kMapWidth, kMapHeight);
  b.fill(0, 0, kMapWidth, kMapHeight);
  auto carve_cell = [&](int i, int j) {
    const int x0 = kWall + i * kPitch;
    const int y0 = kWall + j * kPitch;
    b.clear(x0, y0, x0 + kCell, y0 + kCell);
  };
  auto carve_between = [&](int i0, int j0, int i1, int j1) {
    if (i1 < i0) std::swap(i0, i1);
    if (j1 < j0) std::swap(j0, j1);
    if (i0 != i1) {  // horizontal neighbors: open the vertical wall band
      const int x0 = kWall + i0 * kPitch + kCell;
      const int y0 = kWall + j0 * kPitch;
      b.clear(x0, y0, x0 + kWall, y0 + kCell);
    } else {
      const int x0 = kWall + i0 * kPitch;
      const int y0 = kWall + j0 * kPitch + kCell;
      b.clear(x0, y0, x0 + kCell, y0 + kWall);
    }
  };

  // Iterative DFS carving with a fixed seed chosen for a long solution
  // path.
  std::uint64_t maze_seed = 6;
  if (const char* s = std::getenv("MTRRT_MAZE_SEED")) maze_seed = std::strtoull(s, nullptr, 10);
  LayoutRng rng{maze_seed};
  std::vector<std::uint8_t> visited(kCols * kRows, 0);
  std::vector<std::pair<int, int>> stack;
  visited[0] = 1;
  carve_cell(0, 0);
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    const auto [ci, cj] = stack.back();
    int options[4][2];
    int n_opt = 0;
    const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& d : dirs) {
      const int ni = ci + d[0];
      const int nj = cj + d[1];
      if (ni < 0 || nj < 0 || ni >= kCols || nj >= kRows) continue;
      if (visited[nj * kCols + ni]) continue;
      options[n_opt][0] = ni;
      options[n_opt][1] = nj;
      ++n_opt;
    }
    if (n_opt == 0) {
      stack.pop_back();
      continue;
    }
    const int pick = rng.below(n_opt);
    const int ni = options[pick][0];
    const int nj = options[pick][1];
    visited[nj * kCols + ni] = 1;
    carve_cell(ni, nj);
    carve_between(ci, cj, ni, nj);
    stack.emplace_back(ni, nj);
  }

  auto center = [&](int i, int j) {
    return Point{double(kWall + i * kPitch + kCell / 2),
                 double(kWall + j * kPitch + kCell / 2)};
  };
  return BuiltinWorld{b.build(), center(0, 0), center(kCols - 1, kRows - 1)};
}

}  // namespace

BuiltinWorld builtin_map(const std::string& name) {
  if (name == "room") return make_room();
  if (name == "clutter") return make_clutter();
  if (name == "maze") return make_maze();
  throw std::invalid_argument("unknown builtin map: " + name);
}

const std::vector<std::string>& builtin_map_names() {
  static const std::vector<std::string> names{"room", "clutter", "maze"};
  return names;
}

}  // namespace mtrrt
