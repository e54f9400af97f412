#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pullnav/geometry.hpp"

namespace pullnav {

/// Row-major boolean occupancy grid. Cell (col, row) covers the square with
/// center origin + ((col+0.5)*res, (row+0.5)*res).
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(std::size_t width, std::size_t height, double resolution,
                Vec2 origin = Vec2::Zero())
      : width_(width), height_(height), resolution_(resolution), origin_(origin),
        cells_(width * height, false) {
    if (width == 0 || height == 0 || resolution <= 0.0)
      throw std::invalid_argument("invalid grid dimensions");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double resolution() const { return resolution_; }
  const Vec2& origin() const { return origin_; }

  bool occupied(std::size_t col, std::size_t row) const { return cells_[row * width_ + col]; }
  void set_occupied(std::size_t col, std::size_t row, bool v = true) {
    cells_[row * width_ + col] = v;
  }

  bool in_bounds(long col, long row) const {
    return col >= 0 && row >= 0 && col < static_cast<long>(width_) &&
           row < static_cast<long>(height_);
  }

  Vec2 cell_center(std::size_t col, std::size_t row) const {
    return origin_ + Vec2((static_cast<double>(col) + 0.5) * resolution_,
                          (static_cast<double>(row) + 0.5) * resolution_);
  }

  /// Cell containing a world point; false when outside the grid.
  bool world_to_cell(const Vec2& p, std::size_t& col, std::size_t& row) const {
    const Vec2 local = p - origin_;
    const long c = static_cast<long>(std::floor(local.x() / resolution_));
    const long r = static_cast<long>(std::floor(local.y() / resolution_));
    if (!in_bounds(c, r)) return false;
    col = static_cast<std::size_t>(c);
    row = static_cast<std::size_t>(r);
    return true;
  }

  /// Treats out-of-bounds points as occupied.
  bool occupied_at(const Vec2& p) const {
    std::size_t c, r;
    if (!world_to_cell(p, c, r)) return true;
    return occupied(c, r);
  }

  /// Exact Euclidean distance (m) from each cell center to the nearest
  /// occupied cell center, via the two-pass squared distance transform.
  /// Cells farther than the grid diagonal (e.g. in an empty grid) report a
  /// distance beyond it.
  std::vector<double> distance_field() const {
    // Finite stand-in for "no source": larger than any in-grid squared
    // distance, so the parabola arithmetic never sees infinities.
    const double far2 = static_cast<double>(width_ * width_ + height_ * height_) + 1.0;
    std::vector<double> f(width_ * height_);

    // columns first
    for (std::size_t c = 0; c < width_; ++c) {
      std::vector<double> col(height_);
      for (std::size_t r = 0; r < height_; ++r) col[r] = occupied(c, r) ? 0.0 : far2;
      auto d = edt_1d(col);
      for (std::size_t r = 0; r < height_; ++r) f[r * width_ + c] = d[r];
    }
    // then rows
    std::vector<double> out(width_ * height_);
    for (std::size_t r = 0; r < height_; ++r) {
      std::vector<double> row(width_);
      for (std::size_t c = 0; c < width_; ++c) row[c] = f[r * width_ + c];
      auto d = edt_1d(row);
      for (std::size_t c = 0; c < width_; ++c)
        out[r * width_ + c] = std::sqrt(d[c]) * resolution_;
    }
    return out;
  }

  /// Marks every cell within `radius` of an occupied cell as occupied.
  OccupancyGrid inflate(double radius) const {
    OccupancyGrid out = *this;
    if (radius <= 0.0) return out;
    const auto dist = distance_field();
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (dist[i] <= radius) out.cells_[i] = true;
    return out;
  }

  /// Text format: first line "W H resolution_m", then H lines of W chars,
  /// '#' occupied and '.' free, row 0 first.
  static OccupancyGrid from_text(std::istream& is) {
    std::size_t w = 0, h = 0;
    double res = 0.0;
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("grid file: missing header");
    std::istringstream hs(header);
    if (!(hs >> w >> h >> res)) throw std::runtime_error("grid file: bad header");
    OccupancyGrid grid(w, h, res);
    for (std::size_t r = 0; r < h; ++r) {
      std::string line;
      if (!std::getline(is, line) || line.size() < w)
        throw std::runtime_error("grid file: truncated row");
      for (std::size_t c = 0; c < w; ++c) {
        if (line[c] == '#')
          grid.set_occupied(c, r);
        else if (line[c] != '.')
          throw std::runtime_error("grid file: unexpected character");
      }
    }
    return grid;
  }

  static OccupancyGrid from_text_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open grid file: " + path);
    return from_text(f);
  }

  void to_text(std::ostream& os) const {
    os << width_ << ' ' << height_ << ' ' << resolution_ << '\n';
    for (std::size_t r = 0; r < height_; ++r) {
      std::string line(width_, '.');
      for (std::size_t c = 0; c < width_; ++c)
        if (occupied(c, r)) line[c] = '#';
      os << line << '\n';
    }
  }

 private:
  // Felzenszwalb-Huttenlocher 1D squared distance transform. Inputs are
  // finite (see distance_field), so parabola intersections are well-defined.
  static std::vector<double> edt_1d(const std::vector<double>& f) {
    const std::size_t n = f.size();
    auto intersect = [&](std::size_t q, std::size_t p) {
      const double dq = static_cast<double>(q);
      const double dp = static_cast<double>(p);
      return ((f[q] + dq * dq) - (f[p] + dp * dp)) / (2.0 * (dq - dp));
    };

    std::vector<double> d(n);
    std::vector<std::size_t> v(n, 0);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (std::size_t q = 1; q < n; ++q) {
      double s = intersect(q, v[k]);
      while (s <= z[k]) {
        --k;
        s = intersect(q, v[k]);
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
      while (z[k + 1] < static_cast<double>(q)) ++k;
      const double dq = static_cast<double>(q) - static_cast<double>(v[k]);
      d[q] = dq * dq + f[v[k]];
    }
    return d;
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double resolution_ = 0.0;
  Vec2 origin_ = Vec2::Zero();
  std::vector<bool> cells_;
};

}  // namespace pullnav
