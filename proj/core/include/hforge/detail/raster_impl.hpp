#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

namespace hforge::raster {

inline double edge_function(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  const bool forward = a.x < b.x || (a.x == b.x && a.y <= b.y);
  const ScreenVertex& p = forward ? a : b;
  const ScreenVertex& q = forward ? b : a;
  const double value = (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
  return forward ? value : -value;
}

inline bool is_top_left(const ScreenVertex& a, const ScreenVertex& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

template <typename Visit>
void for_each_covered_pixel(ScreenVertex a, ScreenVertex b, ScreenVertex c, int width, int row_begin,
                            int row_end, Visit&& visit) {
  const double area = edge_function(a, b, c.x, c.y);
  if (!(area != 0.0) || !std::isfinite(area)) return;
  // Positive orientation; `flipped` maps weights back to the caller's order.
  const bool flipped = area < 0.0;
  if (flipped) std::swap(b, c);

  const double min_x = std::min({a.x, b.x, c.x});
  const double max_x = std::max({a.x, b.x, c.x});
  const double min_y = std::min({a.y, b.y, c.y});
  const double max_y = std::max({a.y, b.y, c.y});
  const int x0 = std::max(0, static_cast<int>(std::ceil(std::max(min_x, -1.0))));
  const int x1 = std::min(width - 1, static_cast<int>(std::floor(std::min(max_x, double(width)))));
  const int y0 = std::max(row_begin, static_cast<int>(std::ceil(std::max(min_y, double(row_begin) - 1.0))));
  const int y1 = std::min(row_end - 1, static_cast<int>(std::floor(std::min(max_y, double(row_end)))));

  const bool tl0 = is_top_left(b, c);
  const bool tl1 = is_top_left(c, a);
  const bool tl2 = is_top_left(a, b);
  for (int y = y0; y <= y1; ++y) {
    const double py = y;
    for (int x = x0; x <= x1; ++x) {
      const double px = x;
      const double e0 = edge_function(b, c, px, py);
      if (e0 < 0.0 || (e0 == 0.0 && !tl0)) continue;
      const double e1 = edge_function(c, a, px, py);
      if (e1 < 0.0 || (e1 == 0.0 && !tl1)) continue;
      const double e2 = edge_function(a, b, px, py);
      if (e2 < 0.0 || (e2 == 0.0 && !tl2)) continue;
      const double sum = e0 + e1 + e2;
      const double w0 = e0 / sum;
      const double w1 = e1 / sum;
      const double w2 = e2 / sum;
      if (flipped) {
        visit(x, y, w0, w2, w1);
      } else {
        visit(x, y, w0, w1, w2);
      }
    }
  }
}

}  // namespace hforge::raster
