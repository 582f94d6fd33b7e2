#pragma once

#include <cmath>

namespace peb {

// A point in dimensionless coordinates (lengths scaled by the wafer radius).
struct Point {
  double x = 0.0;
  double y = 0.0;

  double radius() const { return std::hypot(x, y); }
  friend bool operator==(const Point&, const Point&) = default;
};

}  // namespace peb
