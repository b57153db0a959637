#pragma once

#include <array>
#include <compare>
#include <cstddef>

namespace cemfd {

// Points always carry three coordinates; in 2D the third is zero.
using Point = std::array<double, 3>;

struct MultiIndex {
  std::array<int, 3> k{0, 0, 0};

  constexpr int& operator[](std::size_t i) { return k[i]; }
  constexpr int operator[](std::size_t i) const { return k[i]; }

  constexpr MultiIndex shifted(int axis, int by = 1) const {
    MultiIndex m = *this;
    m.k[static_cast<std::size_t>(axis)] += by;
    return m;
  }

  friend constexpr auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

// Closed axis-aligned cube [lo, lo + h]^n.
struct Cell {
  Point lo{0.0, 0.0, 0.0};
  double h = 0.0;
};

}  // namespace cemfd
