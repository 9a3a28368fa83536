#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace pipemaint {

inline double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (const double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

/// Population standard deviation.
inline double stddev_of(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

/// Mean and std of the trailing window ending at `index` (inclusive); shorter
/// at the start of the series.
struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline WindowStats trailing_window(std::span<const double> series, std::size_t index, std::size_t window) {
  const std::size_t begin = index + 1 >= window ? index + 1 - window : 0;
  const auto slice = series.subspan(begin, index + 1 - begin);
  return {mean_of(slice), stddev_of(slice)};
}

}  // namespace pipemaint
