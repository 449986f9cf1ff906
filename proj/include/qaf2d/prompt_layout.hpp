#pragma once

// Parameter accounting for padding-style visual prompts on a C x H x W
// feature map: two C x (tau H) x W patches on top and bottom plus two
// C x (H - 2 tau H) x (tau W) patches on the left and right.

#include <cmath>
#include <cstdint>

#include "qaf2d/errors.hpp"

namespace qaf2d {

struct PromptShape {
  std::int64_t channels = 1;
  std::int64_t height = 1;
  std::int64_t width = 1;
  double tau = 0.2;
};

inline void validate(const PromptShape& s) {
  if (s.channels < 1 || s.height < 1 || s.width < 1) {
    throw ConfigError("prompt shape requires channels, height and width >= 1");
  }
  if (!(s.tau > 0.0 && s.tau <= 0.5)) throw ConfigError("prompt tau must lie in (0, 0.5]");
}

/// Real-valued count: tau * H and tau * W are not rounded. Equals
/// 4 C H W tau (1 - tau).
inline double prompt_param_count(const PromptShape& s) {
  validate(s);
  const double c = static_cast<double>(s.channels);
  const double h = static_cast<double>(s.height);
  const double w = static_cast<double>(s.width);
  const double band = s.tau * h;
  const double side = s.tau * w;
  return 2.0 * c * band * w + 2.0 * c * (h - 2.0 * band) * side;
}

/// Integer count with each patch dimension floored to whole cells.
inline std::int64_t prompt_param_count_floor(const PromptShape& s) {
  validate(s);
  const auto band = static_cast<std::int64_t>(std::floor(s.tau * static_cast<double>(s.height)));
  const auto side = static_cast<std::int64_t>(std::floor(s.tau * static_cast<double>(s.width)));
  return 2 * s.channels * band * s.width + 2 * s.channels * (s.height - 2 * band) * side;
}

}  // namespace qaf2d
