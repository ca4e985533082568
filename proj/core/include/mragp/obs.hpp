#pragma once

#include <vector>

#include "mragp/geo.hpp"

namespace mragp {

struct Observation {
  LonLat ll;
  double value = 0.0;  // Kelvin (residual Kelvin after detrending)
  int quality = 5;     // 0..5, retained when >= the configured minimum
};

using ObsList = std::vector<Observation>;

}  // namespace mragp
