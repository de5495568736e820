#pragma once

#include <vector>

#include "ftp/domain.hpp"

namespace ftp::predictors {

/// Repeats the last input waypoint `n` times, one minute apart.
std::vector<Waypoint> predict_persistence(const Window& window, int n);

/// Constant-track dead reckoning.
///
/// Ground speed and heading are recovered from the positions of the last
/// two inputs, the vertical rate from their altitudes. Each output minute
/// moves the aircraft with motion::step; reported velocity and heading stay
/// at the last input's values. Outputs are not rounded.
///
/// Throws Error when |latitude| of the last input is >= 89.9.
std::vector<Waypoint> predict_kinematic(const Window& window, int n);

}  // namespace ftp::predictors
