#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ftp/domain.hpp"

namespace ftp::windowing {

struct SampleOptions {
  /// Steps to advance after an emitted window; 0 selects window size + 1.
  int stride = 0;
  /// Permits horizons other than 1, 4 and 8.
  bool allow_any_horizon = false;
};

inline int window_size(int horizon) { return kInputSteps + horizon; }

/// True iff every adjacent timestamp difference is exactly 60 s.
/// Throws Error on an empty list.
bool check_continuity(std::span<const Waypoint> waypoints);

/// Scans `traj` left to right and emits each 16+horizon run of waypoints
/// spaced exactly 60 s apart. After an emitted window the scan advances by
/// the stride; when a candidate or a stride jump crosses a gap it resumes
/// at the first waypoint after the gap, so stride counting restarts in
/// every continuous segment.
///
/// Throws Error if the stride is smaller than the window or the horizon is
/// unsupported.
std::vector<Window> sample_windows(const Trajectory& traj, int horizon, const SampleOptions& opts = {});

/// sample_windows over many trajectories, concatenated in input order.
std::vector<Window> sample_all(std::span<const Trajectory> trajectories, int horizon,
                               const SampleOptions& opts = {});

/// JSON Lines: {"callsign","horizon","input":[[t,lon,lat,alt,vel,hdg]...],"target":[...]}
void write_windows(std::ostream& out, std::span<const Window> windows);
std::vector<Window> read_windows(std::istream& in);

}  // namespace ftp::windowing
