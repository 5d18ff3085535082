#pragma once

// CSV persistence. Every file starts with '#'-prefixed metadata lines
// (key=value), followed by one header row whose column names carry unit
// suffixes.

#include "cavmd/analysis.hpp"
#include "cavmd/dynamics.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cavmd {

std::string_view code_version();

/// Ordered key=value pairs written as "# key=value".
using Metadata = std::vector<std::pair<std::string, std::string>>;

Metadata config_metadata(const ExperimentConfig& config);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Metadata& meta);

struct LoadedTrajectory {
  Trajectory traj;
  std::map<std::string, std::string> metadata;
};

/// Throws io_error on malformed input and missing_observable if mandatory columns are absent.
LoadedTrajectory read_trajectory_csv(std::istream& in);

/// `local` may be null.
void write_spectrum_csv(std::ostream& out, const Spectrum1D& global, const Spectrum1D* local, const Metadata& meta);

struct PeakRow {
  std::string spectrum;  // "global" or "local"
  PolaritonPeaks peaks;
};
void write_peaks_csv(std::ostream& out, const std::vector<PeakRow>& rows, const Metadata& meta);

struct PolarizationRow {
  std::size_t N = 0;
  PolarizationStats stats;
};
void write_polarization_csv(std::ostream& out, const std::vector<PolarizationRow>& rows, const Metadata& meta);

}  // namespace cavmd
