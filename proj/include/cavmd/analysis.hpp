#pragma once

// Vibrational absorption spectra from dipole time series (windowed power
// spectra), polariton peak extraction and local polarization statistics.

#include "cavmd/dynamics.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cavmd {

struct WindowSpec {
  std::size_t window_len = 4096;
  std::size_t shift = 0;         // 0 selects window_len / 3
  std::size_t max_windows = 33;  // 0 uses every window that fits; otherwise the trailing ones

  std::size_t effective_shift() const { return shift == 0 ? window_len / 3 : shift; }
  void validate() const;
};

struct Spectrum1D {
  std::vector<double> omega;      // angular frequency, hartree
  std::vector<double> intensity;  // arbitrary units, >= 0
  double resolution = 0.0;        // 2 pi / (window_len dt)
  std::size_t window_len = 0;
  std::size_t n_windows = 0;
  std::vector<std::string> warnings;

  std::size_t size() const { return omega.size(); }
};

/// Window-averaged periodogram. Each window has its mean removed and is
/// multiplied by a periodic Blackman window; intensities are one-sided
/// (interior bins doubled) and normalized so that
///   sum_j intensity_j / window_len = mean over samples of the windowed signal squared,
/// averaged over windows. Throws signal_too_short.
Spectrum1D power_spectrum(std::span<const double> signal, double dt, const WindowSpec& spec = {});

/// Spectrum of the total projected dipole. Throws missing_observable.
Spectrum1D global_absorption(const Trajectory& traj, const WindowSpec& spec = {});

/// Sum over molecules of the spectra of the projected molecular dipoles.
Spectrum1D local_absorption(const Trajectory& traj, const WindowSpec& spec = {});

/// Elementwise sum of spectra on the same axis.
Spectrum1D add_spectra(const Spectrum1D& a, const Spectrum1D& b);

struct Peak {
  double omega = 0.0;  // parabolic sub-bin estimate
  double intensity = 0.0;
  double prominence = 0.0;
  std::size_t bin = 0;
};

/// Interior local maxima whose topographic prominence is at least
/// `min_prominence` times the spectrum maximum, sorted by omega.
std::vector<Peak> find_peaks(const Spectrum1D& s, double min_prominence = 0.05);

struct PolaritonPeaks {
  double omega_LP = 0.0;
  double omega_UP = 0.0;
  double rabi = 0.0;
  double midpoint = 0.0;
  std::optional<double> dark;
};

/// LP and UP are the most prominent peaks below and above omega_cavity,
/// ignoring a peak within one bin of omega_cavity (reported as `dark`).
/// Throws peaks_not_found.
PolaritonPeaks rabi_analysis(const Spectrum1D& s, double omega_cavity, double min_prominence = 0.05);

struct PolarizationStats {
  double mean_dr = 0.0;
  double mean_abs_dr = 0.0;
  double std_abs_dr = 0.0;   // across per-molecule time averages of |dr|
  double sem_dr = 0.0;       // std of per-molecule time averages of dr / sqrt(N)
  double sem_abs_dr = 0.0;   // std_abs_dr / sqrt(N)
  std::size_t n_molecules = 0;
  std::size_t n_samples = 0;
};

/// `dr[n][t]`; every molecule must have the same number of samples.
PolarizationStats polarization_stats(const std::vector<std::vector<double>>& dr);
PolarizationStats polarization_stats(const Trajectory& traj);

}  // namespace cavmd
