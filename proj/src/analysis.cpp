#include "cavmd/analysis.hpp"

#include "cavmd/error.hpp"

#include <fftw3.h>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cavmd {

namespace {

std::vector<double> blackman(std::size_t n) {
  std::vector<double> w(n);
  const double len = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = 2.0 * std::numbers::pi * static_cast<double>(k) / len;
    w[k] = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
  }
  return w;
}

struct FftwPlan {
  std::size_t n;
  double* in;
  fftw_complex* out;
  fftw_plan plan;

  explicit FftwPlan(std::size_t len)
      : n(len),
        in(fftw_alloc_real(len)),
        out(fftw_alloc_complex(len / 2 + 1)),
        plan(fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE)) {}
  ~FftwPlan() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace

void WindowSpec::validate() const {
  if (window_len < 4) throw Error(ErrorCode::invalid_argument, "window_len must be at least 4");
  const std::size_t s = effective_shift();
  if (s == 0 || s > window_len) throw Error(ErrorCode::invalid_argument, "window shift must lie in (0, window_len]");
}

Spectrum1D power_spectrum(std::span<const double> signal, double dt, const WindowSpec& spec) {
  spec.validate();
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
  const std::size_t L = spec.window_len;
  if (signal.size() < L) {
    throw Error(ErrorCode::signal_too_short,
                fmt::format("signal of {} samples is shorter than one window of {}", signal.size(), L));
  }
  const std::size_t shift = spec.effective_shift();
  std::size_t fitting = (signal.size() - L) / shift + 1;
  std::size_t used = fitting;
  Spectrum1D s;
  if (spec.max_windows != 0) {
    used = std::min(fitting, spec.max_windows);
    if (fitting < spec.max_windows) {
      s.warnings.push_back(fmt::format("only {} of {} requested windows fit in {} samples", fitting,
                                       spec.max_windows, signal.size()));
    }
  }
  // Trailing windows, so that any initial transient is discarded first.
  const std::size_t first = (fitting - used) * shift;

  const std::size_t n_bins = L / 2 + 1;
  s.window_len = L;
  s.n_windows = used;
  s.resolution = 2.0 * std::numbers::pi / (static_cast<double>(L) * dt);
  s.omega.resize(n_bins);
  for (std::size_t j = 0; j < n_bins; ++j) s.omega[j] = s.resolution * static_cast<double>(j);
  s.intensity.assign(n_bins, 0.0);

  const auto w = blackman(L);
  FftwPlan fft(L);
  for (std::size_t k = 0; k < used; ++k) {
    const auto window = signal.subspan(first + k * shift, L);
    double mean = 0.0;
    for (double x : window) mean += x;
    mean /= static_cast<double>(L);
    for (std::size_t i = 0; i < L; ++i) fft.in[i] = (window[i] - mean) * w[i];
    fftw_execute(fft.plan);
    for (std::size_t j = 0; j < n_bins; ++j) {
      const double re = fft.out[j][0];
      const double im = fft.out[j][1];
      const bool edge = j == 0 || 2 * j == L;
      s.intensity[j] += (edge ? 1.0 : 2.0) * (re * re + im * im) / static_cast<double>(L);
    }
  }
  for (double& v : s.intensity) v /= static_cast<double>(used);
  return s;
}

Spectrum1D add_spectra(const Spectrum1D& a, const Spectrum1D& b) {
  if (a.size() != b.size() || a.resolution != b.resolution) {
    throw Error(ErrorCode::dimension_mismatch, "spectra are on different frequency axes");
  }
  Spectrum1D out = a;
  for (std::size_t j = 0; j < out.size(); ++j) out.intensity[j] += b.intensity[j];
  return out;
}

Spectrum1D global_absorption(const Trajectory& traj, const WindowSpec& spec) {
  if (traj.dipole_total.empty()) throw Error(ErrorCode::missing_observable, "trajectory has no total dipole series");
  return power_spectrum(traj.dipole_total, traj.dt * static_cast<double>(traj.stride), spec);
}

Spectrum1D local_absorption(const Trajectory& traj, const WindowSpec& spec) {
  if (!traj.has_molecule_dipoles || traj.dipole.empty()) {
    throw Error(ErrorCode::missing_observable, "trajectory has no per-molecule dipole series");
  }
  const double dt = traj.dt * static_cast<double>(traj.stride);
  Spectrum1D total = power_spectrum(traj.dipole.front(), dt, spec);
  for (std::size_t n = 1; n < traj.dipole.size(); ++n) {
    total = add_spectra(total, power_spectrum(traj.dipole[n], dt, spec));
  }
  return total;
}

std::vector<Peak> find_peaks(const Spectrum1D& s, double min_prominence) {
  std::vector<Peak> peaks;
  const auto& y = s.intensity;
  if (y.size() < 3) return peaks;
  const double ymax = *std::max_element(y.begin(), y.end());
  if (!(ymax > 0.0)) return peaks;
  const double threshold = min_prominence * ymax;

  for (std::size_t j = 1; j + 1 < y.size(); ++j) {
    if (!(y[j] > y[j - 1] && y[j] >= y[j + 1])) continue;
    double left_min = y[j];
    for (std::size_t k = j; k-- > 0;) {
      if (y[k] > y[j]) break;
      left_min = std::min(left_min, y[k]);
    }
    double right_min = y[j];
    for (std::size_t k = j + 1; k < y.size(); ++k) {
      if (y[k] > y[j]) break;
      right_min = std::min(right_min, y[k]);
    }
    const double prominence = y[j] - std::max(left_min, right_min);
    if (prominence < threshold || prominence <= 0.0) continue;

    const double a = y[j - 1], b = y[j], c = y[j + 1];
    const double denom = a - 2.0 * b + c;
    const double offset = denom != 0.0 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    peaks.push_back(Peak{s.omega[j] + offset * s.resolution, b, prominence, j});
  }
  return peaks;
}

PolaritonPeaks rabi_analysis(const Spectrum1D& s, double omega_cavity, double min_prominence) {
  const auto peaks = find_peaks(s, min_prominence);
  const Peak* lp = nullptr;
  const Peak* up = nullptr;
  const Peak* dark = nullptr;
  for (const auto& p : peaks) {
    if (std::abs(p.omega - omega_cavity) <= s.resolution) {
      if (dark == nullptr || p.prominence > dark->prominence) dark = &p;
    } else if (p.omega < omega_cavity) {
      if (lp == nullptr || p.prominence > lp->prominence) lp = &p;
    } else {
      if (up == nullptr || p.prominence > up->prominence) up = &p;
    }
  }
  if (lp == nullptr || up == nullptr) {
    throw Error(ErrorCode::peaks_not_found,
                fmt::format("no peak pair brackets {:.4f} mH ({} peaks found)", omega_cavity * 1e3, peaks.size()));
  }
  PolaritonPeaks out;
  out.omega_LP = lp->omega;
  out.omega_UP = up->omega;
  out.rabi = up->omega - lp->omega;
  out.midpoint = 0.5 * (up->omega + lp->omega);
  if (dark != nullptr) out.dark = dark->omega;
  return out;
}

PolarizationStats polarization_stats(const std::vector<std::vector<double>>& dr) {
  PolarizationStats st;
  st.n_molecules = dr.size();
  if (dr.empty()) return st;
  st.n_samples = dr.front().size();
  if (st.n_samples == 0) return st;

  std::vector<double> avg(dr.size()), avg_abs(dr.size());
  double sum = 0.0, sum_abs = 0.0;
  for (std::size_t n = 0; n < dr.size(); ++n) {
    if (dr[n].size() != st.n_samples) {
      throw Error(ErrorCode::dimension_mismatch, "every molecule needs the same number of samples");
    }
    double a = 0.0, b = 0.0;
    for (double x : dr[n]) {
      a += x;
      b += std::abs(x);
    }
    sum += a;
    sum_abs += b;
    avg[n] = a / static_cast<double>(st.n_samples);
    avg_abs[n] = b / static_cast<double>(st.n_samples);
  }
  const double count = static_cast<double>(dr.size() * st.n_samples);
  st.mean_dr = sum / count;
  st.mean_abs_dr = sum_abs / count;

  if (dr.size() > 1) {
    const double nm = static_cast<double>(dr.size());
    double var = 0.0, var_abs = 0.0;
    for (std::size_t n = 0; n < dr.size(); ++n) {
      var += (avg[n] - st.mean_dr) * (avg[n] - st.mean_dr);
      var_abs += (avg_abs[n] - st.mean_abs_dr) * (avg_abs[n] - st.mean_abs_dr);
    }
    st.std_abs_dr = std::sqrt(var_abs / (nm - 1.0));
    st.sem_dr = std::sqrt(var / (nm - 1.0)) / std::sqrt(nm);
    st.sem_abs_dr = st.std_abs_dr / std::sqrt(nm);
  }
  return st;
}

PolarizationStats polarization_stats(const Trajectory& traj) {
  if (!traj.has_dr) throw Error(ErrorCode::missing_observable, "trajectory has no local polarization diagnostics");
  return polarization_stats(traj.dr);
}

}  // namespace cavmd
