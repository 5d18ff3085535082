// Command-line front end: run trajectories, analyse them, and query the
// harmonic reference model.

#include "cavmd/analysis.hpp"
#include "cavmd/config.hpp"
#include "cavmd/dynamics.hpp"
#include "cavmd/error.hpp"
#include "cavmd/harmonic_oracle.hpp"
#include "cavmd/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cavmd;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kIoError = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::config_parse:
    case ErrorCode::config_validation:
    case ErrorCode::invalid_argument:
      return kConfigError;
    case ErrorCode::io_error:
      return kIoError;
    default:
      return kNumericalFailure;
  }
}

int report(std::string_view code, std::optional<std::size_t> step, std::string_view message, int exit_code) {
  std::cerr << "error: " << message << "\n";
  std::cerr << "ERROR code=" << code << " step=" << (step ? std::to_string(*step) : std::string("-1")) << "\n";
  return exit_code;
}

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path.string()));
  return out;
}

LoadedTrajectory load_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open trajectory '{}'", path.string()));
  return read_trajectory_csv(in);
}

struct SpectrumFlags {
  std::size_t window = 4096;
  double shift = 1.0 / 3.0;
  std::size_t max_windows = 33;
  double prominence = 0.05;

  WindowSpec spec() const {
    WindowSpec w;
    w.window_len = window;
    w.shift = static_cast<std::size_t>(std::llround(shift * static_cast<double>(window)));
    w.max_windows = max_windows;
    return w;
  }
};

void add_spectrum_flags(CLI::App* cmd, SpectrumFlags& f) {
  cmd->add_option("--window", f.window, "Samples per window")->check(CLI::Range(4, 1 << 24));
  cmd->add_option("--shift", f.shift, "Window shift as a fraction of the window length")->check(CLI::Range(1e-6, 1.0));
  cmd->add_option("--max-windows", f.max_windows, "Number of trailing windows averaged (0 = all)");
  cmd->add_option("--prominence", f.prominence, "Minimum relative peak prominence")->check(CLI::Range(0.0, 1.0));
}

void print_warnings(const Spectrum1D& s) {
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
}

Metadata spectrum_metadata(const std::map<std::string, std::string>& traj_meta, const SpectrumFlags& f) {
  Metadata meta;
  for (const char* key : {"config_hash", "seed", "code_version"}) {
    if (auto it = traj_meta.find(key); it != traj_meta.end()) meta.emplace_back(key, it->second);
  }
  const auto spec = f.spec();
  meta.emplace_back("window_len", std::to_string(spec.window_len));
  meta.emplace_back("window_shift", std::to_string(spec.effective_shift()));
  meta.emplace_back("max_windows", std::to_string(spec.max_windows));
  return meta;
}

// Global (and, when recorded, local) spectra plus the polariton peaks of each.
struct SpectrumResult {
  Spectrum1D global;
  std::optional<Spectrum1D> local;
  std::vector<PeakRow> peaks;
};

SpectrumResult analyse(const Trajectory& traj, double omega_cavity, const SpectrumFlags& f) {
  SpectrumResult r;
  r.global = global_absorption(traj, f.spec());
  print_warnings(r.global);
  if (traj.has_molecule_dipoles) r.local = local_absorption(traj, f.spec());
  const auto try_peaks = [&](const std::string& name, const Spectrum1D& s) {
    try {
      r.peaks.push_back(PeakRow{name, rabi_analysis(s, omega_cavity, f.prominence)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::peaks_not_found) throw;
      std::cerr << "warning: " << name << " spectrum: " << e.what() << "\n";
    }
  };
  try_peaks("global", r.global);
  if (r.local) try_peaks("local", *r.local);
  return r;
}

void write_spectrum_files(const fs::path& dir, const SpectrumResult& r, const Metadata& meta) {
  auto spectrum = open_output(dir / "spectrum.csv");
  write_spectrum_csv(spectrum, r.global, r.local ? &*r.local : nullptr, meta);
  auto peaks = open_output(dir / "peaks.csv");
  write_peaks_csv(peaks, r.peaks, meta);
}

// ---------------------------------------------------------------- run

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool progress = false;
};

int cmd_run(const RunFlags& f) {
  auto config = load_config(f.config);
  if (f.seed) config.seed = *f.seed;
  if (!f.out.empty()) config.output_dir = f.out;

  ProgressCallback progress;
  if (f.progress) {
    progress = [](std::size_t step, std::size_t n) {
      if (n >= 10 && step % (n / 10) == 0) std::cerr << fmt::format("step {}/{}\n", step, n);
    };
  }
  const auto traj = run_trajectory(config, progress);
  const fs::path path = fs::path(config.output_dir) / "trajectory.csv";
  auto out = open_output(path);
  write_trajectory_csv(out, traj, config_metadata(config));
  out.close();
  if (!out) throw Error(ErrorCode::io_error, fmt::format("failed writing '{}'", path.string()));
  std::cout << fmt::format("wrote {} ({} samples)\n", path.string(), traj.n_samples());

  if (traj.failure) {
    const auto& fail = *traj.failure;
    int code = kNumericalFailure;
    for (int c = 0; c <= static_cast<int>(ErrorCode::io_error); ++c) {
      if (to_string(static_cast<ErrorCode>(c)) == fail.code) code = exit_code_for(static_cast<ErrorCode>(c));
    }
    return report(fail.code, fail.step, fail.message, code);
  }
  return kOk;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumCmdFlags {
  std::string traj;
  double omega_cavity_mH = 0.0;
  std::string out = ".";
  SpectrumFlags spectrum;
};

int cmd_spectrum(const SpectrumCmdFlags& f) {
  const auto loaded = load_trajectory(f.traj);
  const auto r = analyse(loaded.traj, f.omega_cavity_mH * 1e-3, f.spectrum);
  write_spectrum_files(f.out, r, spectrum_metadata(loaded.metadata, f.spectrum));
  for (const auto& row : r.peaks) {
    std::cout << fmt::format("{}: LP {:.4f} mH  UP {:.4f} mH  Rabi {:.4f} mH  midpoint {:.4f} mH\n", row.spectrum,
                             row.peaks.omega_LP * 1e3, row.peaks.omega_UP * 1e3, row.peaks.rabi * 1e3,
                             row.peaks.midpoint * 1e3);
  }
  if (r.peaks.empty()) {
    const auto peaks = find_peaks(r.global, f.spectrum.prominence);
    for (const auto& p : peaks) std::cout << fmt::format("global peak at {:.4f} mH\n", p.omega * 1e3);
  }
  return kOk;
}

// ---------------------------------------------------------------- polarization

struct PolarizationFlags {
  std::vector<std::string> traj;
  std::string out = ".";
};

int cmd_polarization(const PolarizationFlags& f) {
  std::vector<PolarizationRow> rows;
  Metadata meta;
  for (const auto& path : f.traj) {
    const auto loaded = load_trajectory(path);
    const auto stats = polarization_stats(loaded.traj);
    rows.push_back(PolarizationRow{loaded.traj.n_molecules, stats});
    const auto hash = loaded.metadata.find("config_hash");
    const auto seed = loaded.metadata.find("seed");
    meta.emplace_back(fmt::format("source{}", rows.size() - 1),
                      fmt::format("{} config_hash={} seed={}", fs::path(path).filename().string(),
                                  hash != loaded.metadata.end() ? hash->second : "?",
                                  seed != loaded.metadata.end() ? seed->second : "?"));
    std::cout << fmt::format("N={}: <dr> = {:.3e} +- {:.1e} bohr, <|dr|> = {:.3e} +- {:.1e} bohr\n", loaded.traj.n_molecules,
                             stats.mean_dr, stats.sem_dr, stats.mean_abs_dr, stats.sem_abs_dr);
  }
  meta.emplace_back("code_version", std::string(code_version()));
  auto out = open_output(fs::path(f.out) / "polarization.csv");
  write_polarization_csv(out, rows, meta);
  return kOk;
}

// ---------------------------------------------------------------- N lists

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    while (pos < item.size() && item[pos] == ' ') ++pos;
    if (pos != item.size() || v == 0) {
      throw Error(ErrorCode::invalid_argument, fmt::format("--n-list entry '{}' is not a positive integer", item));
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "--n-list is empty");
  return out;
}

// The config's lambda is the N-independent reference when the Rabi splitting
// is held fixed, and the per-molecule value otherwise.
double sweep_lambda(const ExperimentConfig& c, std::size_t N, bool fixed_rabi) {
  const double lambda = c.cavity.front().lambda;
  return fixed_rabi ? lambda_for_N(lambda, N, c.ensemble.orientation) : lambda;
}

// ---------------------------------------------------------------- oracle

struct OracleFlags {
  std::string config;
  std::string n_list = "1,4,16,64";
  bool fixed_rabi = false;
  std::string out = ".";
};

int cmd_oracle(const OracleFlags& f) {
  const auto config = load_config(f.config);
  const auto fit = fit_harmonic_molecule(make_grid(config.grid.n_points, config.grid.spacing), config.molecule);
  std::cout << fmt::format("bare molecule: R_min {:.6f} bohr, omega_vib {:.5f} mH, mu' {:.6f}, alpha_e {:.4f}\n",
                           fit.r_min, fit.omega_vib * 1e3, fit.mu_prime, fit.alpha_e);
  Metadata meta = config_metadata(config);
  meta.emplace_back("omega_vib_mH", fmt::format("{}", fit.omega_vib * 1e3));
  meta.emplace_back("mu_prime_au", fmt::format("{}", fit.mu_prime));
  meta.emplace_back("alpha_e_au", fmt::format("{}", fit.alpha_e));
  meta.emplace_back("orientation", "aligned");

  auto out = open_output(fs::path(f.out) / "oracle.csv");
  for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
  out << "N,lambda_au,omega_LP_mH,omega_UP_mH,midpoint_mH,rabi_mH\n";
  for (std::size_t N : parse_n_list(f.n_list)) {
    HarmonicEnsembleParams p;
    p.n_molecules = N;
    p.omega_vib = fit.omega_vib;
    p.mu_prime = fit.mu_prime;
    p.mass = config.molecule.M;
    p.omega_cavity = config.cavity.front().omega;
    p.lambda = sweep_lambda(config, N, f.fixed_rabi);
    p.alpha_e = fit.alpha_e;
    const auto pred = polariton_prediction(p);
    out << fmt::format("{},{},{},{},{},{}\n", N, p.lambda, pred.omega_LP * 1e3, pred.omega_UP * 1e3,
                       pred.midpoint * 1e3, pred.rabi * 1e3);
    std::cout << fmt::format("N={:<5} LP {:.4f}  UP {:.4f}  midpoint {:.4f}  Rabi {:.4f} mH\n", N, pred.omega_LP * 1e3,
                             pred.omega_UP * 1e3, pred.midpoint * 1e3, pred.rabi * 1e3);
  }
  return kOk;
}

// ---------------------------------------------------------------- check-forces

struct CheckForcesFlags {
  std::string config;
  int n_samples = 10;
  double step = 1e-4;
};

int cmd_check_forces(const CheckForcesFlags& f) {
  const auto result = check_forces(load_config(f.config), f.n_samples, f.step);
  std::cout << fmt::format("max relative error of {} forces over {} configurations: {:.3e}\n", result.n_forces,
                           f.n_samples, result.max_relative_error);
  if (result.max_relative_error > 1e-4) {
    return report("force_mismatch", std::nullopt,
                  fmt::format("force error {:.3e} exceeds 1e-4", result.max_relative_error), kNumericalFailure);
  }
  return kOk;
}

// ---------------------------------------------------------------- scaling-sweep

struct SweepFlags {
  std::string config;
  std::string n_list = "1,4,16,64";
  bool fixed_rabi = false;
  std::string out;
  SpectrumFlags spectrum;
};

int cmd_scaling_sweep(const SweepFlags& f) {
  const auto base = load_config(f.config);
  const fs::path out_dir = f.out.empty() ? fs::path(base.output_dir) : fs::path(f.out);
  auto table = open_output(out_dir / "scaling.csv");
  for (const auto& [k, v] : config_metadata(base)) table << "# " << k << "=" << v << "\n";
  table << fmt::format("# fixed_rabi={}\n", f.fixed_rabi);
  table << "N,lambda_au,omega_LP_mH,omega_UP_mH,rabi_mH,midpoint_mH\n";

  for (std::size_t N : parse_n_list(f.n_list)) {
    auto c = base;
    c.ensemble.N = N;
    c.cavity.front().lambda = sweep_lambda(base, N, f.fixed_rabi);
    c.output_dir = (out_dir / fmt::format("N{}", N)).string();
    c.validate();
    std::cerr << fmt::format("N={} lambda={}\n", N, c.cavity.front().lambda);

    const auto traj = run_trajectory(c);
    auto traj_out = open_output(fs::path(c.output_dir) / "trajectory.csv");
    write_trajectory_csv(traj_out, traj, config_metadata(c));
    if (traj.failure) {
      const auto& fail = *traj.failure;
      return report(fail.code, fail.step, fmt::format("N={}: {}", N, fail.message), kNumericalFailure);
    }

    // The integrator stiffens every mode slightly; bracket with the cavity as it is propagated.
    const auto r = analyse(traj, verlet_frequency(c.cavity.front().omega, c.thermo.dt), f.spectrum);
    std::map<std::string, std::string> traj_meta;
    for (const auto& [k, v] : config_metadata(c)) traj_meta[k] = v;
    write_spectrum_files(c.output_dir, r, spectrum_metadata(traj_meta, f.spectrum));
    const auto global = std::find_if(r.peaks.begin(), r.peaks.end(), [](const PeakRow& p) { return p.spectrum == "global"; });
    if (global == r.peaks.end()) {
      table << fmt::format("{},{},nan,nan,nan,nan\n", N, c.cavity.front().lambda);
      continue;
    }
    const auto& p = global->peaks;
    table << fmt::format("{},{},{},{},{},{}\n", N, c.cavity.front().lambda, p.omega_LP * 1e3, p.omega_UP * 1e3,
                         p.rabi * 1e3, p.midpoint * 1e3);
    std::cout << fmt::format("N={:<5} Rabi {:.4f} mH  midpoint {:.4f} mH\n", N, p.rabi * 1e3, p.midpoint * 1e3);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity Born-Oppenheimer molecular dynamics of Shin-Metiu ensembles"};
  app.set_version_flag("--version", std::string(code_version()));
  app.require_subcommand(1);

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Propagate one trajectory and write trajectory.csv");
  run_cmd->add_option("--config", run.config, "Experiment config file")->required();
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("--out", run.out, "Output directory (overrides output_dir)");
  run_cmd->add_flag("--progress", run.progress, "Report progress on stderr");

  SpectrumCmdFlags spectrum;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Absorption spectra and polariton peaks of a trajectory");
  spectrum_cmd->add_option("--traj", spectrum.traj, "Trajectory CSV")->required();
  spectrum_cmd->add_option("--omega-cavity", spectrum.omega_cavity_mH, "Cavity frequency in mH")->required();
  spectrum_cmd->add_option("--out", spectrum.out, "Output directory");
  add_spectrum_flags(spectrum_cmd, spectrum.spectrum);

  PolarizationFlags polarization;
  auto* polarization_cmd = app.add_subcommand("polarization", "Local polarization statistics, one row per trajectory");
  polarization_cmd->add_option("--traj", polarization.traj, "Trajectory CSV files")->required()->expected(1, -1);
  polarization_cmd->add_option("--out", polarization.out, "Output directory");

  OracleFlags oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Harmonic-model polariton predictions versus N");
  oracle_cmd->add_option("--config", oracle.config, "Experiment config file")->required();
  oracle_cmd->add_option("--n-list", oracle.n_list, "Comma-separated ensemble sizes");
  oracle_cmd->add_flag("--fixed-rabi", oracle.fixed_rabi, "Rescale lambda with N");
  oracle_cmd->add_option("--out", oracle.out, "Output directory");

  CheckForcesFlags forces;
  auto* forces_cmd = app.add_subcommand("check-forces", "Compare analytic and finite-difference forces");
  forces_cmd->add_option("--config", forces.config, "Experiment config file")->required();
  forces_cmd->add_option("--n-samples", forces.n_samples, "Number of random configurations")->check(CLI::PositiveNumber);
  forces_cmd->add_option("--step", forces.step, "Finite-difference step")->check(CLI::PositiveNumber);

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("scaling-sweep", "Run an N sweep and tabulate the Rabi splittings");
  sweep_cmd->add_option("--config", sweep.config, "Experiment config file")->required();
  sweep_cmd->add_option("--n-list", sweep.n_list, "Comma-separated ensemble sizes");
  sweep_cmd->add_flag("--fixed-rabi", sweep.fixed_rabi, "Rescale lambda with N");
  sweep_cmd->add_option("--out", sweep.out, "Output directory");
  add_spectrum_flags(sweep_cmd, sweep.spectrum);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return kOk;
    return report("usage", std::nullopt, e.what(), kConfigError);
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*spectrum_cmd) return cmd_spectrum(spectrum);
    if (*polarization_cmd) return cmd_polarization(polarization);
    if (*oracle_cmd) return cmd_oracle(oracle);
    if (*forces_cmd) return cmd_check_forces(forces);
    if (*sweep_cmd) return cmd_scaling_sweep(sweep);
  } catch (const Error& e) {
    return report(to_string(e.code()), e.step(), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report("internal", std::nullopt, e.what(), kNumericalFailure);
  }
  return kOk;
}
