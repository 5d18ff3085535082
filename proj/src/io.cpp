#include "cavmd/io.hpp"

#include "cavmd/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#ifndef CAVMD_VERSION
#define CAVMD_VERSION "unknown"
#endif

namespace cavmd {

namespace {

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(sep, pos);
    parts.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

double to_double(std::string_view s, std::size_t line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::io_error, fmt::format("line {}: cannot parse '{}' as a number", line, s));
  }
  return x;
}

}  // namespace

std::string_view code_version() { return CAVMD_VERSION; }

Metadata config_metadata(const ExperimentConfig& config) {
  return {{"config_hash", config.hash()}, {"seed", std::to_string(config.seed)},
          {"code_version", std::string(code_version())}};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const Metadata& meta) {
  out << "# cavmd trajectory\n";
  write_metadata(out, meta);
  out << fmt::format("# n_molecules={}\n# n_modes={}\n# dt_au={}\n# stride={}\n", traj.n_molecules, traj.n_modes,
                     traj.dt, traj.stride);

  std::string header = "step,time_au";
  for (std::size_t a = 0; a < traj.n_modes; ++a) header += fmt::format(",q{}_au", a);
  header +=
      ",dipole_total_au,ekin_nuclear_Eh,ekin_photon_Eh,e_bare_Eh,e_dse_Eh,e_coupling_Eh,e_dd_Eh,e_photon_Eh,"
      "e_total_Eh,scf_iterations";
  if (traj.has_molecule_dipoles) {
    for (std::size_t n = 0; n < traj.n_molecules; ++n) header += fmt::format(",dipole{}_au", n);
  }
  if (traj.has_dr) {
    for (std::size_t n = 0; n < traj.n_molecules; ++n) header += fmt::format(",dr{}_bohr", n);
  }
  out << header << '\n';

  std::string row;
  for (std::size_t t = 0; t < traj.n_samples(); ++t) {
    row.clear();
    row += fmt::format("{},{}", traj.step[t], traj.time[t]);
    for (std::size_t a = 0; a < traj.n_modes; ++a) row += fmt::format(",{}", traj.q[a][t]);
    const auto& e = traj.energy[t];
    row += fmt::format(",{},{},{},{},{},{},{},{},{},{}", traj.dipole_total[t], traj.ekin_nuclear[t],
                       traj.ekin_photon[t], e.bare, e.dse_local, e.coupling, e.dipole_dipole, e.photon, e.total,
                       traj.scf_iterations[t]);
    if (traj.has_molecule_dipoles) {
      for (std::size_t n = 0; n < traj.n_molecules; ++n) row += fmt::format(",{}", traj.dipole[n][t]);
    }
    if (traj.has_dr) {
      for (std::size_t n = 0; n < traj.n_molecules; ++n) row += fmt::format(",{}", traj.dr[n][t]);
    }
    out << row << '\n';
  }
  if (traj.failure) {
    out << fmt::format("# ERROR code={} step={}\n", traj.failure->code, traj.failure->step);
  }
}

LoadedTrajectory read_trajectory_csv(std::istream& in) {
  LoadedTrajectory result;
  auto& traj = result.traj;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> columns;
  std::map<std::string, std::size_t> index;

  const auto column = [&](const std::string& name) -> std::size_t {
    const auto it = index.find(name);
    if (it == index.end()) throw Error(ErrorCode::missing_observable, fmt::format("column '{}' is missing", name));
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = std::string_view(line).substr(1);
      const auto eq = body.find('=');
      if (body.rfind(" ERROR", 0) == 0) {
        TrajectoryFailure f;
        for (auto part : split(body.substr(7), ' ')) {
          if (part.rfind("code=", 0) == 0) f.code = std::string(part.substr(5));
          if (part.rfind("step=", 0) == 0) f.step = static_cast<std::size_t>(to_double(part.substr(5), line_no));
        }
        traj.failure = f;
      } else if (eq != std::string_view::npos) {
        auto key = body.substr(0, eq);
        while (!key.empty() && key.front() == ' ') key.remove_prefix(1);
        result.metadata[std::string(key)] = std::string(body.substr(eq + 1));
      }
      continue;
    }
    if (columns.empty()) {
      for (auto c : split(line, ',')) columns.emplace_back(c);
      for (std::size_t i = 0; i < columns.size(); ++i) index[columns[i]] = i;
      traj.n_modes = 0;
      while (index.count(fmt::format("q{}_au", traj.n_modes))) ++traj.n_modes;
      std::size_t nd = 0;
      while (index.count(fmt::format("dipole{}_au", nd))) ++nd;
      std::size_t ndr = 0;
      while (index.count(fmt::format("dr{}_bohr", ndr))) ++ndr;
      traj.n_molecules = std::max(nd, ndr);
      if (traj.n_molecules == 0 && result.metadata.count("n_molecules")) {
        traj.n_molecules = static_cast<std::size_t>(to_double(result.metadata["n_molecules"], line_no));
      }
      traj.has_molecule_dipoles = nd > 0;
      traj.has_dr = ndr > 0;
      traj.q.resize(traj.n_modes);
      traj.dipole.resize(nd);
      traj.dr.resize(ndr);
      column("step");
      column("time_au");
      column("dipole_total_au");
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != columns.size()) {
      throw Error(ErrorCode::io_error,
                  fmt::format("line {}: expected {} fields, got {}", line_no, columns.size(), fields.size()));
    }
    const auto get = [&](const std::string& name) { return to_double(fields[column(name)], line_no); };
    traj.step.push_back(static_cast<std::size_t>(get("step")));
    traj.time.push_back(get("time_au"));
    for (std::size_t a = 0; a < traj.n_modes; ++a) traj.q[a].push_back(get(fmt::format("q{}_au", a)));
    traj.dipole_total.push_back(get("dipole_total_au"));
    const auto optional = [&](const std::string& name) { return index.count(name) ? get(name) : 0.0; };
    traj.ekin_nuclear.push_back(optional("ekin_nuclear_Eh"));
    traj.ekin_photon.push_back(optional("ekin_photon_Eh"));
    EnergyBreakdown e;
    e.bare = optional("e_bare_Eh");
    e.dse_local = optional("e_dse_Eh");
    e.coupling = optional("e_coupling_Eh");
    e.dipole_dipole = optional("e_dd_Eh");
    e.photon = optional("e_photon_Eh");
    e.total = optional("e_total_Eh");
    traj.energy.push_back(e);
    traj.scf_iterations.push_back(static_cast<int>(optional("scf_iterations")));
    for (std::size_t n = 0; n < traj.dipole.size(); ++n) traj.dipole[n].push_back(get(fmt::format("dipole{}_au", n)));
    for (std::size_t n = 0; n < traj.dr.size(); ++n) traj.dr[n].push_back(get(fmt::format("dr{}_bohr", n)));
  }
  if (columns.empty()) throw Error(ErrorCode::io_error, "trajectory file has no header row");
  if (result.metadata.count("dt_au")) traj.dt = to_double(result.metadata["dt_au"], 0);
  if (result.metadata.count("stride")) traj.stride = static_cast<std::size_t>(to_double(result.metadata["stride"], 0));
  if (!(traj.dt > 0.0) && traj.time.size() > 1) traj.dt = (traj.time[1] - traj.time[0]) / static_cast<double>(traj.stride);
  return result;
}

void write_spectrum_csv(std::ostream& out, const Spectrum1D& global, const Spectrum1D* local, const Metadata& meta) {
  write_metadata(out, meta);
  out << fmt::format("# window_len={}\n# n_windows={}\n# resolution_mH={}\n", global.window_len, global.n_windows,
                     global.resolution * 1e3);
  for (const auto& w : global.warnings) out << "# warning=" << w << '\n';
  out << (local ? "omega_mH,intensity_global,intensity_local\n" : "omega_mH,intensity_global\n");
  for (std::size_t j = 0; j < global.size(); ++j) {
    if (local) {
      out << fmt::format("{},{},{}\n", global.omega[j] * 1e3, global.intensity[j], local->intensity[j]);
    } else {
      out << fmt::format("{},{}\n", global.omega[j] * 1e3, global.intensity[j]);
    }
  }
}

void write_peaks_csv(std::ostream& out, const std::vector<PeakRow>& rows, const Metadata& meta) {
  write_metadata(out, meta);
  out << "spectrum,omega_LP_mH,omega_UP_mH,midpoint_mH,rabi_mH,dark_mH\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", r.spectrum, r.peaks.omega_LP * 1e3, r.peaks.omega_UP * 1e3,
                       r.peaks.midpoint * 1e3, r.peaks.rabi * 1e3,
                       r.peaks.dark ? fmt::format("{}", *r.peaks.dark * 1e3) : std::string("nan"));
  }
}

void write_polarization_csv(std::ostream& out, const std::vector<PolarizationRow>& rows, const Metadata& meta) {
  write_metadata(out, meta);
  out << "N,mean_dr_bohr,mean_abs_dr_bohr,std_abs_dr_bohr,sem_dr_bohr,sem_abs_dr_bohr,n_samples\n";
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << fmt::format("{},{},{},{},{},{},{}\n", r.N, s.mean_dr, s.mean_abs_dr, s.std_abs_dr, s.sem_dr,
                       s.sem_abs_dr, s.n_samples);
  }
}

}  // namespace cavmd
