#include "cavmd/config.hpp"

#include "cavmd/error.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace cavmd {

namespace {

[[noreturn]] void invalid(std::string_view field, std::string_view why) {
  throw Error(ErrorCode::config_validation, fmt::format("invalid {}: {}", field, why));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class Parser {
 public:
  Parser(std::string_view source, std::size_t line) : source_(source), line_(line) {}

  [[noreturn]] void fail(std::string_view msg) const {
    throw Error(ErrorCode::config_parse, fmt::format("{}:{}: {}", source_, line_, msg));
  }

  double real(std::string_view v) const {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
      fail(fmt::format("expected a number, got '{}'", v));
    }
    return x;
  }

  template <class Int>
  Int integer(std::string_view v) const {
    Int x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail(fmt::format("expected an integer, got '{}'", v));
    return x;
  }

  bool boolean(std::string_view v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(fmt::format("expected true or false, got '{}'", v));
  }

  std::string text(std::string_view v) const {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
  }

 private:
  std::string_view source_;
  std::size_t line_;
};

// Cavity keys are collected first so that cavity[k] may appear in any order.
struct CavityEntry {
  std::optional<double> omega;
  std::optional<double> lambda;
};

void assign(ExperimentConfig& c, std::map<std::size_t, CavityEntry>& cavity, std::optional<bool>& rotations,
            const std::string& key, std::string_view value, const Parser& p) {
  if (key.rfind("cavity[", 0) == 0) {
    const auto close = key.find(']');
    if (close == std::string::npos || close + 1 >= key.size() || key[close + 1] != '.') {
      p.fail(fmt::format("malformed cavity key '{}'", key));
    }
    const auto index = p.integer<std::size_t>(std::string_view(key).substr(7, close - 7));
    const std::string field = key.substr(close + 2);
    auto& entry = cavity[index];
    if (field == "omega_mH") {
      entry.omega = p.real(value) * 1e-3;
    } else if (field == "omega") {
      entry.omega = p.real(value);
    } else if (field == "lambda") {
      entry.lambda = p.real(value);
    } else {
      p.fail(fmt::format("unknown key '{}'", key));
    }
    return;
  }

  if (key == "molecule.L") c.molecule.L = p.real(value);
  else if (key == "molecule.R_f") c.molecule.R_f = p.real(value);
  else if (key == "molecule.R_l") c.molecule.R_l = p.real(value);
  else if (key == "molecule.R_r") c.molecule.R_r = p.real(value);
  else if (key == "molecule.M") c.molecule.M = p.real(value);
  else if (key == "molecule.Z") c.molecule.Z = p.real(value);
  else if (key == "grid.n_points") c.grid.n_points = p.integer<std::size_t>(value);
  else if (key == "grid.spacing") c.grid.spacing = p.real(value);
  else if (key == "ensemble.N") c.ensemble.N = p.integer<std::size_t>(value);
  else if (key == "ensemble.orientation") {
    const auto v = p.text(value);
    if (v == "aligned") c.ensemble.orientation = OrientationMode::aligned;
    else if (v == "random") c.ensemble.orientation = OrientationMode::random;
    else p.fail(fmt::format("ensemble.orientation must be aligned or random, got '{}'", v));
  } else if (key == "ensemble.initial_well") {
    const auto v = p.text(value);
    if (v == "random") c.ensemble.initial_well = InitialWell::random;
    else if (v == "positive") c.ensemble.initial_well = InitialWell::positive;
    else p.fail(fmt::format("ensemble.initial_well must be random or positive, got '{}'", v));
  } else if (key == "thermostat.kT") c.thermo.kT = p.real(value);
  else if (key == "thermostat.gamma") c.thermo.gamma = p.real(value);
  else if (key == "thermostat.dt") c.thermo.dt = p.real(value);
  else if (key == "thermostat.tau_R") c.thermo.tau_R = p.real(value);
  else if (key == "thermostat.rotations") rotations = p.boolean(value);
  else if (key == "scf.energy_tol") c.scf.energy_tol = p.real(value);
  else if (key == "scf.dipole_tol") c.scf.dipole_tol = p.real(value);
  else if (key == "scf.max_iter") c.scf.max_iter = p.integer<int>(value);
  else if (key == "scf.mixing") c.scf.mixing = p.real(value);
  else if (key == "scf.oscillation_window") c.scf.oscillation_window = p.integer<int>(value);
  else if (key == "scf.anderson_history") c.scf.anderson_history = p.integer<int>(value);
  else if (key == "run.n_steps") c.run.n_steps = p.integer<std::size_t>(value);
  else if (key == "run.stride") c.run.stride = p.integer<std::size_t>(value);
  else if (key == "run.burn_in") c.run.burn_in = p.integer<std::size_t>(value);
  else if (key == "run.polarization_diagnostics") c.run.polarization_diagnostics = p.boolean(value);
  else if (key == "run.record_molecule_dipoles") c.run.record_molecule_dipoles = p.boolean(value);
  else if (key == "seed") c.seed = p.integer<std::uint64_t>(value);
  else if (key == "output_dir") c.output_dir = p.text(value);
  else p.fail(fmt::format("unknown key '{}'", key));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(OrientationMode m) { return m == OrientationMode::aligned ? "aligned" : "random"; }
std::string_view to_string(InitialWell w) { return w == InitialWell::random ? "random" : "positive"; }

void ExperimentConfig::validate() const {
  const auto positive = [](std::string_view field, double v) {
    if (!(v > 0.0)) invalid(field, fmt::format("must be positive, got {}", v));
  };
  positive("molecule.L", molecule.L);
  positive("molecule.R_f", molecule.R_f);
  positive("molecule.R_l", molecule.R_l);
  positive("molecule.R_r", molecule.R_r);
  positive("molecule.M", molecule.M);
  if (grid.n_points < 3) invalid("grid.n_points", "must be at least 3");
  positive("grid.spacing", grid.spacing);
  if (cavity.empty()) invalid("cavity", "at least one mode is required");
  for (std::size_t a = 0; a < cavity.size(); ++a) {
    positive(fmt::format("cavity[{}].omega", a), cavity[a].omega);
    if (!(cavity[a].lambda >= 0.0)) {
      invalid(fmt::format("cavity[{}].lambda", a), fmt::format("must be non-negative, got {}", cavity[a].lambda));
    }
  }
  if (ensemble.N < 1) invalid("ensemble.N", "must be at least 1");
  if (!(thermo.kT >= 0.0)) invalid("thermostat.kT", "must be non-negative");
  if (!(thermo.gamma >= 0.0)) invalid("thermostat.gamma", "must be non-negative");
  positive("thermostat.dt", thermo.dt);
  if (!(thermo.tau_R >= 0.0)) invalid("thermostat.tau_R", "must be non-negative");
  positive("scf.energy_tol", scf.energy_tol);
  positive("scf.dipole_tol", scf.dipole_tol);
  if (scf.max_iter < 1) invalid("scf.max_iter", "must be at least 1");
  if (!(scf.mixing > 0.0 && scf.mixing <= 1.0)) invalid("scf.mixing", "must lie in (0, 1]");
  if (scf.oscillation_window < 1) invalid("scf.oscillation_window", "must be at least 1");
  if (scf.anderson_history < 0) invalid("scf.anderson_history", "must be non-negative");
  if (run.stride < 1) invalid("run.stride", "must be at least 1");
  if (output_dir.empty()) invalid("output_dir", "must not be empty");
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  const auto put = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  put("molecule.L", molecule.L);
  put("molecule.R_f", molecule.R_f);
  put("molecule.R_l", molecule.R_l);
  put("molecule.R_r", molecule.R_r);
  put("molecule.M", molecule.M);
  put("molecule.Z", molecule.Z);
  put("grid.n_points", grid.n_points);
  put("grid.spacing", grid.spacing);
  for (std::size_t a = 0; a < cavity.size(); ++a) {
    put(fmt::format("cavity[{}].omega", a), cavity[a].omega);
    put(fmt::format("cavity[{}].lambda", a), cavity[a].lambda);
  }
  put("ensemble.N", ensemble.N);
  put("ensemble.orientation", to_string(ensemble.orientation));
  put("ensemble.initial_well", to_string(ensemble.initial_well));
  put("thermostat.kT", thermo.kT);
  put("thermostat.gamma", thermo.gamma);
  put("thermostat.dt", thermo.dt);
  put("thermostat.tau_R", thermo.tau_R);
  put("thermostat.rotations", thermo.rotations_enabled);
  put("scf.energy_tol", scf.energy_tol);
  put("scf.dipole_tol", scf.dipole_tol);
  put("scf.max_iter", scf.max_iter);
  put("scf.mixing", scf.mixing);
  put("scf.oscillation_window", scf.oscillation_window);
  put("scf.anderson_history", scf.anderson_history);
  put("run.n_steps", run.n_steps);
  put("run.stride", run.stride);
  put("run.burn_in", run.burn_in);
  put("run.polarization_diagnostics", run.polarization_diagnostics);
  put("run.record_molecule_dipoles", run.record_molecule_dipoles);
  put("seed", seed);
  put("output_dir", fmt::format("\"{}\"", output_dir));
  return out;
}

std::string ExperimentConfig::hash() const {
  // output_dir does not change what is simulated
  ExperimentConfig copy = *this;
  copy.output_dir = ".";
  return fmt::format("{:016x}", fnv1a(copy.serialize()));
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  ExperimentConfig c;
  std::map<std::size_t, CavityEntry> cavity;
  std::optional<bool> rotations;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const Parser p(source, line_no);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string_view::npos) {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) p.fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) p.fail("expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) p.fail("expected 'key = value'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    assign(c, cavity, rotations, full, value, p);
    if (end == text.size()) break;
  }

  if (!cavity.empty()) {
    c.cavity.clear();
    std::size_t expected = 0;
    for (const auto& [index, entry] : cavity) {
      if (index != expected++) invalid(fmt::format("cavity[{}]", expected - 1), "mode indices must be contiguous from 0");
      c.cavity.push_back(CavityMode{entry.omega.value_or(kDefaultCavityOmega), entry.lambda.value_or(0.0)});
    }
  }
  c.thermo.rotations_enabled = rotations.value_or(c.ensemble.orientation == OrientationMode::random);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open config file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  auto c = parse_config(ss.str(), path.string());
  if (const char* env = std::getenv("CAVMD_OUTPUT_DIR"); env != nullptr && *env != '\0') c.output_dir = env;
  return c;
}

double lambda_for_N(double lambda_1, std::size_t N, OrientationMode mode) {
  if (N < 1) throw Error(ErrorCode::invalid_argument, "N must be at least 1");
  const double n = static_cast<double>(N);
  return mode == OrientationMode::random ? lambda_1 / std::sqrt(n) : lambda_1 / std::sqrt(2.0 * n);
}

}  // namespace cavmd
