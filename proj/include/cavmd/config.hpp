#pragma once

// Experiment configuration: a flat key-value file with optional [section]
// headers. See docs/config.md for the grammar and every key.

#include "cavmd/cavity_hartree.hpp"
#include "cavmd/shin_metiu.hpp"
#include "cavmd/thermostat.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cavmd {

enum class OrientationMode { aligned, random };
enum class InitialWell { random, positive };

std::string_view to_string(OrientationMode m);
std::string_view to_string(InitialWell w);

struct GridConfig {
  std::size_t n_points = 41;
  double spacing = 0.8;
};

struct EnsembleConfig {
  std::size_t N = 1;
  OrientationMode orientation = OrientationMode::aligned;
  InitialWell initial_well = InitialWell::random;
};

struct RunConfig {
  std::size_t n_steps = 2000;
  std::size_t stride = 1;
  std::size_t burn_in = 0;
  bool polarization_diagnostics = false;
  bool record_molecule_dipoles = true;
};

/// Cavity frequency the defaults tune to: the bare fundamental, 6.27 mH.
inline constexpr double kDefaultCavityOmega = 6.27e-3;

struct ExperimentConfig {
  ShinMetiuParams molecule;
  GridConfig grid;
  std::vector<CavityMode> cavity{CavityMode{kDefaultCavityOmega, 0.0}};
  EnsembleConfig ensemble;
  ThermostatParams thermo;
  ScfOptions scf;
  RunConfig run;
  std::uint64_t seed = 1;
  std::string output_dir = ".";

  /// Throws config_validation naming the offending field.
  void validate() const;

  /// Canonical text form; parse_config(serialize()) reproduces the config.
  std::string serialize() const;

  /// 16 hex digits identifying the canonical form.
  std::string hash() const;
};

/// Parses config text. `source` labels parse errors ("<source>:<line>: ...").
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");

/// Reads, parses and validates a config file; CAVMD_OUTPUT_DIR overrides output_dir.
ExperimentConfig load_config(const std::filesystem::path& path);

/// lambda_1/sqrt(N) for random orientations, lambda_1/sqrt(2N) for aligned ones.
double lambda_for_N(double lambda_1, std::size_t N, OrientationMode mode);

}  // namespace cavmd
