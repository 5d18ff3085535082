#pragma once

namespace cavmd {

struct ThermostatParams {
  double kT = 0.5e-3;      // hartree
  double gamma = 0.3e-5;   // friction, 1/a.u. time
  double dt = 50.0;        // a.u. time
  double tau_R = 0.5e-5;   // rotational diffusion parameter
  bool rotations_enabled = false;

  void validate() const;
};

}  // namespace cavmd
