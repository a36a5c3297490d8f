#pragma once

/// \file msr_scenario.hpp
/// Defaults for power-ramping problems on the molten-salt reactor: bounds,
/// solver scaling, reference inputs and the steady-state initial guess.

#include "ddocp/msr_model.hpp"
#include "ddocp/transcription.hpp"

namespace ddocp::msr {

struct ScenarioDefaults {
  double reference_velocity = 4.0;         // u_{-1}: average loop velocity [m/s]
  double reference_reactivity_pcm = 50.0;  // u_{-1}: rho_ext [pcm]
  double min_velocity = 0.5;               // dP lower bound via average velocity
  double max_velocity = 12.0;              // dP upper bound
  double min_temperature = 600.0;
  double max_temperature = 1000.0;
  double max_thermal_reactivity = 0.05;    // |rho_th| bound
  double max_reactivity_pcm = 1000.0;      // |rho_ext| bound
  double tracking_weight = 1.0;            // q [1/(MW^2 s)]
  double reactivity_move_weight = 1e-2;    // W_11 [s/pcm^2]
  double pressure_move_weight = 1e2;       // W_22 [s/Pa as printed]
};

/// OCP for tracking `setpoint` in MW, starting from the steady state at
/// setpoint.at(t0) with the reference inputs.
OcpSpec ramp_spec(const Params& p, const SetpointProfile& setpoint, double t0,
                  const ScenarioDefaults& d = {});

/// Steady state with the reference inputs at `power`, used as the state
/// guess.
Vector steady_guess(const Params& p, double power, const ScenarioDefaults& d = {});

/// Reference input vector (rho_ext [pcm], dP [Pa]).
Vector reference_input(const Params& p, const ScenarioDefaults& d = {});

}  // namespace ddocp::msr
