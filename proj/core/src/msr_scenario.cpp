#include "ddocp/msr_scenario.hpp"

#include <limits>

namespace ddocp::msr {

Vector reference_input(const Params& p, const ScenarioDefaults& d) {
  Inputs u;
  u.external_reactivity_pcm = d.reference_reactivity_pcm;
  u.pressure_drop = pressure_drop_for_velocity(d.reference_velocity, p);
  return u.to_vector();
}

Vector steady_guess(const Params& p, double power, const ScenarioDefaults& d) {
  const double dp = pressure_drop_for_velocity(d.reference_velocity, p);
  return steady_state(power, dp, d.reference_reactivity_pcm, p).state.to_vector();
}

OcpSpec ramp_spec(const Params& p, const SetpointProfile& setpoint, double t0,
                  const ScenarioDefaults& d) {
  OcpSpec spec;
  spec.tracking_weight = d.tracking_weight;
  spec.move_weights = Vector(kInputs);
  spec.move_weights << d.reactivity_move_weight, d.pressure_move_weight;
  spec.setpoint = setpoint;
  spec.reference_input = reference_input(p, d);
  spec.initial_state = steady_guess(p, setpoint.at(t0), d);

  const double inf = std::numeric_limits<double>::infinity();
  spec.state_lower = Vector::Constant(kStates, -inf);
  spec.state_upper = Vector::Constant(kStates, inf);
  for (int i = 0; i <= kCn; ++i) spec.state_lower[i] = 0.0;
  spec.state_lower[kRhoTh] = -d.max_thermal_reactivity;
  spec.state_upper[kRhoTh] = d.max_thermal_reactivity;
  spec.state_lower[kTr] = spec.state_lower[kThx] = d.min_temperature;
  spec.state_upper[kTr] = spec.state_upper[kThx] = d.max_temperature;

  spec.input_lower = Vector(kInputs);
  spec.input_upper = Vector(kInputs);
  spec.input_lower << -d.max_reactivity_pcm, pressure_drop_for_velocity(d.min_velocity, p);
  spec.input_upper << d.max_reactivity_pcm, pressure_drop_for_velocity(d.max_velocity, p);

  spec.state_scale = Vector::Ones(kStates);
  spec.state_scale[kRhoTh] = 1e-3;
  spec.state_scale[kTr] = spec.state_scale[kThx] = 100.0;
  spec.input_scale = Vector(kInputs);
  spec.input_scale << 100.0, pressure_drop_for_velocity(4.0, p);
  return spec;
}

}  // namespace ddocp::msr
