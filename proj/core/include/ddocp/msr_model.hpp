#pragma once

/// \file msr_model.hpp
/// Molten-salt reactor with an external circulation loop.
///
/// Point kinetics with six delayed-neutron precursor groups whose
/// concentrations are carried around the loop, a thermal-reactivity
/// feedback driven by the core temperature, and core / heat-exchanger
/// energy balances.  The loop is laminar (Hagen-Poiseuille) flow, so every
/// transport term is a distributed delay:
///
///   precursors  C_i,in  = exp(-lambda_i gamma_f) (alpha_f * C_i)
///   core inlet  T_r,in  = alpha_h * T_hx
///   hx inlet    T_hx,in = alpha_h * T_r
///
/// alpha_f is the full-loop kernel and alpha_h the half-loop kernel
/// (length L/2 driven by dP/2).  Reactivities are dimensionless internally;
/// the external reactivity input is in pcm.

#include <array>
#include <string>

#include "ddocp/kernel.hpp"
#include "ddocp/model.hpp"

namespace ddocp::msr {

inline constexpr int kGroups = 6;
inline constexpr int kStates = 10;
inline constexpr int kDelays = 8;
inline constexpr int kInputs = 2;
inline constexpr double kPcm = 1e-5;

/// Positions in the flat state vector.
enum StateIndex : int { kC1 = 0, kCn = 6, kRhoTh = 7, kTr = 8, kThx = 9 };
/// Positions in the flat input vector.
enum InputIndex : int { kRhoExt = 0, kPressureDrop = 1 };
/// Positions of the temperature entries in the delayed-output vector.
enum DelayIndex : int { kDelayThx = 6, kDelayTr = 7 };

struct Params {
  std::array<double, kGroups> decay{};      // lambda_i [1/s]
  std::array<double, kGroups> fractions{};  // beta_i [-]
  double generation_time = 0.0;             // Lambda [s]
  double specific_heat = 0.0;               // c_P [MJ/(kg K)]
  double hx_conductance = 0.0;              // k_hx [MW/K]
  double feedback = 0.0;                    // kappa [1/K]
  double salt_density = 0.0;                // rho_s [kg/m^3]
  double reactor_mass = 0.0;                // m_r [kg]
  double hx_mass = 0.0;                     // m_hx [kg]
  double core_volume = 0.0;                 // V [m^3]
  PipeGeometry pipe{};                      // external loop
  double coolant_temperature = 0.0;         // T_c [K]
  double nominal_power = 0.0;               // Q_g0 [MW]
  double nominal_neutrons = 0.0;            // C_n0 [kmol/m^3]
  double viscosity = 0.0;                   // mu [Pa s]

  /// Total delayed fraction, sum of beta_i.
  double beta() const;
  /// Reference reactor values with Q_g0 = 1 MW, C_n0 = 1 kmol/m^3, mu = 0.01 Pa s.
  static Params table1();
  /// Throws DomainError on nonpositive entries (kappa may be zero).
  void validate() const;
};

struct State {
  std::array<double, kGroups> precursors{};  // C_1..C_6 [kmol/m^3]
  double neutrons = 0.0;                     // C_n [kmol/m^3]
  double thermal_reactivity = 0.0;           // rho_th [-]
  double reactor_temperature = 0.0;          // T_r [K]
  double hx_temperature = 0.0;               // T_hx [K]

  Vector to_vector() const;
  static State from_vector(ConstVectorRef x);
};

struct Inputs {
  double external_reactivity_pcm = 0.0;  // rho_ext [pcm]
  double pressure_drop = 0.0;            // dP [Pa]

  Vector to_vector() const;
  static Inputs from_vector(ConstVectorRef u);
};

/// Full-loop kernel for a pressure drop; the half-loop kernel is
/// `loop_kernel(...).half_loop()`.
HagenPoiseuilleKernel loop_kernel(double pressure_drop, const Params& p);
/// Pressure drop giving the requested average loop velocity.
double pressure_drop_for_velocity(double average_velocity, const Params& p);
double average_velocity(double pressure_drop, const Params& p);

Vector rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, const Params& p);
/// (C_1..C_6, T_hx, T_r).
Vector delayed_outputs(ConstVectorRef x);
/// gamma_1..6 = gamma_f, gamma_7 = gamma_8 = gamma_f / 2.
MeanLags mean_lags(ConstVectorRef u, const Params& p);
double thermal_power(ConstVectorRef x, const Params& p);
ModelJacobians jacobians(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, const Params& p);

struct SteadyState {
  State state;
  Inputs inputs;
  double total_reactivity = 0.0;  // rho_th + rho_ext at equilibrium [-]
  double flow_rate = 0.0;         // F [m^3/s]
  double dilution_rate = 0.0;     // D [1/s]
  double full_loop_lag = 0.0;     // gamma_f [s]
  double half_loop_lag = 0.0;     // gamma_h [s]
  double residual = 0.0;          // ||f(x_s, h(x_s), u_s)||_inf
};

/// Equilibrium at the requested power with z = h(x).  The external
/// reactivity is pinned to `reference_reactivity_pcm` and the remainder of
/// the required reactivity is assigned to rho_th.  The closed form is
/// polished by Newton iterations if its residual exceeds 1e-10; failure
/// raises SolverError.
SteadyState steady_state(double power, double pressure_drop, double reference_reactivity_pcm,
                         const Params& p);

class Model final : public DelayModel {
 public:
  explicit Model(Params params);

  const Params& params() const { return params_; }

  int state_size() const override { return kStates; }
  int delay_size() const override { return kDelays; }
  int input_size() const override { return kInputs; }
  void validate_input(ConstVectorRef u) const override;

  using DelayModel::delayed_outputs;
  using DelayModel::rhs;
  void rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, VectorRef dxdt) const override;
  void delayed_outputs(ConstVectorRef x, VectorRef r) const override;
  MeanLags mean_lags(ConstVectorRef u) const override;
  ModelJacobians jacobians(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u) const override;
  double tracked_output(ConstVectorRef x) const override;
  Vector tracked_output_gradient(ConstVectorRef x) const override;
  LaplaceValue kernel_laplace(int delay, std::complex<double> s, ConstVectorRef u) const override;
  int kernel_family(int delay) const override { return delay < kGroups ? 0 : 1; }
  std::vector<int> nonnegative_states() const override { return {0, 1, 2, 3, 4, 5, kCn}; }
  std::vector<DiscretizedKernel> discretized_kernels(ConstVectorRef u, int count) const override;

 private:
  Params params_;
};

/// Names of the state entries in CSV order.
const std::array<std::string, kStates>& state_names();

}  // namespace ddocp::msr
