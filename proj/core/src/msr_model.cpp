#include "ddocp/msr_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ddocp/errors.hpp"

namespace ddocp {

Vector DelayModel::rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u) const {
  Vector out(state_size());
  rhs(x, z, u, out);
  return out;
}

Vector DelayModel::delayed_outputs(ConstVectorRef x) const {
  Vector out(delay_size());
  delayed_outputs(x, out);
  return out;
}

namespace msr {

double Params::beta() const {
  double sum = 0.0;
  for (double b : fractions) sum += b;
  return sum;
}

Params Params::table1() {
  Params p;
  p.decay = {0.0124, 0.0305, 0.1110, 0.3010, 1.1300, 3.0000};
  p.fractions = {0.00021, 0.00141, 0.00127, 0.00255, 0.00074, 0.00027};
  p.generation_time = 5e-5;
  p.specific_heat = 2e-3;
  p.hx_conductance = 0.5;
  p.feedback = 5e-5;
  p.salt_density = 2000.0;
  p.reactor_mass = 10000.0;
  p.hx_mass = 2500.0;
  p.core_volume = 0.5;
  p.pipe = PipeGeometry{30.0, 0.3};
  p.coolant_temperature = 723.15;
  p.nominal_power = 1.0;
  p.nominal_neutrons = 1.0;
  p.viscosity = 0.01;
  return p;
}

void Params::validate() const {
  auto positive = [](double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(name + " must be positive");
  };
  for (int i = 0; i < kGroups; ++i) {
    positive(decay[i], "lambda_" + std::to_string(i + 1));
    positive(fractions[i], "beta_" + std::to_string(i + 1));
  }
  positive(generation_time, "generation time");
  positive(specific_heat, "specific heat");
  positive(hx_conductance, "heat exchanger conductance");
  if (!(feedback >= 0.0)) throw DomainError("feedback coefficient must be nonnegative");
  positive(salt_density, "salt density");
  positive(reactor_mass, "reactor mass");
  positive(hx_mass, "heat exchanger mass");
  positive(core_volume, "core volume");
  pipe.validate();
  positive(coolant_temperature, "coolant temperature");
  positive(nominal_power, "nominal power");
  positive(nominal_neutrons, "nominal neutron concentration");
  positive(viscosity, "viscosity");
}

Vector State::to_vector() const {
  Vector x(kStates);
  for (int i = 0; i < kGroups; ++i) x[kC1 + i] = precursors[i];
  x[kCn] = neutrons;
  x[kRhoTh] = thermal_reactivity;
  x[kTr] = reactor_temperature;
  x[kThx] = hx_temperature;
  return x;
}

State State::from_vector(ConstVectorRef x) {
  if (x.size() != kStates) throw DomainError("MSR state vector must have 10 entries");
  State s;
  for (int i = 0; i < kGroups; ++i) s.precursors[i] = x[kC1 + i];
  s.neutrons = x[kCn];
  s.thermal_reactivity = x[kRhoTh];
  s.reactor_temperature = x[kTr];
  s.hx_temperature = x[kThx];
  return s;
}

Vector Inputs::to_vector() const {
  Vector u(kInputs);
  u[kRhoExt] = external_reactivity_pcm;
  u[kPressureDrop] = pressure_drop;
  return u;
}

Inputs Inputs::from_vector(ConstVectorRef u) {
  if (u.size() != kInputs) throw DomainError("MSR input vector must have 2 entries");
  return Inputs{u[kRhoExt], u[kPressureDrop]};
}

HagenPoiseuilleKernel loop_kernel(double pressure_drop, const Params& p) {
  return hp_kernel(pressure_drop, p.viscosity, p.pipe);
}

double pressure_drop_for_velocity(double average_velocity, const Params& p) {
  return HagenPoiseuilleKernel::from_average_velocity(average_velocity, p.viscosity, p.pipe)
      .pressure_drop();
}

double average_velocity(double pressure_drop, const Params& p) {
  return loop_kernel(pressure_drop, p).average_velocity();
}

namespace {

/// Loop quantities that depend only on the pressure drop.
struct LoopState {
  double flow = 0.0;      // F
  double dilution = 0.0;  // D = F / V
  double gamma_f = 0.0;   // full-loop mean lag
  std::array<double, kGroups> survival{};  // exp(-lambda_i gamma_f)
};

LoopState loop_state(double pressure_drop, const Params& p) {
  if (!(pressure_drop > 0.0)) {
    throw DomainError("pressure drop must be positive (finite delays), got " +
                      std::to_string(pressure_drop));
  }
  const auto kernel = loop_kernel(pressure_drop, p);
  LoopState s;
  s.flow = kernel.flow_rate();
  s.dilution = s.flow / p.core_volume;
  s.gamma_f = kernel.mean_lag();
  for (int i = 0; i < kGroups; ++i) s.survival[i] = std::exp(-p.decay[i] * s.gamma_f);
  return s;
}

void evaluate_rhs(const double* x, const double* z, const double* u, const Params& p,
                  double* dx) {
  const LoopState loop = loop_state(u[kPressureDrop], p);
  const double lambda_gen = p.generation_time;
  const double rho = x[kRhoTh] + kPcm * u[kRhoExt];
  const double cn = x[kCn];

  double decay_sum = 0.0;
  for (int i = 0; i < kGroups; ++i) {
    const double c = x[kC1 + i];
    const double inlet = loop.survival[i] * z[i];
    dx[kC1 + i] = (inlet - c) * loop.dilution - p.decay[i] * c + p.fractions[i] * cn / lambda_gen;
    decay_sum += p.decay[i] * c;
  }
  dx[kCn] = decay_sum + (rho - p.beta()) * cn / lambda_gen;

  const double mass_flow = loop.flow * p.salt_density;
  const double power = p.nominal_power * cn / p.nominal_neutrons;
  const double tr_dot = mass_flow / p.reactor_mass * (z[kDelayThx] - x[kTr]) +
                        power / (p.reactor_mass * p.specific_heat);
  dx[kTr] = tr_dot;
  dx[kThx] = mass_flow / p.hx_mass * (z[kDelayTr] - x[kThx]) -
             p.hx_conductance / (p.hx_mass * p.specific_heat) * (x[kThx] - p.coolant_temperature);
  dx[kRhoTh] = -p.feedback * tr_dot;
}

}  // namespace

Vector rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, const Params& p) {
  Vector out(kStates);
  evaluate_rhs(x.data(), z.data(), u.data(), p, out.data());
  return out;
}

Vector delayed_outputs(ConstVectorRef x) {
  Vector r(kDelays);
  r.head<kGroups>() = x.segment<kGroups>(kC1);
  r[kDelayThx] = x[kThx];
  r[kDelayTr] = x[kTr];
  return r;
}

MeanLags mean_lags(ConstVectorRef u, const Params& p) {
  const LoopState loop = loop_state(u[kPressureDrop], p);
  MeanLags out{Vector(kDelays), Matrix::Zero(kDelays, kInputs)};
  out.gamma.head<kGroups>().setConstant(loop.gamma_f);
  out.gamma.tail<2>().setConstant(0.5 * loop.gamma_f);
  // gamma is proportional to 1 / dP.
  out.gamma_du.col(kPressureDrop) = -out.gamma / u[kPressureDrop];
  return out;
}

double thermal_power(ConstVectorRef x, const Params& p) {
  return p.nominal_power * x[kCn] / p.nominal_neutrons;
}

ModelJacobians jacobians(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, const Params& p) {
  const LoopState loop = loop_state(u[kPressureDrop], p);
  const double dp = u[kPressureDrop];
  const double lambda_gen = p.generation_time;
  const double rho = x[kRhoTh] + kPcm * u[kRhoExt];

  ModelJacobians J{Matrix::Zero(kStates, kStates), Matrix::Zero(kStates, kDelays),
                   Matrix::Zero(kStates, kInputs), Matrix::Zero(kDelays, kStates)};

  // F, D are proportional to dP; gamma_f to 1/dP, so
  // d exp(-lambda gamma_f)/d dP = exp(-lambda gamma_f) lambda gamma_f / dP.
  for (int i = 0; i < kGroups; ++i) {
    const int row = kC1 + i;
    const double c = x[row];
    const double inlet = loop.survival[i] * z[i];
    J.f_x(row, row) = -loop.dilution - p.decay[i];
    J.f_x(row, kCn) = p.fractions[i] / lambda_gen;
    J.f_z(row, i) = loop.survival[i] * loop.dilution;
    J.f_u(row, kPressureDrop) = (inlet - c) * loop.dilution / dp +
                                loop.dilution * z[i] * loop.survival[i] * p.decay[i] *
                                    loop.gamma_f / dp;
    J.f_x(kCn, row) = p.decay[i];
  }
  J.f_x(kCn, kCn) = (rho - p.beta()) / lambda_gen;
  J.f_x(kCn, kRhoTh) = x[kCn] / lambda_gen;
  J.f_u(kCn, kRhoExt) = kPcm * x[kCn] / lambda_gen;

  const double mass_flow = loop.flow * p.salt_density;
  J.f_x(kTr, kTr) = -mass_flow / p.reactor_mass;
  J.f_x(kTr, kCn) = p.nominal_power / (p.nominal_neutrons * p.reactor_mass * p.specific_heat);
  J.f_z(kTr, kDelayThx) = mass_flow / p.reactor_mass;
  J.f_u(kTr, kPressureDrop) = mass_flow / p.reactor_mass * (z[kDelayThx] - x[kTr]) / dp;

  J.f_x(kThx, kThx) = -mass_flow / p.hx_mass - p.hx_conductance / (p.hx_mass * p.specific_heat);
  J.f_z(kThx, kDelayTr) = mass_flow / p.hx_mass;
  J.f_u(kThx, kPressureDrop) = mass_flow / p.hx_mass * (z[kDelayTr] - x[kThx]) / dp;

  J.f_x.row(kRhoTh) = -p.feedback * J.f_x.row(kTr);
  J.f_z.row(kRhoTh) = -p.feedback * J.f_z.row(kTr);
  J.f_u.row(kRhoTh) = -p.feedback * J.f_u.row(kTr);

  for (int i = 0; i < kGroups; ++i) J.h_x(i, kC1 + i) = 1.0;
  J.h_x(kDelayThx, kThx) = 1.0;
  J.h_x(kDelayTr, kTr) = 1.0;
  return J;
}

SteadyState steady_state(double power, double pressure_drop, double reference_reactivity_pcm,
                         const Params& p) {
  if (!(power > 0.0)) throw DomainError("steady state requires a positive target power");
  p.validate();
  const LoopState loop = loop_state(pressure_drop, p);

  SteadyState out;
  State& s = out.state;
  s.neutrons = p.nominal_neutrons * power / p.nominal_power;
  double decay_sum = 0.0;
  for (int i = 0; i < kGroups; ++i) {
    const double loss = p.decay[i] + loop.dilution * (1.0 - loop.survival[i]);
    s.precursors[i] = p.fractions[i] * s.neutrons / (p.generation_time * loss);
    decay_sum += p.decay[i] * s.precursors[i];
  }
  out.total_reactivity = p.beta() - p.generation_time * decay_sum / s.neutrons;
  s.thermal_reactivity = out.total_reactivity - kPcm * reference_reactivity_pcm;
  s.hx_temperature = p.coolant_temperature + power / p.hx_conductance;
  s.reactor_temperature =
      s.hx_temperature + power / (loop.flow * p.salt_density * p.specific_heat);
  out.inputs = Inputs{reference_reactivity_pcm, pressure_drop};
  out.flow_rate = loop.flow;
  out.dilution_rate = loop.dilution;
  out.full_loop_lag = loop.gamma_f;
  out.half_loop_lag = 0.5 * loop.gamma_f;

  const Vector u = out.inputs.to_vector();
  Vector x = s.to_vector();
  auto residual = [&](const Vector& xs) { return rhs(xs, delayed_outputs(xs), u, p); };
  Vector f = residual(x);
  out.residual = f.lpNorm<Eigen::Infinity>();

  // Polish with C_n pinned (it fixes the power) and the rho_th row dropped
  // (it is -kappa times the T_r row).
  constexpr std::array<int, 9> unknowns = {0, 1, 2, 3, 4, 5, kRhoTh, kTr, kThx};
  constexpr std::array<int, 9> equations = {0, 1, 2, 3, 4, 5, kCn, kTr, kThx};
  for (int iter = 0; out.residual > 1e-10; ++iter) {
    if (iter == 20) {
      throw SolverError("steady state: Newton polish did not converge (residual " +
                        std::to_string(out.residual) + ")");
    }
    const ModelJacobians J = jacobians(x, delayed_outputs(x), u, p);
    const Matrix full = J.f_x + J.f_z * J.h_x;
    Eigen::Matrix<double, 9, 9> A;
    Eigen::Matrix<double, 9, 1> b;
    for (int r = 0; r < 9; ++r) {
      b[r] = -f[equations[r]];
      for (int c = 0; c < 9; ++c) A(r, c) = full(equations[r], unknowns[c]);
    }
    const Eigen::Matrix<double, 9, 1> dx = A.fullPivLu().solve(b);
    for (int c = 0; c < 9; ++c) x[unknowns[c]] += dx[c];
    f = residual(x);
    out.residual = f.lpNorm<Eigen::Infinity>();
  }
  out.state = State::from_vector(x);
  out.total_reactivity = out.state.thermal_reactivity + kPcm * reference_reactivity_pcm;
  return out;
}

// ---------------------------------------------------------------------------
// Model adapter

Model::Model(Params params) : params_(std::move(params)) { params_.validate(); }

void Model::validate_input(ConstVectorRef u) const {
  if (u.size() != kInputs) throw DomainError("MSR input vector must have 2 entries");
  if (!(u[kPressureDrop] > 0.0)) throw DomainError("pressure drop must be positive");
}

void Model::rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, VectorRef dxdt) const {
  evaluate_rhs(x.data(), z.data(), u.data(), params_, dxdt.data());
}

void Model::delayed_outputs(ConstVectorRef x, VectorRef r) const {
  for (int i = 0; i < kGroups; ++i) r[i] = x[kC1 + i];
  r[kDelayThx] = x[kThx];
  r[kDelayTr] = x[kTr];
}

MeanLags Model::mean_lags(ConstVectorRef u) const { return msr::mean_lags(u, params_); }

ModelJacobians Model::jacobians(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u) const {
  return msr::jacobians(x, z, u, params_);
}

double Model::tracked_output(ConstVectorRef x) const { return thermal_power(x, params_); }

Vector Model::tracked_output_gradient(ConstVectorRef) const {
  Vector g = Vector::Zero(kStates);
  g[kCn] = params_.nominal_power / params_.nominal_neutrons;
  return g;
}

LaplaceValue Model::kernel_laplace(int delay, std::complex<double> s, ConstVectorRef u) const {
  validate_input(u);
  const auto full = loop_kernel(u[kPressureDrop], params_);
  return delay < kGroups ? full.laplace(s) : full.half_loop().laplace(s);
}

std::vector<DiscretizedKernel> Model::discretized_kernels(ConstVectorRef u, int count) const {
  validate_input(u);
  const auto full = discretize_hagen_poiseuille(loop_kernel(u[kPressureDrop], params_), count);
  // Half length at half pressure drop: same velocity profile, half the lags.
  const auto half = full.scaled(0.5);
  std::vector<DiscretizedKernel> out(kGroups, full);
  out.push_back(half);
  out.push_back(half);
  return out;
}

const std::array<std::string, kStates>& state_names() {
  static const std::array<std::string, kStates> names = {
      "C_1", "C_2", "C_3", "C_4", "C_5", "C_6", "C_n", "rho_th", "T_r", "T_hx"};
  return names;
}

}  // namespace msr
}  // namespace ddocp
