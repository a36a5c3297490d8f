#include "ddocp/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddocp/delay_approx.hpp"
#include "ddocp/errors.hpp"

namespace ddocp {

// ---------------------------------------------------------------------------
// Grid, setpoints, spec

void Grid::validate() const {
  if (intervals < 1) throw DomainError("grid needs at least one control interval");
  if (steps < 1) throw DomainError("grid needs at least one step per interval");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("control interval length must be positive");
  if (!std::isfinite(t0)) throw DomainError("grid start time must be finite");
}

SetpointProfile::SetpointProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw DomainError("setpoint profile needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].time) || !std::isfinite(knots_[i].value)) {
      throw DomainError("setpoint knots must be finite");
    }
    if (i > 0 && knots_[i].time < knots_[i - 1].time) {
      throw DomainError("setpoint knot times must be nondecreasing");
    }
  }
}

SetpointProfile SetpointProfile::constant(double value) {
  return SetpointProfile({{0.0, value, SegmentMode::kHold}});
}

SetpointProfile SetpointProfile::ramp(double from, double to, double start, double duration) {
  if (!(duration >= 0.0)) throw DomainError("ramp duration must be nonnegative");
  return SetpointProfile(
      {{start, from, SegmentMode::kLinear}, {start + duration, to, SegmentMode::kHold}});
}

double SetpointProfile::at(double t) const {
  if (knots_.empty()) throw DomainError("empty setpoint profile");
  if (t < knots_.front().time) return knots_.front().value;
  // Last knot with time <= t.
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                             [](double v, const Knot& k) { return v < k.time; });
  const Knot& a = *(it - 1);
  if (it == knots_.end() || a.mode == SegmentMode::kHold) return a.value;
  const Knot& b = *it;
  const double span = b.time - a.time;
  if (span <= 0.0) return b.value;
  return a.value + (b.value - a.value) * (t - a.time) / span;
}

void OcpSpec::validate(const DelayModel& model) const {
  const int nx = model.state_size();
  const int nu = model.input_size();
  auto size_check = [](const Vector& v, int n, const char* what) {
    if (v.size() != n) {
      throw DomainError(std::string(what) + " has size " + std::to_string(v.size()) + ", expected " +
                        std::to_string(n));
    }
  };
  size_check(move_weights, nu, "move_weights");
  size_check(initial_state, nx, "initial_state");
  size_check(reference_input, nu, "reference_input");
  size_check(state_lower, nx, "state_lower");
  size_check(state_upper, nx, "state_upper");
  size_check(input_lower, nu, "input_lower");
  size_check(input_upper, nu, "input_upper");
  size_check(state_scale, nx, "state_scale");
  size_check(input_scale, nu, "input_scale");
  if (!(tracking_weight >= 0.0)) throw DomainError("tracking weight must be nonnegative");
  if (!(move_weights.array() > 0.0).all()) throw DomainError("move weights must be positive");
  if (!(state_lower.array() < state_upper.array()).all()) throw DomainError("state bounds are not ordered");
  if (!(input_lower.array() < input_upper.array()).all()) throw DomainError("input bounds are not ordered");
  if (!(state_scale.array() > 0.0).all() || !(input_scale.array() > 0.0).all()) {
    throw DomainError("scales must be positive");
  }
  if (setpoint.knots().empty()) throw DomainError("setpoint profile is empty");
  model.validate_input(reference_input);
}

// ---------------------------------------------------------------------------
// Layout

DecisionLayout::DecisionLayout(int state_size, int input_size, int intervals, int steps)
    : nx_(state_size),
      nu_(input_size),
      intervals_(intervals),
      steps_(steps),
      block_(steps * state_size + input_size) {}

std::string DecisionLayout::name(int i) const {
  if (i < 0 || i >= size()) throw DomainError("decision index out of range");
  const int k = i / block_;
  const int local = i % block_;
  if (local >= steps_ * nx_) return "u[" + std::to_string(k) + "][" + std::to_string(local - steps_ * nx_) + "]";
  return "x[" + std::to_string(k) + "," + std::to_string(local / nx_ + 1) + "][" +
         std::to_string(local % nx_) + "]";
}

// ---------------------------------------------------------------------------
// Step residual

Vector euler_residual(const DelayModel& model, ConstVectorRef x_prev, ConstVectorRef x_next,
                      ConstVectorRef u, double h) {
  const Vector r_prev = model.delayed_outputs(x_prev);
  const Vector r_next = model.delayed_outputs(x_next);
  const MeanLags lags = model.mean_lags(u);
  const Vector z = memory_state(r_next, (r_next - r_prev) / h, lags.gamma);
  return x_next - x_prev - h * model.rhs(x_next, z, u);
}

StepJacobians euler_jacobians(const DelayModel& model, ConstVectorRef x_prev, ConstVectorRef x_next,
                              ConstVectorRef u, double h) {
  const int nx = model.state_size();
  const Vector r_prev = model.delayed_outputs(x_prev);
  const Vector r_next = model.delayed_outputs(x_next);
  const MeanLags lags = model.mean_lags(u);
  const Vector z = memory_state(r_next, (r_next - r_prev) / h, lags.gamma);
  const ModelJacobians jac = model.jacobians(x_next, z, u);

  // dz/dx_next = diag(1 - gamma/h) C, dz/dx_prev = diag(gamma/h) C,
  // dz/du = diag(-(r_next - r_prev)/h) dgamma/du.
  const Vector ratio = lags.gamma / h;
  const Matrix fz_next = jac.f_z * (Vector::Ones(ratio.size()) - ratio).asDiagonal();
  const Matrix fz_prev = jac.f_z * ratio.asDiagonal();
  const Vector slope = (r_next - r_prev) / h;

  StepJacobians out;
  out.next = Matrix::Identity(nx, nx) - h * (jac.f_x + fz_next * jac.h_x);
  out.prev = -Matrix::Identity(nx, nx) - h * (fz_prev * jac.h_x);
  out.input = -h * (jac.f_u - jac.f_z * slope.asDiagonal() * lags.gamma_du);
  return out;
}

// ---------------------------------------------------------------------------
// Transcription

Transcription::Transcription(const DelayModel& model, OcpSpec spec, Grid grid)
    : model_(model),
      spec_(std::move(spec)),
      grid_(grid),
      layout_(model.state_size(), model.input_size(), grid.intervals, grid.steps) {
  grid_.validate();
  spec_.validate(model_);
}

Vector Transcription::state_at(const Vector& w, int k, int n) const {
  if (n == 0) {
    if (k == 0) return spec_.initial_state;
    return w.segment(layout_.state(k - 1, grid_.steps), layout_.state_size());
  }
  return w.segment(layout_.state(k, n), layout_.state_size());
}

Vector Transcription::input_at(const Vector& w, int k) const {
  return w.segment(layout_.input(k), layout_.input_size());
}

Vector Transcription::residuals(const Vector& w) const {
  if (w.size() != layout_.size()) throw DomainError("decision vector has the wrong size");
  Vector out(layout_.constraint_count());
  const double h = grid_.step();
  for (int k = 0; k < grid_.intervals; ++k) {
    const Vector u = input_at(w, k);
    for (int n = 0; n < grid_.steps; ++n) {
      out.segment(layout_.residual(k, n), layout_.state_size()) =
          euler_residual(model_, state_at(w, k, n), state_at(w, k, n + 1), u, h);
    }
  }
  return out;
}

SparseMatrix Transcription::jacobian(const Vector& w) const {
  if (w.size() != layout_.size()) throw DomainError("decision vector has the wrong size");
  const int nx = layout_.state_size();
  const int nu = layout_.input_size();
  const double h = grid_.step();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(grid_.intervals) * grid_.steps * nx * (2 * nx + nu));
  auto put = [&](int row, int col, const Matrix& block) {
    for (int j = 0; j < block.cols(); ++j)
      for (int i = 0; i < block.rows(); ++i) t.emplace_back(row + i, col + j, block(i, j));
  };
  for (int k = 0; k < grid_.intervals; ++k) {
    const Vector u = input_at(w, k);
    for (int n = 0; n < grid_.steps; ++n) {
      const StepJacobians jac = euler_jacobians(model_, state_at(w, k, n), state_at(w, k, n + 1), u, h);
      const int row = layout_.residual(k, n);
      put(row, layout_.state(k, n + 1), jac.next);
      if (n > 0) put(row, layout_.state(k, n), jac.prev);
      else if (k > 0) put(row, layout_.state(k - 1, grid_.steps), jac.prev);
      put(row, layout_.input(k), jac.input);
    }
  }
  SparseMatrix j(layout_.constraint_count(), layout_.size());
  j.setFromTriplets(t.begin(), t.end());
  return j;
}

double Transcription::objective(const Vector& w) const {
  if (w.size() != layout_.size()) throw DomainError("decision vector has the wrong size");
  const double h = grid_.step();
  const Vector weights = spec_.move_weights;
  double tracking = 0.0;
  double moves = 0.0;
  Vector previous = spec_.reference_input;
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) {
      const double e = model_.tracked_output(state_at(w, k, n)) - spec_.setpoint.at(grid_.time(k, n));
      tracking += 0.5 * spec_.tracking_weight * e * e * h;
    }
    const Vector u = input_at(w, k);
    const Vector du = u - previous;
    moves += 0.5 * du.dot(weights.cwiseProduct(du)) / grid_.dt;
    previous = u;
  }
  return tracking + moves;
}

Vector Transcription::gradient(const Vector& w) const {
  if (w.size() != layout_.size()) throw DomainError("decision vector has the wrong size");
  const double h = grid_.step();
  const int nu = layout_.input_size();
  Vector g = Vector::Zero(layout_.size());
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) {
      const Vector x = state_at(w, k, n);
      const double e = model_.tracked_output(x) - spec_.setpoint.at(grid_.time(k, n));
      g.segment(layout_.state(k, n), layout_.state_size()) +=
          spec_.tracking_weight * e * h * model_.tracked_output_gradient(x);
    }
    // d/du_k of the moves into and out of interval k.
    const Vector u = input_at(w, k);
    const Vector before = k == 0 ? spec_.reference_input : input_at(w, k - 1);
    Vector gu = spec_.move_weights.cwiseProduct(u - before) / grid_.dt;
    if (k + 1 < grid_.intervals) gu -= spec_.move_weights.cwiseProduct(input_at(w, k + 1) - u) / grid_.dt;
    g.segment(layout_.input(k), nu) += gu;
  }
  return g;
}

SparseMatrix Transcription::hessian(const Vector& w) const {
  if (w.size() != layout_.size()) throw DomainError("decision vector has the wrong size");
  const double h = grid_.step();
  const int nx = layout_.state_size();
  const int nu = layout_.input_size();
  std::vector<Eigen::Triplet<double>> t;
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) {
      const Vector grad = model_.tracked_output_gradient(state_at(w, k, n));
      const int off = layout_.state(k, n);
      for (int j = 0; j < nx; ++j) {
        if (grad[j] == 0.0) continue;
        for (int i = 0; i < nx; ++i) {
          if (grad[i] == 0.0) continue;
          t.emplace_back(off + i, off + j, spec_.tracking_weight * h * grad[i] * grad[j]);
        }
      }
    }
    const int off = layout_.input(k);
    for (int i = 0; i < nu; ++i) {
      const double wdt = spec_.move_weights[i] / grid_.dt;
      t.emplace_back(off + i, off + i, (k + 1 < grid_.intervals ? 2.0 : 1.0) * wdt);
      if (k + 1 < grid_.intervals) {
        const int next = layout_.input(k + 1);
        t.emplace_back(off + i, next + i, -wdt);
        t.emplace_back(next + i, off + i, -wdt);
      }
    }
  }
  SparseMatrix hess(layout_.size(), layout_.size());
  hess.setFromTriplets(t.begin(), t.end());
  return hess;
}

Vector Transcription::lower_bounds() const {
  Vector v(layout_.size());
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) v.segment(layout_.state(k, n), layout_.state_size()) = spec_.state_lower;
    v.segment(layout_.input(k), layout_.input_size()) = spec_.input_lower;
  }
  return v;
}

Vector Transcription::upper_bounds() const {
  Vector v(layout_.size());
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) v.segment(layout_.state(k, n), layout_.state_size()) = spec_.state_upper;
    v.segment(layout_.input(k), layout_.input_size()) = spec_.input_upper;
  }
  return v;
}

Vector Transcription::variable_scale() const {
  Vector v(layout_.size());
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) v.segment(layout_.state(k, n), layout_.state_size()) = spec_.state_scale;
    v.segment(layout_.input(k), layout_.input_size()) = spec_.input_scale;
  }
  return v;
}

Vector Transcription::constraint_scale() const {
  Vector v(layout_.constraint_count());
  for (int k = 0; k < grid_.intervals; ++k)
    for (int n = 0; n < grid_.steps; ++n) v.segment(layout_.residual(k, n), layout_.state_size()) = spec_.state_scale;
  return v;
}

Vector Transcription::pack(const std::vector<Vector>& states, const std::vector<Vector>& inputs) const {
  const int count = grid_.intervals * grid_.steps;
  if (static_cast<int>(states.size()) != count || static_cast<int>(inputs.size()) != grid_.intervals) {
    throw DomainError("pack: expected " + std::to_string(count) + " states and " +
                      std::to_string(grid_.intervals) + " inputs");
  }
  Vector w(layout_.size());
  for (int k = 0; k < grid_.intervals; ++k) {
    for (int n = 1; n <= grid_.steps; ++n) {
      w.segment(layout_.state(k, n), layout_.state_size()) = states[k * grid_.steps + n - 1];
    }
    w.segment(layout_.input(k), layout_.input_size()) = inputs[k];
  }
  return w;
}

NlpProblem Transcription::problem() const {
  NlpProblem p;
  p.variables = layout_.size();
  p.constraints = layout_.constraint_count();
  p.objective = [this](const Vector& w) { return objective(w); };
  p.gradient = [this](const Vector& w) { return gradient(w); };
  p.residuals = [this](const Vector& w) { return residuals(w); };
  p.jacobian = [this](const Vector& w) { return jacobian(w); };
  p.hessian = [this](const Vector& w, const Vector&) { return hessian(w); };
  p.lower = lower_bounds();
  p.upper = upper_bounds();
  p.variable_scale = variable_scale();
  p.constraint_scale = constraint_scale();
  return p;
}

}  // namespace ddocp
