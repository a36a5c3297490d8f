#pragma once

/// \file transcription.hpp
/// Simultaneous transcription of the delay-linearized optimal control
/// problem.
///
/// Each control interval k carries M implicit-Euler steps of length
/// h = dt / M and one zero-order-hold input u_k:
///
///   R_{k,n} = x_{k,n+1} - x_{k,n} - h f(x_{k,n+1}, z_{k,n+1}, u_k),
///   z_{k,n+1} = r_{k,n+1} - (r_{k,n+1} - r_{k,n}) / h * gamma(u_k),
///
/// with r = h(x), x_{0,0} the initial state and x_{k,0} = x_{k-1,M}.  The
/// objective is the right-rectangle tracking cost plus an input-move
/// penalty:
///
///   psi = sum_{k,n} 1/2 q (y(x_{k,n+1}) - y_sp(t_{k,n+1}))^2 h
///       + 1/2 sum_k du_k^T W du_k / dt,   du_k = u_k - u_{k-1}.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ddocp/model.hpp"
#include "ddocp/nlp.hpp"

namespace ddocp {

struct Grid {
  double t0 = 0.0;
  double dt = 30.0;   // control interval [s]
  int intervals = 40;  // N
  int steps = 1;       // M, implicit-Euler steps per interval

  double step() const { return dt / steps; }
  double final_time() const { return t0 + intervals * dt; }
  double interval_start(int k) const { return t0 + k * dt; }
  /// Time of x_{k,n}, n = 0..M.
  double time(int k, int n) const { return t0 + k * dt + n * step(); }
  void validate() const;
};

enum class SegmentMode { kHold, kLinear };

/// Piecewise profile through (time, value) knots.  The mode of a knot
/// governs the segment that starts at it; before the first knot the first
/// value is held, after the last knot the last value is held.
class SetpointProfile {
 public:
  struct Knot {
    double time = 0.0;
    double value = 0.0;
    SegmentMode mode = SegmentMode::kHold;
  };

  SetpointProfile() = default;
  /// Knot times must be nondecreasing; throws DomainError otherwise.
  explicit SetpointProfile(std::vector<Knot> knots);

  static SetpointProfile constant(double value);
  /// Holds `from` until `start`, moves linearly to `to` over `duration`, holds.
  static SetpointProfile ramp(double from, double to, double start, double duration);

  double at(double t) const;
  const std::vector<Knot>& knots() const { return knots_; }

 private:
  std::vector<Knot> knots_;
};

struct OcpSpec {
  double tracking_weight = 1.0;      // q
  Eigen::VectorXd move_weights;      // diagonal of W (n_u)
  SetpointProfile setpoint;          // y_sp(t) for the model's tracked output
  Eigen::VectorXd initial_state;     // x_{0,0}
  Eigen::VectorXd reference_input;   // u_{-1}
  Eigen::VectorXd state_lower, state_upper;
  Eigen::VectorXd input_lower, input_upper;
  Eigen::VectorXd state_scale;       // nominal magnitudes used by the solver
  Eigen::VectorXd input_scale;

  /// Throws DomainError on size mismatches, crossed bounds, nonpositive
  /// weights or scales.
  void validate(const DelayModel& model) const;
};

/// Index map of the decision vector: for every interval k the states
/// x_{k,1..M} followed by u_k.
class DecisionLayout {
 public:
  DecisionLayout(int state_size, int input_size, int intervals, int steps);

  int size() const { return intervals_ * block_; }
  int constraint_count() const { return intervals_ * steps_ * nx_; }
  /// Offset of x_{k,n}, n = 1..M.
  int state(int k, int n) const { return k * block_ + (n - 1) * nx_; }
  int input(int k) const { return k * block_ + steps_ * nx_; }
  /// Offset of the residual block R_{k,n}, n = 0..M-1.
  int residual(int k, int n) const { return (k * steps_ + n) * nx_; }

  int state_size() const { return nx_; }
  int input_size() const { return nu_; }
  int intervals() const { return intervals_; }
  int steps() const { return steps_; }

  /// Human-readable name of entry i, e.g. "x[3,1][7]" or "u[3][1]".
  std::string name(int i) const;

 private:
  int nx_, nu_, intervals_, steps_, block_;
};

/// Partial derivatives of one implicit-Euler step residual.
struct StepJacobians {
  Matrix next;   // dR/dx_{n+1}
  Matrix prev;   // dR/dx_n
  Matrix input;  // dR/du
};

/// R = x_next - x_prev - h f(x_next, z, u) with the backward-difference
/// memory state.  Shared by the transcription and the approximate-system
/// simulator.
Vector euler_residual(const DelayModel& model, ConstVectorRef x_prev, ConstVectorRef x_next,
                      ConstVectorRef u, double h);
StepJacobians euler_jacobians(const DelayModel& model, ConstVectorRef x_prev,
                              ConstVectorRef x_next, ConstVectorRef u, double h);

class Transcription {
 public:
  /// Validates grid and spec; the model must outlive the transcription.
  Transcription(const DelayModel& model, OcpSpec spec, Grid grid);

  const DecisionLayout& layout() const { return layout_; }
  const OcpSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }

  /// x_{k,n} for n = 0..M, resolving x_{0,0} and continuity.
  Vector state_at(const Vector& w, int k, int n) const;
  Vector input_at(const Vector& w, int k) const;

  Vector residuals(const Vector& w) const;
  /// Fixed pattern: dense n_x x n_x diagonal and subdiagonal blocks and
  /// dense n_x x n_u input blocks.
  SparseMatrix jacobian(const Vector& w) const;
  double objective(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  /// Gauss-Newton Hessian of the tracking term plus the exact move-penalty
  /// Hessian (constraint curvature ignored).
  SparseMatrix hessian(const Vector& w) const;

  Vector lower_bounds() const;
  Vector upper_bounds() const;
  Vector variable_scale() const;
  Vector constraint_scale() const;

  /// u_k = u_{-1}; x_{k,n} = steady(y_sp(t_{k,n})) for n = 1..M.
  template <class SteadyFn>
  Vector initial_guess(SteadyFn&& steady) const {
    Vector w(layout_.size());
    for (int k = 0; k < grid_.intervals; ++k) {
      for (int n = 1; n <= grid_.steps; ++n) {
        w.segment(layout_.state(k, n), layout_.state_size()) = steady(spec_.setpoint.at(grid_.time(k, n)));
      }
      w.segment(layout_.input(k), layout_.input_size()) = spec_.reference_input;
    }
    return w;
  }

  /// Packs states x_{k,n} (n = 1..M in time order) and inputs into w.
  Vector pack(const std::vector<Vector>& states, const std::vector<Vector>& inputs) const;

  NlpProblem problem() const;

 private:
  const DelayModel& model_;
  OcpSpec spec_;
  Grid grid_;
  DecisionLayout layout_;
};

}  // namespace ddocp
