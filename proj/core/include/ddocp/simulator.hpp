#pragma once

/// \file simulator.hpp
/// Simulation of the distributed-delay system and of its delay-linearized
/// surrogate.
///
/// The true system replaces every kernel by a K-point absolute-delay
/// mixture, z_i(t) = sum_k w_k r_i(t - tau_k(u)), and is integrated with
/// fixed-step classical RK4.  Delayed outputs are looked up in a cubic
/// Hermite history.  Steps are shortened to land on input switches, on the
/// first-generation derivative discontinuities they propagate
/// (switch + tau_k) and on output sample times.
///
/// The surrogate is marched with the same implicit-Euler step as the
/// transcription.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "ddocp/model.hpp"

namespace ddocp {

/// Zero-order-hold input schedule: values[j] applies on
/// [times[j], times[j+1]); the first value also applies before times[0],
/// the last one after times.back().
class InputSchedule {
 public:
  InputSchedule(std::vector<double> times, std::vector<Vector> values);
  static InputSchedule constant(const Vector& u, double t0 = 0.0);

  const Vector& at(double t) const { return values_[segment(t)]; }
  int segment(double t) const;
  int size() const { return static_cast<int>(times_.size()); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vector>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Vector> values_;
};

/// Piecewise cubic Hermite interpolant through (t_j, y_j) with one-sided
/// derivatives: the segment [t_j, t_{j+1}] uses the right derivative at t_j
/// and the left derivative at t_{j+1}, so kinks at nodes are represented
/// exactly.  Before the first node the first value is returned.
class History {
 public:
  explicit History(int dimension) : dim_(dimension) {}

  int dimension() const { return dim_; }
  bool empty() const { return count() == 0; }
  std::size_t count() const { return times_.size() - offset_; }
  double front_time() const { return times_[offset_]; }
  double back_time() const { return times_.back(); }

  /// Times must be strictly increasing.  `left` is the derivative on the
  /// segment that ends here, `right` the one on the segment that starts here.
  void append(double t, ConstVectorRef y, ConstVectorRef left, ConstVectorRef right);
  /// Overwrites the right derivative of the newest node.
  void set_back_right_derivative(ConstVectorRef right);

  Vector operator()(double t) const;
  /// Same, with a node cursor that is reused across monotone queries.
  /// Queries after the newest node raise DomainError.
  void evaluate(double t, std::size_t& cursor, double* out) const;

  /// Drops nodes before `t` (keeping the one at or before it).
  void discard_before(double t);

 private:
  std::size_t locate(double t, std::size_t cursor) const;

  int dim_;
  std::size_t offset_ = 0;  // logical start inside the buffers
  std::vector<double> times_;
  std::vector<double> values_, left_, right_;  // dim_ entries per node
};

enum class LagSemantics {
  kObservation,  // tau_k(u(t)): input at arrival time
  kEmission,     // tau_k(u(t - tau_k)), experimental
};

struct SimConfig {
  double step = 1e-3;           // RK4 step h [s]
  int kernel_points = 30;       // K
  double sample_interval = 1.0; // output spacing [s]
  LagSemantics lags = LagSemantics::kObservation;
  bool track_breakpoints = true;
};

struct Trajectory {
  std::vector<double> time;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> tracked;  // model.tracked_output(x)
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(time.size()); }
  void append(double t, const Vector& x, const Vector& u, double y);
};

/// Simulates the absolute-delay approximation of the distributed-delay
/// system on [t0, t_final].  The delayed outputs before t0 are constant at
/// h(x0) unless `output_history` is given.  Raises ConfigError when the step
/// is not smaller than the shortest lag, SimulationError on non-finite
/// states.
Trajectory simulate_true(const DelayModel& model, const Vector& x0, const InputSchedule& inputs,
                         double t0, double t_final, const SimConfig& config = {},
                         const History* output_history = nullptr);

/// Implicit-Euler march of the delay-linearized system with steps of at
/// most `step`, shortened so that every input switch is a grid point.  The
/// backward difference at the first step uses x0 as the previous state (a
/// constant history).  Newton per step to ||R||_inf <= 1e-10 max(1, ||x||_inf);
/// SimulationError otherwise.
Trajectory simulate_approx(const DelayModel& model, const Vector& x0, const InputSchedule& inputs,
                           double t0, double t_final, double step);

struct ErrorMetrics {
  std::vector<double> time;
  std::vector<double> difference;  // y_true - y_approx
  double max_abs = 0.0;
  double rms = 0.0;
  double time_of_max = 0.0;
};

/// Compares tracked outputs on the overlap of both time ranges, sampled at
/// the times of the coarser trajectory; the finer one is interpolated
/// linearly.  DomainError for disjoint ranges.
ErrorMetrics error_metrics(const Trajectory& truth, const Trajectory& approx);

}  // namespace ddocp
