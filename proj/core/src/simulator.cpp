#include "ddocp/simulator.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "ddocp/errors.hpp"
#include "ddocp/kernel.hpp"
#include "ddocp/transcription.hpp"

namespace ddocp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

}  // namespace

// ---------------------------------------------------------------------------
// InputSchedule

InputSchedule::InputSchedule(std::vector<double> times, std::vector<Vector> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size()) {
    throw DomainError("input schedule needs matching, nonempty time and value lists");
  }
  for (std::size_t j = 1; j < times_.size(); ++j) {
    if (!(times_[j] > times_[j - 1])) throw DomainError("input switch times must be strictly increasing");
    if (values_[j].size() != values_[0].size()) throw DomainError("input vectors differ in size");
  }
}

InputSchedule InputSchedule::constant(const Vector& u, double t0) { return InputSchedule({t0}, {u}); }

int InputSchedule::segment(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  return static_cast<int>(it - times_.begin()) - 1;
}

// ---------------------------------------------------------------------------
// History

void History::append(double t, ConstVectorRef y, ConstVectorRef left, ConstVectorRef right) {
  if (y.size() != dim_ || left.size() != dim_ || right.size() != dim_) {
    throw DomainError("history node has the wrong dimension");
  }
  if (!empty() && !(t > back_time())) throw DomainError("history times must be strictly increasing");
  times_.push_back(t);
  values_.insert(values_.end(), y.data(), y.data() + dim_);
  left_.insert(left_.end(), left.data(), left.data() + dim_);
  right_.insert(right_.end(), right.data(), right.data() + dim_);
}

void History::set_back_right_derivative(ConstVectorRef right) {
  if (empty()) throw DomainError("history is empty");
  std::copy(right.data(), right.data() + dim_, right_.end() - dim_);
}

std::size_t History::locate(double t, std::size_t cursor) const {
  // Returns j with times_[j] <= t <= times_[j+1], offset_ <= j < size - 1.
  const std::size_t last = times_.size() - 1;
  std::size_t j = std::clamp(cursor, offset_, last - 1);
  for (int hop = 0; hop < 8; ++hop) {
    if (t < times_[j]) {
      if (j == offset_) return j;
      --j;
    } else if (t > times_[j + 1]) {
      ++j;
      if (j >= last) return last - 1;
    } else {
      return j;
    }
  }
  auto it = std::upper_bound(times_.begin() + offset_, times_.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times_.begin());
  if (k == offset_) return offset_;
  return std::min(k - 1, last - 1);
}

void History::evaluate(double t, std::size_t& cursor, double* out) const {
  if (empty()) throw DomainError("history is empty");
  const std::size_t first = offset_;
  if (count() == 1 || t <= times_[first]) {
    std::copy(values_.begin() + first * dim_, values_.begin() + (first + 1) * dim_, out);
    return;
  }
  if (t > back_time() * (1.0 + 1e-15) + 1e-15) {
    throw DomainError("history queried after its newest node");
  }
  const std::size_t j = locate(t, cursor);
  cursor = j;
  const double t0 = times_[j];
  const double h = times_[j + 1] - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s) * h;
  const double h01 = s2 * (3.0 - 2.0 * s);
  const double h11 = s2 * (s - 1.0) * h;
  const double* y0 = values_.data() + j * dim_;
  const double* y1 = y0 + dim_;
  const double* d0 = right_.data() + j * dim_;
  const double* d1 = left_.data() + (j + 1) * dim_;
  for (int i = 0; i < dim_; ++i) out[i] = h00 * y0[i] + h10 * d0[i] + h01 * y1[i] + h11 * d1[i];
}

Vector History::operator()(double t) const {
  Vector out(dim_);
  std::size_t cursor = offset_;
  evaluate(t, cursor, out.data());
  return out;
}

void History::discard_before(double t) {
  if (count() < 2) return;
  std::size_t j = offset_;
  while (j + 1 < times_.size() && times_[j + 1] <= t) ++j;
  offset_ = j;
  // Compact once the dead prefix dominates; cursors are clamped by locate().
  if (offset_ > 4096 && offset_ > times_.size() / 2) {
    times_.erase(times_.begin(), times_.begin() + offset_);
    values_.erase(values_.begin(), values_.begin() + offset_ * dim_);
    left_.erase(left_.begin(), left_.begin() + offset_ * dim_);
    right_.erase(right_.begin(), right_.begin() + offset_ * dim_);
    offset_ = 0;
  }
}

// ---------------------------------------------------------------------------
// Trajectory

void Trajectory::append(double t, const Vector& x, const Vector& u, double y) {
  time.push_back(t);
  states.push_back(x);
  inputs.push_back(u);
  tracked.push_back(y);
}

// ---------------------------------------------------------------------------
// True system

namespace {

// Absolute-delay mixtures for one input value, grouped by kernel family.
struct SegmentKernels {
  std::vector<std::vector<double>> lags;     // [family][k]
  std::vector<std::vector<double>> weights;  // [family][k]
};

class DelayEvaluator {
 public:
  DelayEvaluator(const DelayModel& model, const InputSchedule& inputs, int points, LagSemantics semantics)
      : inputs_(inputs), semantics_(semantics), m_(model.delay_size()) {
    std::map<int, int> family_index;
    for (int i = 0; i < m_; ++i) {
      auto [it, inserted] = family_index.emplace(model.kernel_family(i), static_cast<int>(representative_.size()));
      if (inserted) representative_.push_back(i);
      family_of_.push_back(it->second);
    }
    for (const Vector& u : inputs.values()) {
      const std::vector<DiscretizedKernel> kernels = model.discretized_kernels(u, points);
      SegmentKernels seg;
      for (int rep : representative_) {
        seg.lags.push_back(kernels[rep].lags);
        seg.weights.push_back(kernels[rep].weights);
      }
      segments_.push_back(std::move(seg));
    }
    cursors_.resize(representative_.size());
    for (std::size_t f = 0; f < representative_.size(); ++f) cursors_[f].assign(segments_[0].lags[f].size(), 0);
    buffer_.resize(m_);
  }

  int families() const { return static_cast<int>(representative_.size()); }
  const SegmentKernels& segment(int j) const { return segments_[j]; }

  double min_lag() const {
    double out = kInf;
    for (const auto& s : segments_)
      for (const auto& l : s.lags) out = std::min(out, l.front());
    return out;
  }
  double max_lag() const {
    double out = 0.0;
    for (const auto& s : segments_)
      for (const auto& l : s.lags) out = std::max(out, l.back());
    return out;
  }

  // z(t) with the lags of input segment `seg` (observation semantics) or the
  // emission-time input.
  void memory(const History& history, double t, int seg, double* z) {
    std::fill(z, z + m_, 0.0);
    const SegmentKernels& kernels = segments_[seg];
    for (int f = 0; f < families(); ++f) {
      const auto& lags = kernels.lags[f];
      const auto& weights = kernels.weights[f];
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const double tau = semantics_ == LagSemantics::kObservation ? lags[k] : emission_lag(t, seg, f, k);
        history.evaluate(t - tau, cursors_[f][k], buffer_.data());
        for (int i = 0; i < m_; ++i) {
          if (family_of_[i] == f) z[i] += weights[k] * buffer_[i];
        }
      }
    }
  }

 private:
  // Lag of segment j whose departure time falls into segment j; when no
  // segment is consistent, the parcel left at the switch between them.
  double emission_lag(double t, int seg, int f, std::size_t k) const {
    const auto& times = inputs_.times();
    for (int j = seg; j >= 0; --j) {
      const double tau = segments_[j].lags[f][k];
      const double start = j == 0 ? -kInf : times[j];
      if (t - tau >= start) {
        if (j < seg && t - tau >= times[j + 1]) return t - times[j + 1];
        return tau;
      }
    }
    return segments_[0].lags[f][k];
  }

  const InputSchedule& inputs_;
  LagSemantics semantics_;
  int m_;
  std::vector<int> representative_;
  std::vector<int> family_of_;
  std::vector<SegmentKernels> segments_;
  std::vector<std::vector<std::size_t>> cursors_;
  std::vector<double> buffer_;
};

std::vector<double> step_targets(const InputSchedule& inputs, const DelayEvaluator& delays, double t0,
                                 double t_final, const SimConfig& config) {
  std::vector<double> out;
  std::vector<double> events{t0};
  for (double s : inputs.times()) {
    if (s > t0 && s < t_final) events.push_back(s);
  }
  out.insert(out.end(), events.begin() + 1, events.end());
  if (config.track_breakpoints && config.lags == LagSemantics::kObservation) {
    const auto& times = inputs.times();
    for (int j = 0; j < inputs.size(); ++j) {
      const double a = std::max(j == 0 ? -kInf : times[j], t0);
      const double b = std::min(j + 1 < inputs.size() ? times[j + 1] : kInf, t_final);
      if (!(a < b)) continue;
      for (const auto& lags : delays.segment(j).lags) {
        for (double e : events) {
          if (e >= b) break;
          for (double tau : lags) {
            const double bp = e + tau;
            if (bp > a && bp < b) out.push_back(bp);
          }
        }
      }
    }
  }
  const long samples = static_cast<long>(std::floor((t_final - t0) / config.sample_interval + 1e-9));
  for (long i = 1; i <= samples; ++i) out.push_back(t0 + i * config.sample_interval);
  out.push_back(t_final);
  std::sort(out.begin(), out.end());
  std::vector<double> unique;
  for (double v : out) {
    if (v <= t0 || v > t_final) continue;
    if (!unique.empty() && same_time(unique.back(), v)) continue;
    unique.push_back(v);
  }
  if (!unique.empty() && same_time(unique.back(), t_final)) unique.back() = t_final;
  return unique;
}

}  // namespace

Trajectory simulate_true(const DelayModel& model, const Vector& x0, const InputSchedule& inputs,
                         double t0, double t_final, const SimConfig& config, const History* output_history) {
  const int nx = model.state_size();
  const int m = model.delay_size();
  if (x0.size() != nx) throw DomainError("initial state has the wrong size");
  if (!(t_final > t0)) throw DomainError("final time must exceed the start time");
  if (!(config.step > 0.0)) throw ConfigError("integrator step must be positive");
  if (config.kernel_points < 1) throw ConfigError("kernel discretization needs K >= 1");
  if (!(config.sample_interval > 0.0)) throw ConfigError("sample interval must be positive");
  for (const Vector& u : inputs.values()) model.validate_input(u);

  DelayEvaluator delays(model, inputs, config.kernel_points, config.lags);
  if (!(config.step < delays.min_lag())) {
    std::ostringstream msg;
    msg << "integrator step " << config.step << " s is not smaller than the shortest lag "
        << delays.min_lag() << " s";
    throw ConfigError(msg.str());
  }
  const double keep = delays.max_lag() + 2.0 * config.step;
  const std::vector<double> targets = step_targets(inputs, delays, t0, t_final, config);
  const std::vector<int> nonnegative = model.nonnegative_states();
  std::vector<bool> warned(nx, false);

  History history = output_history ? *output_history : History(m);
  if (history.dimension() != m) throw ConfigError("output history has the wrong dimension");
  const Vector zero_m = Vector::Zero(m);
  const Vector r0 = model.delayed_outputs(x0);
  if (history.empty()) {
    history.append(t0, r0, zero_m, zero_m);
  } else if (!same_time(history.back_time(), t0)) {
    throw ConfigError("output history must end at the start time");
  }

  Trajectory traj;
  Vector x = x0;
  double t = t0;
  int seg = inputs.segment(t);
  traj.append(t, x, inputs.values()[seg], model.tracked_output(x));

  Vector z(m), k1(nx), k2(nx), k3(nx), k4(nx), stage(nx);
  auto derivative = [&](double ts, const Vector& xs, int s, Vector& out) {
    delays.memory(history, ts, s, z.data());
    model.rhs(xs, z, inputs.values()[s], out);
  };

  const double sample_tol = 1e-9;
  long next_sample = 1;
  std::size_t target = 0;
  long steps = 0;
  // f at the newest node with the input of the step that ended there; it is
  // the node's left derivative and, without an input switch, the next k1.
  Vector f_end(nx);
  int end_seg = -1;
  while (target < targets.size()) {
    seg = inputs.segment(t);
    if (seg == end_seg) {
      k1 = f_end;
    } else {
      derivative(t, x, seg, k1);
    }
    history.set_back_right_derivative(model.delayed_outputs(k1));

    double h = config.step;
    double t_next = t + h;
    if (targets[target] <= t + h * (1.0 + 1e-9)) {
      t_next = targets[target];
      h = t_next - t;
      ++target;
    }
    stage = x + 0.5 * h * k1;
    derivative(t + 0.5 * h, stage, seg, k2);
    stage = x + 0.5 * h * k2;
    derivative(t + 0.5 * h, stage, seg, k3);
    stage = x + h * k3;
    derivative(t_next, stage, seg, k4);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
    ++steps;
    if (!x.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at t = " << t;
      throw SimulationError(msg.str());
    }
    for (int i : nonnegative) {
      if (x[i] < -1e-9 && !warned[i]) {
        warned[i] = true;
        std::ostringstream msg;
        msg << "state " << i << " negative (" << x[i] << ") at t = " << t;
        traj.warnings.push_back(msg.str());
      }
    }
    derivative(t, x, seg, f_end);
    end_seg = seg;
    const Vector dr = model.delayed_outputs(f_end);
    history.append(t, model.delayed_outputs(x), dr, dr);

    const double sample_time = t0 + next_sample * config.sample_interval;
    if (std::abs(t - sample_time) <= sample_tol * std::max(1.0, std::abs(t))) {
      traj.append(t, x, inputs.at(t), model.tracked_output(x));
      ++next_sample;
    } else if (t == t_final && traj.time.back() != t) {
      traj.append(t, x, inputs.at(t), model.tracked_output(x));
    }
    if (steps % 4096 == 0) history.discard_before(t - keep);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Approximate system

Trajectory simulate_approx(const DelayModel& model, const Vector& x0, const InputSchedule& inputs,
                           double t0, double t_final, double step) {
  if (x0.size() != model.state_size()) throw DomainError("initial state has the wrong size");
  if (!(t_final > t0)) throw DomainError("final time must exceed the start time");
  if (!(step > 0.0)) throw ConfigError("step must be positive");
  for (const Vector& u : inputs.values()) model.validate_input(u);

  std::vector<double> pieces{t0};
  for (double s : inputs.times()) {
    if (s > t0 && s < t_final && !same_time(s, t0) && !same_time(s, t_final)) pieces.push_back(s);
  }
  pieces.push_back(t_final);

  Trajectory traj;
  Vector x = x0;
  traj.append(t0, x, inputs.at(t0), model.tracked_output(x));
  for (std::size_t p = 0; p + 1 < pieces.size(); ++p) {
    const double a = pieces[p];
    const double b = pieces[p + 1];
    const Vector u = inputs.at(a);
    const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / step - 1e-9)));
    const double h = (b - a) / n;
    for (long i = 0; i < n; ++i) {
      const double t_next = i + 1 == n ? b : a + (i + 1) * h;
      Vector next = x;
      double norm = kInf;
      for (int iter = 0; iter < 50; ++iter) {
        const Vector res = euler_residual(model, x, next, u, h);
        norm = res.lpNorm<Eigen::Infinity>();
        if (norm <= 1e-10 * std::max(1.0, next.lpNorm<Eigen::Infinity>())) break;
        const Matrix jac = euler_jacobians(model, x, next, u, h).next;
        next -= jac.partialPivLu().solve(res);
        if (!next.allFinite()) break;
      }
      if (!(norm <= 1e-10 * std::max(1.0, next.lpNorm<Eigen::Infinity>()))) {
        std::ostringstream msg;
        msg << "implicit Euler step to t = " << t_next << " did not converge (residual " << norm << ")";
        throw SimulationError(msg.str());
      }
      x = next;
      traj.append(t_next, x, u, model.tracked_output(x));
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Error metrics

namespace {

double interpolate(const Trajectory& traj, double t) {
  const auto& time = traj.time;
  auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return traj.tracked.front();
  if (it == time.end()) return traj.tracked.back();
  const std::size_t j = static_cast<std::size_t>(it - time.begin());
  const double a = time[j - 1];
  const double b = time[j];
  const double s = (t - a) / (b - a);
  return (1.0 - s) * traj.tracked[j - 1] + s * traj.tracked[j];
}

double spacing(const Trajectory& traj) {
  if (traj.size() < 2) return kInf;
  return (traj.time.back() - traj.time.front()) / (traj.size() - 1);
}

}  // namespace

ErrorMetrics error_metrics(const Trajectory& truth, const Trajectory& approx) {
  if (truth.size() == 0 || approx.size() == 0) throw DomainError("empty trajectory");
  const double lo = std::max(truth.time.front(), approx.time.front());
  const double hi = std::min(truth.time.back(), approx.time.back());
  if (lo > hi + 1e-9 * std::max(1.0, std::abs(hi))) throw DomainError("trajectories do not overlap in time");
  const bool truth_coarser = spacing(truth) > spacing(approx);
  const Trajectory& coarse = truth_coarser ? truth : approx;

  ErrorMetrics out;
  double sum_sq = 0.0;
  for (int i = 0; i < coarse.size(); ++i) {
    const double t = coarse.time[i];
    if (t < lo - 1e-9 * std::max(1.0, std::abs(lo)) || t > hi + 1e-9 * std::max(1.0, std::abs(hi))) continue;
    const double yt = truth_coarser ? truth.tracked[i] : interpolate(truth, t);
    const double ya = truth_coarser ? interpolate(approx, t) : approx.tracked[i];
    const double d = yt - ya;
    out.time.push_back(t);
    out.difference.push_back(d);
    sum_sq += d * d;
    if (std::abs(d) > out.max_abs) {
      out.max_abs = std::abs(d);
      out.time_of_max = t;
    }
  }
  if (out.time.empty()) throw DomainError("no common sample times");
  out.rms = std::sqrt(sum_sq / out.time.size());
  if (out.max_abs == 0.0) out.time_of_max = out.time.front();
  return out;
}

}  // namespace ddocp
