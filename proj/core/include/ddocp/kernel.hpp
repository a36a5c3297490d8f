#pragma once

/// \file kernel.hpp
/// Distributed-delay kernels induced by axisymmetric laminar pipe flow.
///
/// A fluid parcel entering a pipe of length L at radius r leaves after
/// tau(r) = L / v(r).  Weighting each streamline by the volumetric flow it
/// carries gives a residence-time density alpha(tau) supported on
/// [tau0, inf), tau0 = L / v(0), which integrates to one.  For the parabolic
/// (Hagen-Poiseuille) profile v(r) = a (R^2 - r^2) the density is
/// 2 tau0^2 / tau^3 with mean lag 2 tau0.

#include <complex>
#include <functional>
#include <vector>

namespace ddocp {

struct PipeGeometry {
  double length = 0.0;  // [m]
  double radius = 0.0;  // [m]

  /// Throws DomainError unless both dimensions are positive and finite.
  void validate() const;
  double cross_section() const;
  double volume() const;
};

/// Laplace transform of a kernel and its derivative with respect to the
/// transform variable, evaluated at one point.
struct LaplaceValue {
  std::complex<double> value;
  std::complex<double> derivative;
};

/// Closed-form kernel for the parabolic velocity profile
/// v(r) = a (R^2 - r^2), a = dP / (4 mu L).
class HagenPoiseuilleKernel {
 public:
  static HagenPoiseuilleKernel from_pressure_drop(double pressure_drop, double viscosity,
                                                  const PipeGeometry& geometry);
  /// Back-computes the pressure drop that produces the requested
  /// cross-section average velocity (half the centerline velocity).
  static HagenPoiseuilleKernel from_average_velocity(double average_velocity, double viscosity,
                                                     const PipeGeometry& geometry);

  const PipeGeometry& geometry() const { return geometry_; }
  double pressure_drop() const { return pressure_drop_; }
  double viscosity() const { return viscosity_; }
  double coefficient() const { return coefficient_; }  // a [1/(m s)]
  double min_lag() const { return min_lag_; }          // tau0 [s]
  double flow_rate() const { return flow_rate_; }      // F [m^3/s]
  double mean_lag() const { return 2.0 * min_lag_; }   // gamma [s]
  double max_velocity() const;
  double average_velocity() const;

  /// 2 tau0^2 / tau^3 for tau >= tau0, zero below.
  double density(double tau) const;
  /// Unnormalized density pi L^2 / (a tau^3); integrates to the flow rate.
  double unnormalized_density(double tau) const;
  /// Probability mass with lag <= tau: 1 - tau0^2 / tau^2.
  double cdf(double tau) const;

  /// Laplace transform int_0^inf exp(-s tau) alpha(tau) dtau with its
  /// s-derivative: Gauss-Legendre quadrature over [tau0, T], |s| T >= 40, and
  /// an asymptotic tail expansion whose remainder is below `tail_tolerance`.  The transform diverges for Re s < 0
  /// (power-law tail), which is reported as a DomainError.
  LaplaceValue laplace(std::complex<double> s, double tail_tolerance = 1e-11) const;

  /// Kernel of a pipe with half the length driven by half the pressure
  /// drop: same coefficient a, half the minimum lag.
  HagenPoiseuilleKernel half_loop() const;

 private:
  HagenPoiseuilleKernel(const PipeGeometry& geometry, double pressure_drop, double viscosity);

  PipeGeometry geometry_;
  double pressure_drop_;
  double viscosity_;
  double coefficient_;
  double min_lag_;
  double flow_rate_;
};

HagenPoiseuilleKernel hp_kernel(double pressure_drop, double viscosity, const PipeGeometry& geometry);
double kernel_density(const HagenPoiseuilleKernel& kernel, double tau);

using RadialFunction = std::function<double(double)>;

/// Axial velocity v(r) on [0, R] together with dv/dr.
struct VelocityProfile {
  RadialFunction velocity;
  RadialFunction derivative;
};

VelocityProfile hagen_poiseuille_profile(double coefficient, double radius);

/// Kernel evaluated numerically, either from an arbitrary velocity profile
/// or from a user-supplied density.
class NumericKernel {
 public:
  /// Inverts v(r) tau = L by bisection for every lag.  The profile must be
  /// strictly decreasing with v(R) = 0; violations raise ProfileError.
  static NumericKernel from_profile(VelocityProfile profile, const PipeGeometry& geometry);
  /// Wraps a normalized density that vanishes below `min_lag`.
  static NumericKernel from_density(double min_lag, std::function<double(double)> density,
                                    double flow_rate = 1.0);

  double min_lag() const { return min_lag_; }
  double flow_rate() const { return flow_rate_; }
  double density(double tau) const;
  bool has_profile() const { return static_cast<bool>(profile_.velocity); }

  /// Radius whose streamline has travel time tau (profile kernels only).
  double radius_at_lag(double tau) const;
  /// Flow fraction with lag > tau, from the radial flow integral
  /// (profile kernels only).
  double tail_mass(double tau) const;
  /// Smallest lag (doubling from tau0) whose tail mass is below 1e-8
  /// (profile kernels only).
  double truncation_lag() const;

 private:
  NumericKernel() = default;

  double min_lag_ = 0.0;
  double flow_rate_ = 1.0;
  PipeGeometry geometry_{};
  VelocityProfile profile_{};
  std::function<double(double)> density_;
};

/// Finite mixture of absolute delays: sum_k w_k delta(tau - tau_k).
struct DiscretizedKernel {
  std::vector<double> lags;     // strictly increasing [s]
  std::vector<double> weights;  // positive, sum to one

  static DiscretizedKernel point_mass(double lag);

  std::size_t size() const { return lags.size(); }
  double min_lag() const { return lags.front(); }
  double max_lag() const { return lags.back(); }
  double mean_lag() const;
  /// Lag CDF: total weight of lags <= tau.
  double cdf(double tau) const;
  /// Same weights with every lag multiplied by `factor`.
  DiscretizedKernel scaled(double factor) const;
  LaplaceValue laplace(std::complex<double> s) const;
  /// Throws DomainError if the invariants (positive weights summing to one,
  /// strictly increasing positive lags) do not hold.
  void validate() const;
};

/// Zeroth and first moments of a numeric kernel on [tau0, inf).
struct KernelMoments {
  double mass = 0.0;
  double mean = 0.0;
  double truncation_lag = 0.0;  // quadrature upper limit
  double tail_exponent = 0.0;   // fitted p in alpha ~ tau^-p beyond truncation
};

/// Adaptive quadrature over geometric panels with a power-law tail
/// extrapolation.  Raises NonIntegrableError when the fitted tail exponent
/// is <= 2 (divergent first moment).
KernelMoments kernel_moments(const NumericKernel& kernel);

double mean_lag(const HagenPoiseuilleKernel& kernel);
double mean_lag(const NumericKernel& kernel);
double mean_lag(const DiscretizedKernel& kernel);

NumericKernel kernel_from_profile(VelocityProfile profile, const PipeGeometry& geometry);

/// Equal-width radial annuli; each annulus becomes one absolute lag
/// L / vbar_k, vbar_k the flow-weighted mean velocity of the annulus, with
/// weight equal to its share of the total flow.
DiscretizedKernel discretize_profile(const VelocityProfile& profile, const PipeGeometry& geometry,
                                     int count);
/// Same construction with the annulus integrals of the parabolic profile
/// evaluated in closed form.
DiscretizedKernel discretize_hagen_poiseuille(const HagenPoiseuilleKernel& kernel, int count);

}  // namespace ddocp
