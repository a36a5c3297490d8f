#include "ddocp/kernel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "ddocp/errors.hpp"

namespace ddocp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTailMass = 1e-8;

using Legendre = boost::math::quadrature::gauss<double, 30>;

template <class F>
auto integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 18) {
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(std::forward<F>(f), a, b,
                                                                      max_depth, rel_tol, &error);
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(what) + " must be positive and finite, got " +
                      std::to_string(value));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PipeGeometry

void PipeGeometry::validate() const {
  require_positive(length, "pipe length");
  require_positive(radius, "pipe radius");
}

double PipeGeometry::cross_section() const { return kPi * radius * radius; }

double PipeGeometry::volume() const { return cross_section() * length; }

// ---------------------------------------------------------------------------
// HagenPoiseuilleKernel

HagenPoiseuilleKernel::HagenPoiseuilleKernel(const PipeGeometry& geometry, double pressure_drop,
                                             double viscosity)
    : geometry_(geometry), pressure_drop_(pressure_drop), viscosity_(viscosity) {
  const double length = geometry.length;
  const double radius = geometry.radius;
  coefficient_ = pressure_drop / (4.0 * viscosity * length);
  min_lag_ = length / (coefficient_ * radius * radius);
  flow_rate_ = 0.5 * kPi * coefficient_ * std::pow(radius, 4);
}

HagenPoiseuilleKernel HagenPoiseuilleKernel::from_pressure_drop(double pressure_drop,
                                                                double viscosity,
                                                                const PipeGeometry& geometry) {
  geometry.validate();
  require_positive(pressure_drop, "pressure drop");
  require_positive(viscosity, "viscosity");
  return HagenPoiseuilleKernel(geometry, pressure_drop, viscosity);
}

HagenPoiseuilleKernel HagenPoiseuilleKernel::from_average_velocity(double average_velocity,
                                                                   double viscosity,
                                                                   const PipeGeometry& geometry) {
  geometry.validate();
  require_positive(average_velocity, "average velocity");
  require_positive(viscosity, "viscosity");
  const double a = 2.0 * average_velocity / (geometry.radius * geometry.radius);
  return HagenPoiseuilleKernel(geometry, 4.0 * viscosity * geometry.length * a, viscosity);
}

double HagenPoiseuilleKernel::max_velocity() const {
  return coefficient_ * geometry_.radius * geometry_.radius;
}

double HagenPoiseuilleKernel::average_velocity() const { return 0.5 * max_velocity(); }

double HagenPoiseuilleKernel::density(double tau) const {
  if (tau < min_lag_) return 0.0;
  return 2.0 * min_lag_ * min_lag_ / (tau * tau * tau);
}

double HagenPoiseuilleKernel::unnormalized_density(double tau) const {
  if (tau < min_lag_) return 0.0;
  return kPi * geometry_.length * geometry_.length / (coefficient_ * tau * tau * tau);
}

double HagenPoiseuilleKernel::cdf(double tau) const {
  if (tau < min_lag_) return 0.0;
  const double ratio = min_lag_ / tau;
  return 1.0 - ratio * ratio;
}

namespace {

/// int_T^inf exp(-s tau) c tau^-p dtau for Re s >= 0 by repeated integration
/// by parts:  exp(-sT) sum_k (-1)^k (p)_k c T^(-p-k) / s^(k+1).  The
/// remainder after n terms is bounded by |g^(n)(T)| / |s|^(n+1); returns
/// false if that bound does not drop below `tolerance` within 40 terms.
bool power_tail(std::complex<double> s, double T, double c, double p, double tolerance,
                std::complex<double>& out) {
  const std::complex<double> inv_s = 1.0 / s;
  std::complex<double> sum = 0.0;
  double derivative = c * std::pow(T, -p);  // |g^(k)(T)|
  std::complex<double> inv_s_power = inv_s;
  double sign = 1.0;
  for (int k = 0; k < 40; ++k) {
    sum += sign * derivative * inv_s_power;
    derivative *= (p + k) / T;
    inv_s_power *= inv_s;
    sign = -sign;
    if (derivative * std::abs(inv_s_power) <= tolerance) {
      out = std::exp(-s * T) * sum;
      return true;
    }
  }
  return false;
}

}  // namespace

LaplaceValue HagenPoiseuilleKernel::laplace(std::complex<double> s, double tail_tolerance) const {
  if (s.real() < 0.0) {
    throw DomainError("Laplace transform of a power-law kernel diverges for Re s < 0");
  }
  const double t0 = min_lag_;
  const double t0_sq = t0 * t0;
  const double modulus = std::abs(s);
  const bool at_origin = modulus == 0.0;

  // Quadrature on doubling panels up to T; beyond T the tails of
  // 2 t0^2 tau^-3 (value) and -2 t0^2 tau^-2 (derivative) are closed form at
  // s = 0 and an asymptotic series with certified remainder otherwise.
  LaplaceValue out{{0.0, 0.0}, {0.0, 0.0}};
  double lo = t0;
  for (int panel = 0;; ++panel) {
    if (at_origin ? panel >= 4 : modulus * lo >= 40.0) break;
    if (panel > 200) throw NumericError("Laplace transform: |s| too small for tail expansion");
    const double hi = 2.0 * lo;
    // Fixed Gauss-Legendre on pieces with |s| h <= 2: adaptive relative
    // tolerances stall on oscillatory pieces whose integral nearly cancels.
    const int pieces = 1 + static_cast<int>(modulus * (hi - lo) / 2.0);
    const double h = (hi - lo) / pieces;
    for (int j = 0; j < pieces; ++j) {
      const double a = lo + j * h;
      const double b = (j + 1 == pieces) ? hi : a + h;
      out.value += Legendre::integrate(
          [&](double tau) { return std::exp(-s * tau) * (2.0 * t0_sq / (tau * tau * tau)); }, a, b);
      out.derivative += Legendre::integrate(
          [&](double tau) { return -std::exp(-s * tau) * (2.0 * t0_sq / (tau * tau)); }, a, b);
    }
    lo = hi;
  }
  if (at_origin) {
    out.value += t0_sq / (lo * lo);
    out.derivative -= 2.0 * t0_sq / lo;
    return out;
  }
  std::complex<double> value_tail, derivative_tail;
  if (!power_tail(s, lo, 2.0 * t0_sq, 3.0, tail_tolerance, value_tail) ||
      !power_tail(s, lo, 2.0 * t0_sq, 2.0, tail_tolerance * mean_lag(), derivative_tail)) {
    throw NumericError("Laplace transform: tail expansion did not reach its tolerance");
  }
  out.value += value_tail;
  out.derivative -= derivative_tail;
  return out;
}

HagenPoiseuilleKernel HagenPoiseuilleKernel::half_loop() const {
  PipeGeometry half = geometry_;
  half.length *= 0.5;
  return HagenPoiseuilleKernel(half, 0.5 * pressure_drop_, viscosity_);
}

HagenPoiseuilleKernel hp_kernel(double pressure_drop, double viscosity,
                                const PipeGeometry& geometry) {
  return HagenPoiseuilleKernel::from_pressure_drop(pressure_drop, viscosity, geometry);
}

double kernel_density(const HagenPoiseuilleKernel& kernel, double tau) {
  return kernel.density(tau);
}

VelocityProfile hagen_poiseuille_profile(double coefficient, double radius) {
  return VelocityProfile{
      [coefficient, radius](double r) { return coefficient * (radius * radius - r * r); },
      [coefficient](double r) { return -2.0 * coefficient * r; }};
}

// ---------------------------------------------------------------------------
// NumericKernel

NumericKernel NumericKernel::from_profile(VelocityProfile profile, const PipeGeometry& geometry) {
  geometry.validate();
  if (!profile.velocity || !profile.derivative) {
    throw ProfileError("velocity profile requires both v(r) and dv/dr");
  }
  const double radius = geometry.radius;
  const double centerline = profile.velocity(0.0);
  if (!(centerline > 0.0)) throw ProfileError("centerline velocity must be positive");
  if (std::abs(profile.velocity(radius)) > 1e-12 * centerline) {
    throw ProfileError("velocity profile violates the no-slip condition v(R) = 0");
  }
  // Strict monotonicity on a sampling grid; bisection needs a single crossing.
  constexpr int kSamples = 512;
  double previous = centerline;
  for (int i = 1; i <= kSamples; ++i) {
    const double v = profile.velocity(radius * i / kSamples);
    if (!(v < previous)) {
      throw ProfileError("velocity profile is not strictly decreasing near r = " +
                         std::to_string(radius * i / kSamples));
    }
    previous = v;
  }

  NumericKernel kernel;
  kernel.geometry_ = geometry;
  kernel.min_lag_ = geometry.length / centerline;
  kernel.flow_rate_ =
      2.0 * kPi * integrate([&](double r) { return profile.velocity(r) * r; }, 0.0, radius, 1e-14);
  kernel.profile_ = std::move(profile);
  return kernel;
}

NumericKernel NumericKernel::from_density(double min_lag, std::function<double(double)> density,
                                          double flow_rate) {
  require_positive(min_lag, "minimum lag");
  require_positive(flow_rate, "flow rate");
  if (!density) throw DomainError("density callable is empty");
  NumericKernel kernel;
  kernel.min_lag_ = min_lag;
  kernel.flow_rate_ = flow_rate;
  kernel.density_ = std::move(density);
  return kernel;
}

double NumericKernel::radius_at_lag(double tau) const {
  if (!has_profile()) throw DomainError("radius_at_lag requires a profile kernel");
  if (tau <= min_lag_) return 0.0;
  const double radius = geometry_.radius;
  const double target = geometry_.length / tau;
  auto residual = [&](double r) { return profile_.velocity(r) - target; };
  if (residual(0.0) < 0.0 || residual(radius) > 0.0) {
    throw ProfileError("root bracket failure inverting v(r) tau = L at tau = " +
                       std::to_string(tau));
  }
  const double tolerance = 1e-12 * radius;
  auto done = [tolerance](double a, double b) { return std::abs(b - a) <= tolerance; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::bisect(residual, 0.0, radius, done, max_iter);
  return 0.5 * (a + b);
}

double NumericKernel::density(double tau) const {
  if (tau < min_lag_) return 0.0;
  if (density_) return density_(tau);
  // r / v'(r) has a finite limit at the centerline for smooth profiles.
  const double r = std::max(radius_at_lag(tau), 1e-9 * geometry_.radius);
  const double slope = profile_.derivative(r);
  if (!(slope < 0.0)) {
    throw ProfileError("dv/dr must be negative away from the centerline");
  }
  const double length = geometry_.length;
  return -2.0 * kPi * length * length / (flow_rate_ * tau * tau * tau) * (r / slope);
}

double NumericKernel::tail_mass(double tau) const {
  if (!has_profile()) throw DomainError("tail_mass requires a profile kernel");
  if (tau <= min_lag_) return 1.0;
  const double r = radius_at_lag(tau);
  const double flow = 2.0 * kPi *
                      integrate([&](double x) { return profile_.velocity(x) * x; }, r,
                                geometry_.radius, 1e-14);
  return flow / flow_rate_;
}

double NumericKernel::truncation_lag() const {
  double tau = min_lag_;
  for (int i = 0; i < 200; ++i) {
    tau *= 2.0;
    if (tail_mass(tau) < kTailMass) return tau;
  }
  throw NumericError("kernel tail mass does not fall below 1e-8");
}

// ---------------------------------------------------------------------------
// DiscretizedKernel

DiscretizedKernel DiscretizedKernel::point_mass(double lag) {
  require_positive(lag, "lag");
  return DiscretizedKernel{{lag}, {1.0}};
}

double DiscretizedKernel::mean_lag() const {
  double sum = 0.0;
  for (std::size_t k = 0; k < lags.size(); ++k) sum += weights[k] * lags[k];
  return sum;
}

double DiscretizedKernel::cdf(double tau) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < lags.size() && lags[k] <= tau; ++k) sum += weights[k];
  return sum;
}

DiscretizedKernel DiscretizedKernel::scaled(double factor) const {
  require_positive(factor, "lag scale factor");
  DiscretizedKernel out = *this;
  for (double& lag : out.lags) lag *= factor;
  return out;
}

LaplaceValue DiscretizedKernel::laplace(std::complex<double> s) const {
  LaplaceValue out{{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const std::complex<double> term = weights[k] * std::exp(-s * lags[k]);
    out.value += term;
    out.derivative -= lags[k] * term;
  }
  return out;
}

void DiscretizedKernel::validate() const {
  if (lags.empty() || lags.size() != weights.size()) {
    throw DomainError("discretized kernel needs equally many (>= 1) lags and weights");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    if (!(weights[k] > 0.0)) throw DomainError("discretized kernel weights must be positive");
    if (!(lags[k] > 0.0)) throw DomainError("discretized kernel lags must be positive");
    if (k > 0 && !(lags[k] > lags[k - 1])) {
      throw DomainError("discretized kernel lags must be strictly increasing");
    }
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw DomainError("discretized kernel weights must sum to one");
  }
}

// ---------------------------------------------------------------------------
// Moments

KernelMoments kernel_moments(const NumericKernel& kernel) {
  KernelMoments out;
  double lo = kernel.min_lag();
  double tail_mass = 1.0;
  double tail_mean = 0.0;
  double exponent = 0.0;
  for (int panel = 0; panel < 64; ++panel) {
    const double hi = 2.0 * lo;
    out.mass += integrate([&](double tau) { return kernel.density(tau); }, lo, hi, 1e-12);
    out.mean += integrate([&](double tau) { return tau * kernel.density(tau); }, lo, hi, 1e-12);
    lo = hi;
    if (panel < 3) continue;

    const double at_end = kernel.density(lo);
    if (at_end <= 0.0) {
      // Compact support (or a tail that underflowed): nothing beyond.
      tail_mass = 0.0;
      tail_mean = 0.0;
      exponent = std::numeric_limits<double>::infinity();
      break;
    }
    const double at_mid = kernel.density(0.5 * lo);
    exponent = std::log2(at_mid / at_end);
    tail_mass = exponent > 1.0 ? at_end * lo / (exponent - 1.0)
                               : std::numeric_limits<double>::infinity();
    if (tail_mass < kTailMass) {
      if (!(exponent > 2.0)) {
        throw NonIntegrableError("kernel tail decays like tau^-" + std::to_string(exponent) +
                                 "; the mean lag diverges");
      }
      tail_mean = at_end * lo * lo / (exponent - 2.0);
      break;
    }
  }
  if (!(tail_mass < kTailMass)) {
    throw NonIntegrableError("kernel tail mass does not vanish; the mean lag is undefined");
  }
  out.mass += tail_mass;
  out.mean += tail_mean;
  out.truncation_lag = lo;
  out.tail_exponent = exponent;
  return out;
}

double mean_lag(const HagenPoiseuilleKernel& kernel) { return kernel.mean_lag(); }

double mean_lag(const NumericKernel& kernel) { return kernel_moments(kernel).mean; }

double mean_lag(const DiscretizedKernel& kernel) { return kernel.mean_lag(); }

NumericKernel kernel_from_profile(VelocityProfile profile, const PipeGeometry& geometry) {
  return NumericKernel::from_profile(std::move(profile), geometry);
}

// ---------------------------------------------------------------------------
// Discretization

namespace {

DiscretizedKernel assemble(std::vector<double> flows, const std::vector<double>& mean_velocity,
                           double length) {
  DiscretizedKernel out;
  double total = 0.0;
  for (double f : flows) total += f;
  out.lags.reserve(flows.size());
  out.weights.reserve(flows.size());
  for (std::size_t k = 0; k < flows.size(); ++k) {
    if (!(flows[k] > 0.0) || !(mean_velocity[k] > 0.0)) {
      throw ProfileError("annulus " + std::to_string(k) + " carries no flow");
    }
    out.weights.push_back(flows[k] / total);
    out.lags.push_back(length / mean_velocity[k]);
  }
  for (std::size_t k = 1; k < out.lags.size(); ++k) {
    if (!(out.lags[k] > out.lags[k - 1])) {
      throw ProfileError("annulus lags are not increasing; profile is not monotone");
    }
  }
  return out;
}

void require_count(int count) {
  if (count < 1) throw DomainError("kernel discretization needs K >= 1 annuli");
}

}  // namespace

DiscretizedKernel discretize_profile(const VelocityProfile& profile, const PipeGeometry& geometry,
                                     int count) {
  require_count(count);
  geometry.validate();
  std::vector<double> flows(count);
  std::vector<double> means(count);
  for (int k = 0; k < count; ++k) {
    const double r0 = geometry.radius * k / count;
    const double r1 = geometry.radius * (k + 1) / count;
    const double flow = integrate([&](double r) { return profile.velocity(r) * r; }, r0, r1, 1e-14);
    const double second = integrate(
        [&](double r) {
          const double v = profile.velocity(r);
          return v * v * r;
        },
        r0, r1, 1e-14);
    flows[k] = 2.0 * kPi * flow;
    means[k] = second / flow;
  }
  return assemble(std::move(flows), means, geometry.length);
}

DiscretizedKernel discretize_hagen_poiseuille(const HagenPoiseuilleKernel& kernel, int count) {
  require_count(count);
  const double a = kernel.coefficient();
  const double radius = kernel.geometry().radius;
  const double r2 = radius * radius;
  // Antiderivatives of v r and v^2 r for v = a (R^2 - r^2), written in
  // terms of s = R^2 - r^2 to stay accurate near the wall.
  auto flow_primitive = [&](double r) {
    const double s = r2 - r * r;
    return -a * s * s / 4.0;
  };
  auto second_primitive = [&](double r) {
    const double s = r2 - r * r;
    return -a * a * s * s * s / 6.0;
  };
  std::vector<double> flows(count);
  std::vector<double> means(count);
  for (int k = 0; k < count; ++k) {
    const double r0 = radius * k / count;
    const double r1 = radius * (k + 1) / count;
    const double flow = flow_primitive(r1) - flow_primitive(r0);
    flows[k] = 2.0 * kPi * flow;
    means[k] = (second_primitive(r1) - second_primitive(r0)) / flow;
  }
  return assemble(std::move(flows), means, kernel.geometry().length);
}

}  // namespace ddocp
