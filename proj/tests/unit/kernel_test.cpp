#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ddocp/errors.hpp"
#include "ddocp/kernel.hpp"

using namespace ddocp;
using doctest::Approx;

namespace {

const PipeGeometry kLoop{30.0, 0.3};
constexpr double kMu = 0.01;

HagenPoiseuilleKernel four_mps() { return HagenPoiseuilleKernel::from_average_velocity(4.0, kMu, kLoop); }

template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-13);
}

}  // namespace

TEST_CASE("closed-form kernel at 4 m/s") {
  const auto k = four_mps();
  CHECK(k.coefficient() == Approx(800.0 / 9.0).epsilon(1e-14));
  CHECK(k.min_lag() == Approx(3.75).epsilon(1e-14));
  CHECK(k.mean_lag() == Approx(7.5).epsilon(1e-14));
  CHECK(k.min_lag() == Approx(kLoop.length / k.max_velocity()).epsilon(1e-14));
  CHECK(k.average_velocity() == Approx(4.0).epsilon(1e-14));

  // F by radial quadrature of 2 pi r v(r).
  const double a = k.coefficient(), R = kLoop.radius;
  const double flow = integrate([&](double r) { return 2.0 * std::numbers::pi * r * a * (R * R - r * r); }, 0.0, R);
  CHECK(k.flow_rate() == Approx(flow).epsilon(1e-12));
  CHECK(k.flow_rate() == Approx(1.130973).epsilon(1e-6));

  const auto same = hp_kernel(k.pressure_drop(), kMu, kLoop);
  CHECK(same.min_lag() == Approx(k.min_lag()).epsilon(1e-15));
}

TEST_CASE("doubling the pressure drop halves the lags") {
  const auto k = four_mps();
  const auto k2 = hp_kernel(2.0 * k.pressure_drop(), kMu, kLoop);
  CHECK(k2.min_lag() == Approx(k.min_lag() / 2.0).epsilon(1e-14));
  CHECK(k2.mean_lag() == Approx(k.mean_lag() / 2.0).epsilon(1e-14));
}

TEST_CASE("invalid pressure drop, viscosity or geometry") {
  CHECK_THROWS_AS(hp_kernel(0.0, kMu, kLoop), DomainError);
  CHECK_THROWS_AS(hp_kernel(-1.0, kMu, kLoop), DomainError);
  CHECK_THROWS_AS(hp_kernel(100.0, 0.0, kLoop), DomainError);
  CHECK_THROWS_AS(hp_kernel(100.0, kMu, PipeGeometry{0.0, 0.3}), DomainError);
}

TEST_CASE("density values and support") {
  const auto k = four_mps();
  const double t0 = k.min_lag();
  CHECK(kernel_density(k, t0) == Approx(2.0 / t0).epsilon(1e-15));
  CHECK(kernel_density(k, 2.0 * t0) == Approx(1.0 / (4.0 * t0)).epsilon(1e-15));
  CHECK(kernel_density(k, 0.99 * t0) == 0.0);
  CHECK(k.unnormalized_density(2.0 * t0) == Approx(k.flow_rate() * k.density(2.0 * t0)).epsilon(1e-13));
}

TEST_CASE("closed-form normalization and mean by quadrature") {
  const auto k = four_mps();
  const double t0 = k.min_lag();
  const double T = 1e3 * t0;
  const double mass = integrate([&](double t) { return k.density(t); }, t0, T);
  CHECK(mass == Approx(1.0 - t0 * t0 / (T * T)).epsilon(1e-12));
  CHECK(std::abs(mass + t0 * t0 / (T * T) - 1.0) < 1e-10);
  CHECK(k.cdf(T) == Approx(1.0 - 1e-6).epsilon(1e-15));
  CHECK(mean_lag(k) == Approx(2.0 * t0).epsilon(1e-15));
}

TEST_CASE("half loop has the same coefficient and half the lags") {
  const auto k = four_mps();
  const auto h = k.half_loop();
  CHECK(h.coefficient() == Approx(k.coefficient()).epsilon(1e-15));
  CHECK(h.min_lag() == Approx(k.min_lag() / 2.0).epsilon(1e-15));
  CHECK(h.mean_lag() == Approx(k.mean_lag() / 2.0).epsilon(1e-15));
  CHECK(h.geometry().length == Approx(kLoop.length / 2.0));
}

TEST_CASE("numeric kernel from the parabolic profile") {
  const auto k = four_mps();
  const auto nk = kernel_from_profile(hagen_poiseuille_profile(k.coefficient(), kLoop.radius), kLoop);
  CHECK(nk.min_lag() == Approx(k.min_lag()).epsilon(1e-14));
  CHECK(nk.flow_rate() == Approx(k.flow_rate()).epsilon(1e-10));
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double tau = k.min_lag() * (1.0 + 19.0 * i / 200.0);
    worst = std::max(worst, std::abs(nk.density(tau) / k.density(tau) - 1.0));
  }
  CHECK(worst < 1e-8);
  CHECK(nk.density(0.999 * k.min_lag()) == 0.0);

  const double T = 50.0 * k.min_lag();
  const double mass = integrate([&](double t) { return nk.density(t); }, nk.min_lag(), T);
  CHECK(mass == Approx(1.0 - 1.0 / 2500.0).epsilon(1e-8));

  const KernelMoments m = kernel_moments(nk);
  CHECK(std::abs(m.mass - 1.0) < 1e-6);
  CHECK(m.mean == Approx(2.0 * k.min_lag()).epsilon(1e-4));
  CHECK(mean_lag(nk) == Approx(2.0 * k.min_lag()).epsilon(1e-4));
  CHECK(m.tail_exponent == Approx(3.0).epsilon(1e-3));
}

TEST_CASE("non-monotone profile is rejected") {
  VelocityProfile bump{[](double r) { return 1.0 + std::sin(20.0 * r); },
                       [](double r) { return 20.0 * std::cos(20.0 * r); }};
  CHECK_THROWS_AS(kernel_from_profile(bump, kLoop), ProfileError);
}

TEST_CASE("heavy-tailed density has no mean") {
  // alpha = t0 / tau^2 on [t0, inf): normalized, first moment diverges.
  const double t0 = 2.0;
  const auto nk = NumericKernel::from_density(t0, [t0](double tau) { return tau < t0 ? 0.0 : t0 / (tau * tau); });
  CHECK_THROWS_AS(mean_lag(nk), NonIntegrableError);
}

TEST_CASE("point mass kernel") {
  const auto pm = DiscretizedKernel::point_mass(4.2);
  CHECK(mean_lag(pm) == Approx(4.2));
  CHECK(pm.cdf(4.19) == 0.0);
  CHECK(pm.cdf(4.2) == 1.0);
  CHECK(std::abs(pm.laplace({0.5, 1.0}).value - std::exp(-std::complex<double>(0.5, 1.0) * 4.2)) < 1e-15);
}

TEST_CASE("annulus discretization") {
  const auto k = four_mps();
  SUBCASE("K = 1 is the flow-weighted mean velocity") {
    const auto d = discretize_hagen_poiseuille(k, 1);
    REQUIRE(d.size() == 1);
    CHECK(d.weights[0] == 1.0);
    // int (R^2 - r^2)^2 r dr / int (R^2 - r^2) r dr = (2/3) R^2, so the lag is 1.5 tau0.
    const double R = kLoop.radius;
    const double num = integrate([&](double r) { return std::pow(R * R - r * r, 2) * r; }, 0.0, R);
    const double den = integrate([&](double r) { return (R * R - r * r) * r; }, 0.0, R);
    CHECK(num / den == Approx(2.0 / 3.0 * R * R).epsilon(1e-13));
    CHECK(d.lags[0] == Approx(5.625).epsilon(1e-13));
  }
  SUBCASE("weights sum to one and lags increase") {
    for (int K : {1, 2, 7, 30, 100}) {
      const auto d = discretize_hagen_poiseuille(k, K);
      double sum = 0.0;
      for (double w : d.weights) sum += w;
      CHECK(std::abs(sum - 1.0) < 1e-14);
      CHECK(d.min_lag() >= k.min_lag());
      CHECK_NOTHROW(d.validate());
    }
  }
  SUBCASE("mean lag converges to 2 tau0") {
    const auto d30 = discretize_hagen_poiseuille(k, 30);
    CHECK(std::abs(d30.mean_lag() / k.mean_lag() - 1.0) < 0.05);
    double prev = 1e300;
    for (int K = 10; K <= 100; K += 10) {
      const double err = std::abs(discretize_hagen_poiseuille(k, K).mean_lag() - k.mean_lag());
      CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("generic profile route agrees with the closed-form annuli") {
    const auto a = discretize_hagen_poiseuille(k, 30);
    const auto b = discretize_profile(hagen_poiseuille_profile(k.coefficient(), kLoop.radius), kLoop, 30);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(b.lags[i] == Approx(a.lags[i]).epsilon(1e-9));
      CHECK(b.weights[i] == Approx(a.weights[i]).epsilon(1e-9));
    }
  }
  SUBCASE("empirical CDF approaches the kernel CDF") {
    const auto d = discretize_hagen_poiseuille(k, 100);
    for (double f : {1.5, 2.0, 4.0}) {
      CHECK(std::abs(d.cdf(f * k.min_lag()) - k.cdf(f * k.min_lag())) < 0.05);
    }
  }
  CHECK_THROWS_AS(discretize_hagen_poiseuille(k, 0), DomainError);
}

TEST_CASE("Laplace transform of the parabolic kernel") {
  const auto k = four_mps();
  const double t0 = k.min_lag();

  const auto at0 = k.laplace(0.0);
  CHECK(std::abs(at0.value - 1.0) < 1e-10);
  CHECK(std::abs(at0.derivative + k.mean_lag()) < 1e-6 * k.mean_lag());

  // With u = tau0^2 / tau^2 the transform is int_0^1 exp(-s tau0 / sqrt(u)) du.
  boost::math::quadrature::tanh_sinh<double> ts;
  for (std::complex<double> s : {std::complex<double>(0.3, 2.0), std::complex<double>(1.0, -7.0),
                                 std::complex<double>(0.05, 0.4)}) {
    auto part = [&](bool imag) {
      return ts.integrate(
          [&](double u) {
            if (u <= 0.0) return 0.0;
            const auto e = std::exp(-s * t0 / std::sqrt(u));
            return imag ? e.imag() : e.real();
          },
          0.0, 1.0);
    };
    const std::complex<double> oracle(part(false), part(true));
    CHECK(std::abs(k.laplace(s).value - oracle) < 1e-9);
    // derivative by central differences in s
    const double h = 1e-5;
    const auto fd = (k.laplace(s + h).value - k.laplace(s - h).value) / (2.0 * h);
    CHECK(std::abs(k.laplace(s).derivative - fd) < 1e-6);
  }

  const std::complex<double> s(0.2, 13.0);
  CHECK(std::abs(k.laplace(std::conj(s)).value - std::conj(k.laplace(s).value)) < 1e-12);
  CHECK_THROWS_AS(k.laplace({-0.1, 1.0}), DomainError);
}
