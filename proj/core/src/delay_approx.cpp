#include "ddocp/delay_approx.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddocp/errors.hpp"

namespace ddocp {

Vector memory_state(ConstVectorRef r, ConstVectorRef r_dot, ConstVectorRef gamma) {
  if (r.size() != r_dot.size() || r.size() != gamma.size()) {
    throw DomainError("memory_state: r, r_dot and gamma must have equal dimensions");
  }
  return r - r_dot.cwiseProduct(gamma);
}

LinearizedSystem LinearizedSystem::with_kernels(const std::vector<DiscretizedKernel>& kernels) const {
  if (static_cast<int>(kernels.size()) != delay_size()) {
    throw DomainError("with_kernels: one kernel per delayed variable required");
  }
  LinearizedSystem out = *this;
  out.transforms.clear();
  out.transform_index.clear();
  for (const auto& kernel : kernels) {
    kernel.validate();
    out.transform_index.push_back(static_cast<int>(out.transforms.size()));
    out.transforms.emplace_back([kernel](Complex s) { return kernel.laplace(s); });
  }
  return out;
}

LinearizedSystem linearize(const DelayModel& model, ConstVectorRef steady_state,
                           ConstVectorRef steady_input) {
  model.validate_input(steady_input);
  const Vector z = model.delayed_outputs(steady_state);
  const ModelJacobians J = model.jacobians(steady_state, z, steady_input);
  LinearizedSystem sys;
  sys.state_jacobian = J.f_x;
  sys.memory_jacobian = J.f_z;
  sys.output_jacobian = J.h_x;
  sys.mean_lags = model.mean_lags(steady_input).gamma;
  const Vector u = steady_input;
  const DelayModel* m = &model;
  std::vector<int> family_slot;
  for (int i = 0; i < model.delay_size(); ++i) {
    const int family = model.kernel_family(i);
    if (family >= static_cast<int>(family_slot.size())) family_slot.resize(family + 1, -1);
    if (family_slot[family] < 0) {
      family_slot[family] = static_cast<int>(sys.transforms.size());
      sys.transforms.emplace_back([m, i, u](Complex s) { return m->kernel_laplace(i, s, u); });
    }
    sys.transform_index.push_back(family_slot[family]);
  }
  return sys;
}

namespace {

/// Delay-term weights T_i(s) and their derivatives.
void transfer_weights(const LinearizedSystem& sys, Complex s, CharacteristicKind kind,
                      Eigen::VectorXcd& value, Eigen::VectorXcd& derivative) {
  const int m = sys.delay_size();
  value.resize(m);
  derivative.resize(m);
  if (kind == CharacteristicKind::kApproximate) {
    for (int i = 0; i < m; ++i) {
      value[i] = 1.0 - s * sys.mean_lags[i];
      derivative[i] = -sys.mean_lags[i];
    }
    return;
  }
  if (static_cast<int>(sys.transform_index.size()) != m) {
    throw DomainError("linearized system has no kernel transform for every delay");
  }
  std::vector<LaplaceValue> evaluated;
  evaluated.reserve(sys.transforms.size());
  for (const auto& transform : sys.transforms) evaluated.push_back(transform(s));
  for (int i = 0; i < m; ++i) {
    const LaplaceValue& t = evaluated.at(sys.transform_index[i]);
    value[i] = t.value;
    derivative[i] = t.derivative;
  }
}

}  // namespace

ComplexMatrix characteristic_matrix(const LinearizedSystem& sys, Complex s,
                                    CharacteristicKind kind) {
  Eigen::VectorXcd weight, weight_derivative;
  transfer_weights(sys, s, kind, weight, weight_derivative);
  const int n = sys.state_size();
  ComplexMatrix M = s * ComplexMatrix::Identity(n, n) - sys.state_jacobian.cast<Complex>();
  if (sys.delay_size() > 0) {
    M -= sys.memory_jacobian.cast<Complex>() * weight.asDiagonal() *
         sys.output_jacobian.cast<Complex>();
  }
  return M;
}

CharacteristicSample characteristic(const LinearizedSystem& sys, Complex s,
                                    CharacteristicKind kind) {
  Eigen::VectorXcd weight, weight_derivative;
  transfer_weights(sys, s, kind, weight, weight_derivative);
  const int n = sys.state_size();
  ComplexMatrix M = s * ComplexMatrix::Identity(n, n) - sys.state_jacobian.cast<Complex>();
  ComplexMatrix dM = ComplexMatrix::Identity(n, n);
  if (sys.delay_size() > 0) {
    const ComplexMatrix B = sys.memory_jacobian.cast<Complex>();
    const ComplexMatrix C = sys.output_jacobian.cast<Complex>();
    M -= B * weight.asDiagonal() * C;
    dM -= B * weight_derivative.asDiagonal() * C;
  }

  CharacteristicSample out;
  out.lambda = s;
  out.scale = 1.0;
  for (int j = 0; j < n; ++j) out.scale *= std::max(M.row(j).norm(), 1e-300);

  const Eigen::PartialPivLU<ComplexMatrix> lu(M);
  out.det_value = lu.determinant();
  if (out.det_value == Complex(0.0, 0.0)) {
    out.derivative = Complex(0.0, 0.0);
    return out;
  }
  // Jacobi's formula: d det M = det M * tr(M^-1 dM).
  out.derivative = out.det_value * lu.solve(dM).trace();
  return out;
}

CharacteristicSample characteristic_dde(const LinearizedSystem& sys, Complex s) {
  return characteristic(sys, s, CharacteristicKind::kDelay);
}

CharacteristicSample characteristic_approx(const LinearizedSystem& sys, Complex s) {
  return characteristic(sys, s, CharacteristicKind::kApproximate);
}

// ---------------------------------------------------------------------------
// Root scan

namespace {

bool inside(const ScanRegion& region, Complex s, double margin_re, double margin_im) {
  return s.real() >= region.re_min - margin_re && s.real() <= region.re_max + margin_re &&
         s.imag() >= region.im_min - margin_im && s.imag() <= region.im_max + margin_im;
}

std::string format_complex(Complex s) {
  std::ostringstream os;
  os.precision(6);
  os << s.real() << (s.imag() < 0 ? " - " : " + ") << std::abs(s.imag()) << "i";
  return os.str();
}

}  // namespace

ScanResult root_scan(const CharacteristicFunction& fn, const ScanRegion& region,
                     const ScanOptions& options) {
  if (!(region.re_max > region.re_min) || !(region.im_max > region.im_min) ||
      !std::isfinite(region.re_min) || !std::isfinite(region.re_max) ||
      !std::isfinite(region.im_min) || !std::isfinite(region.im_max)) {
    throw DomainError("root_scan: region must be a bounded, nondegenerate rectangle");
  }
  if (options.re_points < 2 || options.im_points < 2) {
    throw DomainError("root_scan: grid needs at least 2 x 2 samples");
  }

  ScanResult result;
  const int nr = options.re_points;
  const int ni = options.im_points;
  const double dre = (region.re_max - region.re_min) / (nr - 1);
  const double dim = (region.im_max - region.im_min) / (ni - 1);

  // log10 of the normalized residual on the grid; NaN marks skipped samples.
  std::vector<double> level(static_cast<std::size_t>(nr) * ni,
                            std::numeric_limits<double>::quiet_NaN());
  auto at = [&](int i, int j) -> double& { return level[static_cast<std::size_t>(i) * ni + j]; };
  int skipped = 0;
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < ni; ++j) {
      const Complex s(region.re_min + i * dre, region.im_min + j * dim);
      try {
        CharacteristicSample sample = fn(s);
        at(i, j) = std::log10(std::max(sample.normalized_residual(), 1e-300));
        result.samples.push_back(sample);
      } catch (const DomainError&) {
        ++skipped;
      }
    }
  }
  if (skipped > 0) {
    result.diagnostics.push_back(std::to_string(skipped) +
                                 " grid samples outside the function's domain were skipped");
  }

  // Seeds: grid points that are local minima over their available neighbours.
  struct Seed {
    Complex point;
    bool grid_minimum;
  };
  std::vector<Seed> seeds;
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < ni; ++j) {
      const double v = at(i, j);
      if (std::isnan(v)) continue;
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int ii = i + di;
          const int jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= nr || jj >= ni) continue;
          const double w = at(ii, jj);
          if (!std::isnan(w) && w < v) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum) seeds.push_back({{region.re_min + i * dre, region.im_min + j * dim}, true});
    }
  }
  // Plus a sparse lattice of the grid, which catches roots whose basin holds
  // no grid minimum (tight clusters, roots near the region edge).
  if (options.seed_stride > 0) {
    for (int i = 0; i < nr; i += options.seed_stride) {
      for (int j = 0; j < ni; j += options.seed_stride) {
        if (!std::isnan(at(i, j))) {
          seeds.push_back({{region.re_min + i * dre, region.im_min + j * dim}, false});
        }
      }
    }
  }

  // Newton with implicit deflation: the iteration runs on
  // det(s) / prod_j (s - root_j), so restarting from the same seed can reach
  // further roots of a cluster.
  auto newton = [&](Complex seed, ScannedRoot& found, std::string& failure) {
    Complex s = seed;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_newton_iterations; ++iter) {
      const CharacteristicSample sample = fn(s);
      residual = sample.normalized_residual();
      if (sample.det_value == Complex(0.0, 0.0)) {
        found = ScannedRoot{s, residual, iter};
        return true;
      }
      Complex log_derivative = sample.derivative / sample.det_value;
      for (const auto& r : result.roots) log_derivative -= 1.0 / (s - r.lambda);
      if (log_derivative == Complex(0.0, 0.0) || !std::isfinite(std::abs(log_derivative))) {
        failure = "degenerate Newton step";
        return false;
      }
      Complex step = 1.0 / log_derivative;
      // Keep a single step within a few grid cells.
      const double cap = 4.0 * std::hypot(dre, dim);
      if (std::abs(step) > cap) step *= cap / std::abs(step);
      s -= step;
      if (!inside(region, s, dre, dim)) {
        failure = "left the scan region";
        return false;
      }
      if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(s))) {
        residual = fn(s).normalized_residual();
        if (residual > options.residual_tolerance) {
          failure = "stalled with normalized residual " + std::to_string(residual);
          return false;
        }
        if (!inside(region, s, 0.0, 0.0)) {
          failure = "converged outside the region";
          return false;
        }
        found = ScannedRoot{s, residual, iter + 1};
        return true;
      }
    }
    failure = "iteration limit";
    return false;
  };

  constexpr int kRootsPerSeed = 8;
  int lattice_failures = 0;
  for (const auto& [seed, grid_minimum] : seeds) {
    for (int attempt = 0; attempt < kRootsPerSeed; ++attempt) {
      ScannedRoot found;
      std::string failure;
      bool ok = false;
      try {
        ok = newton(seed, found, failure);
      } catch (const DomainError&) {
        failure = "stepped outside the function's domain";
      }
      if (!ok) {
        // The first attempt failing is worth reporting; later failures just
        // mean the seed's cluster is exhausted.
        if (attempt == 0 && !grid_minimum) ++lattice_failures;
        if (attempt == 0 && grid_minimum) {
          result.diagnostics.push_back("candidate from seed " + format_complex(seed) +
                                       " dropped: " + failure);
        }
        break;
      }
      const bool duplicate =
          std::any_of(result.roots.begin(), result.roots.end(), [&](const auto& r) {
            return std::abs(r.lambda - found.lambda) <=
                   options.merge_tolerance * std::max(1.0, std::abs(found.lambda));
          });
      if (duplicate) break;
      result.roots.push_back(found);
    }
  }

  if (lattice_failures > 0) {
    result.diagnostics.push_back(std::to_string(lattice_failures) +
                                 " lattice seeds did not converge to a root in the region");
  }
  std::sort(result.roots.begin(), result.roots.end(), [](const auto& a, const auto& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
    return a.lambda.imag() > b.lambda.imag();
  });
  return result;
}

}  // namespace ddocp
