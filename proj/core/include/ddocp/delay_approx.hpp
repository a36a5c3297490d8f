#pragma once

/// \file delay_approx.hpp
/// Delay linearization and characteristic functions.
///
/// Expanding each delayed signal to first order about the current time turns
/// the convolution into z_i = r_i - dr_i/dt * gamma_i(u), gamma_i the mean
/// lag.  Around a steady state both the distributed-delay system and its
/// linearized surrogate reduce to
///
///   det( s I - A - B diag(T(s)) C ) = 0,   A = df/dx, B = df/dz, C = dh/dx,
///
/// with T_i(s) the Laplace transform of kernel i for the delay system and
/// T_i(s) = 1 - s gamma_i for the surrogate.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ddocp/kernel.hpp"
#include "ddocp/model.hpp"

namespace ddocp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// z = r - r_dot .* gamma.
Vector memory_state(ConstVectorRef r, ConstVectorRef r_dot, ConstVectorRef gamma);

using KernelTransform = std::function<LaplaceValue(Complex)>;

/// Steady-state linearization of a delay model.
struct LinearizedSystem {
  Matrix state_jacobian;    // A = df/dx at (x_s, h(x_s), u_s)
  Matrix memory_jacobian;   // B = df/dz
  Matrix output_jacobian;   // C = dh/dx
  Vector mean_lags;         // gamma_i(u_s)
  std::vector<KernelTransform> transforms;  // distinct kernel transforms
  std::vector<int> transform_index;          // delay i uses transforms[transform_index[i]]

  int state_size() const { return static_cast<int>(state_jacobian.rows()); }
  int delay_size() const { return static_cast<int>(mean_lags.size()); }

  /// Copy whose kernel transforms are replaced by absolute-delay mixtures.
  LinearizedSystem with_kernels(const std::vector<DiscretizedKernel>& kernels) const;
};

LinearizedSystem linearize(const DelayModel& model, ConstVectorRef steady_state,
                           ConstVectorRef steady_input);

/// det M(s) together with d det M / ds and a Hadamard normalizer
/// prod_j ||row_j M(s)||_2, so |det| / scale is a scale-free residual.
struct CharacteristicSample {
  Complex lambda;
  Complex det_value;
  Complex derivative;
  double scale = 1.0;

  double normalized_residual() const { return std::abs(det_value) / scale; }
};

enum class CharacteristicKind { kDelay, kApproximate };

ComplexMatrix characteristic_matrix(const LinearizedSystem& sys, Complex s, CharacteristicKind kind);
/// Kernel transforms from quadrature; raises DomainError for Re s < 0 with
/// power-law kernels.
CharacteristicSample characteristic_dde(const LinearizedSystem& sys, Complex s);
/// Exact evaluation with T_i(s) = 1 - s gamma_i.
CharacteristicSample characteristic_approx(const LinearizedSystem& sys, Complex s);
CharacteristicSample characteristic(const LinearizedSystem& sys, Complex s, CharacteristicKind kind);

using CharacteristicFunction = std::function<CharacteristicSample(Complex)>;

struct ScanRegion {
  double re_min = -50.0;
  double re_max = 5.0;
  double im_min = -50.0;
  double im_max = 50.0;
};

struct ScanOptions {
  int re_points = 56;
  int im_points = 101;
  int max_newton_iterations = 60;
  double residual_tolerance = 1e-8;  // normalized |det| at an accepted root
  double merge_tolerance = 1e-6;     // relative distance for duplicate roots
  int seed_stride = 5;               // extra Newton seeds every n-th grid point (0: minima only)
};

struct ScannedRoot {
  Complex lambda;
  double normalized_residual = 0.0;
  int iterations = 0;
};

struct ScanResult {
  std::vector<CharacteristicSample> samples;
  std::vector<ScannedRoot> roots;         // sorted by decreasing real part
  std::vector<std::string> diagnostics;   // dropped candidates, skipped samples
};

/// Best-effort root search: samples the function on a grid, starts complex
/// Newton iterations (step 1 / tr(M^-1 M')) from the grid's local minima of
/// the normalized residual and keeps converged, de-duplicated roots inside
/// the region.  Makes no completeness claim.
ScanResult root_scan(const CharacteristicFunction& fn, const ScanRegion& region,
                     const ScanOptions& options = {});

}  // namespace ddocp
