#pragma once

/// \file model.hpp
/// Abstract distributed-delay model
///
///   dx/dt = f(x, z, u),   z_i = (alpha_i(., u) * r_i)(t),   r = h(x),
///
/// the contract consumed by the delay linearization, the transcription, the
/// simulators and the stability tools.

#include <Eigen/Core>
#include <complex>
#include <vector>

#include "ddocp/kernel.hpp"

namespace ddocp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<Eigen::VectorXd>;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Mean lags gamma_i(u) and their input sensitivities (m x n_u).
struct MeanLags {
  Vector gamma;
  Matrix gamma_du;
};

/// Partial derivatives of the right-hand side and of the delayed-output map.
struct ModelJacobians {
  Matrix f_x;  // n_x x n_x
  Matrix f_z;  // n_x x m
  Matrix f_u;  // n_x x n_u
  Matrix h_x;  // m x n_x
};

class DelayModel {
 public:
  virtual ~DelayModel() = default;

  virtual int state_size() const = 0;
  virtual int delay_size() const = 0;
  virtual int input_size() const = 0;

  /// Throws DomainError for inputs outside the model's domain.
  virtual void validate_input(ConstVectorRef u) const = 0;

  virtual void rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u, VectorRef dxdt) const = 0;
  virtual void delayed_outputs(ConstVectorRef x, VectorRef r) const = 0;
  virtual MeanLags mean_lags(ConstVectorRef u) const = 0;
  virtual ModelJacobians jacobians(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u) const = 0;

  /// Scalar tracked by the stage cost and its gradient in x.
  virtual double tracked_output(ConstVectorRef x) const = 0;
  virtual Vector tracked_output_gradient(ConstVectorRef x) const = 0;

  /// Laplace transform of kernel i at the given input.
  virtual LaplaceValue kernel_laplace(int delay, std::complex<double> s, ConstVectorRef u) const = 0;
  /// Delays sharing a kernel report the same family, so transforms can be
  /// evaluated once per family.
  virtual int kernel_family(int delay) const { return delay; }
  /// States that must stay nonnegative (simulators warn when they do not).
  virtual std::vector<int> nonnegative_states() const { return {}; }
  /// Absolute-delay approximation of every kernel at the given input.
  virtual std::vector<DiscretizedKernel> discretized_kernels(ConstVectorRef u, int count) const = 0;

  // Convenience wrappers allocating their results.
  Vector rhs(ConstVectorRef x, ConstVectorRef z, ConstVectorRef u) const;
  Vector delayed_outputs(ConstVectorRef x) const;
};

}  // namespace ddocp
