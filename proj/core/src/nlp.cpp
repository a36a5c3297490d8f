#include "ddocp/nlp.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ddocp/errors.hpp"

namespace ddocp {

using Eigen::VectorXd;

namespace {

constexpr double kSigmaSafeguard = 1e10;

// Problem seen through the variable / constraint scaling.
class ScaledProblem {
 public:
  explicit ScaledProblem(const NlpProblem& problem) : p_(problem) {
    const int n = problem.variables;
    const int m = problem.constraints;
    sx_ = problem.variable_scale.size() == n ? problem.variable_scale : VectorXd::Ones(n);
    sc_ = problem.constraint_scale.size() == m ? problem.constraint_scale : VectorXd::Ones(m);
    lower_ = problem.lower.cwiseQuotient(sx_);
    upper_ = problem.upper.cwiseQuotient(sx_);
    has_lower_ = lower_.unaryExpr([](double v) { return std::isfinite(v) ? 1.0 : 0.0; });
    has_upper_ = upper_.unaryExpr([](double v) { return std::isfinite(v) ? 1.0 : 0.0; });
  }

  int n() const { return p_.variables; }
  int m() const { return p_.constraints; }
  const VectorXd& variable_scale() const { return sx_; }
  const VectorXd& constraint_scale() const { return sc_; }
  const VectorXd& lower() const { return lower_; }
  const VectorXd& upper() const { return upper_; }
  const VectorXd& has_lower() const { return has_lower_; }
  const VectorXd& has_upper() const { return has_upper_; }

  VectorXd unscale(const VectorXd& x) const { return x.cwiseProduct(sx_); }
  double objective(const VectorXd& x) const { return p_.objective(unscale(x)); }
  VectorXd gradient(const VectorXd& x) const { return p_.gradient(unscale(x)).cwiseProduct(sx_); }
  VectorXd residuals(const VectorXd& x) const { return p_.residuals(unscale(x)).cwiseQuotient(sc_); }
  SparseMatrix jacobian(const VectorXd& x) const {
    SparseMatrix j = p_.jacobian(unscale(x));
    return sc_.cwiseInverse().asDiagonal() * j * sx_.asDiagonal();
  }
  SparseMatrix hessian(const VectorXd& x, const VectorXd& y) const {
    SparseMatrix h = p_.hessian(unscale(x), y.cwiseQuotient(sc_));
    return sx_.asDiagonal() * h * sx_.asDiagonal();
  }

  // Slacks to the finite bounds; 1 where a bound is absent.
  VectorXd lower_slack(const VectorXd& x) const {
    VectorXd s = VectorXd::Ones(n());
    for (int i = 0; i < n(); ++i)
      if (has_lower_[i] > 0.0) s[i] = x[i] - lower_[i];
    return s;
  }
  VectorXd upper_slack(const VectorXd& x) const {
    VectorXd s = VectorXd::Ones(n());
    for (int i = 0; i < n(); ++i)
      if (has_upper_[i] > 0.0) s[i] = upper_[i] - x[i];
    return s;
  }

 private:
  const NlpProblem& p_;
  VectorXd sx_, sc_, lower_, upper_, has_lower_, has_upper_;
};

struct Iterate {
  VectorXd x, y, zl, zu;
  double f = 0.0;
  VectorXd g, c;
  SparseMatrix j;
  VectorXd sl, su;
};

KktResiduals scaled_residuals(const ScaledProblem& sp, const Iterate& it, double mu) {
  const int n = sp.n();
  const int m = sp.m();
  const VectorXd stat = it.g + it.j.transpose() * it.y - it.zl + it.zu;
  const double z_norm = it.zl.lpNorm<1>() + it.zu.lpNorm<1>();
  const double s_d = std::max(1.0, (it.y.lpNorm<1>() + z_norm) / (100.0 * std::max(1, n + m)));
  KktResiduals r;
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() / s_d : 0.0;
  r.feasibility = m ? it.c.lpNorm<Eigen::Infinity>() : 0.0;
  double comp = 0.0;
  for (int i = 0; i < n; ++i) {
    if (sp.has_lower()[i] > 0.0) comp = std::max(comp, std::abs(it.zl[i] * it.sl[i] - mu));
    if (sp.has_upper()[i] > 0.0) comp = std::max(comp, std::abs(it.zu[i] * it.su[i] - mu));
  }
  r.complementarity = comp / s_d;
  return r;
}

void evaluate(const ScaledProblem& sp, Iterate& it) {
  it.f = sp.objective(it.x);
  it.g = sp.gradient(it.x);
  it.c = sp.residuals(it.x);
  it.j = sp.jacobian(it.x);
  it.sl = sp.lower_slack(it.x);
  it.su = sp.upper_slack(it.x);
}

double barrier_value(const ScaledProblem& sp, const VectorXd& sl, const VectorXd& su, double mu) {
  double b = 0.0;
  for (int i = 0; i < sp.n(); ++i) {
    if (sp.has_lower()[i] > 0.0) b -= mu * std::log(sl[i]);
    if (sp.has_upper()[i] > 0.0) b -= mu * std::log(su[i]);
  }
  return b;
}

// Largest alpha in (0, 1] keeping v + alpha dv >= (1 - tau) v on the masked entries.
double boundary_step(const VectorXd& v, const VectorXd& dv, const VectorXd& mask, double tau) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (mask[i] > 0.0 && dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
  }
  return alpha;
}

VectorXd push_inside(const ScaledProblem& sp, VectorXd x) {
  constexpr double k1 = 1e-2;
  constexpr double k2 = 1e-2;
  for (int i = 0; i < sp.n(); ++i) {
    const double l = sp.lower()[i];
    const double u = sp.upper()[i];
    const bool hl = sp.has_lower()[i] > 0.0;
    const bool hu = sp.has_upper()[i] > 0.0;
    if (hl && hu) {
      const double pl = std::min(k1 * std::max(1.0, std::abs(l)), k2 * (u - l));
      const double pu = std::min(k1 * std::max(1.0, std::abs(u)), k2 * (u - l));
      x[i] = std::clamp(x[i], l + pl, u - pu);
    } else if (hl) {
      x[i] = std::max(x[i], l + k1 * std::max(1.0, std::abs(l)));
    } else if (hu) {
      x[i] = std::min(x[i], u - k1 * std::max(1.0, std::abs(u)));
    }
  }
  return x;
}

class KktSystem {
 public:
  KktSystem(int n, int m) : n_(n), m_(m) {}

  // Factorizes [H + D + dw I, J^T; J, -dc I] (lower triangle).  Returns true
  // when the inertia is (n, m, 0).
  bool factorize(const SparseMatrix& h, const VectorXd& diag, const SparseMatrix& j, double dw,
                 double dc) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(h.nonZeros() + j.nonZeros() + n_ + m_);
    for (int k = 0; k < h.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
        if (it.row() > it.col()) t.emplace_back(it.row(), it.col(), it.value());
        if (it.row() == it.col()) t.emplace_back(it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, diag[i] + dw);
    for (int k = 0; k < j.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(j, k); it; ++it) {
        t.emplace_back(n_ + it.row(), it.col(), it.value());
      }
    }
    for (int i = 0; i < m_; ++i) t.emplace_back(n_ + i, n_ + i, -dc);
    matrix_.resize(n_ + m_, n_ + m_);
    matrix_.setFromTriplets(t.begin(), t.end());
    dc_ = dc;
    ldlt_.compute(matrix_);
    if (ldlt_.info() != Eigen::Success) return false;
    const VectorXd& d = ldlt_.vectorD();
    int positive = 0;
    int negative = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (d[i] > 0.0) ++positive;
      else if (d[i] < 0.0) ++negative;
    }
    return positive == n_ && negative == m_;
  }

  // Solves with the factorization and refines against the system without
  // the constraint regularization.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd sol = ldlt_.solve(rhs);
    for (int pass = 0; pass < 2 && dc_ > 0.0; ++pass) {
      VectorXd residual = rhs - apply(sol);
      sol += ldlt_.solve(residual);
    }
    return sol;
  }

 private:
  // Product with the symmetric matrix stored by its lower triangle, dc removed.
  VectorXd apply(const VectorXd& v) const {
    VectorXd out = matrix_.selfadjointView<Eigen::Lower>() * v;
    out.tail(m_) += dc_ * v.tail(m_);
    return out;
  }

  int n_, m_;
  double dc_ = 0.0;
  SparseMatrix matrix_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower> ldlt_;
};

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kIterationLimit: return "iteration-limit";
    case SolveStatus::kLineSearchFailure: return "line-search-failure";
    case SolveStatus::kInfeasibleStationary: return "infeasible-stationary";
  }
  return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, feasibility, complementarity}); }

void NlpProblem::validate() const {
  if (variables <= 0 || constraints < 0) throw DomainError("NLP dimensions must be positive");
  if (!objective || !gradient || !residuals || !jacobian || !hessian) {
    throw DomainError("NLP callbacks missing");
  }
  if (lower.size() != variables || upper.size() != variables) {
    throw DomainError("NLP bound vectors have the wrong size");
  }
  if (variable_scale.size() != 0 && variable_scale.size() != variables) {
    throw DomainError("variable_scale has the wrong size");
  }
  if (constraint_scale.size() != 0 && constraint_scale.size() != constraints) {
    throw DomainError("constraint_scale has the wrong size");
  }
  for (int i = 0; i < variables; ++i) {
    if (!(lower[i] < upper[i])) {
      throw DomainError("bounds of variable " + std::to_string(i) + " are not ordered");
    }
    if (variable_scale.size() && !(variable_scale[i] > 0.0)) {
      throw DomainError("variable_scale must be positive");
    }
  }
  for (int i = 0; i < constraint_scale.size(); ++i) {
    if (!(constraint_scale[i] > 0.0)) throw DomainError("constraint_scale must be positive");
  }
}

KktResiduals kkt_residuals(const NlpProblem& problem, const VectorXd& w,
                           const Multipliers& multipliers) {
  problem.validate();
  ScaledProblem sp(problem);
  Iterate it;
  it.x = w.cwiseQuotient(sp.variable_scale());
  evaluate(sp, it);
  it.y = multipliers.equality.size() ? VectorXd(multipliers.equality.cwiseProduct(sp.constraint_scale()))
                                     : VectorXd::Zero(sp.m());
  it.zl = multipliers.lower.size() ? VectorXd(multipliers.lower.cwiseProduct(sp.variable_scale()))
                                   : VectorXd::Zero(sp.n());
  it.zu = multipliers.upper.size() ? VectorXd(multipliers.upper.cwiseProduct(sp.variable_scale()))
                                   : VectorXd::Zero(sp.n());
  it.zl = it.zl.cwiseProduct(sp.has_lower());
  it.zu = it.zu.cwiseProduct(sp.has_upper());
  return scaled_residuals(sp, it, 0.0);
}

SolveResult solve(const NlpProblem& problem, const VectorXd& w0, const SolverOptions& options) {
  problem.validate();
  if (w0.size() != problem.variables) throw DomainError("initial point has the wrong size");
  const auto start = std::chrono::steady_clock::now();
  const ScaledProblem sp(problem);
  const int n = sp.n();
  const int m = sp.m();
  const double tau = options.boundary_fraction;

  SolveResult result;
  SolveReport& report = result.report;

  Iterate it;
  it.x = push_inside(sp, w0.cwiseQuotient(sp.variable_scale()));
  evaluate(sp, it);
  double mu = options.barrier_initial;
  it.y = VectorXd::Zero(m);
  it.zl = (mu / it.sl.array()).matrix().cwiseProduct(sp.has_lower());
  it.zu = (mu / it.su.array()).matrix().cwiseProduct(sp.has_upper());

  KktSystem kkt(n, m);
  double penalty = 1.0;
  double last_regularization = 0.0;
  report.status = SolveStatus::kIterationLimit;

  for (int iter = 0;; ++iter) {
    KktResiduals e0 = scaled_residuals(sp, it, 0.0);
    IterationRecord record;
    record.iteration = iter;
    record.objective = it.f;
    record.residuals = e0;
    record.barrier = mu;
    report.iterations = iter;
    report.residuals = e0;
    report.objective = it.f;

    if (e0.max() <= options.tolerance) {
      report.status = SolveStatus::kConverged;
      report.log.push_back(record);
      break;
    }
    if (iter >= options.max_iterations) {
      report.status = SolveStatus::kIterationLimit;
      report.log.push_back(record);
      break;
    }

    // Barrier update (monotone rule).
    while (mu > options.barrier_floor && scaled_residuals(sp, it, mu).max() <= 10.0 * mu) {
      mu = std::max(options.barrier_floor,
                    std::min(options.barrier_reduction * mu, std::pow(mu, 1.5)));
    }
    record.barrier = mu;

    // Newton system.
    const SparseMatrix h = sp.hessian(it.x, it.y);
    VectorXd sigma = VectorXd::Zero(n);
    VectorXd barrier_grad = it.g;
    for (int i = 0; i < n; ++i) {
      if (sp.has_lower()[i] > 0.0) {
        sigma[i] += it.zl[i] / it.sl[i];
        barrier_grad[i] -= mu / it.sl[i];
      }
      if (sp.has_upper()[i] > 0.0) {
        sigma[i] += it.zu[i] / it.su[i];
        barrier_grad[i] += mu / it.su[i];
      }
    }
    double dw = 0.0;
    bool ok = kkt.factorize(h, sigma, it.j, dw, options.constraint_regularization);
    for (int attempt = 0; !ok; ++attempt) {
      if (dw == 0.0) {
        dw = last_regularization == 0.0 ? options.regularization_floor
                                         : std::max(options.regularization_floor, last_regularization / 3.0);
      } else {
        dw *= (last_regularization == 0.0 && attempt == 1) ? 100.0 : 8.0;
      }
      if (dw > options.regularization_max) break;
      ok = kkt.factorize(h, sigma, it.j, dw, options.constraint_regularization);
    }
    if (!ok) {
      report.status = SolveStatus::kLineSearchFailure;
      report.message = "KKT matrix could not be regularized to the correct inertia";
      report.log.push_back(record);
      break;
    }
    if (dw > 0.0) last_regularization = dw;
    record.regularization = dw;

    VectorXd rhs(n + m);
    rhs.head(n) = -(barrier_grad + it.j.transpose() * it.y);
    rhs.tail(m) = -it.c;
    const VectorXd sol = kkt.solve(rhs);
    const VectorXd dx = sol.head(n);
    const VectorXd dy = sol.tail(m);
    VectorXd dzl = VectorXd::Zero(n);
    VectorXd dzu = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (sp.has_lower()[i] > 0.0) dzl[i] = (mu - it.zl[i] * it.sl[i] - it.zl[i] * dx[i]) / it.sl[i];
      if (sp.has_upper()[i] > 0.0) dzu[i] = (mu - it.zu[i] * it.su[i] + it.zu[i] * dx[i]) / it.su[i];
    }
    VectorXd dsl = dx.cwiseProduct(sp.has_lower());
    VectorXd dsu = -dx.cwiseProduct(sp.has_upper());
    const double alpha_max =
        std::min(boundary_step(it.sl, dsl, sp.has_lower(), tau), boundary_step(it.su, dsu, sp.has_upper(), tau));
    const double alpha_z =
        std::min(boundary_step(it.zl, dzl, sp.has_lower(), tau), boundary_step(it.zu, dzu, sp.has_upper(), tau));

    // Merit function phi = f + barrier + nu |c|_1.
    const double c_norm = it.c.lpNorm<1>();
    const double slope_f = barrier_grad.dot(dx);
    if (c_norm > 0.0) {
      const VectorXd hdx = h.selfadjointView<Eigen::Lower>() * dx + (sigma.array() * dx.array()).matrix();
      const double curvature = std::max(0.0, dx.dot(hdx));
      const double needed = (slope_f + 0.5 * curvature) / (0.9 * c_norm);
      const double floor = (it.y + dy).lpNorm<Eigen::Infinity>();
      const double wanted = std::max(needed, floor);
      if (penalty < wanted) penalty = 1.5 * wanted + 1e-8;
    }
    const double phi0 = it.f + barrier_value(sp, it.sl, it.su, mu) + penalty * c_norm;
    const double slope = slope_f - penalty * c_norm;

    auto merit_at = [&](const VectorXd& x, Iterate& trial) {
      trial.x = x;
      trial.f = sp.objective(x);
      trial.c = sp.residuals(x);
      trial.sl = sp.lower_slack(x);
      trial.su = sp.upper_slack(x);
      return trial.f + barrier_value(sp, trial.sl, trial.su, mu) + penalty * trial.c.lpNorm<1>();
    };

    Iterate trial;
    double alpha = alpha_max;
    bool accepted = false;
    int backtracks = 0;
    VectorXd step = dx;
    const bool tiny = (dx.array().abs() / (1.0 + it.x.array().abs())).maxCoeff() < 1e-15;
    if (tiny) {
      trial.x = it.x + alpha * dx;
      merit_at(trial.x, trial);
      accepted = true;
    }
    while (!accepted) {
      const double phi = merit_at(it.x + alpha * dx, trial);
      if (std::isfinite(phi) && phi <= phi0 + options.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      if (backtracks == 0 && options.second_order_correction && m > 0) {
        VectorXd soc_rhs(n + m);
        soc_rhs.head(n) = rhs.head(n);
        soc_rhs.tail(m) = -(alpha * it.c + trial.c);
        const VectorXd soc = kkt.solve(soc_rhs).head(n);
        const double alpha_soc =
            std::min(boundary_step(it.sl, soc.cwiseProduct(sp.has_lower()), sp.has_lower(), tau),
                     boundary_step(it.su, (-soc).cwiseProduct(sp.has_upper()), sp.has_upper(), tau));
        Iterate soc_trial;
        const double phi_soc = merit_at(it.x + alpha_soc * soc, soc_trial);
        if (std::isfinite(phi_soc) && phi_soc <= phi0 + options.armijo * alpha * slope) {
          trial = std::move(soc_trial);
          step = soc;
          alpha = alpha_soc;
          accepted = true;
          break;
        }
      }
      alpha *= options.backtrack;
      ++backtracks;
      if (alpha < options.min_step) break;
    }
    record.backtracks = backtracks;
    if (!accepted) {
      const double infeasibility = it.c.lpNorm<Eigen::Infinity>();
      const double stationary = (it.j.transpose() * it.c).lpNorm<Eigen::Infinity>();
      if (infeasibility > options.tolerance && stationary <= 1e-8 * std::max(1.0, infeasibility)) {
        report.status = SolveStatus::kInfeasibleStationary;
        report.message = "stationary point of the constraint violation";
      } else {
        report.status = SolveStatus::kLineSearchFailure;
        report.message = "step length fell below the minimum";
      }
      report.log.push_back(record);
      break;
    }
    record.step = alpha;
    report.log.push_back(record);

    it.x = trial.x;
    it.y += alpha * dy;
    it.zl += alpha_z * dzl;
    it.zu += alpha_z * dzu;
    evaluate(sp, it);
    for (int i = 0; i < n; ++i) {
      if (sp.has_lower()[i] > 0.0) {
        it.zl[i] = std::clamp(it.zl[i], mu / (kSigmaSafeguard * it.sl[i]), kSigmaSafeguard * mu / it.sl[i]);
      }
      if (sp.has_upper()[i] > 0.0) {
        it.zu[i] = std::clamp(it.zu[i], mu / (kSigmaSafeguard * it.su[i]), kSigmaSafeguard * mu / it.su[i]);
      }
    }
  }

  result.w = sp.unscale(it.x);
  result.multipliers.equality = it.y.cwiseProduct(sp.constraint_scale().cwiseInverse());
  result.multipliers.lower = it.zl.cwiseQuotient(sp.variable_scale());
  result.multipliers.upper = it.zu.cwiseQuotient(sp.variable_scale());
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (report.message.empty()) report.message = to_string(report.status);
  return result;
}

void write_iteration_log(std::ostream& os, const SolveReport& report) {
  char line[200];
  os << "iter    objective      stat       feas       comp       step     barrier\n";
  for (const IterationRecord& r : report.log) {
    std::snprintf(line, sizeof line, "%4d  %13.6e  %9.2e  %9.2e  %9.2e  %9.2e  %9.2e\n", r.iteration,
                  r.objective, r.residuals.stationarity, r.residuals.feasibility,
                  r.residuals.complementarity, r.step, r.barrier);
    os << line;
  }
}

void write_iteration_csv(std::ostream& os, const SolveReport& report) {
  os << "iter,objective,stationarity,feasibility,complementarity,step,barrier,regularization,backtracks\n";
  os.precision(12);
  for (const IterationRecord& r : report.log) {
    os << r.iteration << ',' << r.objective << ',' << r.residuals.stationarity << ','
       << r.residuals.feasibility << ',' << r.residuals.complementarity << ',' << r.step << ','
       << r.barrier << ',' << r.regularization << ',' << r.backtracks << '\n';
  }
}

}  // namespace ddocp
