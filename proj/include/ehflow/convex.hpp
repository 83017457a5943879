#pragma once

// Small dense primal log-barrier solver for the concave programs that arise in
// this library: maximize c'x subject to a mix of linear inequalities, per-node
// "power sum" constraints sum_i (2^{x_i} - 1) <= P, and multiple-access caps
// sum_i rho_i - log2(1 + sum_j P_j) <= 0. Every variable is expected to be
// boxed (nonnegativity plus an upper wall) by the caller so the feasible set
// is compact and the barrier Hessian positive definite.

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ehflow/errors.hpp"
#include "ehflow/rate.hpp"

namespace ehflow {
namespace detail {

inline constexpr double kLn2 = 0.69314718055994530942;

struct Constraint {
  enum class Kind { Linear, PowerSum, MacCap };
  Kind kind = Kind::Linear;
  std::vector<int> idx;      // Linear: variables; PowerSum: exponentiated vars; MacCap: rate vars
  std::vector<double> coef;  // Linear only, aligned with idx
  std::vector<int> pow_idx;  // MacCap only: power variables inside the log
  double rhs = 0.0;

  static Constraint linear(std::vector<int> ix, std::vector<double> cf, double r) {
    Constraint c;
    c.kind = Kind::Linear;
    c.idx = std::move(ix);
    c.coef = std::move(cf);
    c.rhs = r;
    return c;
  }
  static Constraint lower_bound(int var) {  // -x <= 0
    return linear({var}, {-1.0}, 0.0);
  }
  static Constraint upper_bound(int var, double wall) {  // x <= wall
    return linear({var}, {1.0}, wall);
  }
  static Constraint power_sum(std::vector<int> ix, double budget) {
    Constraint c;
    c.kind = Kind::PowerSum;
    c.idx = std::move(ix);
    c.rhs = budget;
    return c;
  }
  static Constraint mac_cap(std::vector<int> rates, std::vector<int> powers) {
    Constraint c;
    c.kind = Kind::MacCap;
    c.idx = std::move(rates);
    c.pow_idx = std::move(powers);
    c.rhs = 0.0;
    return c;
  }

  double value(const Eigen::VectorXd& x) const {
    switch (kind) {
      case Kind::Linear: {
        double v = -rhs;
        for (size_t a = 0; a < idx.size(); ++a) v += coef[a] * x[idx[a]];
        return v;
      }
      case Kind::PowerSum: {
        double v = -rhs;
        for (int i : idx) v += std::exp2(x[i]) - 1.0;
        return v;
      }
      case Kind::MacCap: {
        double s = 0.0;
        for (int j : pow_idx) s += x[j];
        double v = -rhs - std::log2(1.0 + s);
        for (int i : idx) v += x[i];
        return v;
      }
    }
    return 0.0;
  }

  // Adds this constraint's barrier term -log(-g) contributions to grad and hess,
  // given g = value(x) < 0.
  void add_barrier(const Eigen::VectorXd& x, double g, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const double inv_ng = 1.0 / (-g);  // > 0
    switch (kind) {
      case Kind::Linear: {
        for (size_t a = 0; a < idx.size(); ++a) {
          grad[idx[a]] += inv_ng * coef[a];
          for (size_t b = 0; b < idx.size(); ++b)
            hess(idx[a], idx[b]) += inv_ng * inv_ng * coef[a] * coef[b];
        }
        break;
      }
      case Kind::PowerSum: {
        // dg/dx_i = ln2 * 2^{x_i}; d2g/dx_i^2 = ln2^2 * 2^{x_i}
        std::vector<double> d(idx.size());
        for (size_t a = 0; a < idx.size(); ++a) d[a] = kLn2 * std::exp2(x[idx[a]]);
        for (size_t a = 0; a < idx.size(); ++a) {
          grad[idx[a]] += inv_ng * d[a];
          hess(idx[a], idx[a]) += inv_ng * kLn2 * d[a];
          for (size_t b = 0; b < idx.size(); ++b)
            hess(idx[a], idx[b]) += inv_ng * inv_ng * d[a] * d[b];
        }
        break;
      }
      case Kind::MacCap: {
        double s = 0.0;
        for (int j : pow_idx) s += x[j];
        const double dp = -1.0 / (kLn2 * (1.0 + s));            // dg/dP_j
        const double d2p = 1.0 / (kLn2 * (1.0 + s) * (1.0 + s));  // d2g/dP_a dP_b
        // full gradient: 1 on rate vars, dp on power vars
        for (int i : idx) grad[i] += inv_ng * 1.0;
        for (int j : pow_idx) grad[j] += inv_ng * dp;
        // curvature of g (power block only) plus rank-1 outer product
        for (int a : pow_idx)
          for (int b : pow_idx) hess(a, b) += inv_ng * d2p;
        // rank-1 grad(g) grad(g)^T / g^2
        for (int a : idx) {
          for (int b : idx) hess(a, b) += inv_ng * inv_ng;
          for (int b : pow_idx) {
            hess(a, b) += inv_ng * inv_ng * dp;
            hess(b, a) += inv_ng * inv_ng * dp;
          }
        }
        for (int a : pow_idx)
          for (int b : pow_idx) hess(a, b) += inv_ng * inv_ng * dp * dp;
        break;
      }
    }
  }
};

struct BarrierResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double certified_gap = 0.0;
  long iterations = 0;
  bool converged = true;
};

inline bool strictly_feasible(const Eigen::VectorXd& x, const std::vector<Constraint>& cons,
                              double margin = 1e-13) {
  for (const auto& c : cons)
    if (!(c.value(x) < -margin)) return false;
  return true;
}

// Maximizes c'x over the strictly feasible region described by cons, starting
// from the strictly feasible point x0. Stops when the barrier duality gap m/t
// drops below epsilon.
inline BarrierResult barrier_maximize(const Eigen::VectorXd& c, const std::vector<Constraint>& cons,
                                      Eigen::VectorXd x, double epsilon,
                                      long max_iterations = kMaxLayerIterations) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(cons.size());
  BarrierResult res;
  if (n == 0) {
    res.x = x;
    return res;
  }
  if (!strictly_feasible(x, cons))
    throw Error("barrier solver requires a strictly feasible starting point");

  auto phi = [&](const Eigen::VectorXd& y, double t) {
    double v = -t * c.dot(y);
    for (const auto& cc : cons) {
      double g = cc.value(y);
      if (!(g < 0.0)) return std::numeric_limits<double>::infinity();
      v -= std::log(-g);
    }
    return v;
  };

  double t = 1.0;
  const double mu = 20.0;
  long iters = 0;
  Eigen::VectorXd grad(n);
  Eigen::MatrixXd hess(n, n);
  while (true) {
    // Newton centering for the current t.
    for (int inner = 0; inner < 500; ++inner) {
      grad.setZero();
      hess.setZero();
      grad -= t * c;
      for (const auto& cc : cons) cc.add_barrier(x, cc.value(x), grad, hess);
      for (int i = 0; i < n; ++i) hess(i, i) += 1e-12;
      Eigen::VectorXd d = hess.ldlt().solve(-grad);
      double lambda2 = -grad.dot(d);
      if (!(lambda2 > 0) || lambda2 * 0.5 < 1e-10) break;
      // Backtracking line search keeping strict feasibility (Armijo on phi).
      double alpha = 1.0;
      const double phi0 = phi(x, t);
      const double slope = grad.dot(d);
      bool stepped = false;
      for (int h = 0; h < 60; ++h) {
        Eigen::VectorXd y = x + alpha * d;
        if (strictly_feasible(y, cons) && phi(y, t) <= phi0 + 0.25 * alpha * slope) {
          x = y;
          stepped = true;
          break;
        }
        alpha *= 0.5;
      }
      ++iters;
      if (!stepped) break;
      if (iters > max_iterations) {
        res.converged = false;
        res.x = x;
        res.objective = c.dot(x);
        res.certified_gap = static_cast<double>(m) / t;
        res.iterations = iters;
        return res;
      }
    }
    if (static_cast<double>(m) / t <= epsilon) break;
    t *= mu;
  }
  res.x = x;
  res.objective = c.dot(x);
  res.certified_gap = static_cast<double>(m) / t;
  res.iterations = iters;
  return res;
}

}  // namespace detail
}  // namespace ehflow
