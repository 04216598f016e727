#include "tvising/errors.hpp"
#include "tvising/solver.hpp"

#include <algorithm>
#include <cmath>

namespace tvising {

namespace {

// Blocks whose dual norm is below this fraction of tau are treated as
// inactive (their column difference is zero at the optimum).
constexpr double kInteriorMargin = 1e-9;
// Entries below this magnitude after the Dykstra polish are set to zero.
constexpr double kSnapZero = 1e-10;
// Column jumps below this size relative to the largest entry are fusion candidates.
constexpr double kSnapFuse = 1e-9;

void project_ball(Eigen::Ref<Eigen::VectorXd> z, double radius) {
  const double nrm = z.norm();
  if (nrm > radius) z *= radius / nrm;
}

// Largest t in [0, 1] with ||z0 + t d|| <= radius, given ||z0|| <= radius.
double max_feasible_step(const Eigen::VectorXd& z0, const Eigen::VectorXd& d, double radius) {
  const double dd = d.squaredNorm();
  if (dd == 0.0) return 1.0;
  const double zd = z0.dot(d);
  const double c = std::max(0.0, radius * radius - z0.squaredNorm());
  const double t = (-zd + std::sqrt(zd * zd + dd * c)) / dd;
  return std::clamp(t, 0.0, 1.0);
}

double duality_gap(const Eigen::MatrixXd& b, const Eigen::MatrixXd& z, double tau) {
  double gap = 0.0;
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const Eigen::VectorXd diff = b.col(k + 1) - b.col(k);
    gap += tau * diff.norm() - diff.dot(z.col(k));
  }
  return gap;
}

double combined_objective(const Eigen::MatrixXd& b, const Eigen::MatrixXd& v, double tau1,
                          double tau2) {
  double jumps = 0.0;
  for (Eigen::Index k = 0; k + 1 < b.cols(); ++k) jumps += (b.col(k + 1) - b.col(k)).norm();
  return 0.5 * (b - v).squaredNorm() + tau1 * jumps + tau2 * b.cwiseAbs().sum();
}

std::vector<bool> inactive_blocks(const Eigen::MatrixXd& z, double tau) {
  std::vector<bool> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index k = 0; k < z.cols(); ++k)
    out[static_cast<std::size_t>(k)] = z.col(k).norm() < tau * (1.0 - kInteriorMargin);
  return out;
}

// Exact minimization of the dual over each maximal run of inactive blocks
// with the bounding blocks held fixed, damped to stay feasible.
void solve_runs(const Eigen::MatrixXd& v, double tau, Eigen::MatrixXd& z, Eigen::MatrixXd& b) {
  const Eigen::Index n = v.cols();
  const Eigen::Index d = v.rows();
  const std::vector<bool> inactive = inactive_blocks(z, tau);
  Eigen::Index k = 0;
  while (k < n - 1) {
    if (!inactive[static_cast<std::size_t>(k)]) {
      ++k;
      continue;
    }
    const Eigen::Index s = k;  // first column of the run
    while (k < n - 1 && inactive[static_cast<std::size_t>(k)]) ++k;
    const Eigen::Index e = k;  // last column of the run
    if (e - s < 2) continue;   // a single block is already solved exactly by BCD

    const Eigen::VectorXd zl = s > 0 ? Eigen::VectorXd(z.col(s - 1)) : Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd zr = e < n - 1 ? Eigen::VectorXd(z.col(e)) : Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd c =
        (v.middleCols(s, e - s + 1).rowwise().sum() - zl + zr) / static_cast<double>(e - s + 1);

    Eigen::MatrixXd target(d, e - s);
    Eigen::VectorXd prev = zl;
    double t = 1.0;
    for (Eigen::Index j = s; j < e; ++j) {
      target.col(j - s) = c - v.col(j) + prev;
      prev = target.col(j - s);
      t = std::min(t, max_feasible_step(z.col(j), target.col(j - s) - z.col(j), tau));
    }
    if (t <= 0.0) continue;
    for (Eigen::Index j = s; j < e; ++j) z.col(j) += t * (target.col(j - s) - z.col(j));
    for (Eigen::Index j = s; j <= e; ++j) {
      b.col(j) = v.col(j);
      if (j > 0) b.col(j) -= z.col(j - 1);
      if (j < n - 1) b.col(j) += z.col(j);
    }
  }
}

// Replaces every fused run (consecutive inactive blocks) by its column mean.
void average_runs(Eigen::MatrixXd& b, const std::vector<bool>& fused) {
  const Eigen::Index n = b.cols();
  Eigen::Index k = 0;
  while (k < n) {
    Eigen::Index e = k;
    while (e < n - 1 && fused[static_cast<std::size_t>(e)]) ++e;
    if (e > k) {
      const Eigen::VectorXd mean = b.middleCols(k, e - k + 1).rowwise().mean();
      for (Eigen::Index j = k; j <= e; ++j) b.col(j) = mean;
    }
    k = e + 1;
  }
}

// Solves the problem restricted to a fixed partition into fused runs by
// Newton's method (the jumps between runs are nonzero, so it is smooth), then
// rebuilds the dual and checks feasibility. On success x holds the exact
// minimizer and z its dual; otherwise both are left untouched.
bool newton_polish(const Eigen::MatrixXd& v, double tau, const std::vector<bool>& fused,
                   Eigen::MatrixXd& x, Eigen::MatrixXd& z) {
  const Eigen::Index n = v.cols();
  const Eigen::Index d = v.rows();
  std::vector<Eigen::Index> start;
  for (Eigen::Index j = 0; j < n; ++j)
    if (j == 0 || !fused[static_cast<std::size_t>(j - 1)]) start.push_back(j);
  const auto m = static_cast<Eigen::Index>(start.size());
  start.push_back(n);
  if (m < 2) return false;

  Eigen::VectorXd len(m);
  Eigen::MatrixXd sum(d, m), y(d, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index s = start[r], e = start[r + 1];
    len(r) = static_cast<double>(e - s);
    sum.col(r) = v.middleCols(s, e - s).rowwise().sum();
    y.col(r) = x.middleCols(s, e - s).rowwise().mean();
  }
  const double scale = 1.0 + sum.norm();

  Eigen::MatrixXd u(d, m - 1), g(d, m);
  Eigen::VectorXd jump(m - 1);
  auto gradient = [&](const Eigen::MatrixXd& yy) {
    for (Eigen::Index k = 0; k < m - 1; ++k) {
      const Eigen::VectorXd diff = yy.col(k + 1) - yy.col(k);
      jump(k) = diff.norm();
      if (!(jump(k) > 1e-12 * scale)) return false;
      u.col(k) = diff / jump(k);
    }
    for (Eigen::Index r = 0; r < m; ++r) {
      g.col(r) = len(r) * yy.col(r) - sum.col(r);
      if (r > 0) g.col(r) += tau * u.col(r - 1);
      if (r < m - 1) g.col(r) -= tau * u.col(r);
    }
    return true;
  };

  if (!gradient(y)) return false;
  double gnorm = g.norm();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  std::vector<Eigen::MatrixXd> hk(static_cast<std::size_t>(m - 1));
  std::vector<Eigen::LDLT<Eigen::MatrixXd>> dfac(static_cast<std::size_t>(m));
  Eigen::MatrixXd rhs(d, m), step(d, m);
  for (int it = 0; it < 50 && gnorm > 1e-14 * scale; ++it) {
    for (Eigen::Index k = 0; k < m - 1; ++k)
      hk[k] = tau * (eye - u.col(k) * u.col(k).transpose()) / jump(k);
    // Block tridiagonal solve: diagonal len*I + H_{r-1} + H_r, off-diagonal -H_r.
    rhs = -g;
    Eigen::MatrixXd prev_inv_b;
    for (Eigen::Index r = 0; r < m; ++r) {
      Eigen::MatrixXd a = len(r) * eye;
      if (r > 0) a += hk[r - 1];
      if (r < m - 1) a += hk[r];
      if (r > 0) {
        a -= hk[r - 1] * prev_inv_b;
        rhs.col(r) += hk[r - 1] * dfac[r - 1].solve(rhs.col(r - 1));
      }
      dfac[r].compute(a);
      if (dfac[r].info() != Eigen::Success) return false;
      if (r < m - 1) prev_inv_b = dfac[r].solve(hk[r]);
    }
    step.col(m - 1) = dfac[m - 1].solve(rhs.col(m - 1));
    for (Eigen::Index r = m - 2; r >= 0; --r)
      step.col(r) = dfac[r].solve(rhs.col(r) + hk[r] * step.col(r + 1));

    const Eigen::MatrixXd trial = y + step;
    if (!gradient(trial)) return false;
    const double tnorm = g.norm();
    if (!(tnorm < gnorm)) {
      gradient(y);
      break;
    }
    y = trial;
    gnorm = tnorm;
  }
  if (!(gnorm <= 1e-9 * scale)) return false;

  // Dual from the primal: x_j = v_j - z_{j-1} + z_j inside each run.
  Eigen::MatrixXd zz(d, n - 1);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(d);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index j = start[r]; j < start[r + 1] - 1; ++j) {
      zz.col(j) = y.col(r) - v.col(j) + prev;
      if (zz.col(j).norm() > tau * (1.0 + 1e-9)) return false;
      prev = zz.col(j);
    }
    if (r < m - 1) {
      zz.col(start[r + 1] - 1) = tau * u.col(r);
      prev = zz.col(start[r + 1] - 1);
    }
  }
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index j = start[r]; j < start[r + 1]; ++j) x.col(j) = y.col(r);
  for (Eigen::Index k = 0; k < n - 1; ++k) project_ball(zz.col(k), tau);
  z = std::move(zz);
  return true;
}

}  // namespace

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("prox_l1: tau must be >= 0");
  return v.unaryExpr([tau](double x) {
    const double m = std::abs(x) - tau;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
  });
}

Eigen::MatrixXd prox_group_fused(const Eigen::MatrixXd& v, double tau, double tol, int max_passes,
                                 Eigen::MatrixXd* dual, ProxStats* stats) {
  if (!std::isfinite(tau) || tau < 0.0)
    throw ValidationError("prox_group_fused: tau must be finite and >= 0");
  const Eigen::Index n = v.cols();
  const Eigen::Index d = v.rows();
  if (stats) *stats = {};
  if (tau == 0.0 || n < 2) {
    if (dual) *dual = Eigen::MatrixXd::Zero(d, std::max<Eigen::Index>(n - 1, 0));
    return v;
  }

  Eigen::MatrixXd z;
  if (dual && dual->rows() == d && dual->cols() == n - 1) {
    z = *dual;
    for (Eigen::Index k = 0; k < n - 1; ++k) project_ball(z.col(k), tau);
  } else {
    z = Eigen::MatrixXd::Zero(d, n - 1);
  }
  // b = v - D^T z, where (D^T z)_j = z_{j-1} - z_j.
  Eigen::MatrixXd b = v;
  b.leftCols(n - 1) += z;
  b.rightCols(n - 1) -= z;

  // The gap is a sum of nonnegative terms evaluated in floating point; it
  // cannot be resolved below roughly eps * ||v||^2.
  tol = std::max(tol, 1e-14 * (1.0 + v.squaredNorm()));
  double gap = duality_gap(b, z, tau);
  int pass = 0;
  Eigen::VectorXd znew(d);
  while (gap > tol && pass < max_passes) {
    for (Eigen::Index k = 0; k < n - 1; ++k) {
      znew = z.col(k) + 0.5 * (b.col(k + 1) - b.col(k));
      project_ball(znew, tau);
      const Eigen::VectorXd delta = znew - z.col(k);
      b.col(k) += delta;
      b.col(k + 1) -= delta;
      z.col(k) = znew;
    }
    solve_runs(v, tau, z, b);
    gap = duality_gap(b, z, tau);
    ++pass;
  }
  if (stats) {
    stats->iterations = pass;
    stats->residual = gap;
    stats->converged = gap <= tol;
  }
  const std::vector<bool> fused = inactive_blocks(z, tau);
  average_runs(b, fused);
  newton_polish(v, tau, fused, b, z);
  if (dual) *dual = std::move(z);
  return b;
}

// Condat's direct algorithm for 1-D TV denoising.
Eigen::VectorXd prox_fused_1d(const Eigen::VectorXd& v, double tau) {
  if (!std::isfinite(tau) || tau < 0.0)
    throw ValidationError("prox_fused_1d: tau must be finite and >= 0");
  const Eigen::Index width = v.size();
  Eigen::VectorXd out(width);
  if (width == 0) return out;
  if (tau == 0.0) return v;

  const double lambda = tau;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;
  Eigen::Index k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = v(0) - lambda, vmax = v(0) + lambda;
  for (;;) {
    while (k == width - 1) {
      if (umin < 0.0) {
        do out(k0++) = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = v(k);
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do out(k0++) = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = v(k);
        umax = minlambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do out(k0++) = vmin; while (k0 <= k);
        return out;
      }
    }
    if ((umin += v(k + 1) - vmin) < minlambda) {
      do out(k0++) = vmin; while (k0 <= kminus);
      k = kplus = kminus = k0;
      vmin = v(k);
      vmax = vmin + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += v(k + 1) - vmax) > lambda) {
      do out(k0++) = vmax; while (k0 <= kplus);
      k = kplus = kminus = k0;
      vmax = v(k);
      vmin = vmax - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        kplus = k;
        vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

Eigen::MatrixXd prox_combined(const Eigen::MatrixXd& v, double tau1, double tau2,
                              FusedNorm fused_norm, double tol_inner, ProxWorkspace* workspace,
                              ProxStats* stats, int max_iter) {
  if (!(tau1 >= 0.0) || !(tau2 >= 0.0) || !std::isfinite(tau1) || !std::isfinite(tau2))
    throw ValidationError("prox_combined: taus must be finite and >= 0");
  if (stats) *stats = {};

  if (fused_norm == FusedNorm::kL1) {
    Eigen::MatrixXd out(v.rows(), v.cols());
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      out.row(r) = prox_fused_1d(v.row(r).transpose(), tau1).transpose();
    return prox_l1(out, tau2);
  }

  if (tau1 == 0.0) return prox_l1(v, tau2);
  if (tau2 == 0.0) {
    Eigen::MatrixXd* dual = workspace ? &workspace->fused_dual : nullptr;
    return prox_group_fused(v, tau1, std::min(tol_inner, 1e-12), 100000, dual, stats);
  }

  // Dykstra-like alternation between the fused and l1 steps. Its increments
  // are the dual variables of the two terms (fused: D^T z, l1: q), so the
  // iterate is always b = v - D^T z - q and a previous (z, q) is a valid warm
  // start. The fused step is one block-coordinate pass over z plus the exact
  // run solves; the l1 step is exact (q <- clip(b + q, tau2)), after which b
  // is a soft-threshold output.
  ProxWorkspace local;
  ProxWorkspace& ws = workspace ? *workspace : local;
  const Eigen::Index n = v.cols();
  const Eigen::Index d = v.rows();
  if (n < 2) return prox_l1(v, tau2);
  Eigen::MatrixXd& z = ws.fused_dual;
  Eigen::MatrixXd& q = ws.sparse_dual;
  if (z.rows() != d || z.cols() != n - 1) z = Eigen::MatrixXd::Zero(d, n - 1);
  if (q.rows() != d || q.cols() != n) q = Eigen::MatrixXd::Zero(d, n);
  for (Eigen::Index k = 0; k < n - 1; ++k) project_ball(z.col(k), tau1);
  q = q.cwiseMax(-tau2).cwiseMin(tau2);

  Eigen::MatrixXd b = v - q;
  b.leftCols(n - 1) += z;
  b.rightCols(n - 1) -= z;
  Eigen::MatrixXd b_prev;
  Eigen::MatrixXd vq;
  Eigen::VectorXd znew(d);
  int it = 0;
  double change = 0.0;
  bool converged = false;
  while (it < max_iter) {
    b_prev = b;
    for (Eigen::Index k = 0; k < n - 1; ++k) {
      znew = z.col(k) + 0.5 * (b.col(k + 1) - b.col(k));
      project_ball(znew, tau1);
      const Eigen::VectorXd delta = znew - z.col(k);
      b.col(k) += delta;
      b.col(k + 1) -= delta;
      z.col(k) = znew;
    }
    vq = v - q;
    solve_runs(vq, tau1, z, b);
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      const double qn = std::clamp(b(k) + q(k), -tau2, tau2);
      b(k) += q(k) - qn;
      q(k) = qn;
    }
    ++it;
    change = (b - b_prev).norm();
    if (change <= tol_inner) {
      converged = true;
      break;
    }
  }
  if (stats) {
    stats->iterations = it;
    stats->residual = change;
    stats->converged = converged;
  }
  // Snap: columns fused by the dual are made exactly equal and averaging
  // dust is set to zero.
  std::vector<bool> fused = inactive_blocks(z, tau1);
  average_runs(b, fused);
  b = b.unaryExpr([](double e) { return std::abs(e) < kSnapZero ? 0.0 : e; });
  // Jumps left at rounding size by an early stop are fused as well when that
  // does not increase the prox objective.
  const double jump_eps = kSnapFuse * (1.0 + b.cwiseAbs().maxCoeff());
  bool extra = false;
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    const double jump = (b.col(k + 1) - b.col(k)).norm();
    if (jump > 0.0 && jump <= jump_eps) fused[static_cast<std::size_t>(k)] = extra = true;
  }
  if (extra) {
    Eigen::MatrixXd c = b;
    average_runs(c, fused);
    c = c.unaryExpr([](double e) { return std::abs(e) < kSnapZero ? 0.0 : e; });
    if (combined_objective(c, v, tau1, tau2) <= combined_objective(b, v, tau1, tau2)) b = c;
  }
  return b;
}

}  // namespace tvising
