#pragma once

// Independent reference implementations used only by tests.

#include "tvising/dataset.hpp"
#include "tvising/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Summed conditional negative log-likelihood evaluated directly from the
// definition -sum log P(x_a | rest).
inline double node_loss(const MatrixXd& beta, const tvising::SpinDataset& d, int a) {
  double v = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    const MatrixXd& blk = d.blocks[static_cast<std::size_t>(i)];
    for (Eigen::Index l = 0; l < blk.rows(); ++l) {
      double z = 0.0;
      for (int b = 0, k = 0; b < d.p; ++b)
        if (b != a) z += beta(k++, i) * blk(l, b);
      const double xa = blk(l, a);
      const double prob = std::exp(xa * z) / (std::exp(z) + std::exp(-z));
      v -= std::log(prob);
    }
  }
  return v;
}

inline MatrixXd node_gradient(const MatrixXd& beta, const tvising::SpinDataset& d, int a) {
  MatrixXd g = MatrixXd::Zero(beta.rows(), beta.cols());
  for (int i = 0; i < d.n(); ++i) {
    const MatrixXd& blk = d.blocks[static_cast<std::size_t>(i)];
    for (Eigen::Index l = 0; l < blk.rows(); ++l) {
      double z = 0.0;
      for (int b = 0, k = 0; b < d.p; ++b)
        if (b != a) z += beta(k++, i) * blk(l, b);
      const double r = std::tanh(z) - blk(l, a);
      for (int b = 0, k = 0; b < d.p; ++b)
        if (b != a) g(k++, i) += r * blk(l, b);
    }
  }
  return g;
}

inline double penalty(const MatrixXd& beta, double l1, double l2, bool group) {
  double f = 0.0;
  for (Eigen::Index i = 1; i < beta.cols(); ++i) {
    const VectorXd dlt = beta.col(i) - beta.col(i - 1);
    f += group ? dlt.norm() : dlt.cwiseAbs().sum();
  }
  return l1 * f + l2 * beta.cwiseAbs().sum();
}

inline double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Subgradient of the node objective taking sign(0) = 0.
inline MatrixXd full_subgradient(const MatrixXd& beta, const tvising::SpinDataset& d, int a,
                                 double l1, double l2, bool group) {
  MatrixXd g = node_gradient(beta, d, a);
  for (Eigen::Index i = 1; i < beta.cols(); ++i) {
    const VectorXd dlt = beta.col(i) - beta.col(i - 1);
    VectorXd s(dlt.size());
    if (group) {
      const double nrm = dlt.norm();
      s = nrm > 0 ? VectorXd(dlt / nrm) : VectorXd::Zero(dlt.size());
    } else {
      for (Eigen::Index r = 0; r < dlt.size(); ++r) s(r) = sgn(dlt(r));
    }
    g.col(i) += l1 * s;
    g.col(i - 1) -= l1 * s;
  }
  for (Eigen::Index r = 0; r < beta.size(); ++r) g(r) += l2 * sgn(beta(r));
  return g;
}

// Face of the penalty around beta: entries are labeled by fused run (per
// coordinate for the l1 norm, shared across coordinates for the group norm),
// with label -1 for runs whose mean is within zero_eps of zero.
inline Eigen::MatrixXi face_labels(const MatrixXd& beta, double eps, double zero_eps, bool group) {
  const Eigen::Index rows = beta.rows(), n = beta.cols();
  Eigen::MatrixXi label(rows, n);
  int next = 0;
  std::vector<int> start(static_cast<std::size_t>(rows), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool split_all = i == 0 || (group && (beta.col(i) - beta.col(i - 1)).norm() >= eps);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const bool split =
          group ? split_all : (i == 0 || std::abs(beta(r, i) - beta(r, i - 1)) >= eps);
      label(r, i) = split ? next++ : label(r, i - 1);
    }
  }
  // Zero out runs whose mean is below zero_eps.
  std::vector<double> sum(static_cast<std::size_t>(next), 0.0), cnt(sum.size(), 0.0);
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    sum[static_cast<std::size_t>(label(k))] += beta(k);
    cnt[static_cast<std::size_t>(label(k))] += 1.0;
  }
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const auto l = static_cast<std::size_t>(label(k));
    if (std::abs(sum[l] / cnt[l]) < zero_eps) label(k) = -1;
  }
  return label;
}

// Orthogonal projection onto the subspace of a face: run means, zeros at -1.
inline MatrixXd project_face(const MatrixXd& m, const Eigen::MatrixXi& label) {
  const int count = label.maxCoeff() + 1;
  std::vector<double> sum(static_cast<std::size_t>(std::max(count, 0)), 0.0), cnt(sum.size(), 0.0);
  for (Eigen::Index k = 0; k < m.size(); ++k)
    if (label(k) >= 0) {
      sum[static_cast<std::size_t>(label(k))] += m(k);
      cnt[static_cast<std::size_t>(label(k))] += 1.0;
    }
  MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < m.size(); ++k)
    out(k) = label(k) < 0 ? 0.0
                          : sum[static_cast<std::size_t>(label(k))] /
                                cnt[static_cast<std::size_t>(label(k))];
  return out;
}

// Projected subgradient method for the node objective. The step budget is
// split into two phases:
//   - 90% unconstrained: blocks with a geometrically shrinking normalized
//     step decaying as 1/sqrt(k) inside the block; each block starts from the
//     step-weighted average of the previous block's second half;
//   - 10% projected onto faces, with backtracking steps. Faces are read off
//     the last block averages at several fusion and zero tolerances; the
//     best two are polished and re-read, for three rounds.
// Every scored point is feasible, so the result bounds the minimum from above.
inline MatrixXd subgradient_argmin(const tvising::SpinDataset& d, int a, double l1, double l2,
                                   bool group, int steps = 200000, int blocks = 20,
                                   double step0 = 1.0, double shrink = 0.6) {
  auto f = [&](const MatrixXd& b) { return node_loss(b, d, a) + penalty(b, l1, l2, group); };
  MatrixXd best_beta = MatrixXd::Zero(d.p - 1, d.n());
  double best = f(best_beta);
  auto consider = [&](const MatrixXd& b) {
    const double v = f(b);
    if (v < best) {
      best = v;
      best_beta = b;
    }
  };
  const int free_steps = steps - steps / 10;
  const int per_block = std::max(2, free_steps / blocks);
  // Faces are read off the best point and the last block averages.
  std::vector<MatrixXd> starts;
  double step = step0;
  MatrixXd beta = best_beta;
  for (int blk = 0; blk < blocks; ++blk, step *= shrink) {
    MatrixXd avg = MatrixXd::Zero(beta.rows(), beta.cols());
    double weight = 0.0;
    for (int k = 0; k < per_block; ++k) {
      const MatrixXd g = full_subgradient(beta, d, a, l1, l2, group);
      const double gn = g.norm();
      if (gn == 0.0) return beta;
      const double t = step / std::sqrt(k + 1.0);
      beta -= t * g / gn;
      consider(beta);
      if (k >= per_block / 2) {
        avg += t * beta;
        weight += t;
        if ((k + 1) % 50 == 0) consider(avg / weight);
      }
    }
    beta = avg / weight;
    if (blk >= blocks - 3) starts.push_back(beta);
  }
  starts.push_back(best_beta);

  // Projected steps with backtracking on one face; returns the steps used.
  auto descend = [&](MatrixXd& x, double& fx, const Eigen::MatrixXi& label, int budget) {
    double t = 1.0;
    int used = 0;
    while (used < budget) {
      const MatrixXd g = project_face(full_subgradient(x, d, a, l1, l2, group), label);
      const double gg = g.squaredNorm();
      ++used;
      if (gg == 0.0) break;
      MatrixXd trial = x - t * g;
      double ft = f(trial);
      while (ft > fx - 0.5 * t * gg && t > 1e-14) {
        t *= 0.5;
        trial = x - t * g;
        ft = f(trial);
        ++used;
      }
      if (!(ft < fx)) break;
      x = std::move(trial);
      fx = ft;
      t *= 2.0;
    }
    return used;
  };

  struct Candidate {
    Eigen::MatrixXi label;
    MatrixXd x;
    double fx;
  };
  const std::vector<double> tolerances{1e-1, 1e-2, 1e-3, 1e-4};
  const int rounds = 3;
  int budget = steps / 10;
  for (int round = 0; round < rounds; ++round) {
    std::vector<Candidate> faces;
    for (const MatrixXd& start : starts)
      for (double eps : tolerances)
        for (double zero_eps : tolerances) {
          Candidate c{face_labels(start, eps, zero_eps, group), MatrixXd(), 0.0};
          c.x = project_face(start, c.label);
          c.fx = f(c.x);
          budget -= descend(c.x, c.fx, c.label, 20);
          consider(c.x);
          faces.push_back(std::move(c));
        }
    std::sort(faces.begin(), faces.end(),
              [](const Candidate& x, const Candidate& y) { return x.fx < y.fx; });
    // The two best faces share what is left of this round's budget, and
    // their end points seed the next round.
    starts.clear();
    const int share = std::max(0, budget) / (2 * (rounds - round));
    for (std::size_t k = 0; k < std::min<std::size_t>(2, faces.size()); ++k) {
      budget -= descend(faces[k].x, faces[k].fx, faces[k].label, share);
      consider(faces[k].x);
      starts.push_back(faces[k].x);
    }
  }
  return best_beta;
}

inline double subgradient_minimum(const tvising::SpinDataset& d, int a, double l1, double l2,
                                  bool group, int steps = 200000, int blocks = 20,
                                  double step0 = 1.0, double shrink = 0.6) {
  const MatrixXd beta = subgradient_argmin(d, a, l1, l2, group, steps, blocks, step0, shrink);
  return node_loss(beta, d, a) + penalty(beta, l1, l2, group);
}

// 1-D total variation denoising by exhaustive active-set search on the
// dual  min_{|z_k| <= tau} 1/2 ||v - D^T z||^2,  (D^T z)_j = z_{j-1} - z_j.
// Every assignment of each z_k to -tau, +tau or free is tried; the unique
// KKT point gives x = v - D^T z. Exponential in n, use n <= 9.
inline VectorXd tv1d_bruteforce(const VectorXd& v, double tau) {
  const int n = static_cast<int>(v.size());
  if (n < 2 || tau == 0.0) return v;
  const int m = n - 1;
  MatrixXd dt = MatrixXd::Zero(n, m);  // D^T
  for (int k = 0; k < m; ++k) {
    dt(k, k) = -1.0;
    dt(k + 1, k) = 1.0;
  }
  int states = 1;
  for (int k = 0; k < m; ++k) states *= 3;
  VectorXd best;
  double best_violation = std::numeric_limits<double>::infinity();
  for (int code = 0; code < states; ++code) {
    std::vector<int> st(static_cast<std::size_t>(m));
    for (int k = 0, c = code; k < m; ++k, c /= 3) st[static_cast<std::size_t>(k)] = c % 3 - 1;
    VectorXd z = VectorXd::Zero(m);
    std::vector<int> free_idx;
    for (int k = 0; k < m; ++k) {
      if (st[static_cast<std::size_t>(k)] == 0)
        free_idx.push_back(k);
      else
        z(k) = tau * st[static_cast<std::size_t>(k)];
    }
    if (!free_idx.empty()) {
      const int f = static_cast<int>(free_idx.size());
      MatrixXd a(n, f);
      for (int c = 0; c < f; ++c) a.col(c) = dt.col(free_idx[static_cast<std::size_t>(c)]);
      const VectorXd rhs = v - dt * z;
      const VectorXd zf = (a.transpose() * a).ldlt().solve(a.transpose() * rhs);
      for (int c = 0; c < f; ++c) z(free_idx[static_cast<std::size_t>(c)]) = zf(c);
    }
    const VectorXd x = v - dt * z;
    // KKT: free |z| <= tau with zero difference; z = +tau needs (Dx) >= 0 and
    // z = -tau needs (Dx) <= 0, where (Dx)_k = x_{k+1} - x_k.
    double violation = 0.0;
    for (int k = 0; k < m; ++k) {
      const double dx = x(k + 1) - x(k);
      const int s = st[static_cast<std::size_t>(k)];
      if (s == 0)
        violation = std::max({violation, std::abs(z(k)) - tau, std::abs(dx)});
      else
        violation = std::max(violation, -s * dx);
    }
    if (violation < best_violation) {
      best_violation = violation;
      best = x;
    }
  }
  return best;
}

// Two-column group-fused prox in closed form.
inline MatrixXd group_fused_two(const MatrixXd& v, double tau) {
  const VectorXd d = v.col(1) - v.col(0);
  MatrixXd out(v.rows(), 2);
  if (d.norm() <= 2.0 * tau) {
    out.col(0) = out.col(1) = 0.5 * (v.col(0) + v.col(1));
  } else {
    const VectorXd u = d / d.norm();
    out.col(0) = v.col(0) + tau * u;
    out.col(1) = v.col(1) - tau * u;
  }
  return out;
}

// Group-fused prox by accelerated projected gradient on the dual
// (ball-constrained), with restarts, run until the dual iterate stalls.
inline MatrixXd group_fused_dual_fista(const MatrixXd& v, double tau, int iters = 400000) {
  const Eigen::Index n = v.cols();
  if (n < 2 || tau == 0.0) return v;
  auto primal = [&](const MatrixXd& z) {
    MatrixXd x = v;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      x.col(k) += z.col(k);
      x.col(k + 1) -= z.col(k);
    }
    return x;
  };
  auto project = [&](MatrixXd& z) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) {
      const double nrm = z.col(k).norm();
      if (nrm > tau) z.col(k) *= tau / nrm;
    }
  };
  // Accelerated projected gradient with gradient-based restarts.
  MatrixXd z = MatrixXd::Zero(v.rows(), n - 1), y = z;
  MatrixXd grad(v.rows(), n - 1);
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    const MatrixXd x = primal(y);
    for (Eigen::Index k = 0; k + 1 < n; ++k) grad.col(k) = x.col(k) - x.col(k + 1);
    MatrixXd zn = y - 0.25 * grad;
    project(zn);
    const double moved = (zn - z).norm();
    if ((y - zn).cwiseProduct(zn - z).sum() > 0.0) {
      t = 1.0;
      y = zn;
    } else {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = zn + ((t - 1.0) / tn) * (zn - z);
      t = tn;
    }
    z = std::move(zn);
    if (moved <= 1e-17 * (1.0 + z.norm())) break;
  }
  return primal(z);
}

// Objective of the combined prox problem.
inline double combined_objective(const MatrixXd& b, const MatrixXd& v, double t1, double t2,
                                 bool group) {
  return 0.5 * (b - v).squaredNorm() + penalty(b, t1, t2, group);
}

// Long-run subgradient oracle for the combined prox objective.
inline double combined_subgradient_minimum(const MatrixXd& v, double t1, double t2, bool group,
                                           int steps = 200000, int blocks = 20) {
  MatrixXd best_b = v;
  double best = combined_objective(v, v, t1, t2, group);
  double step = 0.5;
  const int per_block = steps / blocks;
  for (int blk = 0; blk < blocks; ++blk, step *= 0.5) {
    MatrixXd b = best_b;
    for (int k = 0; k < per_block; ++k) {
      MatrixXd g = b - v;
      for (Eigen::Index i = 1; i < b.cols(); ++i) {
        const VectorXd dlt = b.col(i) - b.col(i - 1);
        VectorXd s(dlt.size());
        if (group) {
          const double nrm = dlt.norm();
          s = nrm > 0 ? VectorXd(dlt / nrm) : VectorXd::Zero(dlt.size());
        } else {
          for (Eigen::Index r = 0; r < dlt.size(); ++r) s(r) = sgn(dlt(r));
        }
        g.col(i) += t1 * s;
        g.col(i - 1) -= t1 * s;
      }
      for (Eigen::Index r = 0; r < b.size(); ++r) g(r) += t2 * sgn(b(r));
      const double gn = g.norm();
      if (gn == 0.0) return combined_objective(b, v, t1, t2, group);
      b -= (step / std::sqrt(k + 1.0)) * g / gn;
      const double f = combined_objective(b, v, t1, t2, group);
      if (f < best) {
        best = f;
        best_b = b;
      }
    }
  }
  return best;
}

// Pairwise AUC: P(score_pos > score_neg) + 1/2 P(equal).
inline double auc_pairwise(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return den == 0.0 ? 0.5 : num / den;
}

}  // namespace oracle
