#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "helmlab/point.hpp"

// Restarted GMRES for complex non-Hermitian systems with a matrix-free
// operator. Modified Gram-Schmidt Arnoldi with complex Givens rotations.

namespace helmlab::krylov {

struct GmresOptions {
  double tol{1e-8};  // relative residual target
  int restart{80};
  int max_iterations{4000};
};

struct GmresResult {
  int iterations{0};
  double relative_residual{0.0};
  std::vector<double> history;  // relative residual per iteration
  bool converged{false};
};

namespace detail {

inline double nrm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

inline cplx dotc(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// c real, s complex with [c, s; -conj(s), c] [a; b] = [r; 0]
inline void make_givens(cplx a, cplx b, double& c, cplx& s) {
  if (b == cplx(0.0)) {
    c = 1.0;
    s = 0.0;
  } else if (a == cplx(0.0)) {
    c = 0.0;
    s = b == cplx(0.0) ? cplx(1.0) : std::conj(b) / std::abs(b);
  } else {
    const double t = std::sqrt(std::norm(a) + std::norm(b));
    c = std::abs(a) / t;
    s = (a / std::abs(a)) * std::conj(b) / t;
  }
}

}  // namespace detail

/// Solves A x = b; `apply` computes y = A x. x holds the initial guess on
/// entry and the solution on exit.
inline GmresResult gmres(const std::function<void(const cplx*, cplx*)>& apply,
                         std::span<const cplx> b, std::vector<cplx>& x, const GmresOptions& opts = {}) {
  const size_t n = b.size();
  GmresResult res;
  const double bnorm = detail::nrm2(b);
  if (bnorm == 0.0) {
    x.assign(n, cplx(0.0, 0.0));
    res.converged = true;
    return res;
  }
  if (x.size() != n) x.assign(n, cplx(0.0, 0.0));

  const int m = opts.restart;
  std::vector<std::vector<cplx>> basis;
  std::vector<cplx> hess(static_cast<size_t>(m + 1) * m);  // h(i,j) = hess[j*(m+1)+i]
  std::vector<double> cs(m);
  std::vector<cplx> sn(m), g(m + 1);
  std::vector<cplx> w(n), r(n);

  int total_it = 0;
  bool at_breakdown = false;
  while (total_it < opts.max_iterations && !at_breakdown) {
    apply(x.data(), w.data());
    for (size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    const double beta = detail::nrm2(r);
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= opts.tol) {
      res.converged = true;
      res.iterations = total_it;
      return res;
    }
    basis.assign(1, r);
    for (auto& v : basis[0]) v /= beta;
    std::fill(g.begin(), g.end(), cplx(0.0, 0.0));
    g[0] = beta;

    int j = 0;
    for (; j < m && total_it < opts.max_iterations; ) {
      apply(basis[j].data(), w.data());
      for (int i = 0; i <= j; ++i) {
        const cplx hij = detail::dotc(basis[i], w);
        hess[static_cast<size_t>(j) * (m + 1) + i] = hij;
        for (size_t t = 0; t < n; ++t) w[t] -= hij * basis[i][t];
      }
      const double hn = detail::nrm2(w);
      hess[static_cast<size_t>(j) * (m + 1) + j + 1] = hn;
      if (hn > 0.0) {
        basis.emplace_back(w);
        for (auto& v : basis.back()) v /= hn;
      } else {
        at_breakdown = true;  // invariant subspace reached; solution is exact
      }
      for (int i = 0; i < j; ++i) {
        const cplx a = hess[static_cast<size_t>(j) * (m + 1) + i];
        const cplx bb = hess[static_cast<size_t>(j) * (m + 1) + i + 1];
        hess[static_cast<size_t>(j) * (m + 1) + i] = cs[i] * a + sn[i] * bb;
        hess[static_cast<size_t>(j) * (m + 1) + i + 1] = -std::conj(sn[i]) * a + cs[i] * bb;
      }
      detail::make_givens(hess[static_cast<size_t>(j) * (m + 1) + j],
                          hess[static_cast<size_t>(j) * (m + 1) + j + 1], cs[j], sn[j]);
      hess[static_cast<size_t>(j) * (m + 1) + j] =
          cs[j] * hess[static_cast<size_t>(j) * (m + 1) + j] +
          sn[j] * hess[static_cast<size_t>(j) * (m + 1) + j + 1];
      hess[static_cast<size_t>(j) * (m + 1) + j + 1] = 0.0;
      const cplx gj = g[j];
      g[j] = cs[j] * gj;
      g[j + 1] = -std::conj(sn[j]) * gj;

      ++j;
      ++total_it;
      res.relative_residual = std::abs(g[j]) / bnorm;
      res.history.push_back(res.relative_residual);
      if (res.relative_residual <= opts.tol || at_breakdown) break;
    }

    std::vector<cplx> y(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int t = i + 1; t < j; ++t) s -= hess[static_cast<size_t>(t) * (m + 1) + i] * y[t];
      y[i] = s / hess[static_cast<size_t>(i) * (m + 1) + i];
    }
    for (int i = 0; i < j; ++i)
      for (size_t t = 0; t < n; ++t) x[t] += y[i] * basis[i][t];

    if (res.relative_residual <= opts.tol || at_breakdown) {
      apply(x.data(), w.data());
      for (size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
      res.relative_residual = detail::nrm2(r) / bnorm;
      res.iterations = total_it;
      res.converged = res.relative_residual <= 10.0 * opts.tol;
      if (res.converged || at_breakdown) return res;
    }
  }
  res.iterations = total_it;
  return res;
}

}  // namespace helmlab::krylov
