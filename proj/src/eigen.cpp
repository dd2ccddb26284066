#include "rbo/eigen.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace rbo {

namespace {

// Householder reduction of the symmetric matrix held in `v` (row-major,
// n x n) to tridiagonal form. On return d holds the diagonal and e[1..n-1]
// the sub-diagonal. With `accumulate` v is overwritten by the orthogonal
// transformation, otherwise its contents are scratch.
void householder_tridiagonalize(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e, bool accumulate) {
  const std::size_t n = v.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  if (n == 0) return;
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  if (!accumulate) {
    for (std::size_t i = 0; i < n; ++i) d[i] = v(i, i);
    e[0] = 0.0;
    return;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL with Wilkinson-type shifts on (d, e), e[1..n-1] sub-diagonal.
// Rotations are applied to the columns of `v` when given.
bool implicit_ql(std::vector<double>& d, std::vector<double>& e, DenseMatrix* v, std::size_t max_iter,
                 std::size_t& total_iterations) {
  const std::size_t n = d.size();
  if (n == 0) return true;
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  constexpr double eps = 0x1.0p-52;
  double f = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      std::size_t iter = 0;
      do {
        if (++iter > max_iter) return false;
        ++total_iterations;
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (v != nullptr) {
            auto& vv = *v;
            for (std::size_t k = 0; k < n; ++k) {
              h = vv(k, ii + 1);
              vv(k, ii + 1) = s * vv(k, ii) + c * h;
              vv(k, ii) = c * vv(k, ii) - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
  return true;
}

}  // namespace

double Spectrum::norm() const {
  if (values.empty()) return 0.0;
  return std::max(std::abs(values.front()), std::abs(values.back()));
}

EigenResult eigvalsh(const SymMatrix& m, const EigenOptions& opts) {
  const std::size_t n = m.dim();
  for (double x : m.dense().data())
    if (!std::isfinite(x)) throw DomainError("eigvalsh: non-finite matrix entry");

  EigenResult out;
  DenseMatrix work = m.dense();
  std::vector<double> d, e;
  householder_tridiagonalize(work, d, e, opts.want_vectors);
  out.report.converged = implicit_ql(d, e, opts.want_vectors ? &work : nullptr, opts.max_iterations_per_eigenvalue,
                                     out.report.iterations);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  out.spectrum.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.spectrum.values[k] = d[order[k]];

  if (opts.want_vectors) {
    DenseMatrix vec(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) vec(i, k) = work(i, order[k]);

    const double scale = std::max(out.spectrum.norm(), 1e-300);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) col[i] = vec(i, k);
      const auto av = m.dense() * std::span<const double>(col);
      double r2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = av[i] - out.spectrum.values[k] * col[i];
        r2 += diff * diff;
      }
      out.report.max_residual = std::max(out.report.max_residual, std::sqrt(r2) / scale);
    }
    const DenseMatrix gram = vec.transposed() * vec;
    out.report.orthogonality_defect = (gram - DenseMatrix::identity(n)).max_abs();
    if (out.report.max_residual > opts.residual_tol) out.report.converged = false;
    out.spectrum.vectors = std::move(vec);
  }
  return out;
}

EigenResult eigvalsh(const BlockMatrix& m, const EigenOptions& opts) {
  auto out = eigvalsh(m.to_dense(), opts);
  out.spectrum.shape = m.shape;
  return out;
}

Tridiagonal Tridiagonal::from(const SymMatrix& m) {
  if (!m.is_tridiagonal()) throw DomainError("matrix is not tridiagonal");
  Tridiagonal t;
  t.diag = m.diag();
  for (std::size_t i = 0; i + 1 < m.dim(); ++i) t.off.push_back(m(i, i + 1));
  return t;
}

std::size_t sturm_count(const Tridiagonal& t, double x) {
  const std::size_t n = t.diag.size();
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
    q = t.diag[i] - x - (i == 0 ? 0.0 : e2 / q);
    if (q == 0.0) q = -1e-300;  // x is an eigenvalue of the leading block: count it as below
    if (q < 0.0) ++count;
  }
  return count;
}

double min_eig_tridiag(const Tridiagonal& t, double tol) {
  const std::size_t n = t.diag.size();
  if (n == 0) throw DomainError("min_eig_tridiag: empty matrix");
  double lo = t.diag[0], hi = t.diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  lo -= tol;
  hi += tol;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double min_eig_tridiag(const SymMatrix& m, double tol) { return min_eig_tridiag(Tridiagonal::from(m), tol); }

std::size_t count_at_most(std::span<const double> sorted, double e) {
  return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin());
}

double counting(const Spectrum& s, double e, double normalization) {
  if (!(normalization > 0)) throw DomainError("counting: normalization must be positive");
  return static_cast<double>(count_at_most(s.values, e)) / normalization;
}

}  // namespace rbo
