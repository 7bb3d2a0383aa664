#include "qstack/qlr.hpp"

#include "qstack/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qstack {

namespace {

constexpr int kIpIterationCap = 200;
constexpr int kPivotCap = 10000;
constexpr double kGapTol = 1e-10;

// Dense SPD solve via Cholesky; M is m x m row-major, overwritten.
bool cholesky_solve(int m, std::vector<double>& M, double* rhs) {
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      double s = M[i * m + j];
      for (int k = 0; k < i; ++k) s -= M[i * m + k] * M[j * m + k];
      if (i == j) {
        if (s <= 0.0) return false;
        M[i * m + i] = std::sqrt(s);
      } else {
        M[j * m + i] = s / M[i * m + i];
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    double s = rhs[i];
    for (int k = 0; k < i; ++k) s -= M[i * m + k] * rhs[k];
    rhs[i] = s / M[i * m + i];
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = rhs[i];
    for (int k = i + 1; k < m; ++k) s -= M[k * m + i] * rhs[k];
    rhs[i] = s / M[i * m + i];
  }
  return true;
}

// General m x m solve with partial pivoting. Returns false when singular.
bool dense_solve(int m, std::vector<double> A, std::vector<double>& x) {
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int row = col + 1; row < m; ++row)
      if (std::abs(A[row * m + col]) > std::abs(A[piv * m + col])) piv = row;
    if (std::abs(A[piv * m + col]) < 1e-300) return false;
    if (piv != col) {
      for (int j = 0; j < m; ++j) std::swap(A[col * m + j], A[piv * m + j]);
      std::swap(x[col], x[piv]);
    }
    for (int row = col + 1; row < m; ++row) {
      const double f = A[row * m + col] / A[col * m + col];
      if (f == 0.0) continue;
      for (int j = col; j < m; ++j) A[row * m + j] -= f * A[col * m + j];
      x[row] -= f * x[col];
    }
  }
  for (int i = m - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < m; ++j) s -= A[i * m + j] * x[j];
    x[i] = s / A[i * m + i];
  }
  return true;
}

struct QrProblem {
  // Row-major N x m design (intercept column included), standardized.
  std::vector<double> X;
  std::vector<double> y;
  int N = 0;
  int m = 0;
  double alpha = 0.5;

  // Optional aggregates of observations whose residual sign is held fixed:
  // column sums of the rows pinned above (fix_pos) and below (fix_neg) the
  // fit. They contribute linearly to the objective, so the pivoting only
  // needs their summed gradient.
  std::vector<double> fix_pos;
  std::vector<double> fix_neg;

  const double* row(int i) const { return X.data() + i * m; }
};

double problem_objective(const QrProblem& p, const std::vector<double>& b) {
  double obj = 0.0;
  for (int i = 0; i < p.N; ++i) {
    double pred = 0.0;
    const double* x = p.row(i);
    for (int j = 0; j < p.m; ++j) pred += x[j] * b[j];
    obj += pinball(p.y[i], pred, p.alpha);
  }
  return obj;
}

// Mehrotra predictor-corrector on the bounded dual
//   max y'a  s.t.  X'a = (1-alpha) X'1,  0 <= a <= 1;
// the equality multipliers are the regression coefficients.
std::vector<double> interior_point(const QrProblem& p) {
  const int N = p.N;
  const int m = p.m;
  const double alpha = p.alpha;

  std::vector<double> c(N);  // min c'x with c = -y
  for (int i = 0; i < N; ++i) c[i] = -p.y[i];

  std::vector<double> bvec(m, 0.0);  // (1-alpha) X'1
  for (int i = 0; i < N; ++i) {
    const double* row = p.row(i);
    for (int j = 0; j < m; ++j) bvec[j] += row[j];
  }
  for (int j = 0; j < m; ++j) bvec[j] *= (1.0 - alpha);

  std::vector<double> x(N, 1.0 - alpha), s(N, alpha);
  std::vector<double> z(N), w(N), beta(m, 0.0);

  // beta0 from least squares of c on the design rows.
  {
    std::vector<double> M(m * m, 0.0), rhs(m, 0.0);
    for (int i = 0; i < N; ++i) {
      const double* row = p.row(i);
      for (int j = 0; j < m; ++j) {
        rhs[j] += row[j] * c[i];
        for (int k = j; k < m; ++k) M[j * m + k] += row[j] * row[k];
      }
    }
    for (int j = 0; j < m; ++j) M[j * m + j] += 1e-10 * (1.0 + M[j * m + j]);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < j; ++k) M[j * m + k] = M[k * m + j];
    std::vector<double> Mc = M;
    if (cholesky_solve(m, Mc, rhs.data())) beta = rhs;
  }
  double cscale = 0.0;
  for (int i = 0; i < N; ++i) cscale += std::abs(c[i]);
  cscale = cscale / N + 1.0;
  const double eps0 = 1e-4 * cscale;
  for (int i = 0; i < N; ++i) {
    double rd = c[i];
    const double* row = p.row(i);
    for (int j = 0; j < m; ++j) rd -= row[j] * beta[j];
    z[i] = std::max(rd, 0.0) + eps0;
    w[i] = std::max(-rd, 0.0) + eps0;
  }

  std::vector<double> theta(N), rhs1(N), rp(m), ru(N), rd(N);
  std::vector<double> M(m * m), Mfac(m * m), dbeta(m), dbeta_c(m);
  std::vector<double> dx(N), ds(N), dz(N), dw(N);
  std::vector<double> dx_a(N), ds_a(N), dz_a(N), dw_a(N);

  for (int iter = 0; iter < kIpIterationCap; ++iter) {
    // Residuals and duality gap.
    std::fill(rp.begin(), rp.end(), 0.0);
    double primal_obj = 0.0, dual_obj = 0.0;
    for (int i = 0; i < N; ++i) {
      const double* row = p.row(i);
      for (int j = 0; j < m; ++j) rp[j] += row[j] * x[i];
      primal_obj += c[i] * x[i];
      dual_obj -= w[i];
      ru[i] = 1.0 - x[i] - s[i];
      double d = c[i];
      for (int j = 0; j < m; ++j) d -= row[j] * beta[j];
      rd[i] = d - z[i] + w[i];
    }
    for (int j = 0; j < m; ++j) {
      dual_obj += bvec[j] * beta[j];
      rp[j] = bvec[j] - rp[j];
    }
    const double gap_abs = std::abs(primal_obj - dual_obj);
    if (gap_abs <= kGapTol * (1.0 + std::abs(primal_obj))) break;

    double gap = 0.0;
    for (int i = 0; i < N; ++i) gap += x[i] * z[i] + s[i] * w[i];
    const double mu = gap / (2.0 * N);

    for (int i = 0; i < N; ++i)
      theta[i] = 1.0 / (z[i] / x[i] + w[i] / s[i]);

    auto solve_direction = [&](const std::vector<double>& rxz_over_x,
                               const std::vector<double>& rsw_over_s,
                               std::vector<double>& out_dbeta,
                               std::vector<double>& out_dx,
                               std::vector<double>& out_ds,
                               std::vector<double>& out_dz,
                               std::vector<double>& out_dw, bool factorize) {
      for (int i = 0; i < N; ++i)
        rhs1[i] = rd[i] - rxz_over_x[i] + rsw_over_s[i] -
                  (w[i] / s[i]) * ru[i];
      std::vector<double> rhs(m);
      for (int j = 0; j < m; ++j) rhs[j] = rp[j];
      for (int i = 0; i < N; ++i) {
        const double tv = theta[i] * rhs1[i];
        const double* row = p.row(i);
        for (int j = 0; j < m; ++j) rhs[j] += row[j] * tv;
      }
      if (factorize) {
        std::fill(M.begin(), M.end(), 0.0);
        for (int i = 0; i < N; ++i) {
          const double* row = p.row(i);
          const double t = theta[i];
          for (int j = 0; j < m; ++j) {
            const double tj = t * row[j];
            for (int k = j; k < m; ++k) M[j * m + k] += tj * row[k];
          }
        }
        for (int j = 0; j < m; ++j)
          M[j * m + j] += 1e-13 * (1.0 + M[j * m + j]);
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < j; ++k) M[j * m + k] = M[k * m + j];
        Mfac = M;
      }
      std::vector<double> fac = Mfac;
      if (!cholesky_solve(m, fac, rhs.data()))
        throw std::runtime_error("quantile regression: normal matrix singular");
      out_dbeta = rhs;
      for (int i = 0; i < N; ++i) {
        double ad = 0.0;
        const double* row = p.row(i);
        for (int j = 0; j < m; ++j) ad += row[j] * out_dbeta[j];
        out_dx[i] = theta[i] * (ad - rhs1[i]);
        out_ds[i] = ru[i] - out_dx[i];
        out_dz[i] = rxz_over_x[i] - (z[i] / x[i]) * out_dx[i];
        out_dw[i] = rsw_over_s[i] - (w[i] / s[i]) * out_ds[i];
      }
    };

    // Affine direction: complementarity targets are zero.
    std::vector<double> rxz_over_x(N), rsw_over_s(N);
    for (int i = 0; i < N; ++i) {
      rxz_over_x[i] = -z[i];
      rsw_over_s[i] = -w[i];
    }
    solve_direction(rxz_over_x, rsw_over_s, dbeta, dx_a, ds_a, dz_a, dw_a,
                    true);

    auto max_step = [&](const std::vector<double>& v,
                        const std::vector<double>& dv) {
      double a = 1.0;
      for (int i = 0; i < N; ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
      return a;
    };
    const double ap_aff =
        std::min(max_step(x, dx_a), max_step(s, ds_a));
    const double ad_aff =
        std::min(max_step(z, dz_a), max_step(w, dw_a));

    double gap_aff = 0.0;
    for (int i = 0; i < N; ++i) {
      gap_aff += (x[i] + ap_aff * dx_a[i]) * (z[i] + ad_aff * dz_a[i]);
      gap_aff += (s[i] + ap_aff * ds_a[i]) * (w[i] + ad_aff * dw_a[i]);
    }
    double sigma = gap_aff / gap;
    sigma = sigma * sigma * sigma;

    // Corrector reuses the factorization.
    const double target = sigma * mu;
    for (int i = 0; i < N; ++i) {
      rxz_over_x[i] = (target - dx_a[i] * dz_a[i]) / x[i] - z[i];
      rsw_over_s[i] = (target - ds_a[i] * dw_a[i]) / s[i] - w[i];
    }
    solve_direction(rxz_over_x, rsw_over_s, dbeta_c, dx, ds, dz, dw, false);

    const double ap = 0.9995 * std::min(max_step(x, dx), max_step(s, ds));
    const double ad = 0.9995 * std::min(max_step(z, dz), max_step(w, dw));
    for (int i = 0; i < N; ++i) {
      x[i] += ap * dx[i];
      s[i] += ap * ds[i];
      z[i] += ad * dz[i];
      w[i] += ad * dw[i];
    }
    for (int j = 0; j < m; ++j) beta[j] += ad * dbeta_c[j];
  }
  return beta;
}

// Exact vertex finish: primal pivoting on the pinball objective starting
// from a basis of near-interpolated observations, or from a caller-supplied
// basis (typically the optimal vertex of a nearby alpha). Zero-derivative
// edges are resolved as if alpha were nudged down, which lands degenerate
// faces on the inf-quantile vertex; that stationary vertex is independent of
// the starting point. On return io_basis, when given, holds the final basis.
std::vector<double> vertex_polish(const QrProblem& p, std::vector<double> b,
                                  std::vector<int>* io_basis = nullptr) {
  const int N = p.N;
  const int m = p.m;
  const double alpha = p.alpha;

  // Residuals below this are treated as exact kinks; without it, rounding
  // noise on interpolated observations flips their sign classification and
  // the pivoting can cycle through zero-length steps.
  double yabs = 0.0;
  for (int i = 0; i < N; ++i) yabs += std::abs(p.y[i]);
  const double ztol = 1e-11 * (yabs / N + 1.0);

  std::vector<double> resid(N);
  auto compute_residuals = [&]() {
    for (int i = 0; i < N; ++i) {
      double pred = 0.0;
      const double* x = p.row(i);
      for (int j = 0; j < m; ++j) pred += x[j] * b[j];
      resid[i] = p.y[i] - pred;
    }
  };

  std::vector<int> basis;
  if (io_basis && static_cast<int>(io_basis->size()) == m) {
    basis = *io_basis;
  } else {
    compute_residuals();

    // Greedy basis selection by |residual| with rank checks.
    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int bb) {
      const double ra = std::abs(resid[a]), rb = std::abs(resid[bb]);
      if (ra != rb) return ra < rb;
      return a < bb;
    });
    std::vector<std::vector<double>> ortho;
    for (int idx : order) {
      if (static_cast<int>(basis.size()) == m) break;
      std::vector<double> v(p.row(idx), p.row(idx) + m);
      double norm0 = 0.0;
      for (double t : v) norm0 += t * t;
      for (const auto& u : ortho) {
        double d = 0.0;
        for (int j = 0; j < m; ++j) d += u[j] * v[j];
        for (int j = 0; j < m; ++j) v[j] -= d * u[j];
      }
      double norm = 0.0;
      for (double t : v) norm += t * t;
      if (norm > 1e-18 * (norm0 + 1.0)) {
        const double inv = 1.0 / std::sqrt(norm);
        for (double& t : v) t *= inv;
        ortho.push_back(std::move(v));
        basis.push_back(idx);
      }
    }
    if (static_cast<int>(basis.size()) < m)
      throw std::runtime_error(
          "quantile regression: design is rank deficient after column pruning");
  }

  auto solve_basis = [&]() {
    std::vector<double> A(m * m);
    std::vector<double> rhs(m);
    for (int bi = 0; bi < m; ++bi) {
      const double* x = p.row(basis[bi]);
      for (int j = 0; j < m; ++j) A[bi * m + j] = x[j];
      rhs[bi] = p.y[basis[bi]];
    }
    if (!dense_solve(m, std::move(A), rhs))
      throw std::runtime_error("quantile regression: singular basis");
    b = rhs;
  };

  // Columns of X_B^{-1}, refreshed on every basis change; column hi is the
  // coefficient ray freeing basis row hi.
  std::vector<double> binv(static_cast<std::size_t>(m) * m);
  auto compute_inverse = [&]() {
    for (int h = 0; h < m; ++h) {
      std::vector<double> A(static_cast<std::size_t>(m) * m);
      std::vector<double> rhs(m, 0.0);
      for (int bi = 0; bi < m; ++bi) {
        const double* x = p.row(basis[bi]);
        for (int j = 0; j < m; ++j) A[bi * m + j] = x[j];
      }
      rhs[h] = 1.0;
      if (!dense_solve(m, std::move(A), rhs))
        throw std::runtime_error("quantile regression: singular basis");
      for (int j = 0; j < m; ++j) binv[j * m + h] = rhs[j];
    }
  };

  std::vector<char> is_basic(N, 0);
  auto refresh_state = [&]() {
    solve_basis();
    compute_residuals();
    std::fill(is_basic.begin(), is_basic.end(), 0);
    for (int idx : basis) {
      resid[idx] = 0.0;
      is_basic[idx] = 1;
    }
    compute_inverse();
  };
  refresh_state();

  std::vector<double> g(N);
  std::vector<std::pair<double, int>> breaks;
  int hi_start = 0;

  for (int pivot = 0; pivot < kPivotCap; ++pivot) {
    bool moved = false;
    for (int hs = 0; hs < m && !moved; ++hs) {
      // Resume the edge scan at the last pivoted row; successive pivots of a
      // parametric sweep tend to reuse the same ray.
      const int hi = (hi_start + hs) % m;

      // One pass yields the directional pieces for both edge signs: the
      // linear part flips with the sign while the kink terms do not.
      double lin = 0.0, kink_pos = 0.0, kink_neg = 0.0;
      double gscale = 0.0, dsum = 0.0;
      const double* dir = binv.data();
      for (int i = 0; i < N; ++i) {
        const double* x = p.row(i);
        double gi = 0.0;
        for (int j = 0; j < m; ++j) gi += x[j] * dir[j * m + hi];
        g[i] = gi;
        gscale += std::abs(gi);
        dsum += gi;
      }
      if (!p.fix_pos.empty()) {
        double gp = 0.0, gm = 0.0;
        for (int j = 0; j < m; ++j) {
          gp += p.fix_pos[j] * dir[j * m + hi];
          gm += p.fix_neg[j] * dir[j * m + hi];
        }
        lin += -alpha * gp - (alpha - 1.0) * gm;
        dsum += gp + gm;
        gscale += std::abs(gp) + std::abs(gm);
      }
      for (int i = 0; i < N; ++i) {
        if (is_basic[i] && i != basis[hi]) continue;
        const double gi = g[i];
        const double r = is_basic[i] ? 0.0 : resid[i];
        if (r > ztol) {
          lin += -alpha * gi;
        } else if (r < -ztol) {
          lin += -(alpha - 1.0) * gi;
        } else {
          const double a = std::abs(gi);
          kink_pos += a * (gi > 0.0 ? (1.0 - alpha) : alpha);
          kink_neg += a * (gi < 0.0 ? (1.0 - alpha) : alpha);
        }
      }
      const double tol = 1e-9 * (gscale + 1.0);

      for (int sgn = 0; sgn < 2 && !moved; ++sgn) {
        const double sigma = sgn == 0 ? 1.0 : -1.0;
        const double deriv = sgn == 0 ? lin + kink_pos : -lin + kink_neg;
        const bool descend = deriv < -tol;
        bool flat_improving = false;
        if (!descend && std::abs(deriv) <= tol) {
          // Improving for alpha - eps iff the derivative falls as alpha does.
          flat_improving = sigma * dsum < -tol;
        }
        if (!descend && !flat_improving) continue;

        // Breakpoints where a nonbasic residual crosses zero along the ray;
        // kink-resident points already contribute to the derivative at t=0.
        breaks.clear();
        for (int i = 0; i < N; ++i) {
          if (is_basic[i] || std::abs(resid[i]) <= ztol) continue;
          const double gs = sigma * g[i];
          if (gs == 0.0) continue;
          const double t = resid[i] / gs;
          if (t > 0.0) breaks.emplace_back(t, i);
        }
        if (breaks.empty()) continue;  // unbounded flat edge; skip

        int enter = -1;
        if (descend) {
          // Heap selection: only the first few breakpoints are usually
          // consumed before the derivative turns nonnegative.
          std::make_heap(breaks.begin(), breaks.end(), std::greater<>());
          auto heap_end = breaks.end();
          double d = deriv;
          while (heap_end != breaks.begin()) {
            std::pop_heap(breaks.begin(), heap_end, std::greater<>());
            --heap_end;
            d += std::abs(g[heap_end->second]);
            enter = heap_end->second;
            if (d >= 0.0) break;
          }
        } else {
          // Flat face: nearest vertex.
          enter = std::min_element(breaks.begin(), breaks.end())->second;
        }
        if (enter < 0) continue;

        basis[hi] = enter;
        refresh_state();
        hi_start = hi;
        moved = true;
      }
    }
    if (!moved) {
      if (io_basis) *io_basis = basis;
      return b;
    }
  }
  throw std::runtime_error(
      "quantile regression: pivot cap exceeded (alpha=" +
      std::to_string(alpha) + ")");
}

struct Standardizer {
  std::vector<double> mean, scale;  // per input feature
  double y_mean = 0.0, y_scale = 1.0;
};

QrProblem build_problem(const TrainingSet& train, double alpha,
                        Standardizer& st, std::vector<int>& keep_cols) {
  const int N = static_cast<int>(train.size());
  const int n = static_cast<int>(train.n_features);

  st.mean.assign(n, 0.0);
  st.scale.assign(n, 1.0);
  for (int i = 0; i < N; ++i) {
    const double* row = train.input_row(i);
    for (int j = 0; j < n; ++j) st.mean[j] += row[j];
  }
  for (int j = 0; j < n; ++j) st.mean[j] /= N;
  std::vector<double> var(n, 0.0);
  for (int i = 0; i < N; ++i) {
    const double* row = train.input_row(i);
    for (int j = 0; j < n; ++j) {
      const double d = row[j] - st.mean[j];
      var[j] += d * d;
    }
  }
  for (int j = 0; j < n; ++j) {
    const double sd = std::sqrt(var[j] / std::max(1, N - 1));
    st.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  double ysum = 0.0;
  for (double v : train.targets) ysum += v;
  st.y_mean = ysum / N;
  double yvar = 0.0;
  for (double v : train.targets) yvar += (v - st.y_mean) * (v - st.y_mean);
  st.y_scale = yvar > 0.0 ? std::sqrt(yvar / std::max(1, N - 1)) : 1.0;

  // Constant columns carry no information once the intercept is present.
  keep_cols.clear();
  for (int j = 0; j < n; ++j)
    if (var[j] > 0.0) keep_cols.push_back(j);

  QrProblem p;
  p.N = N;
  p.m = static_cast<int>(keep_cols.size()) + 1;
  p.alpha = alpha;
  p.X.resize(static_cast<std::size_t>(N) * p.m);
  p.y.resize(N);
  for (int i = 0; i < N; ++i) {
    double* dst = p.X.data() + static_cast<std::size_t>(i) * p.m;
    dst[0] = 1.0;
    const double* row = train.input_row(i);
    for (std::size_t cj = 0; cj < keep_cols.size(); ++cj) {
      const int j = keep_cols[cj];
      dst[cj + 1] = (row[j] - st.mean[j]) / st.scale[j];
    }
    p.y[i] = (train.targets[i] - st.y_mean) / st.y_scale;
  }
  return p;
}

// Drops columns that are linearly dependent on earlier ones (Gram-based
// Cholesky rank probe). keep_cols is updated in lockstep; the intercept
// column is always retained.
void prune_dependent_columns(QrProblem& p, std::vector<int>& keep_cols) {
  const int m = p.m;
  std::vector<double> G(m * m, 0.0);
  for (int i = 0; i < p.N; ++i) {
    const double* row = p.row(i);
    for (int j = 0; j < m; ++j)
      for (int k = j; k < m; ++k) G[j * m + k] += row[j] * row[k];
  }
  std::vector<double> L(m * m, 0.0);
  std::vector<int> kept;
  for (int j = 0; j < m; ++j) {
    double d = G[j * m + j];
    std::vector<double> lrow(kept.size());
    for (std::size_t ki = 0; ki < kept.size(); ++ki) {
      const int k = kept[ki];
      double s = G[std::min(j, k) * m + std::max(j, k)];
      for (std::size_t t = 0; t < ki; ++t)
        s -= L[j * m + kept[t]] * L[k * m + kept[t]];
      lrow[ki] = s / L[k * m + k];
      L[j * m + k] = lrow[ki];
      d -= lrow[ki] * lrow[ki];
    }
    if (d > 1e-12 * (G[j * m + j] + 1.0)) {
      L[j * m + j] = std::sqrt(d);
      kept.push_back(j);
    }
  }
  if (static_cast<int>(kept.size()) == m) return;

  std::vector<double> newX(static_cast<std::size_t>(p.N) * kept.size());
  for (int i = 0; i < p.N; ++i) {
    const double* src = p.row(i);
    double* dst = newX.data() + static_cast<std::size_t>(i) * kept.size();
    for (std::size_t cj = 0; cj < kept.size(); ++cj) dst[cj] = src[kept[cj]];
  }
  std::vector<int> new_keep;
  for (int j : kept)
    if (j > 0) new_keep.push_back(keep_cols[j - 1]);
  p.X = std::move(newX);
  p.m = static_cast<int>(kept.size());
  keep_cols = std::move(new_keep);
}

// IP warm start plus exact vertex finish, in standardized space. out_basis,
// when given, receives the row indices of the final vertex.
std::vector<double> solve_standardized(const QrProblem& p,
                                       std::vector<int>* out_basis = nullptr) {
  std::vector<double> b(p.m, 0.0);
  if (p.N > p.m) {
    std::vector<double> beta = interior_point(p);
    bool finite = true;
    for (double v : beta)
      if (!std::isfinite(v)) { finite = false; break; }
    if (finite) {
      // The dual multipliers carry a formulation-dependent sign.
      std::vector<double> neg(beta.size());
      for (std::size_t j = 0; j < beta.size(); ++j) neg[j] = -beta[j];
      b = problem_objective(p, beta) <= problem_objective(p, neg) ? beta : neg;
    }
  }
  if (out_basis) out_basis->clear();
  return vertex_polish(p, std::move(b), out_basis);
}

// Solves the problem at p.alpha by reusing the optimal vertex of a nearby
// alpha: only observations with small residuals there can change sides, so
// the pivoting runs on that subset while everything else is aggregated into
// the fixed-sign gradient vectors. The sign assumptions are verified against
// the full problem afterwards; on failure the subset is enlarged, and false
// is returned when no subset attempt verifies (caller falls back to the full
// solve).
bool solve_reduced(const QrProblem& p, const std::vector<double>& warm_b,
                   std::vector<int>& basis_orig, std::vector<double>& out_b) {
  const int N = p.N;
  const int m = p.m;

  std::vector<double> r(N);
  for (int i = 0; i < N; ++i) {
    const double* x = p.row(i);
    double pred = 0.0;
    for (int j = 0; j < m; ++j) pred += x[j] * warm_b[j];
    r[i] = p.y[i] - pred;
  }
  double yabs = 0.0;
  for (int i = 0; i < N; ++i) yabs += std::abs(p.y[i]);
  const double vtol = 1e-9 * (yabs / N + 1.0);

  std::vector<double> absr(N);
  std::vector<int> upos(N);
  std::vector<int> uidx;

  for (int k = std::max(40 * m, N / 16); k < N; k *= 4) {
    // tau is the k-th smallest |residual|; membership by value keeps the
    // subset independent of the selection algorithm's tie handling.
    for (int i = 0; i < N; ++i) absr[i] = std::abs(r[i]);
    std::nth_element(absr.begin(), absr.begin() + (k - 1), absr.end());
    const double tau = absr[k - 1];

    QrProblem pu;
    pu.m = m;
    pu.alpha = p.alpha;
    pu.fix_pos.assign(m, 0.0);
    pu.fix_neg.assign(m, 0.0);
    uidx.clear();
    std::fill(upos.begin(), upos.end(), -1);
    for (int i = 0; i < N; ++i) {
      const double* x = p.row(i);
      if (std::abs(r[i]) <= tau) {
        upos[i] = static_cast<int>(uidx.size());
        uidx.push_back(i);
        pu.X.insert(pu.X.end(), x, x + m);
        pu.y.push_back(p.y[i]);
      } else if (r[i] > 0.0) {
        for (int j = 0; j < m; ++j) pu.fix_pos[j] += x[j];
      } else {
        for (int j = 0; j < m; ++j) pu.fix_neg[j] += x[j];
      }
    }
    pu.N = static_cast<int>(uidx.size());

    // The warm vertex rows all have zero residual, hence sit in the subset.
    std::vector<int> basis_u(m);
    bool mapped = static_cast<int>(basis_orig.size()) == m;
    for (int bi = 0; mapped && bi < m; ++bi) {
      const int pos = upos[basis_orig[bi]];
      if (pos < 0) mapped = false;
      basis_u[bi] = pos;
    }
    if (!mapped) return false;

    std::vector<double> b;
    try {
      b = vertex_polish(pu, warm_b, &basis_u);
    } catch (const std::runtime_error&) {
      return false;
    }

    bool verified = true;
    for (int i = 0; i < N && verified; ++i) {
      if (upos[i] >= 0) continue;
      const double* x = p.row(i);
      double pred = 0.0;
      for (int j = 0; j < m; ++j) pred += x[j] * b[j];
      const double rn = p.y[i] - pred;
      verified = r[i] > 0.0 ? rn >= -vtol : rn <= vtol;
    }
    if (verified) {
      for (int bi = 0; bi < m; ++bi) basis_orig[bi] = uidx[basis_u[bi]];
      out_b = std::move(b);
      return true;
    }
  }
  return false;
}

}  // namespace

double pinball(double y, double q, double alpha) {
  return y >= q ? (y - q) * alpha : (y - q) * (alpha - 1.0);
}

CoefficientVector fit_qlr(const TrainingSet& train, double alpha) {
  if (train.size() == 0) throw std::invalid_argument("empty training set");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must be in (0, 1)");

  Standardizer st;
  std::vector<int> keep_cols;
  QrProblem p = build_problem(train, alpha, st, keep_cols);
  prune_dependent_columns(p, keep_cols);
  std::vector<double> b = solve_standardized(p);

  CoefficientVector out;
  out.alpha = alpha;
  out.a.assign(train.n_features, 0.0);
  double a0 = st.y_mean + st.y_scale * b[0];
  for (std::size_t cj = 0; cj < keep_cols.size(); ++cj) {
    const int j = keep_cols[cj];
    const double slope = st.y_scale * b[cj + 1] / st.scale[j];
    out.a[j] = slope;
    a0 -= slope * st.mean[j];
  }
  out.a0 = a0;
  return out;
}

double qlr_predict(const CoefficientVector& coeffs, const InputVector& query) {
  if (query.size() != coeffs.a.size())
    throw std::invalid_argument("query dimension mismatch");
  double v = coeffs.a0;
  for (std::size_t j = 0; j < query.size(); ++j) v += coeffs.a[j] * query[j];
  return v;
}

double qlr_objective(const TrainingSet& train,
                     const CoefficientVector& coeffs) {
  double obj = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double* row = train.input_row(i);
    double pred = coeffs.a0;
    for (std::size_t j = 0; j < train.n_features; ++j)
      pred += coeffs.a[j] * row[j];
    obj += pinball(train.targets[i], pred, coeffs.alpha);
  }
  return obj;
}

QuantileForecast qlr_quantiles(const TrainingSet& train,
                               const InputVector& query,
                               const QuantileGrid& grid, bool rearrange) {
  if (query.size() != train.n_features)
    throw std::invalid_argument("query dimension mismatch");

  // The standardized design is shared across the per-alpha fits.
  Standardizer st;
  std::vector<int> keep_cols;
  QrProblem p = build_problem(train, 0.5, st, keep_cols);
  prune_dependent_columns(p, keep_cols);

  std::vector<double> qx(p.m);
  qx[0] = 1.0;
  for (std::size_t cj = 0; cj < keep_cols.size(); ++cj) {
    const int j = keep_cols[cj];
    qx[cj + 1] = (query[j] - st.mean[j]) / st.scale[j];
  }

  QuantileForecast qf;
  qf.quantiles.resize(grid.size());

  // The optimal vertex is carried across the grid; small problems skip the
  // subset shortcut and solve each alpha in full.
  const bool reduce = p.N >= 80 * p.m + 800;
  std::vector<double> prev_b;
  std::vector<int> prev_basis;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    p.alpha = grid.probability(i);
    std::vector<double> b;
    if (!(reduce && !prev_b.empty() &&
          solve_reduced(p, prev_b, prev_basis, b)))
      b = solve_standardized(p, &prev_basis);
    prev_b = b;
    double pred = 0.0;
    for (int j = 0; j < p.m; ++j) pred += qx[j] * b[j];
    qf.quantiles[i] = st.y_mean + st.y_scale * pred;
  }
  return rearrange ? rearrange_quantiles(qf) : qf;
}

}  // namespace qstack
