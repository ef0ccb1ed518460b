#pragma once

// Independent reference computations used only by the test suites. Nothing
// here may call into the code paths it is checking.

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "ctlearn/core.hpp"
#include "ctlearn/projector.hpp"

namespace oracles {

// Explicit dense matrix of a linear operator, assembled column by column by
// applying the operator to canonical basis vectors. Row-major [range x domain].
template <typename T>
std::vector<double> dense_matrix(const ctlearn::LinearOperator<T>& op) {
    const std::size_t n = ctlearn::numel(op.domain);
    const std::size_t m = ctlearn::numel(op.range);
    std::vector<double> mat(m * n, 0.0);
    std::vector<T> e(n, T(0)), col(m);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = T(1);
        op.apply(std::span<const T>(e), std::span<T>(col));
        for (std::size_t i = 0; i < m; ++i) mat[i * n + j] = static_cast<double>(col[i]);
        e[j] = T(0);
    }
    return mat;
}

inline std::vector<double> matvec(const std::vector<double>& mat, std::size_t rows, std::size_t cols,
                                  std::span<const double> x) {
    std::vector<double> y(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += mat[i * cols + j] * x[j];
        y[i] = acc;
    }
    return y;
}

inline std::vector<double> matvec_transpose(const std::vector<double>& mat, std::size_t rows,
                                            std::size_t cols, std::span<const double> y) {
    std::vector<double> x(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) x[j] += mat[i * cols + j] * y[i];
    return x;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(std::span<const double>)>& f, std::vector<double> params,
    double step = 1e-4) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + step;
        const double fp = f(params);
        params[i] = keep - step;
        const double fm = f(params);
        params[i] = keep;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    return grad;
}

// Largest relative elementwise deviation between an analytic gradient and
// its finite-difference counterpart. The denominator is floored at a small
// fraction of the gradient magnitude so near-zero entries do not blow up.
inline double max_relative_error(std::span<const double> analytic, std::span<const double> reference) {
    double scale = 0.0;
    for (double v : reference) scale = std::max(scale, std::fabs(v));
    const double floor = std::max(scale * 1e-4, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max(std::fabs(reference[i]), floor);
        worst = std::max(worst, std::fabs(analytic[i] - reference[i]) / denom);
    }
    return worst;
}

// Golden-section minimizer for smooth scalar functions on [lo, hi].
inline double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                                      double tol = 1e-12) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Exact 1-d total-variation denoising,
//   min_u 1/2 sum (u_i - g_i)^2 + lambda sum |u_{i+1} - u_i|,
// by the taut-string construction: the solution is the difference sequence
// of the shortest path through the tube of half-width lambda around the
// cumulative sums, with both endpoints pinned. The string is pulled
// greedily: scan forward keeping the window of feasible slopes from the
// current pin; when it collapses, the string bends at the wall that set the
// violated bound.
inline std::vector<double> taut_string_tv(std::span<const double> g, double lambda) {
    const int n = static_cast<int>(g.size());
    std::vector<double> u(n);
    if (n == 0) return u;
    if (n == 1 || lambda <= 0.0) {
        for (int i = 0; i < n; ++i) u[i] = g[i];
        return u;
    }
    std::vector<double> lo(n + 1), hi(n + 1), s(n + 1);
    lo[0] = hi[0] = 0.0;
    double run = 0.0;
    for (int k = 1; k <= n; ++k) {
        run += g[k - 1];
        lo[k] = run - lambda;
        hi[k] = run + lambda;
    }
    lo[n] = hi[n] = run;
    s[0] = 0.0;
    int a = 0;
    double ya = 0.0;
    while (a < n) {
        double smin = -std::numeric_limits<double>::infinity();
        double smax = std::numeric_limits<double>::infinity();
        int jmin = -1, jmax = -1;
        int touch = -1;
        double ytouch = 0.0;
        for (int j = a + 1; j <= n; ++j) {
            const double slo = (lo[j] - ya) / (j - a);
            const double shi = (hi[j] - ya) / (j - a);
            if (slo > smax) {
                touch = jmax;
                ytouch = hi[jmax];
                break;
            }
            if (shi < smin) {
                touch = jmin;
                ytouch = lo[jmin];
                break;
            }
            if (slo > smin) {
                smin = slo;
                jmin = j;
            }
            if (shi < smax) {
                smax = shi;
                jmax = j;
            }
            if (j == n) {
                touch = n;
                ytouch = lo[n];
            }
        }
        const double slope = (ytouch - ya) / (touch - a);
        for (int j = a + 1; j <= touch; ++j) s[j] = ya + slope * (j - a);
        a = touch;
        ya = ytouch;
    }
    for (int i = 0; i < n; ++i) u[i] = s[i + 1] - s[i];
    return u;
}

// Second, fully independent route to the same problem: coordinate descent
// on the dual box QP  min_z 1/2 ||D^T z||^2 - <z, D g>, |z_i| <= lambda,
// u = g - D^T z. Strong convexity makes plain cyclic sweeps converge; the
// returned iterate is optimal to well below the tolerances the solver
// tests use. Used to cross-check taut_string_tv.
inline std::vector<double> dual_cd_tv(std::span<const double> g, double lambda, int sweeps = 200000) {
    const int n = static_cast<int>(g.size());
    std::vector<double> u(g.begin(), g.end());
    if (n <= 1 || lambda <= 0.0) return u;
    const int m = n - 1;
    std::vector<double> z(m, 0.0), c(m);
    for (int i = 0; i < m; ++i) c[i] = g[i + 1] - g[i];
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double max_change = 0.0;
        for (int i = 0; i < m; ++i) {
            const double left = i > 0 ? z[i - 1] : 0.0;
            const double right = i + 1 < m ? z[i + 1] : 0.0;
            double zi = (c[i] + left + right) / 2.0;
            zi = std::clamp(zi, -lambda, lambda);
            max_change = std::max(max_change, std::fabs(zi - z[i]));
            z[i] = zi;
        }
        if (max_change < 1e-15) break;
    }
    for (int i = 0; i < n; ++i) {
        const double left = i > 0 ? z[i - 1] : 0.0;
        const double right = i < m ? z[i] : 0.0;
        u[i] = g[i] - (left - right);
    }
    return u;
}

}  // namespace oracles
