#include "swingid/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swingid::linalg {

namespace {

constexpr double kRankTol = 1e-12;  // relative triangular-diagonal cutoff

// In-place Householder QR of `a` (m x n, m >= n). Returns the reflector
// scalars; reflectors live below the diagonal of `a`.
std::vector<double> householder_qr(Matrix& a) {
    const int m = a.rows();
    const int n = a.cols();
    std::vector<double> tau(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < m; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        double alpha = a(k, k) >= 0.0 ? -norm : norm;
        double v0 = a(k, k) - alpha;
        a(k, k) = alpha;
        // Normalized so the reflector is I - tau * v v^T with v(k) = 1.
        for (int i = k + 1; i < m; ++i) a(i, k) /= v0;
        tau[k] = -v0 / alpha;
        for (int j = k + 1; j < n; ++j) {
            double dot = a(k, j);
            for (int i = k + 1; i < m; ++i) dot += a(i, k) * a(i, j);
            dot *= tau[k];
            a(k, j) -= dot;
            for (int i = k + 1; i < m; ++i) a(i, j) -= dot * a(i, k);
        }
    }
    return tau;
}

void apply_reflectors(const Matrix& qr, const std::vector<double>& tau, std::vector<double>& y) {
    const int m = qr.rows();
    const int n = qr.cols();
    for (int k = 0; k < n; ++k) {
        if (tau[k] == 0.0) continue;
        double dot = y[k];
        for (int i = k + 1; i < m; ++i) dot += qr(i, k) * y[i];
        dot *= tau[k];
        y[k] -= dot;
        for (int i = k + 1; i < m; ++i) y[i] -= dot * qr(i, k);
    }
}

}  // namespace

Matrix Matrix::select_columns(const std::vector<int>& indices) const {
    Matrix out(rows_, static_cast<int>(indices.size()));
    for (int j = 0; j < out.cols(); ++j) {
        const int src = indices[static_cast<size_t>(j)];
        if (src < 0 || src >= cols_) throw std::out_of_range("select_columns: index out of range");
        for (int i = 0; i < rows_; ++i) out(i, j) = (*this)(i, src);
    }
    return out;
}

std::vector<double> Matrix::column(int c) const {
    std::vector<double> out(static_cast<size_t>(rows_));
    for (int i = 0; i < rows_; ++i) out[static_cast<size_t>(i)] = (*this)(i, c);
    return out;
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != a.cols()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(static_cast<size_t>(a.rows()), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * x[static_cast<size_t>(j)];
        y[static_cast<size_t>(i)] = acc;
    }
    return y;
}

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double e : v) acc += e * e;
    return std::sqrt(acc);
}

double norm1(const std::vector<double>& v) {
    double acc = 0.0;
    for (double e : v) acc += std::abs(e);
    return acc;
}

double norm_inf(const std::vector<double>& v) {
    double acc = 0.0;
    for (double e : v) acc = std::max(acc, std::abs(e));
    return acc;
}

LeastSquaresResult least_squares(const Matrix& a, const std::vector<double>& y) {
    const int m = a.rows();
    const int n = a.cols();
    if (m < n) throw std::invalid_argument("least_squares: requires rows >= cols");
    if (static_cast<int>(y.size()) != m) throw std::invalid_argument("least_squares: rhs size mismatch");
    if (n == 0) return {{}, norm2(y)};

    Matrix qr = a;
    std::vector<double> tau = householder_qr(qr);

    double dmax = 0.0;
    for (int k = 0; k < n; ++k) dmax = std::max(dmax, std::abs(qr(k, k)));
    for (int k = 0; k < n; ++k) {
        if (std::abs(qr(k, k)) <= kRankTol * dmax)
            throw std::runtime_error("least_squares: rank-deficient system (diagonal " + std::to_string(k) + ")");
    }

    std::vector<double> qty = y;
    apply_reflectors(qr, tau, qty);

    LeastSquaresResult result;
    result.x.assign(static_cast<size_t>(n), 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double acc = qty[static_cast<size_t>(k)];
        for (int j = k + 1; j < n; ++j) acc -= qr(k, j) * result.x[static_cast<size_t>(j)];
        result.x[static_cast<size_t>(k)] = acc / qr(k, k);
    }
    double res = 0.0;
    for (int i = n; i < m; ++i) res += qty[static_cast<size_t>(i)] * qty[static_cast<size_t>(i)];
    result.residual = std::sqrt(res);
    return result;
}

double smallest_singular_value(const Matrix& a) {
    const int m = a.rows();
    const int n = a.cols();
    if (m < n) throw std::invalid_argument("smallest_singular_value: requires rows >= cols");
    if (n == 0) return 0.0;

    // One-sided cyclic orthogonalization: rotate column pairs until all are
    // mutually orthogonal; the singular values are the final column norms.
    Matrix w = a;
    constexpr int kMaxSweeps = 64;
    constexpr double kOrthTol = 1e-14;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool converged = true;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m; ++i) {
                    app += w(i, p) * w(i, p);
                    aqq += w(i, q) * w(i, q);
                    apq += w(i, p) * w(i, q);
                }
                if (std::abs(apq) <= kOrthTol * std::sqrt(app * aqq)) continue;
                converged = false;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < m; ++i) {
                    const double wp = w(i, p);
                    const double wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
            }
        }
        if (converged) break;
    }
    double smin = -1.0;
    for (int j = 0; j < n; ++j) {
        double norm = 0.0;
        for (int i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
        norm = std::sqrt(norm);
        if (smin < 0.0 || norm < smin) smin = norm;
    }
    return smin;
}

RankRevealResult rank_revealing_columns(const Matrix& a, double tol_rank) {
    if (tol_rank <= 0.0) throw std::invalid_argument("rank_revealing_columns: tol_rank must be positive");
    const int m = a.rows();
    const int n = a.cols();
    Matrix w = a;
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> colnorm(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += w(i, j) * w(i, j);
        colnorm[static_cast<size_t>(j)] = acc;
    }

    RankRevealResult result;
    const int steps = std::min(m, n);
    for (int k = 0; k < steps; ++k) {
        // Recompute trailing norms each step; at these sizes exactness
        // beats the classical downdating shortcut.
        int best = k;
        for (int j = k; j < n; ++j) {
            double acc = 0.0;
            for (int i = k; i < m; ++i) acc += w(i, j) * w(i, j);
            colnorm[static_cast<size_t>(j)] = acc;
            if (acc > colnorm[static_cast<size_t>(best)]) best = j;
        }
        if (best != k) {
            for (int i = 0; i < m; ++i) std::swap(w(i, k), w(i, best));
            std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(best)]);
            std::swap(colnorm[static_cast<size_t>(k)], colnorm[static_cast<size_t>(best)]);
        }
        double norm = std::sqrt(colnorm[static_cast<size_t>(k)]);
        result.pivot_diag.push_back(norm);
        if (norm == 0.0) break;
        double alpha = w(k, k) >= 0.0 ? -norm : norm;
        double v0 = w(k, k) - alpha;
        w(k, k) = alpha;
        for (int i = k + 1; i < m; ++i) w(i, k) /= v0;
        const double tau = -v0 / alpha;
        for (int j = k + 1; j < n; ++j) {
            double dot = w(k, j);
            for (int i = k + 1; i < m; ++i) dot += w(i, k) * w(i, j);
            dot *= tau;
            w(k, j) -= dot;
            for (int i = k + 1; i < m; ++i) w(i, j) -= dot * w(i, k);
        }
    }

    const double dmax = result.pivot_diag.empty() ? 0.0 : result.pivot_diag.front();
    for (size_t k = 0; k < result.pivot_diag.size(); ++k) {
        if (result.pivot_diag[k] > tol_rank * dmax && result.pivot_diag[k] > 0.0)
            result.kept.push_back(perm[k]);
    }
    std::sort(result.kept.begin(), result.kept.end());
    return result;
}

}  // namespace swingid::linalg
