#pragma once

#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace swingid::linalg {

/// Dense row-major matrix of doubles. Small sizes only; no view semantics.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }
    Matrix(int rows, int cols, std::initializer_list<double> values) : Matrix(rows, cols) {
        if (static_cast<int>(values.size()) != rows * cols)
            throw std::invalid_argument("Matrix: initializer size mismatch");
        std::copy(values.begin(), values.end(), data_.begin());
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Copy of the columns listed in `indices`, in the given order.
    Matrix select_columns(const std::vector<int>& indices) const;

    std::vector<double> column(int c) const;

    bool operator==(const Matrix& other) const = default;

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

double norm2(const std::vector<double>& v);
double norm1(const std::vector<double>& v);
double norm_inf(const std::vector<double>& v);

struct LeastSquaresResult {
    std::vector<double> x;
    double residual = 0.0;  // ||y - A x||_2
};

/// Minimum-residual solution of an overdetermined full-column-rank system
/// via Householder orthogonalization. Throws std::runtime_error when a
/// triangular diagonal falls below 1e-12 relative to the largest one.
LeastSquaresResult least_squares(const Matrix& a, const std::vector<double>& y);

/// Smallest singular value computed by cyclic one-sided orthogonalization
/// of the columns. Requires rows >= cols. Deterministic.
double smallest_singular_value(const Matrix& a);

struct RankRevealResult {
    std::vector<int> kept;          // original column indices, ascending
    std::vector<double> pivot_diag; // |R_kk| per pivot step, non-increasing
};

/// Column-pivoted Householder factorization. Keeps pivot columns whose
/// triangular diagonal magnitude exceeds tol_rank times the largest.
RankRevealResult rank_revealing_columns(const Matrix& a, double tol_rank);

}  // namespace swingid::linalg
