#pragma once

#include <memory>
#include <span>
#include <vector>

namespace porogas {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Assembles from (row, col, value) entries; duplicates are summed in
    /// input order, so the result is deterministic for a given triplet list.
    static CsrMatrix from_triplets(int rows, int cols, std::span<const Triplet> entries);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// Entry (i, j), zero if not stored.
    double at(int i, int j) const;

    std::vector<double> multiply(std::span<const double> x) const;

    /// Frobenius norm.
    double norm() const;

    /// Largest |A_ij - A_ji|.
    double asymmetry() const;

    /// Replaces row and column `i` with the identity (for pinning a dof to 0).
    void pin_dof(int i);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

enum class Factorization {
    LU,    ///< general square systems
    LDLT,  ///< symmetric systems
};

/// A factorized matrix reusable across right-hand sides.
class DirectSolver {
public:
    DirectSolver();
    DirectSolver(const CsrMatrix& A, Factorization kind);
    ~DirectSolver();
    DirectSolver(DirectSolver&&) noexcept;
    DirectSolver& operator=(DirectSolver&&) noexcept;

    /// Throws SolverError if the matrix is structurally or numerically singular.
    void factorize(const CsrMatrix& A, Factorization kind);
    bool ready() const;
    int size() const;

    std::vector<double> solve(std::span<const double> b) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot LU solve.
std::vector<double> solve_direct(const CsrMatrix& A, std::span<const double> b);

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. Stops when
/// ||b - Ax|| <= tol * ||b||; throws SolverError if maxit is exceeded.
CgResult solve_cg(const CsrMatrix& A, std::span<const double> b, double tol, int maxit);

double norm2(std::span<const double> x);

}  // namespace porogas
