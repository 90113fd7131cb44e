#include "porogas/linalg.hpp"

#include "porogas/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace porogas {

CsrMatrix CsrMatrix::from_triplets(int rows, int cols, std::span<const Triplet> entries) {
    if (rows < 0 || cols < 0) {
        throw SolverError("negative matrix dimension");
    }
    CsrMatrix A;
    A.rows_ = rows;
    A.cols_ = cols;

    std::vector<int> count(rows + 1, 0);
    for (const auto& t : entries) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
            throw SolverError("triplet index out of range");
        }
        ++count[t.row + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());

    // bucket by row keeping input order, then stable-sort each row by column
    std::vector<int> order(entries.size());
    std::vector<int> fill(count.begin(), count.end() - 1);
    for (int n = 0; n < static_cast<int>(entries.size()); ++n) {
        order[fill[entries[n].row]++] = n;
    }
    A.row_ptr_.assign(rows + 1, 0);
    A.col_idx_.reserve(entries.size());
    A.values_.reserve(entries.size());
    for (int i = 0; i < rows; ++i) {
        auto first = order.begin() + count[i];
        auto last = order.begin() + count[i + 1];
        std::stable_sort(first, last,
                         [&](int a, int b) { return entries[a].col < entries[b].col; });
        for (auto it = first; it != last; ++it) {
            const auto& t = entries[*it];
            if (!A.col_idx_.empty() && static_cast<int>(A.col_idx_.size()) > A.row_ptr_[i] &&
                A.col_idx_.back() == t.col) {
                A.values_.back() += t.value;
            } else {
                A.col_idx_.push_back(t.col);
                A.values_.push_back(t.value);
            }
        }
        A.row_ptr_[i + 1] = static_cast<int>(A.col_idx_.size());
    }
    return A;
}

double CsrMatrix::at(int i, int j) const {
    const auto first = col_idx_.begin() + row_ptr_[i];
    const auto last = col_idx_.begin() + row_ptr_[i + 1];
    const auto it = std::lower_bound(first, last, j);
    if (it != last && *it == j) {
        return values_[it - col_idx_.begin()];
    }
    return 0.0;
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != cols_) {
        throw SolverError("multiply: dimension mismatch");
    }
    std::vector<double> y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            s += values_[p] * x[col_idx_[p]];
        }
        y[i] = s;
    }
    return y;
}

double CsrMatrix::norm() const {
    double s = 0.0;
    for (double v : values_) {
        s += v * v;
    }
    return std::sqrt(s);
}

double CsrMatrix::asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < rows_; ++i) {
        for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
            worst = std::max(worst, std::abs(values_[p] - at(col_idx_[p], i)));
        }
    }
    return worst;
}

void CsrMatrix::pin_dof(int i) {
    for (int r = 0; r < rows_; ++r) {
        for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
            if (r == i || col_idx_[p] == i) {
                values_[p] = (r == col_idx_[p]) ? 1.0 : 0.0;
            }
        }
    }
    if (at(i, i) != 1.0) {
        throw SolverError("pin_dof: diagonal entry not stored for dof " + std::to_string(i));
    }
}

namespace {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

EigenSparse to_eigen(const CsrMatrix& A) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nnz());
    for (int i = 0; i < A.rows(); ++i) {
        for (int p = A.row_ptr()[i]; p < A.row_ptr()[i + 1]; ++p) {
            trip.emplace_back(i, A.col_idx()[p], A.values()[p]);
        }
    }
    EigenSparse M(A.rows(), A.cols());
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    return M;
}

}  // namespace

struct DirectSolver::Impl {
    Factorization kind = Factorization::LU;
    int n = 0;
    Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu;
    Eigen::SimplicialLDLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

DirectSolver::DirectSolver() = default;
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

DirectSolver::DirectSolver(const CsrMatrix& A, Factorization kind) { factorize(A, kind); }

void DirectSolver::factorize(const CsrMatrix& A, Factorization kind) {
    if (A.rows() != A.cols()) {
        throw SolverError("direct solve requires a square matrix");
    }
    auto impl = std::make_unique<Impl>();
    impl->kind = kind;
    impl->n = A.rows();
    const EigenSparse M = to_eigen(A);
    if (kind == Factorization::LU) {
        impl->lu.analyzePattern(M);
        impl->lu.factorize(M);
        if (impl->lu.info() != Eigen::Success) {
            throw SolverError("sparse LU failed: " + impl->lu.lastErrorMessage());
        }
    } else {
        impl->ldlt.compute(M);
        if (impl->ldlt.info() != Eigen::Success) {
            throw SolverError("sparse LDLT failed (matrix singular or not symmetric)");
        }
        const auto d = impl->ldlt.vectorD();
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            if (!(std::abs(d[i]) > 0.0) || !std::isfinite(d[i])) {
                throw SolverError("sparse LDLT: zero pivot");
            }
        }
    }
    impl_ = std::move(impl);
}

bool DirectSolver::ready() const { return impl_ != nullptr; }

int DirectSolver::size() const { return impl_ ? impl_->n : 0; }

std::vector<double> DirectSolver::solve(std::span<const double> b) const {
    if (!impl_) {
        throw SolverError("solve called before factorize");
    }
    if (static_cast<int>(b.size()) != impl_->n) {
        throw SolverError("solve: right-hand side has wrong length");
    }
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), impl_->n);
    Eigen::VectorXd x;
    if (impl_->kind == Factorization::LU) {
        x = impl_->lu.solve(rhs);
    } else {
        x = impl_->ldlt.solve(rhs);
    }
    if (!x.allFinite()) {
        throw SolverError("direct solve produced non-finite values");
    }
    return {x.data(), x.data() + x.size()};
}

std::vector<double> solve_direct(const CsrMatrix& A, std::span<const double> b) {
    return DirectSolver(A, Factorization::LU).solve(b);
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

CgResult solve_cg(const CsrMatrix& A, std::span<const double> b, double tol, int maxit) {
    const int n = A.rows();
    if (A.cols() != n || static_cast<int>(b.size()) != n) {
        throw SolverError("solve_cg: dimension mismatch");
    }
    CgResult res;
    res.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        return res;
    }
    std::vector<double> inv_diag(n);
    for (int i = 0; i < n; ++i) {
        const double d = A.at(i, i);
        if (!(d > 0.0)) {
            throw SolverError("solve_cg: non-positive diagonal, matrix is not SPD");
        }
        inv_diag[i] = 1.0 / d;
    }
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> z(n);
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
        z[i] = inv_diag[i] * r[i];
    }
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    for (int it = 1; it <= maxit; ++it) {
        const auto Ap = A.multiply(p);
        const double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        if (!(pAp > 0.0)) {
            throw SolverError("solve_cg: matrix is not positive definite");
        }
        const double step = rz / pAp;
        for (int i = 0; i < n; ++i) {
            res.x[i] += step * p[i];
            r[i] -= step * Ap[i];
        }
        res.iterations = it;
        res.relative_residual = norm2(r) / bnorm;
        if (res.relative_residual <= tol) {
            return res;
        }
        for (int i = 0; i < n; ++i) {
            z[i] = inv_diag[i] * r[i];
        }
        const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double gamma = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) {
            p[i] = z[i] + gamma * p[i];
        }
    }
    throw SolverError("solve_cg: no convergence in " + std::to_string(maxit) +
                      " iterations (relative residual " +
                      std::to_string(res.relative_residual) + ")");
}

}  // namespace porogas
