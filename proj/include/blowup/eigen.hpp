#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blowup/kernels/kernels.hpp"
#include "blowup/params.hpp"

namespace blowup {

// Dense row-major real matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<cplx> apply(std::span<const cplx> v) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Diagonal similarity scaling by powers of two (row and column norms balanced).
// Returns the scale factors; the matrix is replaced by D^{-1} A D.
std::vector<double> balance(Matrix& a);

// Householder reduction to upper Hessenberg form, in place (similarity).
void hessenberg(Matrix& a);
void hessenberg(Matrix& a, const kernels::Table& k);

// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR
// iteration. Throws ConvergenceError after 30 n sweeps.
std::vector<cplx> hessenberg_eigenvalues(Matrix h);
std::vector<cplx> hessenberg_eigenvalues(Matrix h, const kernels::Table& k);

// All eigenvalues of a square real matrix (balance, reduce, iterate). The
// overloads without a kernel table use kernels::active().
std::vector<cplx> eigenvalues(Matrix a);
std::vector<cplx> eigenvalues(Matrix a, const kernels::Table& k);

// Eigenvector for an approximate eigenvalue by complex inverse iteration.
std::vector<cplx> eigenvector(const Matrix& a, cplx lambda, int iterations = 3);

// ||M v - lambda v||_2 / ||v||_2. Throws DomainError for v = 0.
double mode_residual(const Matrix& m, std::span<const cplx> v, cplx lambda);

}  // namespace blowup
