#pragma once

#include <optional>
#include <span>
#include <vector>

namespace tubeplan::linalg {

using Vector = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    double* row_ptr(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
    const double* row_ptr(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }
};

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out);
void mat_t_vec(const Matrix& m, std::span<const double> x, std::span<double> out);
Vector matvec(const Matrix& m, const Vector& x);
Vector mat_t_vec(const Matrix& m, const Vector& x);

// AᵀA (cols × cols)
Matrix at_a(const Matrix& a);

// In-place lower Cholesky of an SPD matrix; returns false if a pivot fails.
bool cholesky(Matrix& m);
void cholesky_solve(const Matrix& chol, Vector& b);

struct LuFactor {
    Matrix m;
    std::vector<int> piv;
};
std::optional<LuFactor> lu_factor(Matrix m);
Vector lu_solve(const LuFactor& f, Vector b);

double dot(std::span<const double> a, std::span<const double> b);
double inf_norm(std::span<const double> v);

}  // namespace tubeplan::linalg
