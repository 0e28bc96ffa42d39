#include "tubeplan/linalg.hpp"

#include <cassert>
#include <cmath>

namespace tubeplan::linalg {

void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
    assert(static_cast<int>(x.size()) == m.cols && static_cast<int>(out.size()) == m.rows);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        out[r] = s;
    }
}

void mat_t_vec(const Matrix& m, std::span<const double> x, std::span<double> out) {
    assert(static_cast<int>(x.size()) == m.rows && static_cast<int>(out.size()) == m.cols);
    for (int c = 0; c < m.cols; ++c) out[c] = 0.0;
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.row_ptr(r);
        double xr = x[r];
        if (xr == 0.0) continue;
        for (int c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
    }
}

Vector matvec(const Matrix& m, const Vector& x) {
    Vector out(static_cast<std::size_t>(m.rows));
    matvec(m, x, out);
    return out;
}

Vector mat_t_vec(const Matrix& m, const Vector& x) {
    Vector out(static_cast<std::size_t>(m.cols));
    mat_t_vec(m, x, out);
    return out;
}

Matrix at_a(const Matrix& a) {
    Matrix out(a.cols, a.cols);
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        for (int i = 0; i < a.cols; ++i) {
            double ri = row[i];
            if (ri == 0.0) continue;
            double* out_row = out.row_ptr(i);
            for (int j = i; j < a.cols; ++j) out_row[j] += ri * row[j];
        }
    }
    // mirror upper to lower
    for (int i = 0; i < a.cols; ++i)
        for (int j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

bool cholesky(Matrix& m) {
    assert(m.rows == m.cols);
    int n = m.rows;
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= m(j, k) * m(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return false;
        double ljj = std::sqrt(d);
        m(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= m(i, k) * m(j, k);
            m(i, j) = s / ljj;
        }
        for (int k = j + 1; k < n; ++k) m(j, k) = 0.0;
    }
    return true;
}

void cholesky_solve(const Matrix& chol, Vector& b) {
    int n = chol.rows;
    assert(static_cast<int>(b.size()) == n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        const double* row = chol.row_ptr(i);
        for (int k = 0; k < i; ++k) s -= row[k] * b[k];
        b[i] = s / row[i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= chol(k, i) * b[k];
        b[i] = s / chol(i, i);
    }
}

std::optional<LuFactor> lu_factor(Matrix m) {
    assert(m.rows == m.cols);
    int n = m.rows;
    LuFactor f{std::move(m), std::vector<int>(n)};
    for (int i = 0; i < n; ++i) f.piv[i] = i;
    for (int j = 0; j < n; ++j) {
        int p = j;
        double best = std::abs(f.m(j, j));
        for (int i = j + 1; i < n; ++i) {
            double v = std::abs(f.m(i, j));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (!(best > 0.0) || !std::isfinite(best)) return std::nullopt;
        if (p != j) {
            for (int c = 0; c < n; ++c) std::swap(f.m(j, c), f.m(p, c));
            std::swap(f.piv[j], f.piv[p]);
        }
        double pivot = f.m(j, j);
        for (int i = j + 1; i < n; ++i) {
            double mult = f.m(i, j) / pivot;
            f.m(i, j) = mult;
            if (mult == 0.0) continue;
            for (int c = j + 1; c < n; ++c) f.m(i, c) -= mult * f.m(j, c);
        }
    }
    return f;
}

Vector lu_solve(const LuFactor& f, Vector b) {
    int n = f.m.rows;
    assert(static_cast<int>(b.size()) == n);
    Vector x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[i] = b[static_cast<std::size_t>(f.piv[i])];
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int k = 0; k < i; ++k) s -= f.m(i, k) * x[k];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int k = i + 1; k < n; ++k) s -= f.m(i, k) * x[k];
        x[i] = s / f.m(i, i);
    }
    return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace tubeplan::linalg
