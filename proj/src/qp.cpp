#include "tubeplan/qp.hpp"

#include <algorithm>
#include <cmath>

#include "tubeplan/errors.hpp"

namespace tubeplan::mpc {

using linalg::Matrix;
using linalg::Vector;

namespace {

void validate(const QpProblem& p) {
    int n = p.P.rows;
    int m = p.A.rows;
    if (p.P.cols != n || static_cast<int>(p.q.size()) != n)
        throw ShapeError("qp: P/q dimensions inconsistent");
    if (p.A.cols != n || static_cast<int>(p.l.size()) != m ||
        static_cast<int>(p.u.size()) != m)
        throw ShapeError("qp: A/l/u dimensions inconsistent");
    for (int i = 0; i < m; ++i)
        if (p.l[static_cast<std::size_t>(i)] > p.u[static_cast<std::size_t>(i)])
            throw ValidationError("qp: l > u on row " + std::to_string(i));
}

Matrix build_kkt_matrix(const QpProblem& p, double sigma, double rho, const Matrix& ata) {
    int n = p.P.rows;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = p.P(i, j) + rho * ata(i, j);
    for (int i = 0; i < n; ++i) m(i, i) += sigma;
    if (!linalg::cholesky(m)) throw SolverError("qp: KKT factorization failed");
    return m;
}

// Equality-constrained refinement on the rows the splitting iteration ended
// at their bounds; falls back to the unpolished iterate when it does not
// improve the KKT residual.
void polish(const QpProblem& p, QpResult& r) {
    int n = p.P.rows;
    int m = p.A.rows;
    std::vector<int> active;
    std::vector<double> target;
    for (int i = 0; i < m; ++i) {
        double yi = r.y[static_cast<std::size_t>(i)];
        if (yi < 0.0) {
            active.push_back(i);
            target.push_back(p.l[static_cast<std::size_t>(i)]);
        } else if (yi > 0.0) {
            active.push_back(i);
            target.push_back(p.u[static_cast<std::size_t>(i)]);
        }
    }
    int na = static_cast<int>(active.size());
    int dim = n + na;
    const double reg = 1e-9;

    Matrix kkt(dim, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) kkt(i, j) = p.P(i, j);
    for (int i = 0; i < n; ++i) kkt(i, i) += reg;
    for (int a = 0; a < na; ++a) {
        int row = active[static_cast<std::size_t>(a)];
        for (int j = 0; j < n; ++j) {
            kkt(n + a, j) = p.A(row, j);
            kkt(j, n + a) = p.A(row, j);
        }
        kkt(n + a, n + a) = -reg;
    }
    auto lu = linalg::lu_factor(kkt);
    if (!lu) return;

    Vector rhs(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) rhs[static_cast<std::size_t>(i)] = -p.q[static_cast<std::size_t>(i)];
    for (int a = 0; a < na; ++a) rhs[static_cast<std::size_t>(n + a)] = target[static_cast<std::size_t>(a)];

    Vector sol = lu_solve(*lu, rhs);
    // one round of iterative refinement against the unregularized system
    Vector resid(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += p.P(i, j) * sol[static_cast<std::size_t>(j)];
        for (int a = 0; a < na; ++a)
            s += p.A(active[static_cast<std::size_t>(a)], i) * sol[static_cast<std::size_t>(n + a)];
        resid[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)] - s;
    }
    for (int a = 0; a < na; ++a) {
        double s = 0.0;
        int row = active[static_cast<std::size_t>(a)];
        for (int j = 0; j < n; ++j) s += p.A(row, j) * sol[static_cast<std::size_t>(j)];
        resid[static_cast<std::size_t>(n + a)] = rhs[static_cast<std::size_t>(n + a)] - s;
    }
    Vector corr = lu_solve(*lu, resid);
    for (int i = 0; i < dim; ++i) sol[static_cast<std::size_t>(i)] += corr[static_cast<std::size_t>(i)];

    QpResult cand = r;
    cand.x.assign(sol.begin(), sol.begin() + n);
    cand.y.assign(static_cast<std::size_t>(m), 0.0);
    for (int a = 0; a < na; ++a)
        cand.y[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] =
            sol[static_cast<std::size_t>(n + a)];
    for (double v : cand.x)
        if (!std::isfinite(v)) return;

    if (qp_kkt_residual(p, cand.x, cand.y) < qp_kkt_residual(p, r.x, r.y)) {
        r.x = std::move(cand.x);
        r.y = std::move(cand.y);
        r.polished = true;
    }
}

}  // namespace

QpResult solve_qp(const QpProblem& p, const QpSettings& settings, const linalg::Vector* x_warm,
                  const linalg::Vector* y_warm) {
    validate(p);
    int n = p.P.rows;
    int m = p.A.rows;

    QpResult r;
    r.x = x_warm && static_cast<int>(x_warm->size()) == n ? *x_warm
                                                          : Vector(static_cast<std::size_t>(n), 0.0);
    r.y = y_warm && static_cast<int>(y_warm->size()) == m ? *y_warm
                                                          : Vector(static_cast<std::size_t>(m), 0.0);

    Matrix ata = linalg::at_a(p.A);
    double rho = settings.rho;
    Matrix kkt = build_kkt_matrix(p, settings.sigma, rho, ata);

    Vector z(static_cast<std::size_t>(m), 0.0);
    linalg::matvec(p.A, r.x, z);
    for (int i = 0; i < m; ++i)
        z[static_cast<std::size_t>(i)] = std::clamp(z[static_cast<std::size_t>(i)],
                                                    p.l[static_cast<std::size_t>(i)],
                                                    p.u[static_cast<std::size_t>(i)]);

    Vector rhs(static_cast<std::size_t>(n));
    Vector ax(static_cast<std::size_t>(m));
    Vector aty(static_cast<std::size_t>(n));
    Vector px(static_cast<std::size_t>(n));
    Vector tmp_m(static_cast<std::size_t>(m));
    Vector az(static_cast<std::size_t>(m));

    for (int iter = 1; iter <= settings.max_iters; ++iter) {
        // x-update: (P + sigma I + rho A'A) x_new = sigma x - q + A'(rho z - y)
        for (int i = 0; i < m; ++i)
            tmp_m[static_cast<std::size_t>(i)] =
                rho * z[static_cast<std::size_t>(i)] - r.y[static_cast<std::size_t>(i)];
        linalg::mat_t_vec(p.A, tmp_m, rhs);
        for (int i = 0; i < n; ++i)
            rhs[static_cast<std::size_t>(i)] += settings.sigma * r.x[static_cast<std::size_t>(i)] -
                                                p.q[static_cast<std::size_t>(i)];
        linalg::cholesky_solve(kkt, rhs);  // rhs becomes x~

        linalg::matvec(p.A, rhs, az);  // A x~

        double a = settings.relax_alpha;
        for (int i = 0; i < n; ++i)
            r.x[static_cast<std::size_t>(i)] =
                a * rhs[static_cast<std::size_t>(i)] + (1.0 - a) * r.x[static_cast<std::size_t>(i)];
        for (int i = 0; i < m; ++i) {
            double z_relaxed = a * az[static_cast<std::size_t>(i)] +
                               (1.0 - a) * z[static_cast<std::size_t>(i)];
            double z_new = std::clamp(z_relaxed + r.y[static_cast<std::size_t>(i)] / rho,
                                      p.l[static_cast<std::size_t>(i)],
                                      p.u[static_cast<std::size_t>(i)]);
            r.y[static_cast<std::size_t>(i)] += rho * (z_relaxed - z_new);
            z[static_cast<std::size_t>(i)] = z_new;
        }

        bool last = iter == settings.max_iters;
        if (iter % settings.check_interval == 0 || last) {
            linalg::matvec(p.A, r.x, ax);
            linalg::mat_t_vec(p.A, r.y, aty);
            linalg::matvec(p.P, r.x, px);

            double prim = 0.0, prim_scale = 0.0;
            for (int i = 0; i < m; ++i) {
                prim = std::max(prim, std::abs(ax[static_cast<std::size_t>(i)] -
                                               z[static_cast<std::size_t>(i)]));
                prim_scale = std::max({prim_scale, std::abs(ax[static_cast<std::size_t>(i)]),
                                       std::abs(z[static_cast<std::size_t>(i)])});
            }
            double dual = 0.0, dual_scale = 0.0;
            for (int i = 0; i < n; ++i) {
                dual = std::max(dual, std::abs(px[static_cast<std::size_t>(i)] +
                                               p.q[static_cast<std::size_t>(i)] +
                                               aty[static_cast<std::size_t>(i)]));
                dual_scale = std::max({dual_scale, std::abs(px[static_cast<std::size_t>(i)]),
                                       std::abs(p.q[static_cast<std::size_t>(i)]),
                                       std::abs(aty[static_cast<std::size_t>(i)])});
            }
            r.prim_res = prim;
            r.dual_res = dual;
            r.iters = iter;

            double eps_prim = settings.eps_abs + settings.eps_rel * prim_scale;
            double eps_dual = settings.eps_abs + settings.eps_rel * dual_scale;
            if (prim <= eps_prim && dual <= eps_dual) {
                r.converged = true;
                break;
            }
            if (!std::isfinite(prim) || !std::isfinite(dual))
                throw SolverError("qp: iterates diverged");

            if (iter % settings.rho_update_interval == 0 && !last) {
                double p_ratio = prim / std::max(prim_scale, 1e-12);
                double d_ratio = dual / std::max(dual_scale, 1e-12);
                double new_rho = rho * std::sqrt(p_ratio / std::max(d_ratio, 1e-12));
                new_rho = std::clamp(new_rho, 1e-6, 1e6);
                if (new_rho > 5.0 * rho || new_rho < rho / 5.0) {
                    rho = new_rho;
                    kkt = build_kkt_matrix(p, settings.sigma, rho, ata);
                }
            }
        }
    }

    if (settings.polish) polish(p, r);
    r.objective = qp_objective(p, r.x);
    return r;
}

double qp_objective(const QpProblem& p, const Vector& x) {
    Vector px = linalg::matvec(p.P, x);
    return 0.5 * linalg::dot(px, x) + linalg::dot(p.q, x);
}

double qp_kkt_residual(const QpProblem& p, const Vector& x, const Vector& y) {
    int n = p.P.rows;
    int m = p.A.rows;
    Vector px = linalg::matvec(p.P, x);
    Vector aty = linalg::mat_t_vec(p.A, y);
    double stationarity = 0.0;
    for (int i = 0; i < n; ++i)
        stationarity = std::max(stationarity,
                                std::abs(px[static_cast<std::size_t>(i)] +
                                         p.q[static_cast<std::size_t>(i)] +
                                         aty[static_cast<std::size_t>(i)]));
    Vector ax = linalg::matvec(p.A, x);
    double primal = 0.0, comp = 0.0;
    for (int i = 0; i < m; ++i) {
        double v = ax[static_cast<std::size_t>(i)];
        primal = std::max({primal, p.l[static_cast<std::size_t>(i)] - v,
                           v - p.u[static_cast<std::size_t>(i)]});
        double yi = y[static_cast<std::size_t>(i)];
        if (yi > 0.0)
            comp = std::max(comp, yi * std::abs(p.u[static_cast<std::size_t>(i)] - v));
        else if (yi < 0.0)
            comp = std::max(comp, -yi * std::abs(v - p.l[static_cast<std::size_t>(i)]));
    }
    return std::max({stationarity, primal, comp});
}

}  // namespace tubeplan::mpc
