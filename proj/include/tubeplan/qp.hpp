#pragma once

#include "tubeplan/linalg.hpp"

namespace tubeplan::mpc {

// minimize 0.5 x'Px + q'x  subject to  l <= Ax <= u
struct QpProblem {
    linalg::Matrix P;  // n x n, symmetric PSD
    linalg::Vector q;
    linalg::Matrix A;  // m x n
    linalg::Vector l, u;
};

struct QpSettings {
    int max_iters = 400;
    double rho = 0.1;
    double sigma = 1e-6;
    double relax_alpha = 1.6;
    double eps_abs = 1e-7;
    double eps_rel = 1e-7;
    bool polish = true;
    int rho_update_interval = 25;
    int check_interval = 10;
};

struct QpResult {
    linalg::Vector x;
    linalg::Vector y;  // row multipliers: <= 0 at lower bounds, >= 0 at upper
    int iters = 0;
    double prim_res = 0.0;
    double dual_res = 0.0;
    bool converged = false;
    bool polished = false;
    double objective = 0.0;
};

// Operator-splitting solver with over-relaxation, periodic rho adaptation,
// and an active-set polish step. Deterministic: fixed iteration schedule,
// residual-based early exit.
QpResult solve_qp(const QpProblem& p, const QpSettings& settings,
                  const linalg::Vector* x_warm = nullptr, const linalg::Vector* y_warm = nullptr);

double qp_objective(const QpProblem& p, const linalg::Vector& x);

// max of stationarity, primal violation, and complementary slackness.
double qp_kkt_residual(const QpProblem& p, const linalg::Vector& x, const linalg::Vector& y);

}  // namespace tubeplan::mpc
