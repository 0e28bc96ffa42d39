#include "tubeplan/mpc.hpp"

#include <algorithm>
#include <cmath>

#include "tubeplan/errors.hpp"

namespace tubeplan::mpc {

namespace {

constexpr double kInf = 1e30;
constexpr double kFeasTol = 1e-6;

using linalg::Matrix;
using linalg::Vector;

// z = z0 (stacked) + B v with B[2j+d, 2i+d] = dt for i < j.
Matrix build_b_matrix(int n, double dt) {
    Matrix b(2 * (n + 1), 2 * n);
    for (int j = 1; j <= n; ++j)
        for (int i = 0; i < j; ++i)
            for (int d = 0; d < 2; ++d) b(2 * j + d, 2 * i + d) = dt;
    return b;
}

std::vector<Vec2> roll_trajectory(Vec2 z0, const std::vector<Vec2>& v, double dt) {
    std::vector<Vec2> z(v.size() + 1);
    z[0] = z0;
    for (std::size_t k = 0; k < v.size(); ++k) z[k + 1] = sim::planner_step(z[k], v[k], dt);
    return z;
}

struct CostSpec {
    std::vector<Vec2> z_ref;  // N+1
    std::vector<Vec2> v_ref;  // N
    double q = 0.0, r = 0.0, q_f = 0.0, r_r = 0.0;
};

double eval_objective(const CostSpec& cost, Vec2 z0, const std::vector<Vec2>& v, double dt) {
    auto z = roll_trajectory(z0, v, dt);
    int n = static_cast<int>(v.size());
    double j = 0.0;
    for (int k = 0; k < n; ++k) {
        Vec2 ez = z[static_cast<std::size_t>(k)] - cost.z_ref[static_cast<std::size_t>(k)];
        Vec2 ev = v[static_cast<std::size_t>(k)] - cost.v_ref[static_cast<std::size_t>(k)];
        j += cost.q * ez.dot(ez) + cost.r * ev.dot(ev);
    }
    Vec2 et = z.back() - cost.z_ref.back();
    j += cost.q_f * et.dot(et);
    for (int k = 1; k < n; ++k) {
        Vec2 dv = v[static_cast<std::size_t>(k)] - v[static_cast<std::size_t>(k - 1)];
        j += cost.r_r * dv.dot(dv);
    }
    return j;
}

// Constant Hessian and linear coefficient of the quadratic cost in the
// stacked input vector: J(v) = 0.5 v'Hv + c'v + const.
void build_quadratic_cost(const CostSpec& cost, Vec2 z0, double dt, int n, Matrix& h, Vector& c) {
    int nv = 2 * n;
    h = Matrix(nv, nv);
    c.assign(static_cast<std::size_t>(nv), 0.0);

    // stage nodes j in [0, N-1] weight q, terminal node N weight q_f; node j
    // couples inputs i1, i2 < j with dt^2.
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) {
            int hi = std::max(i1, i2);
            double stage_count = static_cast<double>(n - 1 - hi);
            double coeff = 2.0 * dt * dt * (cost.q * stage_count + cost.q_f);
            for (int d = 0; d < 2; ++d) h(2 * i1 + d, 2 * i2 + d) += coeff;
        }
    for (int i = 0; i < nv; ++i) h(i, i) += 2.0 * cost.r;
    if (cost.r_r > 0.0 && n >= 2) {
        for (int j = 1; j < n; ++j)
            for (int d = 0; d < 2; ++d) {
                h(2 * j + d, 2 * j + d) += 2.0 * cost.r_r;
                h(2 * (j - 1) + d, 2 * (j - 1) + d) += 2.0 * cost.r_r;
                h(2 * j + d, 2 * (j - 1) + d) -= 2.0 * cost.r_r;
                h(2 * (j - 1) + d, 2 * j + d) -= 2.0 * cost.r_r;
            }
    }

    // c[2i+d] = 2 dt (q * suffix_j>i d_j + q_f d_N) - 2 r v_ref, d_j = z0 - z_ref_j
    Vec2 suffix{};
    std::vector<Vec2> stage_suffix(static_cast<std::size_t>(n) + 1);  // sum over j in (i, N-1]
    stage_suffix[static_cast<std::size_t>(n)] = {};
    for (int j = n - 1; j >= 0; --j) {
        Vec2 dj = z0 - cost.z_ref[static_cast<std::size_t>(j)];
        suffix += dj;
        stage_suffix[static_cast<std::size_t>(j)] = suffix;
    }
    Vec2 d_n = z0 - cost.z_ref[static_cast<std::size_t>(n)];
    for (int i = 0; i < n; ++i) {
        // stage nodes j with j > i contribute; stage_suffix[i+1] sums j in [i+1, n-1]
        Vec2 s = stage_suffix[static_cast<std::size_t>(i) + 1];
        Vec2 ci = (s * cost.q + d_n * cost.q_f) * (2.0 * dt) -
                  cost.v_ref[static_cast<std::size_t>(i)] * (2.0 * cost.r);
        c[static_cast<std::size_t>(2 * i)] += ci.x;
        c[static_cast<std::size_t>(2 * i + 1)] += ci.y;
    }
}

struct TubeEval {
    std::vector<double> w;  // N+1
    Matrix j_v;             // (N+1) x 2N total derivative through the plan
    bool has_jac = false;
};

TubeEval eval_tube(const TubeSetting& tube, const sim::HistoryBuffer* hist,
                   const std::vector<Vec2>& z_traj, const std::vector<Vec2>& v,
                   const Matrix& b_mat) {
    TubeEval out;
    std::size_t n1 = z_traj.size();
    switch (tube.mode) {
        case TubeMode::None:
            out.w.assign(n1, 0.0);
            return out;
        case TubeMode::Fixed:
            out.w.assign(n1, tube.fixed_radius);
            return out;
        case TubeMode::Dynamic: {
            auto lin = linearize_tube_dynamics(*tube.model, *hist, z_traj, v);
            out.w = std::move(lin.w);
            // chain rule through z = z0 + B v
            out.j_v = Matrix(lin.dw_dz.rows, b_mat.cols);
            for (int row = 0; row < lin.dw_dz.rows; ++row) {
                for (int zc = 0; zc < lin.dw_dz.cols; ++zc) {
                    double a = lin.dw_dz(row, zc);
                    if (a == 0.0) continue;
                    const double* brow = b_mat.row_ptr(zc);
                    double* jrow = out.j_v.row_ptr(row);
                    for (int col = 0; col < b_mat.cols; ++col) jrow[col] += a * brow[col];
                }
                for (int col = 0; col < lin.dw_dv.cols; ++col)
                    out.j_v(row, col) += lin.dw_dv(row, col);
            }
            out.has_jac = true;
            return out;
        }
    }
    throw Error("unreachable");
}

double constraint_violation(const Scenario& scenario, const std::vector<Vec2>& z_traj,
                            const std::vector<double>& w) {
    double worst = 0.0;
    for (std::size_t j = 1; j < z_traj.size(); ++j)
        for (const auto& obs : scenario.obstacles) {
            double g = tube_constraint_value(z_traj[j], w[j], obs);
            worst = std::max(worst, -g);
        }
    return worst;
}

double merit(const CostSpec& cost, const Scenario& scenario, Vec2 z0,
             const std::vector<Vec2>& v, const std::vector<double>& w, double dt,
             double penalty) {
    auto z = roll_trajectory(z0, v, dt);
    double total = eval_objective(cost, z0, v, dt);
    for (std::size_t j = 1; j < z.size(); ++j)
        for (const auto& obs : scenario.obstacles)
            total += penalty * std::max(0.0, -tube_constraint_value(z[j], w[j], obs));
    return total;
}

std::vector<Vec2> clamp_inputs(std::vector<Vec2> v, double v_bar) {
    for (auto& vi : v) vi = sim::clip_vec(vi, v_bar);
    return v;
}

MpcSolution scp_solve(const Scenario& scenario, Vec2 z0, const MpcConfig& cfg,
                      const CostSpec& cost, const TubeSetting& tube,
                      const sim::HistoryBuffer* hist, const std::vector<Vec2>* warm_v) {
    int n = cfg.horizon;
    int nv = 2 * n;
    int n_obs = static_cast<int>(scenario.obstacles.size());
    int ns = n_obs * n;
    int nx = nv + ns;
    double v_bar = scenario.v_bar;
    double dt = cfg.dt;

    Matrix b_mat = build_b_matrix(n, dt);
    Matrix h;
    Vector c_lin;
    build_quadratic_cost(cost, z0, dt, n, h, c_lin);

    std::vector<Vec2> v_it(static_cast<std::size_t>(n));
    if (warm_v && warm_v->size() == static_cast<std::size_t>(n))
        v_it = clamp_inputs(*warm_v, v_bar);

    auto z_it = roll_trajectory(z0, v_it, dt);
    TubeEval tube_it = eval_tube(tube, hist, z_it, v_it, b_mat);
    double merit_it = merit(cost, scenario, z0, v_it, tube_it.w, dt, cfg.slack_penalty);

    double radius = cfg.trust_region_radius > 0.0 ? cfg.trust_region_radius : 0.5 * v_bar;

    // row layout: [input box | world bounds | obstacle rows | slack >= 0]
    int m_rows = nv + 2 * n + ns + ns;
    QpSettings qp_settings;
    qp_settings.max_iters = cfg.qp_iters;
    Vector y_warm;

    MpcSolution sol;
    sol.status = SolveStatus::IterCapped;

    for (int iter = 1; iter <= cfg.scp_max_iters; ++iter) {
        sol.scp_iters = iter;

        QpProblem qp;
        qp.P = Matrix(nx, nx);
        for (int i = 0; i < nv; ++i)
            for (int j = 0; j < nv; ++j) qp.P(i, j) = h(i, j);
        qp.q.assign(static_cast<std::size_t>(nx), 0.0);
        {
            Vector g = linalg::matvec(h, [&] {
                Vector vflat(static_cast<std::size_t>(nv));
                for (int i = 0; i < n; ++i) {
                    vflat[static_cast<std::size_t>(2 * i)] = v_it[static_cast<std::size_t>(i)].x;
                    vflat[static_cast<std::size_t>(2 * i + 1)] = v_it[static_cast<std::size_t>(i)].y;
                }
                return vflat;
            }());
            for (int i = 0; i < nv; ++i)
                qp.q[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] +
                                                    c_lin[static_cast<std::size_t>(i)];
            for (int i = 0; i < ns; ++i)
                qp.q[static_cast<std::size_t>(nv + i)] = cfg.slack_penalty;
        }

        qp.A = Matrix(m_rows, nx);
        qp.l.assign(static_cast<std::size_t>(m_rows), -kInf);
        qp.u.assign(static_cast<std::size_t>(m_rows), kInf);
        int row = 0;
        // input box intersected with the trust region, in delta coordinates
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 2; ++d) {
                double cur = d == 0 ? v_it[static_cast<std::size_t>(i)].x
                                    : v_it[static_cast<std::size_t>(i)].y;
                qp.A(row, 2 * i + d) = 1.0;
                qp.l[static_cast<std::size_t>(row)] = std::max(-v_bar - cur, -radius);
                qp.u[static_cast<std::size_t>(row)] = std::min(v_bar - cur, radius);
                ++row;
            }
        // world bounds on nodes 1..N
        for (int j = 1; j <= n; ++j)
            for (int d = 0; d < 2; ++d) {
                const double* brow = b_mat.row_ptr(2 * j + d);
                for (int col = 0; col < nv; ++col) qp.A(row, col) = brow[col];
                double zj = d == 0 ? z_it[static_cast<std::size_t>(j)].x
                                   : z_it[static_cast<std::size_t>(j)].y;
                double lo = d == 0 ? scenario.bounds.lo.x : scenario.bounds.lo.y;
                double hi = d == 0 ? scenario.bounds.hi.x : scenario.bounds.hi.y;
                qp.l[static_cast<std::size_t>(row)] = lo - zj;
                qp.u[static_cast<std::size_t>(row)] = hi - zj;
                ++row;
            }
        // linearized obstacle rows with slack
        for (int o = 0; o < n_obs; ++o) {
            const Obstacle& obs = scenario.obstacles[static_cast<std::size_t>(o)];
            for (int j = 1; j <= n; ++j) {
                Vec2 dz = z_it[static_cast<std::size_t>(j)] - obs.center;
                double wj = tube_it.w[static_cast<std::size_t>(j)];
                double g0 = tube_constraint_value(z_it[static_cast<std::size_t>(j)], wj, obs);
                const double* bx = b_mat.row_ptr(2 * j);
                const double* by = b_mat.row_ptr(2 * j + 1);
                double w_coeff = -2.0 * (wj + obs.radius);
                for (int col = 0; col < nv; ++col) {
                    double a = 2.0 * (dz.x * bx[col] + dz.y * by[col]);
                    if (tube_it.has_jac) a += w_coeff * tube_it.j_v(j, col);
                    qp.A(row, col) = a;
                }
                qp.A(row, nv + o * n + (j - 1)) = 1.0;
                qp.l[static_cast<std::size_t>(row)] = -g0;
                ++row;
            }
        }
        // slack nonnegativity
        for (int i = 0; i < ns; ++i) {
            qp.A(row, nv + i) = 1.0;
            qp.l[static_cast<std::size_t>(row)] = 0.0;
            ++row;
        }

        QpResult qr = solve_qp(qp, qp_settings, nullptr,
                               y_warm.empty() ? nullptr : &y_warm);
        y_warm = qr.y;

        std::vector<Vec2> v_cand(static_cast<std::size_t>(n));
        double step_norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double dx = qr.x[static_cast<std::size_t>(2 * i)];
            double dy = qr.x[static_cast<std::size_t>(2 * i + 1)];
            step_norm = std::max({step_norm, std::abs(dx), std::abs(dy)});
            v_cand[static_cast<std::size_t>(i)] =
                sim::clip_vec(v_it[static_cast<std::size_t>(i)] + Vec2{dx, dy}, v_bar);
        }

        auto z_cand = roll_trajectory(z0, v_cand, dt);
        TubeEval tube_cand = eval_tube(tube, hist, z_cand, v_cand, b_mat);
        double merit_cand = merit(cost, scenario, z0, v_cand, tube_cand.w, dt, cfg.slack_penalty);

        bool accept = merit_cand <= merit_it + 1e-7 * std::max(1.0, std::abs(merit_it));
        if (accept) {
            v_it = std::move(v_cand);
            z_it = std::move(z_cand);
            tube_it = std::move(tube_cand);
            merit_it = merit_cand;
        } else {
            radius *= 0.5;
        }

        if (step_norm <= cfg.convergence_tol) {
            double viol = constraint_violation(scenario, z_it, tube_it.w);
            sol.status = viol <= kFeasTol ? SolveStatus::Converged : SolveStatus::Infeasible;
            break;
        }
        if (radius < 1e-7) break;
    }

    sol.v = v_it;
    sol.z = z_it;
    sol.w = tube_it.w;
    sol.objective = eval_objective(cost, z0, v_it, dt);
    sol.max_violation = constraint_violation(scenario, z_it, tube_it.w);
    if (sol.status != SolveStatus::Converged && sol.max_violation > kFeasTol)
        sol.status = SolveStatus::Infeasible;
    sol.nominal_status = sol.status;
    return sol;
}

CostSpec goal_cost(const Scenario& scenario, const MpcConfig& cfg) {
    CostSpec cost;
    cost.z_ref.assign(static_cast<std::size_t>(cfg.horizon) + 1, scenario.goal);
    cost.v_ref.assign(static_cast<std::size_t>(cfg.horizon), Vec2{});
    cost.q = cfg.q;
    cost.r = cfg.r;
    cost.q_f = cfg.q_f;
    cost.r_r = 0.0;
    return cost;
}

}  // namespace

std::string tube_mode_name(TubeMode m) {
    switch (m) {
        case TubeMode::None: return "none";
        case TubeMode::Fixed: return "fixed";
        case TubeMode::Dynamic: return "dynamic";
    }
    return "?";
}

TubeMode tube_mode_from_name(const std::string& s) {
    if (s == "none") return TubeMode::None;
    if (s == "fixed") return TubeMode::Fixed;
    if (s == "dynamic") return TubeMode::Dynamic;
    throw ValidationError("unknown tube mode: " + s);
}

std::string status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::IterCapped: return "iter_capped";
        case SolveStatus::Infeasible: return "infeasible";
    }
    return "?";
}

void MpcConfig::validate() const {
    if (horizon < 1) throw ValidationError("mpc horizon must be >= 1");
    if (!(dt > 0.0)) throw ValidationError("mpc dt must be > 0");
    if (!(q > 0.0) || !(r > 0.0) || !(q_f > 0.0) || !(r_r > 0.0))
        throw ValidationError("mpc weights must be > 0");
    if (scp_max_iters < 1) throw ValidationError("scp_max_iters must be >= 1");
    if (qp_iters < 1) throw ValidationError("qp_iters must be >= 1");
    if (trust_region_radius < 0.0) throw ValidationError("trust_region_radius must be >= 0");
    if (!(slack_penalty > 0.0)) throw ValidationError("slack_penalty must be > 0");
    if (!(convergence_tol > 0.0)) throw ValidationError("convergence_tol must be > 0");
    if (tube.mode == TubeMode::Fixed && tube.fixed_radius < 0.0)
        throw ValidationError("fixed tube radius must be >= 0");
    if (tube.mode == TubeMode::Dynamic && tube.model == nullptr)
        throw ValidationError("dynamic tube requires a model");
}

double tube_constraint_value(Vec2 z, double w, const Obstacle& obstacle) {
    Vec2 d = z - obstacle.center;
    double rw = w + obstacle.radius;
    return d.dot(d) - rw * rw;
}

TubeLinearization linearize_tube_dynamics(const tube::TubeModel& model,
                                          const sim::HistoryBuffer& hist,
                                          std::span<const Vec2> z_plan,
                                          std::span<const Vec2> v_plan) {
    if (hist.size() != static_cast<std::size_t>(model.cfg.history))
        throw ShapeError("history buffer length does not match tube model");
    auto graph = tube::build_prediction_graph(model, hist.e_hist(), hist.z_hist(), hist.v_hist(),
                                              z_plan, v_plan, false);
    int n = model.cfg.horizon;

    TubeLinearization lin;
    const auto& w_pred = graph.tape.value(graph.w_node);
    lin.w.reserve(static_cast<std::size_t>(n) + 1);
    lin.w.push_back(hist.e_hist().back());
    lin.w.insert(lin.w.end(), w_pred.begin(), w_pred.end());

    lin.dw_dz = Matrix(n + 1, 2 * (n + 1));
    lin.dw_dv = Matrix(n + 1, 2 * n);
    std::vector<double> seed(static_cast<std::size_t>(n), 0.0);
    for (int m = 1; m <= n; ++m) {
        graph.tape.zero_adjoints();
        seed[static_cast<std::size_t>(m - 1)] = 1.0;
        graph.tape.backward(graph.w_node, seed, false);
        seed[static_cast<std::size_t>(m - 1)] = 0.0;
        const auto& gz = graph.tape.adjoint(graph.z_leaf);
        const auto& gv = graph.tape.adjoint(graph.v_leaf);
        for (int col = 0; col < 2 * (n + 1); ++col)
            lin.dw_dz(m, col) = gz[static_cast<std::size_t>(col)];
        for (int col = 0; col < 2 * n; ++col)
            lin.dw_dv(m, col) = gv[static_cast<std::size_t>(col)];
    }
    return lin;
}

MpcSolution solve_nominal(const Scenario& scenario, Vec2 z_init, const MpcConfig& cfg,
                          const std::vector<Vec2>* warm_v) {
    scenario.validate();
    cfg.validate();
    if (cfg.tube.mode != TubeMode::None)
        throw ValidationError("solve_nominal requires tube mode none");
    TubeSetting none;
    return scp_solve(scenario, z_init, cfg, goal_cost(scenario, cfg), none, nullptr, warm_v);
}

MpcSolution solve_dynamic_tube(const Scenario& scenario, Vec2 z_init,
                               const sim::HistoryBuffer& hist, const MpcConfig& cfg,
                               const std::vector<Vec2>* warm_v) {
    scenario.validate();
    cfg.validate();
    if (cfg.tube.mode == TubeMode::Dynamic) {
        const tube::TubeModel* model = cfg.tube.model;
        if (model->cfg.horizon != cfg.horizon)
            throw ValidationError("tube model horizon does not match mpc horizon");
        if (std::abs(model->train_dt - cfg.dt) > 1e-9)
            throw ValidationError("tube model was trained at a different dt");
        if (hist.size() != static_cast<std::size_t>(model->cfg.history))
            throw ShapeError("history buffer length does not match tube model");
    }

    TubeSetting none;
    MpcSolution nominal =
        scp_solve(scenario, z_init, cfg, goal_cost(scenario, cfg), none, nullptr, warm_v);
    if (cfg.tube.mode == TubeMode::None) return nominal;

    CostSpec track;
    track.z_ref = nominal.z;
    track.v_ref = nominal.v;
    track.q = cfg.q;
    track.r = cfg.r;
    track.q_f = cfg.q_f;
    track.r_r = cfg.r_r;

    const std::vector<Vec2>* warm = warm_v ? warm_v : &nominal.v;
    MpcSolution sol = scp_solve(scenario, z_init, cfg, track, cfg.tube, &hist, warm);
    sol.nominal_status = nominal.status;
    return sol;
}

}  // namespace tubeplan::mpc
