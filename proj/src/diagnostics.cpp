#include "plateflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace plateflow {

CheckReport make_check(std::string name, double bound, double observed, double tolerance, std::string details)
{
    CheckReport r;
    r.name = std::move(name);
    r.bound = bound;
    r.observed = observed;
    r.tolerance = tolerance;
    r.details = std::move(details);
    r.passed = recompute_passed(r);
    if (bound == 0.0 && observed <= 0.0)
        r.margin = 1.0;
    else
        r.margin = (bound - observed) / std::max(1.0, std::abs(bound));
    return r;
}

bool recompute_passed(const CheckReport& r)
{
    return r.observed <= r.bound * (1.0 + r.tolerance);
}

bool all_passed(const std::vector<CheckReport>& reports)
{
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.passed; });
}

namespace {

double sup(const Field& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

// Forward differences over all m+1 cells, boundary values zero.
double forward_difference_sup_1d(const Grid& g, const Field& u)
{
    const double h = g.spacing(0);
    const Index m = u.size();
    double out = 0.0;
    double left = 0.0;
    for (Index j = 0; j <= m; ++j) {
        const double right = j < m ? u[j] : 0.0;
        out = std::max(out, std::abs(right - left) / h);
        left = right;
    }
    return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t n = x.size();
    if (n < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

std::string fmt(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

}  // namespace

double interpolant_gap(const Trajectory& tr)
{
    double out = 0.0;
    for (int i = 1; i <= tr.n_steps; ++i) {
        const double d = l2_norm(tr.grid(), tr.state(i) - tr.state(i - 1));
        out = std::max(out, d * d);
    }
    return out;
}

double max_laplacian_norm(const Trajectory& tr)
{
    double out = 0.0;
    for (int i = 1; i <= tr.n_steps; ++i) {
        const ExtendedField lu = extended_laplacian(tr.grid(), tr.state(i));
        out = std::max(out, std::sqrt(tr.grid().quad_weight() * lu.squaredNorm()));
    }
    return out;
}

std::vector<CheckReport> run_invariant_suite(const Trajectory& tr, const Trajectory* refined)
{
    const Grid& g = tr.grid();
    const Field& f = tr.problem.obstacle();
    const double e0 = tr.energies.front();
    const double tau = tr.tau;
    std::vector<CheckReport> out;

    {
        double worst = -std::numeric_limits<double>::infinity();
        int at = 0;
        for (int i = 1; i <= tr.n_steps; ++i) {
            const double inc = tr.energies[i] - tr.energies[i - 1];
            if (inc > worst) {
                worst = inc;
                at = i;
            }
        }
        out.push_back(make_check("energy_monotone", 1.0, std::max(worst, 0.0) / (1e-12 * std::max(1.0, e0)), 0.0,
                                 "max_i E(u_i) - E(u_{i-1}) = " + fmt(worst) + " at step " + std::to_string(at) +
                                     ", in units of 1e-12 max(1, E(u0))"));
    }
    {
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= tr.n_steps; ++i) {
            const double d = l2_norm(g, tr.state(i) - tr.state(i - 1));
            const double prox = d * d / (2.0 * tau);
            worst = std::max(worst, prox - (tr.energies[i - 1] - tr.energies[i]));
        }
        out.push_back(make_check("step_descent", 1.0, std::max(worst, 0.0) / (1e-12 * std::max(1.0, e0)), 0.0,
                                 "max_i |u_i - u_{i-1}|^2/(2 tau) - (E_{i-1} - E_i) = " + fmt(worst) +
                                     ", in units of 1e-12 max(1, E(u0))"));
    }

    const TrajectoryAggregates agg = trajectory_aggregates(tr);
    out.push_back(make_check("dissipation", 2.0 * e0, agg.dissipation, 1e-9, "tau sum |V_i|^2 <= 2 E(u0)"));
    out.push_back(make_check("laplacian_bound", std::sqrt(2.0 * e0), max_laplacian_norm(tr), 1e-9,
                             "max_i |L u_i| <= sqrt(2 E(u0))"));

    double infeasible = 0.0, negative = 0.0, support = 0.0, comp = 0.0;
    const double contact_tol = contact_tolerance(f);
    for (int i = 1; i <= tr.n_steps; ++i) {
        const StepResult& s = tr.steps[static_cast<std::size_t>(i)];
        const Field gap = s.u - f;
        const double mu_scale = 1.0 + sup(s.mu);
        const double comp_scale = std::max(1.0, sup(s.mu) * sup(gap));
        for (Index j = 0; j < gap.size(); ++j) {
            infeasible = std::max(infeasible, -gap[j]);
            negative = std::max(negative, -s.mu[j] / mu_scale);
            if (!s.active_set[j])
                support = std::max(support, std::abs(s.mu[j]) / mu_scale);
            comp = std::max(comp, s.mu[j] * gap[j] / comp_scale);
        }
    }
    out.push_back(make_check("feasibility", 1.0, infeasible / contact_tol, 0.0,
                             "max_i max_j (f - u_i) = " + fmt(infeasible) + ", in units of " + fmt(contact_tol)));
    out.push_back(make_check("measure_positivity", 1.0, negative / 1e-8, 0.0,
                             "max_i max_j -mu_i / (1 + |mu_i|_sup) = " + fmt(negative) + ", in units of 1e-8"));
    out.push_back(make_check("measure_support", 1.0, support / 1e-8, 0.0,
                             "max |mu_i| off the contact set / (1 + |mu_i|_sup) = " + fmt(support) +
                                 ", in units of 1e-8"));
    out.push_back(make_check("complementarity", 1.0, comp / 1e-8, 0.0,
                             "max mu_i (u_i - f) / max(1, |mu_i|_sup |u_i - f|_sup) = " + fmt(comp) +
                                 ", in units of 1e-8"));

    double refined_mass = 0.0;
    if (refined) {
        refined_mass = trajectory_aggregates(*refined).mass_sq_sum;
    } else {
        const Trajectory fine = run_flow(tr.problem, tr.horizon, 2 * tr.n_steps, tr.config);
        refined_mass = trajectory_aggregates(fine).mass_sq_sum;
    }
    out.push_back(make_check("mass_refinement", 2.0 * agg.mass_sq_sum, refined_mass, 0.0,
                             "tau sum mu_i(Omega)^2 at 2n (observed) vs 2x value at n = " + fmt(agg.mass_sq_sum)));

    const HolderModuli hm = holder_moduli(tr);
    out.push_back(make_check("holder_l2", std::sqrt(2.0 * e0), hm.l2_quotient, 1e-9,
                             "max |u(t2) - u(t1)|_L2 / (t2 - t1)^(1/2)"));
    out.push_back(make_check("interpolant_gap", 2.0 * tau * e0, interpolant_gap(tr), 1e-9,
                             "sup_t |u_lin - u_const|^2 <= 2 tau E(u0)"));
    if (hm.grad_sup_quotient_1d)
        out.push_back(make_check("holder_grad_1d", std::pow(2.0, 13.0 / 8.0) * std::sqrt(e0),
                                 *hm.grad_sup_quotient_1d, 0.1,
                                 "max |D(u(t2) - u(t1))|_inf / (t2 - t1)^(1/8), 10% discretization slack"));
    return out;
}

HolderModuli holder_moduli(const Trajectory& tr)
{
    const Grid& g = tr.grid();
    HolderModuli out;
    out.sup_exponent = 0.5 - g.dim() / 8.0;
    const bool one_d = g.dim() == 1;
    if (one_d)
        out.grad_sup_quotient_1d = 0.0;

    std::vector<double> log_dt, log_dt_grad, log_dt_sup, log_l2, log_grad, log_sup;
    for (int a = 0; a <= tr.n_steps; ++a) {
        for (int b = a + 1; b <= tr.n_steps; ++b) {
            const Field diff = tr.state(b) - tr.state(a);
            const double dt = tr.time(b) - tr.time(a);
            const double l2 = l2_norm(g, diff);
            const double s = sup(diff);
            out.l2_quotient = std::max(out.l2_quotient, l2 / std::sqrt(dt));
            out.sup_quotient = std::max(out.sup_quotient, s / std::pow(dt, out.sup_exponent));
            if (l2 > 0.0) {
                log_dt.push_back(std::log(dt));
                log_l2.push_back(std::log(l2));
            }
            if (s > 0.0) {
                log_dt_sup.push_back(std::log(dt));
                log_sup.push_back(std::log(s));
            }
            if (one_d) {
                const double d = forward_difference_sup_1d(g, diff);
                out.grad_sup_quotient_1d = std::max(*out.grad_sup_quotient_1d, d / std::pow(dt, 0.125));
                if (d > 0.0) {
                    log_dt_grad.push_back(std::log(dt));
                    log_grad.push_back(std::log(d));
                }
            }
        }
    }
    out.empirical_exponents.l2 = fit_slope(log_dt, log_l2);
    out.empirical_exponents.sup = fit_slope(log_dt_sup, log_sup);
    out.empirical_exponents.grad_sup_1d =
        one_d ? fit_slope(log_dt_grad, log_grad) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double grad_sup_quotient_1d(const Trajectory& tr)
{
    if (tr.grid().dim() != 1)
        throw std::invalid_argument("gradient sup quotient is defined for one-dimensional grids only");
    return *holder_moduli(tr).grad_sup_quotient_1d;
}

EllipticSolution solve_elliptic_obstacle(const ObstacleProblem& p, const StepConfig& cfg)
{
    const Grid& g = p.grid();
    const SparseMatrix H = g.quad_weight() * g.bilaplacian();
    const Field b = Field::Zero(g.interior_size());
    BoundQpOptions opts;
    opts.max_pg_iters = cfg.fallback_pg_iters;
    BoundQpResult qp = solve_bound_qp(H, b, p.obstacle(), opts);

    EllipticSolution out;
    out.u = std::move(qp.x);
    out.multipliers = std::move(qp.multipliers);
    out.active_set = std::move(qp.active);
    out.kkt_residual = qp.kkt_residual;
    out.active_set_iterations = qp.active_set_iterations;
    out.used_fallback = qp.used_fallback;
    return out;
}

WeakFormResidual weak_form_residual(const Trajectory& tr, const std::vector<Field>& test)
{
    const Grid& g = tr.grid();
    const Field& f = tr.problem.obstacle();
    if (static_cast<int>(test.size()) != tr.n_steps)
        throw std::invalid_argument("weak form residual needs one test function per step");
    const double tol = contact_tolerance(f);
    const double qw = g.quad_weight();

    WeakFormResidual out;
    for (int i = 1; i <= tr.n_steps; ++i) {
        const Field& w = test[static_cast<std::size_t>(i - 1)];
        require_field(g, w, "weak_form_residual(test)");
        if ((w - f).minCoeff() < -tol)
            throw ObstacleViolation("test function below the obstacle on step " + std::to_string(i));
        const StepResult& s = tr.steps[static_cast<std::size_t>(i)];
        const Field dw = w - s.u;
        const ExtendedField lu = g.laplacian() * s.u;
        const ExtendedField ldw = g.laplacian() * dw;
        out.value += tr.tau * qw * (s.v.dot(dw) + lu.dot(ldw));
        out.scale += tr.tau * qw * (s.v.cwiseProduct(dw).cwiseAbs().sum() + lu.cwiseProduct(ldw).cwiseAbs().sum());
    }
    return out;
}

}  // namespace plateflow
