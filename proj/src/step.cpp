#include "plateflow/step.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace plateflow {

std::string to_string(StepStrategy s)
{
    switch (s) {
    case StepStrategy::PenaltyThenPolish:
        return "penalty_then_polish";
    case StepStrategy::ActiveSet:
        return "active_set";
    case StepStrategy::PenaltyOnly:
        return "penalty_only";
    }
    return "unknown";
}

StepStrategy parse_strategy(const std::string& name)
{
    if (name == "penalty_then_polish")
        return StepStrategy::PenaltyThenPolish;
    if (name == "active_set")
        return StepStrategy::ActiveSet;
    if (name == "penalty_only")
        return StepStrategy::PenaltyOnly;
    throw std::invalid_argument("unknown solver strategy '" + name + "'");
}

std::vector<double> default_penalty_schedule()
{
    return {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
}

void StepConfig::validate() const
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("time step tau must be positive");
    if (penalty_eps_schedule.empty())
        throw std::invalid_argument("penalty schedule must not be empty");
    for (std::size_t k = 0; k < penalty_eps_schedule.size(); ++k) {
        if (!(penalty_eps_schedule[k] > 0.0))
            throw std::invalid_argument("penalty schedule entries must be positive");
        if (k > 0 && !(penalty_eps_schedule[k] < penalty_eps_schedule[k - 1]))
            throw std::invalid_argument("penalty schedule must be strictly decreasing");
    }
    if (!(newton_tol > 0.0))
        throw std::invalid_argument("newton_tol must be positive");
    if (max_newton_iters < 1)
        throw std::invalid_argument("max_newton_iters must be >= 1");
    if (fallback_pg_iters < 1)
        throw std::invalid_argument("fallback_pg_iters must be >= 1");
}

namespace {

std::string format_number(double v)
{
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

double sup(const Field& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

SparseMatrix shifted_bilaplacian(const Grid& g, double tau)
{
    SparseMatrix m = g.bilaplacian();
    for (Index j = 0; j < m.rows(); ++j)
        m.coeffRef(j, j) += 1.0 / tau;
    m.makeCompressed();
    return m;
}

// Density form of the penalized functional (divided by quad_weight).
double penalized_density(const Grid& g, const Field& w, const Field& u_prev, const Field& f, double tau,
                         double eps)
{
    double pen = 0.0;
    for (Index j = 0; j < w.size(); ++j)
        pen += penalty_gamma(w[j] - f[j], eps);
    return 0.5 * (g.laplacian() * w).squaredNorm() + 0.5 / tau * (w - u_prev).squaredNorm() + pen;
}

}  // namespace

PenaltyRecord penalty_record(const Grid& g, const Field& w, const Field& u_prev, const Field& f,
                             double tau, double eps, int iterations, bool inserted)
{
    PenaltyRecord rec;
    rec.eps = eps;
    rec.newton_iterations = iterations;
    rec.inserted = inserted;
    double sq = 0.0, pen = 0.0;
    for (Index j = 0; j < w.size(); ++j) {
        const double neg = std::max(f[j] - w[j], 0.0);
        sq += neg * neg;
        rec.violation_sup = std::max(rec.violation_sup, neg);
        pen += penalty_gamma(w[j] - f[j], eps);
    }
    const double qw = g.quad_weight();
    rec.violation_l2 = std::sqrt(qw * sq);
    rec.penalty = qw * pen;
    rec.energy = energy(g, w);
    rec.proximal = qw / (2.0 * tau) * (w - u_prev).squaredNorm();
    return rec;
}

double contact_tolerance(const Field& f)
{
    return 1e-9 * (1.0 + sup(f));
}

double measure_tolerance(const Field& mu)
{
    return 1e-8 * (1.0 + sup(mu));
}

double penalty_gamma(double s, double eps)
{
    return s < 0.0 ? s * s / eps : 0.0;
}

double penalty_beta(double s, double eps)
{
    return s < 0.0 ? 2.0 * s / eps : 0.0;
}

PenaltySolve solve_step_penalty(const Grid& g, const Field& u_prev, const Field& f, double tau, double eps,
                                const StepConfig& cfg, const Field* warm_start)
{
    require_field(g, u_prev, "solve_step_penalty(u_prev)");
    require_field(g, f, "solve_step_penalty(f)");
    if (!(eps > 0.0))
        throw std::invalid_argument("penalty parameter must be positive");
    if (!(tau > 0.0))
        throw std::invalid_argument("time step tau must be positive");

    const Index n = g.interior_size();
    const SparseMatrix J0 = shifted_bilaplacian(g, tau);
    PinnedSpdSolver solver(J0);
    const NodeMask none(static_cast<std::size_t>(n), false);
    const Field zeros = Field::Zero(n);

    Field w = warm_start ? *warm_start : u_prev;
    require_field(g, w, "solve_step_penalty(warm_start)");

    auto residual = [&](const Field& x) {
        Field r = g.bilaplacian() * x + (x - u_prev) / tau;
        for (Index j = 0; j < n; ++j)
            r[j] += penalty_beta(x[j] - f[j], eps);
        return r;
    };
    auto scale = [&](const Field& x) {
        return cfg.newton_tol * (1.0 / tau + 1.0 / eps + g.bilaplacian_norm()) *
               std::max({1.0, sup(x), sup(u_prev)});
    };

    PenaltySolve out;
    for (int it = 0; it <= cfg.max_newton_iters; ++it) {
        const double res = sup(residual(w));
        const double tol = scale(w);
        out.scaled_residual = res / (tol / cfg.newton_tol);
        if (res <= tol) {
            out.w = std::move(w);
            out.iterations = it;
            return out;
        }
        if (it == cfg.max_newton_iters)
            break;

        Field shift(n), rhs = u_prev / tau;
        for (Index j = 0; j < n; ++j) {
            const bool violated = w[j] - f[j] < 0.0;
            shift[j] = violated ? 2.0 / eps : 0.0;
            if (violated)
                rhs[j] += 2.0 / eps * f[j];
        }
        const Field target = solver.solve(none, zeros, rhs, shift);
        const Field dir = target - w;

        const double phi0 = penalized_density(g, w, u_prev, f, tau, eps);
        double t = 1.0;
        Field trial = target;
        while (penalized_density(g, trial, u_prev, f, tau, eps) > phi0 + 1e-14 * std::abs(phi0) && t > 1e-12) {
            t *= 0.5;
            trial = w + t * dir;
        }
        w = std::move(trial);
    }
    throw NoConvergence("semismooth Newton did not converge for eps = " + format_number(eps),
                        cfg.max_newton_iters);
}

SparseMatrix step_hessian(const Grid& g, double tau)
{
    return g.quad_weight() * shifted_bilaplacian(g, tau);
}

double step_functional(const Grid& g, const Field& u, const Field& u_prev, double tau)
{
    return energy(g, u) + g.quad_weight() / (2.0 * tau) * (u - u_prev).squaredNorm();
}

ActiveSetStep solve_step_active_set(const Grid& g, const Field& u_prev, const Field& f, double tau,
                                    const StepConfig& cfg, const NodeMask* initial_active)
{
    require_field(g, u_prev, "solve_step_active_set(u_prev)");
    require_field(g, f, "solve_step_active_set(f)");
    if (!(tau > 0.0))
        throw std::invalid_argument("time step tau must be positive");

    const SparseMatrix H = step_hessian(g, tau);
    const Field b = g.quad_weight() / tau * u_prev;
    BoundQpOptions opts;
    opts.max_pg_iters = cfg.fallback_pg_iters;
    BoundQpResult qp = solve_bound_qp(H, b, f, opts, initial_active);

    ActiveSetStep out;
    out.u = std::move(qp.x);
    out.active_set = std::move(qp.active);
    out.multipliers = std::move(qp.multipliers);
    out.telemetry.active_set_iterations = qp.active_set_iterations;
    out.telemetry.projected_gradient_iterations = qp.pg_iterations;
    out.telemetry.used_fallback = qp.used_fallback;
    out.telemetry.kkt_residual = qp.kkt_residual;
    return out;
}

Field penalty_continuation(const Grid& g, const Field& u_prev, const Field& f, const StepConfig& cfg,
                           std::vector<PenaltyRecord>& profile, SolverTelemetry& telemetry,
                           const PenaltyVisitor& visit)
{
    Field w = u_prev;
    double last_eps = -1.0;

    std::function<void(double, bool, int)> reach = [&](double eps, bool inserted, int depth) {
        try {
            PenaltySolve s = solve_step_penalty(g, u_prev, f, cfg.tau, eps, cfg, &w);
            telemetry.newton_iterations += s.iterations;
            w = std::move(s.w);
            last_eps = eps;
            profile.push_back(penalty_record(g, w, u_prev, f, cfg.tau, eps, s.iterations, inserted));
            if (visit)
                visit(profile.back(), w);
        } catch (const NoConvergence&) {
            if (depth >= 8)
                throw;
            const double from = last_eps > 0.0 ? last_eps : 10.0 * eps;
            const double mid = std::sqrt(from * eps);
            ++telemetry.eps_insertions;
            reach(mid, true, depth + 1);
            reach(eps, inserted, depth + 1);
        }
    };

    for (double eps : cfg.penalty_eps_schedule)
        reach(eps, false, 0);
    return w;
}

StepResult solve_step(const Grid& g, const Field& u_prev, const Field& f, const StepConfig& cfg)
{
    cfg.validate();
    require_field(g, u_prev, "solve_step(u_prev)");
    require_field(g, f, "solve_step(f)");

    StepResult out;
    out.contact_tol = contact_tolerance(f);

    switch (cfg.solver) {
    case StepStrategy::ActiveSet: {
        ActiveSetStep s = solve_step_active_set(g, u_prev, f, cfg.tau, cfg);
        out.u = std::move(s.u);
        out.iterations = s.telemetry;
        break;
    }
    case StepStrategy::PenaltyThenPolish:
    case StepStrategy::PenaltyOnly: {
        Field w = penalty_continuation(g, u_prev, f, cfg, out.penalty_profile, out.iterations);
        if (cfg.solver == StepStrategy::PenaltyOnly) {
            out.u = std::move(w);
            break;
        }
        NodeMask guess(static_cast<std::size_t>(w.size()));
        for (Index j = 0; j < w.size(); ++j)
            guess[j] = w[j] - f[j] <= out.contact_tol;
        ActiveSetStep s = solve_step_active_set(g, u_prev, f, cfg.tau, cfg, &guess);
        const int newton = out.iterations.newton_iterations;
        const int insertions = out.iterations.eps_insertions;
        out.u = std::move(s.u);
        out.iterations = s.telemetry;
        out.iterations.newton_iterations = newton;
        out.iterations.eps_insertions = insertions;
        break;
    }
    }

    const EnergyGradient eg = energy_and_gradient(g, out.u);
    out.energy = eg.energy;
    out.v = (out.u - u_prev) / cfg.tau;
    out.mu = eg.bilaplacian + out.v;
    out.mu_tol = measure_tolerance(out.mu);
    out.active_set.resize(static_cast<std::size_t>(out.u.size()));
    for (Index j = 0; j < out.u.size(); ++j)
        out.active_set[j] = out.u[j] - f[j] <= out.contact_tol;

    const double g_prev = energy(g, u_prev);
    const double g_new = out.energy + g.quad_weight() / (2.0 * cfg.tau) * (out.u - u_prev).squaredNorm();
    if (g_new > g_prev + 1e-12 * std::max(1.0, g_prev))
        throw DescentViolation("step functional increased: G(u) = " + format_number(g_new) +
                               " > G(u_prev) = " + format_number(g_prev));
    return out;
}

MeasureMass measure_mass(const Grid& g, const Field& mu)
{
    require_field(g, mu, "measure_mass");
    MeasureMass out;
    double sum = 0.0;
    for (Index j = 0; j < mu.size(); ++j) {
        if (mu[j] > 0.0)
            sum += mu[j];
        else
            out.negativity = std::max(out.negativity, -mu[j]);
    }
    out.mass = g.quad_weight() * sum;
    return out;
}

}  // namespace plateflow
