#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "plateflow/diagnostics.hpp"
#include "random_problems.hpp"

using namespace plateflow;

namespace {

Sampler constant(double c)
{
    return [c](const Point&) { return c; };
}

ObstacleProblem bump_problem(Index m)
{
    const Grid g = Grid::build(1, {1.0}, {m});
    return ObstacleProblem::build(
        g,
        [](const Point& x) {
            const double d = x[0] - 0.5;
            return 2.0 * std::exp(-d * d / 0.01) - 0.5;
        },
        [](const Point& x) {
            const double d = x[0] - 0.5;
            return 3.0 * std::exp(-d * d / 0.04);
        });
}

std::map<std::string, bool> verdicts(const std::vector<CheckReport>& reports)
{
    std::map<std::string, bool> out;
    for (const CheckReport& r : reports)
        out[r.name] = r.passed;
    return out;
}

const CheckReport& find(const std::vector<CheckReport>& reports, const std::string& name)
{
    for (const CheckReport& r : reports)
        if (r.name == name)
            return r;
    throw std::runtime_error("no check named " + name);
}

ObstacleProblem one_node_contact()
{
    return ObstacleProblem::from_values(Grid::build(1, {1.0}, {1}), Field::Constant(1, 0.5), {-0.1, -0.1},
                                        Field::Constant(1, 1.0));
}

}  // namespace

TEST_CASE("check reports recompute their verdict")
{
    const CheckReport a = make_check("a", 2.0, 1.0, 0.0);
    CHECK(a.passed);
    CHECK(a.margin == doctest::Approx(0.5));
    const CheckReport b = make_check("b", 1.0, 1.05, 0.1);
    CHECK(b.passed);
    const CheckReport c = make_check("c", 1.0, 1.2, 0.1);
    CHECK_FALSE(c.passed);
    const CheckReport v = make_check("v", 0.0, 0.0, 0.0);
    CHECK(v.passed);
    CHECK(v.margin == 1.0);
    for (const CheckReport& r : {a, b, c, v})
        CHECK(recompute_passed(r) == r.passed);
}

TEST_CASE("trivial flow passes every check")
{
    const Grid g = Grid::build(1, {1.0}, {7});
    const ObstacleProblem p = ObstacleProblem::build(g, constant(-1.0), constant(0.0));
    const Trajectory tr = run_flow(p, 1.0, 4, StepConfig{});
    const auto reports = run_invariant_suite(tr);
    CHECK(all_passed(reports));
    for (const CheckReport& r : reports) {
        CHECK(r.observed == 0.0);
        CHECK(r.margin == 1.0);
    }
    const HolderModuli hm = holder_moduli(tr);
    CHECK(hm.l2_quotient == 0.0);
    CHECK(hm.sup_quotient == 0.0);
    CHECK(*hm.grad_sup_quotient_1d == 0.0);
}

TEST_CASE("one-step hand example: dissipation against 2 E(u0)")
{
    const ObstacleProblem p = one_node_contact();
    const Trajectory tr = run_flow(p, 1.0, 1, StepConfig{});
    CHECK(tr.energies.front() == doctest::Approx(48.0));
    const auto reports = run_invariant_suite(tr);
    const CheckReport& d = find(reports, "dissipation");
    CHECK(d.observed == doctest::Approx(0.125));
    CHECK(d.bound == doctest::Approx(96.0));
    CHECK(d.passed);
    CHECK(all_passed(reports));
}

TEST_CASE("every check passes on contact runs and verdicts are recomputable")
{
    std::mt19937 rng(8);
    std::vector<ObstacleProblem> problems{bump_problem(31)};
    for (int k = 0; k < 4; ++k)
        problems.push_back(testing::random_problem(rng, 1 + k % 2, 6));
    for (const ObstacleProblem& p : problems) {
        const Trajectory tr = run_flow(p, 0.25, 16, StepConfig{});
        const auto reports = run_invariant_suite(tr);
        for (const CheckReport& r : reports) {
            INFO(r.name << " observed " << r.observed << " bound " << r.bound);
            CHECK(r.passed);
            CHECK(recompute_passed(r) == r.passed);
        }
    }
}

TEST_CASE("fault injection flips the targeted check")
{
    const ObstacleProblem p = bump_problem(31);
    const Trajectory clean = run_flow(p, 0.5, 16, StepConfig{});
    const Trajectory fine = run_flow(p, 0.5, 32, StepConfig{});
    const auto base = verdicts(run_invariant_suite(clean, &fine));
    for (const auto& [name, ok] : base)
        REQUIRE_MESSAGE(ok, name);

    // a contact node of step 1
    Index contact = -1;
    for (Index j = 0; j < clean.state(1).size(); ++j)
        if (clean.steps[1].active_set[j] && clean.steps[1].mu[j] > 1.0)
            contact = j;
    REQUIRE(contact >= 0);

    SUBCASE("Laplacian bound")
    {
        Trajectory bad = clean;
        bad.steps[1].u.array() += 1.0;
        const auto v = verdicts(run_invariant_suite(bad, &fine));
        CHECK_FALSE(v.at("laplacian_bound"));
    }
    SUBCASE("feasibility")
    {
        Trajectory bad = clean;
        bad.steps[1].u[contact] -= 1e-6;
        const auto v = verdicts(run_invariant_suite(bad, &fine));
        for (const auto& [name, ok] : v)
            CHECK_MESSAGE(ok == (name != "feasibility"), name);
    }
    SUBCASE("measure positivity")
    {
        Trajectory bad = clean;
        bad.steps[1].mu[contact] = -bad.steps[1].mu[contact];
        const auto v = verdicts(run_invariant_suite(bad, &fine));
        for (const auto& [name, ok] : v)
            CHECK_MESSAGE(ok == (name != "measure_positivity"), name);
    }
}

TEST_CASE("Holder moduli")
{
    const ObstacleProblem p = bump_problem(63);
    const Trajectory tr = run_flow(p, 0.5, 64, StepConfig{});
    const double e0 = tr.energies.front();
    const HolderModuli hm = holder_moduli(tr);
    CHECK(hm.l2_quotient <= std::sqrt(2.0 * e0) * (1.0 + 1e-9));
    REQUIRE(hm.grad_sup_quotient_1d);
    const double bound = std::pow(2.0, 13.0 / 8.0) * std::sqrt(e0);
    CHECK(*hm.grad_sup_quotient_1d <= 1.1 * bound);
    CHECK(hm.sup_exponent == doctest::Approx(0.375));
    CHECK(std::isfinite(hm.empirical_exponents.l2));

    // the quotient is a property of the flow, not of the grid
    const ObstacleProblem p2 = bump_problem(127);
    const Trajectory tr2 = run_flow(p2, 0.5, 128, StepConfig{});
    const double q2 = grad_sup_quotient_1d(tr2);
    CHECK(q2 <= 1.1 * std::pow(2.0, 13.0 / 8.0) * std::sqrt(tr2.energies.front()));
    CHECK(std::abs(q2 - *hm.grad_sup_quotient_1d) <= 0.25 * *hm.grad_sup_quotient_1d);

    const Grid g2 = Grid::build(2, {1.0, 1.0}, {3, 3});
    const Trajectory flat = run_flow(ObstacleProblem::build(g2, constant(-1.0), constant(0.0)), 1.0, 2, StepConfig{});
    CHECK_THROWS_AS(grad_sup_quotient_1d(flat), std::invalid_argument);
    CHECK_FALSE(holder_moduli(flat).grad_sup_quotient_1d.has_value());
    CHECK(holder_moduli(flat).sup_exponent == doctest::Approx(0.25));
}

TEST_CASE("elliptic obstacle solve")
{
    const ObstacleProblem one = one_node_contact();
    const EllipticSolution a = solve_elliptic_obstacle(one, StepConfig{});
    CHECK(a.u[0] == doctest::Approx(0.5));
    CHECK(a.active_set[0]);

    const Grid g = Grid::build(2, {1.0, 1.0}, {4, 4});
    const EllipticSolution z =
        solve_elliptic_obstacle(ObstacleProblem::build(g, constant(-1.0), constant(0.0)), StepConfig{});
    CHECK(z.u.cwiseAbs().maxCoeff() <= 1e-14);

    const ObstacleProblem p = bump_problem(31);
    const EllipticSolution e = solve_elliptic_obstacle(p, StepConfig{});
    CHECK(e.kkt_residual <= 1e-10);
    const Trajectory tr = run_flow(p, 50.0, 64, StepConfig{});
    CHECK(l2_norm(p.grid(), tr.state(64) - e.u) <= 1e-6);
    CHECK(tr.steps.back().v.cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, e.u.cwiseAbs().maxCoeff()));
}

TEST_CASE("weak form residual")
{
    std::mt19937 rng(12);
    const ObstacleProblem p = bump_problem(31);
    const Trajectory tr = run_flow(p, 0.5, 16, StepConfig{});

    std::vector<Field> same;
    for (int i = 1; i <= tr.n_steps; ++i)
        same.push_back(tr.state(i));
    CHECK(weak_form_residual(tr, same).value == 0.0);

    std::uniform_real_distribution<double> lift(0.0, 1.0);
    std::bernoulli_distribution on_obstacle(0.3);
    for (int draw = 0; draw < 100; ++draw) {
        std::vector<Field> test;
        for (int i = 1; i <= tr.n_steps; ++i) {
            Field w = tr.state(i);
            for (Index j = 0; j < w.size(); ++j) {
                if (draw % 2 == 0)
                    w[j] += lift(rng);  // u~ + phi, phi >= 0
                else
                    w[j] = on_obstacle(rng) ? p.obstacle()[j] : p.obstacle()[j] + 3.0 * lift(rng);
            }
            test.push_back(std::move(w));
        }
        const WeakFormResidual r = weak_form_residual(tr, test);
        CHECK(r.value >= -1e-9 * r.scale);
    }

    std::vector<Field> infeasible = same;
    infeasible[0] = p.obstacle().array() - 1.0;
    CHECK_THROWS_AS(weak_form_residual(tr, infeasible), ObstacleViolation);
    infeasible.pop_back();
    CHECK_THROWS_AS(weak_form_residual(tr, infeasible), std::invalid_argument);
}
