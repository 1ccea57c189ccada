#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fracgrad/optimize.hpp"

using Catch::Approx;
using namespace fracgrad;

namespace {

FractionalConfig base_config(double alpha = 0.5) {
    FractionalConfig cfg;
    cfg.schedule = OrderSchedule::constant(alpha);
    return cfg;
}

void check_invariants(const Trajectory& traj, const FractionalConfig& cfg) {
    REQUIRE(traj.steps.size() + 1 == traj.iterates.size());
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        // the recorded update must re-play bitwise
        REQUIRE(traj.iterates[k + 1] == traj.iterates[k] - cfg.mu * traj.steps[k].deriv);
    }
}

}  // namespace

TEST_CASE("single moving-terminal step on x^2 from history {0, 1}", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config();
    const double history[] = {0.0, 1.0};
    auto [next, rec] = algo1_step(f, cfg, history);
    REQUIRE(next == Approx(0.84954944438726499).epsilon(1e-12));
    REQUIRE(rec.deriv == Approx(1.5045055561273501).epsilon(1e-12));
    REQUIRE(rec.terms_used == 2);
    REQUIRE(rec.series_status == SeriesStatus::ExactFinite);
    REQUIRE(rec.lag_gap == 1.0);
}

TEST_CASE("single moving-terminal step on x from history {0, 1}", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 1.0});
    auto cfg = base_config();
    const double history[] = {0.0, 1.0};
    auto [next, rec] = algo1_step(f, cfg, history);
    REQUIRE(next == Approx(0.88716208329044874).epsilon(1e-12));
    REQUIRE(rec.terms_used == 1);
}

TEST_CASE("recorded steps replay bitwise", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config();
    cfg.x0 = 1.0;
    cfg.warmup = WarmupPolicy::GDBootstrap;
    cfg.stop.max_iters = 40;
    auto traj = run(f, cfg, Algorithm::Algo1);
    REQUIRE(traj.iterates.size() > 3);
    check_invariants(traj, cfg);
}

TEST_CASE("order one reduces every scheme to classical gradient descent bitwise",
          "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.5, -2.0, 0.0, 1.0});
    auto gd_cfg = base_config(1.0);
    gd_cfg.x0 = 0.25;
    gd_cfg.stop.max_iters = 30;
    auto gd = run(f, gd_cfg, Algorithm::ClassicalGD);

    for (auto warmup : {WarmupPolicy::ReplicateX0, WarmupPolicy::GDBootstrap}) {
        auto cfg = gd_cfg;
        cfg.warmup = warmup;
        auto frac = run(f, cfg, Algorithm::Algo1);
        REQUIRE(frac.iterates == gd.iterates);
        REQUIRE(frac.terminal_status == gd.terminal_status);
    }
    auto a3 = run(f, gd_cfg, Algorithm::Algo3);
    REQUIRE(a3.iterates == gd.iterates);
}

TEST_CASE("classical descent converges on a shifted quadratic", "[optimize]") {
    auto f = DifferentiableFunction::shifted_quadratic(3.0, 1.0);
    auto cfg = base_config(1.0);
    cfg.x0 = 0.0;
    cfg.stop.max_iters = 200;
    auto traj = run(f, cfg, Algorithm::ClassicalGD);
    REQUIRE(traj.terminal_status == TerminalStatus::StoppedByTolerance);
    REQUIRE(traj.iterates.back() == Approx(3.0).margin(1e-8));
    check_invariants(traj, cfg);
}

TEST_CASE("replicated-history warmup never leaves the start for order below one",
          "[optimize]") {
    // the synthetic history gives step 0 a zero gap; a zero-gap series is 0,
    // so the update is 0 and the zero gap reproduces itself forever
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(0.5);
    cfg.x0 = 1.0;
    cfg.warmup = WarmupPolicy::ReplicateX0;
    auto traj = run(f, cfg, Algorithm::Algo1);
    REQUIRE(traj.terminal_status == TerminalStatus::StoppedByTolerance);
    for (double x : traj.iterates) REQUIRE(x == 1.0);
}

TEST_CASE("classical bootstrap warmup actually moves", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(0.5);
    cfg.x0 = 1.0;
    cfg.warmup = WarmupPolicy::GDBootstrap;
    cfg.stop.max_iters = 20;
    auto traj = run(f, cfg, Algorithm::Algo1);
    REQUIRE(traj.iterates.size() > 2);
    REQUIRE(traj.iterates[1] == Approx(0.8).epsilon(1e-15));  // classical step
    REQUIRE(traj.iterates[2] != traj.iterates[1]);            // fractional step moves too
    REQUIRE(traj.steps[0].terms_used == 1);
    REQUIRE(traj.steps[1].terms_used >= 1);
    check_invariants(traj, cfg);
}

TEST_CASE("a constant objective stops immediately", "[optimize]") {
    auto f = DifferentiableFunction::constant(5.0);
    auto cfg = base_config(0.5);
    cfg.x0 = 2.0;
    auto traj = run(f, cfg, Algorithm::Algo1);
    REQUIRE(traj.terminal_status == TerminalStatus::StoppedByTolerance);
    REQUIRE(traj.iterates.size() == 2);
    REQUIRE(traj.steps[0].deriv == 0.0);
}

TEST_CASE("two runs of the same config agree bitwise", "[optimize]") {
    auto f = DifferentiableFunction::exponential(1.0, -0.5);
    auto cfg = base_config(0.7);
    cfg.x0 = 2.0;
    cfg.warmup = WarmupPolicy::GDBootstrap;
    cfg.stop.max_iters = 30;
    auto a = run(f, cfg, Algorithm::Algo1);
    auto b = run(f, cfg, Algorithm::Algo1);
    REQUIRE(a.iterates == b.iterates);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
        REQUIRE(a.steps[k].deriv == b.steps[k].deriv);
        REQUIRE(a.steps[k].terms_used == b.steps[k].terms_used);
    }
    REQUIRE(a.terminal_status == b.terminal_status);
}

TEST_CASE("mirrored terminal evaluates the series on the reflected gap", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(0.5);
    const double history[] = {1.0, 0.8};  // iterate fell below its lagged terminal
    auto [next, rec] = algo1_step(f, cfg, history);
    double mirrored = 0.8 - std::abs(0.8 - 1.0);
    REQUIRE(rec.deriv == caputo_series(f, 0.5, mirrored, 0.8).value);
    REQUIRE(next == 0.8 - cfg.mu * rec.deriv);
    REQUIRE(rec.lag_gap == Approx(0.2).epsilon(1e-15));
    // descent direction is preserved: f' > 0 at 0.8, so the update moves left
    REQUIRE(rec.deriv > 0.0);
}

TEST_CASE("hard-error terminal policy ends the run with a domain status", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(0.5);
    cfg.x0 = 1.0;
    cfg.warmup = WarmupPolicy::GDBootstrap;
    cfg.terminal_policy = TerminalOrderPolicy::HardError;
    auto traj = run(f, cfg, Algorithm::Algo1);
    // the bootstrap step descends, so step 1 sees x_1 < x_0 and refuses
    REQUIRE(traj.terminal_status == TerminalStatus::SeriesDomainError);
    REQUIRE(traj.terminal_detail.find("not above") != std::string::npos);
    REQUIRE(traj.iterates.size() == 2);
    REQUIRE(traj.steps.size() == 1);
}

TEST_CASE("strict gamma mode surfaces as a domain-error run", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(0.5);
    cfg.x0 = 1.0;
    cfg.gamma_mode = GammaMode::Strict;
    auto traj = run(f, cfg, Algorithm::Algo3);
    REQUIRE(traj.terminal_status == TerminalStatus::SeriesDomainError);
    REQUIRE(traj.terminal_detail.find("Gamma(-0.5)") != std::string::npos);
}

TEST_CASE("variable-order scheme recomputes its order each step", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config();
    cfg.schedule = OrderSchedule::sigmoidal(0.3, 0.9, 1.0, 2.0);
    cfg.x0 = 2.0;
    cfg.stop.max_iters = 15;
    auto traj = run(f, cfg, Algorithm::Algo3);
    REQUIRE(traj.steps.size() >= 5);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        double x_k = traj.iterates[k];
        double alpha_k = schedule_alpha(cfg.schedule, x_k, cfg.fixed_terminal);
        REQUIRE(traj.steps[k].deriv ==
                caputo_series(f, alpha_k, cfg.fixed_terminal, x_k, cfg.truncation).value);
    }
    check_invariants(traj, cfg);
}

TEST_CASE("runaway step gain is reported as divergence", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(1.0);
    cfg.mu = 1e150;
    cfg.x0 = 1.0;
    auto traj = run(f, cfg, Algorithm::ClassicalGD);
    REQUIRE(traj.terminal_status == TerminalStatus::Diverged);
    REQUIRE(!std::isfinite(traj.iterates.back()));
    REQUIRE(traj.steps.size() + 1 == traj.iterates.size());
}

TEST_CASE("series divergence aborts the run without using the partial sum", "[optimize]") {
    // near the pole of -1/(1-x) the term ratio exceeds 1 and the divergence
    // window fires; the partial sum must not be turned into a step
    auto f = DifferentiableFunction::rational_pole(-1.0, 1.0);
    auto cfg = base_config(0.5);
    cfg.mu = 0.002;
    cfg.x0 = 0.85;
    cfg.warmup = WarmupPolicy::GDBootstrap;
    auto traj = run(f, cfg, Algorithm::Algo1);
    REQUIRE(traj.terminal_status == TerminalStatus::SeriesDivergence);
    REQUIRE(traj.terminal_detail.find("k=1") != std::string::npos);
    REQUIRE(traj.iterates.size() == 2);
    REQUIRE(traj.steps.size() == 1);
    REQUIRE(std::isfinite(traj.iterates.back()));
}

TEST_CASE("max iteration cap is exact", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto cfg = base_config(1.0);
    cfg.x0 = 1.0;
    cfg.stop.step_tol = 0.0;
    cfg.stop.max_iters = 7;
    auto traj = run(f, cfg, Algorithm::ClassicalGD);
    REQUIRE(traj.terminal_status == TerminalStatus::MaxIters);
    REQUIRE(traj.iterates.size() == 8);
}

TEST_CASE("config validation rejects bad fields", "[optimize]") {
    auto f = DifferentiableFunction::polynomial({0.0, 0.0, 1.0});
    auto good = base_config();

    auto cfg = good;
    cfg.mu = 0.0;
    REQUIRE_THROWS_AS(run(f, cfg, Algorithm::Algo1), std::invalid_argument);
    cfg = good;
    cfg.lag = 0;
    REQUIRE_THROWS_AS(run(f, cfg, Algorithm::Algo1), std::invalid_argument);
    cfg = good;
    cfg.stop.max_iters = 0;
    REQUIRE_THROWS_AS(run(f, cfg, Algorithm::Algo1), std::invalid_argument);
    cfg = good;
    cfg.schedule = OrderSchedule::constant(1.5);
    REQUIRE_THROWS_AS(run(f, cfg, Algorithm::Algo1), std::invalid_argument);
    cfg = good;
    cfg.schedule = OrderSchedule::sigmoidal(0.3, 0.9, 1.0, 2.0);
    REQUIRE_THROWS_AS(run(f, cfg, Algorithm::Algo1), std::invalid_argument);
    // the same schedule is fine for the variable-order scheme
    cfg.x0 = 2.0;
    cfg.stop.max_iters = 3;
    REQUIRE_NOTHROW(run(f, cfg, Algorithm::Algo3));

    auto pole = DifferentiableFunction::rational_pole(-1.0, 1.0);
    cfg = good;
    cfg.x0 = 2.0;  // outside (-inf, 1)
    REQUIRE_THROWS_AS(run(pole, cfg, Algorithm::Algo1), DomainError);

    const double short_history[] = {1.0};
    REQUIRE_THROWS_AS(algo1_step(f, good, short_history), std::invalid_argument);
}
