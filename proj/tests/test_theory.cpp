#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fdclass/errors.hpp"
#include "fdclass/theory.hpp"

using namespace fdc;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Closed forms for the sine scenario: Δ = a√2 sin(2πt) lies along the only
// eigenfunction, so every integral reduces to a multiple of a².
struct SineClosedForm {
    double b00, tau_sq, w, c_0, c1_0, d_0;
};

SineClosedForm closed_form(const SineScenarioParameters& p) {
    const double k2 = 0.2, kappa = 0.6;
    const double a2 = p.amplitude * p.amplitude;
    SineClosedForm f{};
    f.b00 = -a2;
    f.tau_sq = 4 * k2 * p.theta * a2;
    const double tau = std::sqrt(f.tau_sq);
    f.w = std::exp(-0.5 * (a2 / tau) * (a2 / tau)) / std::sqrt(kTwoPi) / tau;
    const double delta_mu1dd = -kTwoPi * kTwoPi * a2;
    f.c_0 = k2 * (-(1 - p.pi0) * f.w * delta_mu1dd);
    f.c1_0 = k2 * (-p.pi0 * f.w * delta_mu1dd);
    f.d_0 = kappa * (p.pi0 - (1 - p.pi0)) * f.w * (p.sigma0 * p.sigma0 - p.sigma1 * p.sigma1);
    return f;
}

TheoryInputs random_inputs(std::uint64_t seed) {
    RandomStream s(seed);
    const Grid grid(0, 2, 41);
    const double a = s.normal(0, 1), b = s.normal(0, 1), c = s.normal(0, 1);
    auto mu0 = FunctionOnGrid::sample(grid, [&](double t) { return a * t * t + b; });
    auto mu1 = FunctionOnGrid::sample(grid, [&](double t) { return c * std::sin(t) + a * t * t; });
    const auto psi1 = FunctionOnGrid::sample(grid, [](double t) { return std::cos(std::numbers::pi * t / 2); });
    const auto psi2 = FunctionOnGrid::sample(grid, [](double t) { return std::sin(std::numbers::pi * t / 2); });
    const auto g0 = covariance_from_eigenpairs({1.0 + s.uniform(0, 1), 0.3}, {psi1, psi2});
    const auto g1 = covariance_from_eigenpairs({0.5, 0.2 + s.uniform(0, 1)}, {psi1, psi2});
    return {mu0, mu1, second_derivative(mu0), second_derivative(mu1), g0, g1, std::nullopt,
            0.5 + s.uniform(0, 1), 0.5 + s.uniform(0, 1), 0.4, 0.6, 300, 400, kernel_moments()};
}

}  // namespace

TEST_CASE("sine scenario constants match closed forms") {
    const SineScenarioParameters params[] = {{0.5, 0.0875, 1.5, 0.2, 0.85, 10, 50, 0.05},
                                             {1.0, 0.3, 0.5, 0.9, 0.3, 20, 40, 0.05}};
    for (const auto& p : params) {
        const auto sc = sine_scenario("t", p);
        const auto c = compute_constants(sc.inputs);
        const auto f = closed_form(p);
        CHECK(c.b00 == doctest::Approx(f.b00).epsilon(1e-9));
        CHECK(c.tau0_sq == doctest::Approx(f.tau_sq).epsilon(1e-9));
        CHECK(c.tau1_sq == doctest::Approx(f.tau_sq).epsilon(1e-9));
        CHECK(c.alpha0 == doctest::Approx(f.w).epsilon(1e-9));
        CHECK(c.alpha1 == doctest::Approx(-f.w).epsilon(1e-9));
        CHECK(c.c_0 == doctest::Approx(f.c_0).epsilon(1e-9));
        CHECK(c.c1_0 == doctest::Approx(f.c1_0).epsilon(1e-9));
        CHECK(c.d_0 == doctest::Approx(f.d_0).epsilon(1e-9));
        CHECK(c.inverse_density_integral == 1.0);
    }
}

TEST_CASE("builtin scenarios") {
    const auto g = builtin_scenario("builtin-gaussian-1");
    const auto c = compute_constants(g.inputs);
    CHECK(c.regime == Regime::I);
    CHECK(classify_regime(c).recommendation == "h1 ~ nu0^(-1/3)");
    CHECK(g.inputs.nu0 == doctest::Approx(500));
    const double h1 = expansion_minimizer(c, g.inputs.nu0);
    const double base = std::cbrt(1.0 / g.inputs.nu0);
    CHECK(h1 > base / 4);
    CHECK(h1 < base * 4);

    const auto sym = compute_constants(builtin_scenario("builtin-symmetric").inputs);
    CHECK(sym.d_0 == 0.0);
    CHECK(sym.regime == Regime::DegenerateD0);
    CHECK(to_string(sym.regime) == "Degenerate-d0");

    CHECK_THROWS_AS(builtin_scenario("nope"), InvalidArgument);
    CHECK(builtin_scenario_names().size() == 2);
}

TEST_CASE("b10 is exactly -b00") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto c = compute_constants(random_inputs(seed));
        CHECK(c.b10 == -c.b00);
        CHECK(c.b00 < 0);
        CHECK(c.alpha0 > 0);
        CHECK(c.alpha1 < 0);
    }
}

TEST_CASE("equal means give ZeroTau") {
    auto in = random_inputs(3);
    in.mu1 = in.mu0;
    in.mu1_dd = in.mu0_dd;
    CHECK_THROWS_AS(compute_constants(in), ZeroTau);
}

TEST_CASE("swapping the noise variances negates d0 when nu0 = nu1") {
    auto in = random_inputs(4);
    in.nu1 = in.nu0;
    const auto a = compute_constants(in);
    std::swap(in.sigma_eps0_sq, in.sigma_eps1_sq);
    const auto b = compute_constants(in);
    CHECK(b.d_0 == doctest::Approx(-a.d_0).epsilon(1e-14));
    CHECK(b.c1_0 == a.c1_0);

    in.sigma_eps1_sq = in.sigma_eps0_sq;
    CHECK(compute_constants(in).regime == Regime::DegenerateD0);
}

TEST_CASE("scaling identities") {
    auto in = random_inputs(5);
    const auto base = compute_constants(in);

    // Noise variances enter d linearly.
    auto noisy = in;
    noisy.sigma_eps0_sq *= 3;
    noisy.sigma_eps1_sq *= 3;
    const auto cn = compute_constants(noisy);
    CHECK(cn.d_0 == doctest::Approx(3 * base.d_0).epsilon(1e-12));
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) CHECK(cn.d[k][j] == doctest::Approx(3 * base.d[k][j]).epsilon(1e-12));
    CHECK(cn.c1_0 == base.c1_0);

    // Covariances enter only through τ².
    auto wide = in;
    for (auto* g : {&wide.g0, &wide.g1})
        for (int u = 0; u < g->dim(); ++u)
            for (int v = 0; v <= u; ++v) g->set(u, v, 4 * (*g)(u, v));
    const auto cw = compute_constants(wide);
    CHECK(cw.tau0_sq == doctest::Approx(4 * base.tau0_sq).epsilon(1e-12));
    CHECK(cw.tau1_sq == doctest::Approx(4 * base.tau1_sq).epsilon(1e-12));
    CHECK(cw.b00 == base.b00);

    // A uniform density on [0, 2] reproduces the default |I|².
    auto dens = in;
    dens.design_density = FunctionOnGrid::constant(in.mu0.grid(), 0.5);
    CHECK(compute_constants(dens).inverse_density_integral == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(base.inverse_density_integral == 4.0);

    // c⁰ and c₁⁰ are the prior-weighted sums of the per-population terms.
    CHECK(base.c_0 == doctest::Approx(in.pi0 * base.c0 + in.pi1 * base.c1).epsilon(1e-12));
    CHECK(base.c1_0 == doctest::Approx(in.pi0 * base.c01 + in.pi1 * base.c11).epsilon(1e-12));
}

TEST_CASE("scaling the mean difference") {
    auto in = random_inputs(7);
    const auto base = compute_constants(in);
    const double lambda = 1.7;
    // μ₁ ↦ μ₀ + λ(μ₁ - μ₀), with μ₁″ following.
    auto scaled = in;
    scaled.mu1 = in.mu0 + (in.mu1 - in.mu0) * lambda;
    scaled.mu1_dd = in.mu0_dd + (in.mu1_dd - in.mu0_dd) * lambda;
    const auto c = compute_constants(scaled);
    CHECK(c.b00 == doctest::Approx(lambda * lambda * base.b00).epsilon(1e-12));
    CHECK(c.tau0_sq == doctest::Approx(lambda * lambda * base.tau0_sq).epsilon(1e-12));
    CHECK(c.tau1_sq == doctest::Approx(lambda * lambda * base.tau1_sq).epsilon(1e-12));
    // b/τ scales by λ, so α_k changes by the Gaussian factor and 1/λ.
    for (int k = 0; k < 2; ++k) {
        const double b = base.b00, tau = std::sqrt(k ? base.tau1_sq : base.tau0_sq);
        const double ratio = std::exp(-0.5 * (lambda * lambda - 1) * (b / tau) * (b / tau)) / lambda;
        CHECK((k ? c.alpha1 / base.alpha1 : c.alpha0 / base.alpha0) == doctest::Approx(ratio).epsilon(1e-10));
    }
    // c₀ = κ₂α₀∫Δμ₀″ gains λ from Δ on top of the α ratio.
    CHECK(c.c0 / base.c0 == doctest::Approx(lambda * c.alpha0 / base.alpha0).epsilon(1e-10));
    CHECK(c.c11 / base.c11 == doctest::Approx(lambda * c.alpha1 / base.alpha1).epsilon(1e-10));
}

TEST_CASE("regime from signs") {
    CHECK(regime_of(1, 1, 0, 0) == Regime::I);
    CHECK(regime_of(-1, -1, 0, 0) == Regime::II);
    CHECK(regime_of(1, -1, 0, 0) == Regime::III);
    CHECK(regime_of(-1, 1, 0, 0) == Regime::IV);
    CHECK(regime_of(1, 1e-20, 0, 1e-15) == Regime::DegenerateD0);
    CHECK(regime_of(1e-20, 1, 1e-15, 0) == Regime::IV);
    CHECK(regime_of(1e-20, -1, 1e-15, 0) == Regime::II);
}

TEST_CASE("expansion prediction and minimiser") {
    const auto c = compute_constants(builtin_scenario("builtin-gaussian-1").inputs);
    const double nu0 = 500;
    for (double h : {0.01, 0.05, 0.2}) {
        const double step = expansion_predict(c, 0.1, 2 * h, 0.1, nu0) - expansion_predict(c, 0.1, h, 0.1, nu0);
        CHECK(step == doctest::Approx(3 * c.c_0 * h * h).epsilon(1e-10));
    }
    const double star = expansion_minimizer(c, nu0);
    double best = 0, best_val = 1e300;
    for (int i = 1; i <= 200000; ++i) {
        const double h1 = i * 1e-6;
        const double v = expansion_predict(c, 0, 0.05, h1, nu0);
        if (v < best_val) best_val = v, best = h1;
    }
    CHECK(best == doctest::Approx(star).epsilon(1e-4));
    CHECK_THROWS_AS(expansion_predict(c, 0, 0, 0.1, nu0), InvalidArgument);

    // With d⁰ = 0 the prediction tends to err⁰ as both bandwidths shrink.
    const auto sym = compute_constants(builtin_scenario("builtin-symmetric").inputs);
    CHECK(expansion_predict(sym, 0.25, 1e-8, 1e-8, nu0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(expansion_minimizer(compute_constants(builtin_scenario("builtin-symmetric").inputs), nu0),
                    InvalidArgument);
}

TEST_CASE("second differences are exact for cubics") {
    const Grid grid(-1, 2, 31);
    const auto f = FunctionOnGrid::sample(grid, [](double t) { return t * t * t - 2 * t * t + 5; });
    const auto d = second_derivative(f);
    for (int i = 0; i < grid.size(); ++i) CHECK(d[i] == doctest::Approx(6 * grid.point(i) - 4).epsilon(1e-9).scale(1));
    CHECK_THROWS_AS(second_derivative(FunctionOnGrid::constant(Grid(0, 1, 3), 1)), InvalidArgument);
}

TEST_CASE("harmonic sample size") {
    CHECK(harmonic_sample_size({50, 50, 50}) == doctest::Approx(150));
    CHECK(harmonic_sample_size({1, 2}) == doctest::Approx(4.0 / 1.5));
    CHECK_THROWS_AS(harmonic_sample_size({}), InvalidArgument);
    CHECK_THROWS_AS(harmonic_sample_size({3, 0}), InvalidArgument);
}

TEST_CASE("input validation") {
    auto in = random_inputs(6);
    in.pi0 = 0.9;
    CHECK_THROWS_AS(compute_constants(in), InvalidArgument);
    in = random_inputs(6);
    in.sigma_eps0_sq = 0;
    CHECK_THROWS_AS(compute_constants(in), InvalidArgument);
    in = random_inputs(6);
    in.mu1 = FunctionOnGrid::constant(Grid(0, 2, 11), 0);
    CHECK_THROWS_AS(compute_constants(in), GridMismatch);
    in = random_inputs(6);
    in.design_density = FunctionOnGrid::constant(in.mu0.grid(), 0);
    CHECK_THROWS_AS(compute_constants(in), InvalidArgument);
    CHECK_THROWS_AS(covariance_from_eigenpairs({1, 2}, {FunctionOnGrid::constant(Grid(0, 1, 5), 1)}),
                    InvalidArgument);
}
