#include "fdclass/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdclass/errors.hpp"

namespace fdc {

namespace {

// ∬ a(x₁) a(x₂) G(x₁, x₂) with trapezoid weights in both variables.
double quadratic_form(const FunctionOnGrid& a, const SymmetricMatrix& g) {
    const std::vector<double> w = a.grid().weights();
    const int n = a.size();
    std::vector<double> wa(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) wa[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] * a[i];
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += g(i, j) * wa[static_cast<std::size_t>(j)];
        total += wa[static_cast<std::size_t>(i)] * row;
    }
    return total;
}

double integral_abs_product(const FunctionOnGrid& a, const FunctionOnGrid& b) {
    std::vector<double> v(static_cast<std::size_t>(a.size()));
    for (int i = 0; i < a.size(); ++i) v[static_cast<std::size_t>(i)] = std::abs(a[i] * b[i]);
    return integrate(FunctionOnGrid(a.grid(), std::move(v)));
}

}  // namespace

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::I: return "I";
        case Regime::II: return "II";
        case Regime::III: return "III";
        case Regime::IV: return "IV";
        case Regime::DegenerateD0: return "Degenerate-d0";
    }
    return "?";
}

void TheoryInputs::validate() const {
    const Grid& grid = mu0.grid();
    for (const FunctionOnGrid* f : {&mu1, &mu0_dd, &mu1_dd})
        if (!(f->grid() == grid)) throw GridMismatch();
    if (g0.dim() != grid.size() || g1.dim() != grid.size())
        throw GridMismatch("covariance dimension differs from the grid size");
    if (design_density) {
        if (!(design_density->grid() == grid)) throw GridMismatch();
        for (double v : design_density->values())
            if (!(v > 0)) throw InvalidArgument("design density must be positive on the grid");
    }
    if (!(sigma_eps0_sq > 0) || !(sigma_eps1_sq > 0)) throw InvalidArgument("noise variances must be positive");
    if (!(pi0 >= 0) || !(pi1 >= 0) || std::abs(pi0 + pi1 - 1.0) > 1e-12)
        throw InvalidArgument("priors must be non-negative and sum to one");
    if (!(nu0 > 0) || !(nu1 > 0)) throw InvalidArgument("nu0 and nu1 must be positive");
    if (!(kernel.kappa2 > 0) || !(kernel.kappa > 0)) throw InvalidArgument("kernel moments must be positive");
}

TheoryConstants compute_constants(const TheoryInputs& in) {
    in.validate();
    TheoryConstants c{};
    const FunctionOnGrid delta = in.mu1 - in.mu0;
    const double k2 = in.kernel.kappa2;

    // 2μ₀ - (μ₀+μ₁) = -Δ and 2μ₁ - (μ₀+μ₁) = Δ, so b₁₀ = -b₀₀ holds exactly.
    const double delta_sq = inner_product(delta, delta);
    c.b00 = -delta_sq;
    c.b10 = delta_sq;

    c.tau0_sq = 4 * k2 * quadratic_form(delta, in.g0);
    c.tau1_sq = 4 * k2 * quadratic_form(delta, in.g1);
    if (!(c.tau0_sq > 0) || !(c.tau1_sq > 0))
        throw ZeroTau("tau_0^2=" + std::to_string(c.tau0_sq) + ", tau_1^2=" + std::to_string(c.tau1_sq) +
                      "; the populations do not differ along directions of variation");
    const double tau0 = std::sqrt(c.tau0_sq);
    const double tau1 = std::sqrt(c.tau1_sq);
    const double w0 = standard_normal_pdf(c.b00 / tau0) / tau0;
    const double w1 = standard_normal_pdf(c.b10 / tau1) / tau1;
    c.alpha0 = w0;
    c.alpha1 = -w1;

    const double delta_mu0dd = inner_product(delta, in.mu0_dd);
    const double delta_mu1dd = inner_product(delta, in.mu1_dd);
    c.c0 = k2 * c.alpha0 * delta_mu0dd;
    c.c1 = k2 * c.alpha1 * delta_mu1dd;
    c.c01 = -k2 * c.alpha0 * delta_mu1dd;
    c.c11 = -k2 * c.alpha1 * delta_mu0dd;

    const Grid& grid = in.mu0.grid();
    if (in.design_density) {
        std::vector<double> inv(static_cast<std::size_t>(grid.size()));
        for (int i = 0; i < grid.size(); ++i) inv[static_cast<std::size_t>(i)] = 1.0 / (*in.design_density)[i];
        c.inverse_density_integral = integrate(FunctionOnGrid(grid, std::move(inv)));
    } else {
        c.inverse_density_integral = grid.length() * grid.length();
    }
    const double kf = in.kernel.kappa * c.inverse_density_integral;
    const double sigma_sq[2] = {in.sigma_eps0_sq, in.sigma_eps1_sq};
    const double alpha[2] = {c.alpha0, c.alpha1};
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) c.d[k][j] = (j == 0 ? 1.0 : -1.0) * alpha[k] * sigma_sq[j] * kf;

    c.c_0 = k2 * (in.pi0 * w0 * delta_mu0dd - in.pi1 * w1 * delta_mu1dd);
    c.c1_0 = k2 * (-in.pi0 * w0 * delta_mu1dd + in.pi1 * w1 * delta_mu0dd);
    c.d_0 = kf * (in.pi0 * w0 - in.pi1 * w1) * (in.sigma_eps0_sq - in.sigma_eps1_sq * (in.nu0 / in.nu1));

    const double max_alpha = std::max(std::abs(c.alpha0), std::abs(c.alpha1));
    c.d0_tolerance = 1e-12 * kf * std::max(in.sigma_eps0_sq, in.sigma_eps1_sq) * max_alpha;
    c.c10_tolerance = 1e-12 * k2 * max_alpha *
                      (integral_abs_product(delta, in.mu0_dd) + integral_abs_product(delta, in.mu1_dd));
    c.regime = regime_of(c.c1_0, c.d_0, c.c10_tolerance, c.d0_tolerance);
    return c;
}

Regime regime_of(double c1_0, double d_0, double c10_tolerance, double d0_tolerance) {
    if (!(std::abs(d_0) > d0_tolerance)) return Regime::DegenerateD0;
    const int c_sign = std::abs(c1_0) <= c10_tolerance ? 0 : (c1_0 > 0 ? 1 : -1);
    if (d_0 > 0) return c_sign > 0 ? Regime::I : Regime::IV;
    return c_sign < 0 ? Regime::II : c_sign > 0 ? Regime::III : Regime::II;
}

RegimeAdvice classify_regime(const TheoryConstants& c) {
    const Regime r = regime_of(c.c1_0, c.d_0, c.c10_tolerance, c.d0_tolerance);
    switch (r) {
        case Regime::I: return {r, "h1 ~ nu0^(-1/3)"};
        case Regime::II:
        case Regime::III: return {r, "h1 of strictly smaller order than nu0^(-1/3)"};
        case Regime::IV: return {r, "h1 of strictly larger order than nu0^(-1/3)"};
        case Regime::DegenerateD0: return {r, "no (nu0 h1)^(-1) term; h1 is governed by c1^0 and higher-order terms"};
    }
    return {r, ""};
}

double expansion_predict(const TheoryConstants& c, double err0, double h, double h1, double nu0) {
    if (!(h > 0) || !(h1 > 0)) throw InvalidArgument("bandwidths must be positive");
    if (!(nu0 > 0)) throw InvalidArgument("nu0 must be positive");
    return err0 + c.c_0 * h * h + c.c1_0 * h1 * h1 + c.d_0 / (nu0 * h1);
}

double expansion_minimizer(const TheoryConstants& c, double nu0) {
    if (!(c.c1_0 > 0) || !(c.d_0 > 0))
        throw InvalidArgument("an interior minimiser over h1 exists only when c1^0 > 0 and d^0 > 0");
    return std::cbrt(c.d_0 / (2 * c.c1_0 * nu0));
}

double harmonic_sample_size(const std::vector<int>& points_per_curve) {
    if (points_per_curve.empty()) throw InvalidArgument("no curves");
    double inv = 0.0;
    for (int m : points_per_curve) {
        if (m < 1) throw InvalidArgument("every curve needs at least one point");
        inv += 1.0 / m;
    }
    const auto n = static_cast<double>(points_per_curve.size());
    return n * n / inv;
}

FunctionOnGrid second_derivative(const FunctionOnGrid& f) {
    const int n = f.size();
    if (n < 4) throw InvalidArgument("second differences need at least 4 grid points");
    const double h2 = f.grid().spacing() * f.grid().spacing();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 1; i + 1 < n; ++i) out[static_cast<std::size_t>(i)] = (f[i - 1] - 2 * f[i] + f[i + 1]) / h2;
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2;
    out[static_cast<std::size_t>(n - 1)] = (2 * f[n - 1] - 5 * f[n - 2] + 4 * f[n - 3] - f[n - 4]) / h2;
    return {f.grid(), std::move(out)};
}

SymmetricMatrix covariance_from_eigenpairs(const std::vector<double>& eigenvalues,
                                           const std::vector<FunctionOnGrid>& eigenfunctions) {
    if (eigenvalues.size() != eigenfunctions.size())
        throw InvalidArgument("eigenvalue and eigenfunction counts differ");
    if (eigenfunctions.empty()) throw InvalidArgument("at least one eigenpair is required");
    const int n = eigenfunctions.front().size();
    SymmetricMatrix g(n);
    for (std::size_t l = 0; l < eigenvalues.size(); ++l) {
        const auto& psi = eigenfunctions[l];
        for (int u = 0; u < n; ++u)
            for (int v = 0; v <= u; ++v) g.add(u, v, eigenvalues[l] * psi[u] * psi[v]);
    }
    return g;
}

BuiltinScenario sine_scenario(std::string name, const SineScenarioParameters& p) {
    const Grid grid(0.0, 1.0, 101);
    const double two_pi = 2 * std::numbers::pi;
    const auto psi = FunctionOnGrid::sample(grid, [&](double t) { return std::numbers::sqrt2 * std::sin(two_pi * t); });
    const auto mu0 = FunctionOnGrid::constant(grid, 0.0);
    const auto mu1 = psi * p.amplitude;
    const auto mu1_dd = psi * (-p.amplitude * two_pi * two_pi);
    const std::vector<double> theta{p.theta};
    const std::vector<FunctionOnGrid> basis{psi};

    GaussianScenario scenario{mu0, mu1, theta, basis, theta, basis, p.sigma0, p.sigma1, p.m, p.pi0};
    const SymmetricMatrix g = covariance_from_eigenpairs(theta, basis);
    const double nu = harmonic_sample_size(std::vector<int>(static_cast<std::size_t>(p.n_train), p.m));
    TheoryInputs inputs{mu0,           mu1,      FunctionOnGrid::constant(grid, 0.0),
                        mu1_dd,        g,        g,
                        std::nullopt,  p.sigma0 * p.sigma0,
                        p.sigma1 * p.sigma1,
                        p.pi0,         1 - p.pi0,
                        nu,            nu,       kernel_moments()};
    return {std::move(name), std::move(scenario), std::move(inputs), p.n_train, p.n_train, p.h_test};
}

std::vector<std::string> builtin_scenario_names() { return {"builtin-gaussian-1", "builtin-symmetric"}; }

BuiltinScenario builtin_scenario(std::string_view name) {
    // Population 0 is noisier and more probable, which makes d⁰ > 0; a mean
    // difference with curvature makes c₁⁰ > 0. d⁰/(2c₁⁰) is about 0.28, so the
    // expansion puts the minimum over h₁ inside [ν₀^{-1/3}/4, 4ν₀^{-1/3}].
    if (name == "builtin-gaussian-1")
        return sine_scenario(std::string(name), {0.5, 0.0875, 1.5, 0.2, 0.85, 10, 50, 0.05});
    // Shared covariance, noise, sample sizes and priors: d⁰ vanishes.
    if (name == "builtin-symmetric")
        return sine_scenario(std::string(name), {0.5, 0.0875, 1.0, 1.0, 0.5, 10, 50, 0.05});
    throw InvalidArgument("unknown scenario '" + std::string(name) + "' (expected builtin-gaussian-1 or builtin-symmetric)");
}

}  // namespace fdc
