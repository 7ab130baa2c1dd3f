#pragma once

// Leading constants of the centroid classifier's error expansion in the
// bandwidths (h for the new curve, h₁ for the training curves), and the
// classification of the sign pattern of (c₁⁰, d⁰) into four regimes.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdclass/numerics.hpp"
#include "fdclass/simulation.hpp"
#include "fdclass/smoothing.hpp"

namespace fdc {

struct TheoryInputs {
    FunctionOnGrid mu0;
    FunctionOnGrid mu1;
    FunctionOnGrid mu0_dd;  // μ₀″
    FunctionOnGrid mu1_dd;  // μ₁″
    SymmetricMatrix g0;     // G₀ on the grid
    SymmetricMatrix g1;
    /// Design density f_X on the grid; when absent the design is uniform and
    /// ∫ f_X⁻¹ = |I|².
    std::optional<FunctionOnGrid> design_density;
    double sigma_eps0_sq;
    double sigma_eps1_sq;
    double pi0 = 0.5;
    double pi1 = 0.5;
    double nu0;
    double nu1;
    KernelMoments kernel = kernel_moments();

    /// Throws InvalidArgument or GridMismatch.
    void validate() const;
};

enum class Regime { I, II, III, IV, DegenerateD0 };

std::string_view to_string(Regime regime);

struct TheoryConstants {
    double b00, b10;
    double tau0_sq, tau1_sq;
    double alpha0, alpha1;
    double c0, c1;    // c_k
    double c01, c11;  // c_k1
    double d[2][2];   // d[k][j]
    double c_0;       // c⁰
    double c1_0;      // c₁⁰
    double d_0;       // d⁰
    double inverse_density_integral;
    double d0_tolerance;
    double c10_tolerance;
    Regime regime;
};

/// Throws ZeroTau when τ₀² or τ₁² is not positive.
TheoryConstants compute_constants(const TheoryInputs& inputs);

struct RegimeAdvice {
    Regime regime;
    std::string recommendation;
};

/// I: c₁⁰ > 0, d⁰ > 0. II: both < 0. III: c₁⁰ > 0, d⁰ < 0. IV: c₁⁰ < 0,
/// d⁰ > 0. |d⁰| within tolerance is DegenerateD0. A c₁⁰ within tolerance
/// counts as zero, which puts d⁰ > 0 in IV and d⁰ < 0 in II.
RegimeAdvice classify_regime(const TheoryConstants& c);
Regime regime_of(double c1_0, double d_0, double c10_tolerance, double d0_tolerance);

/// err⁰ + c⁰h² + c₁⁰h₁² + d⁰/(ν₀h₁). Throws InvalidArgument unless h, h₁ > 0.
double expansion_predict(const TheoryConstants& c, double err0, double h, double h1, double nu0);

/// (d⁰/(2c₁⁰ν₀))^{1/3}, the minimiser over h₁ in regime I.
double expansion_minimizer(const TheoryConstants& c, double nu0);

/// ν = n²(Σ_j m_j⁻¹)⁻¹.
double harmonic_sample_size(const std::vector<int>& points_per_curve);

/// Centred second differences; second-order one-sided stencils at the ends.
FunctionOnGrid second_derivative(const FunctionOnGrid& f);

/// G(u, v) = Σ θ_ℓ ψ_ℓ(u) ψ_ℓ(v).
SymmetricMatrix covariance_from_eigenpairs(const std::vector<double>& eigenvalues,
                                           const std::vector<FunctionOnGrid>& eigenfunctions);

/// A named Gaussian scenario with its analytic theory inputs and the sample
/// sizes and test bandwidth of the accompanying Monte Carlo sweep.
struct BuiltinScenario {
    std::string name;
    GaussianScenario scenario;
    TheoryInputs inputs;
    int n_train0;
    int n_train1;
    double h_test;
};

/// Scenario on [0, 1]: μ₀ = 0, μ₁ = amplitude·√2 sin(2πt), one shared
/// eigenpair (theta, √2 sin(2πt)), uniform design of m cell midpoints.
struct SineScenarioParameters {
    double amplitude;
    double theta;
    double sigma0;
    double sigma1;
    double pi0;
    int n_train;  // per population
    int m;
    double h_test;
};

BuiltinScenario sine_scenario(std::string name, const SineScenarioParameters& p);

/// "builtin-gaussian-1" (regime I) or "builtin-symmetric" (d⁰ = 0).
BuiltinScenario builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();

}  // namespace fdc
