#pragma once

// Per-population mean, covariance, principal components and scale of a set
// of smoothed curves.

#include <vector>

#include "fdclass/numerics.hpp"

namespace fdc {

enum class EigenRoute {
    /// Jacobi on the n×n Gram matrix of centred curves, mapped back to the grid.
    Gram,
    /// Jacobi on the grid-sized matrix W^{1/2} Ĝ W^{1/2}.
    DenseGrid,
};

struct PopulationOptions {
    EigenRoute route = EigenRoute::Gram;
    /// Eigenfunctions are formed only for eigenvalues above this fraction of
    /// the largest one.
    double eigenfunction_cutoff = 1e-12;
    /// Upper bound on the number of eigenfunctions formed; negative means all.
    int max_eigenfunctions = -1;
};

class PopulationEstimate {
public:
    int index() const { return k_; }
    int n_curves() const { return n_curves_; }
    const Grid& grid() const { return mean_.grid(); }
    const FunctionOnGrid& mean() const { return mean_; }
    double scale_sq() const { return scale_sq_; }
    /// Descending; the operator has at most n_curves nonzero eigenvalues and
    /// only those (plus zeros up to n_curves) are stored.
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    /// Quadrature-normalised (∫ψ² = 1); eigenfunctions().size() <= eigenvalues().size().
    const std::vector<FunctionOnGrid>& eigenfunctions() const { return eigenfunctions_; }

    /// Ĝ(u, v) on the grid, divisor n_k.
    SymmetricMatrix covariance() const;

    bool operator==(const PopulationEstimate& other) const = default;

private:
    friend PopulationEstimate estimate_population(const std::vector<FunctionOnGrid>&, int,
                                                  const PopulationOptions&);
    PopulationEstimate(int k, int n, FunctionOnGrid mean)
        : k_(k), n_curves_(n), mean_(std::move(mean)) {}

    int k_;
    int n_curves_;
    FunctionOnGrid mean_;
    double scale_sq_ = 0.0;
    std::vector<double> eigenvalues_;
    std::vector<FunctionOnGrid> eigenfunctions_;
    std::vector<std::vector<double>> deviations_;  // canonical curve order
};

/// Throws TooFewCurves (n < 2) or GridMismatch.
PopulationEstimate estimate_population(const std::vector<FunctionOnGrid>& smoothed, int k,
                                       const PopulationOptions& options = {});

/// |s_k² - Σ θ̂_kℓ|.
double scale_sq_identity_check(const PopulationEstimate& pop);

}  // namespace fdc
