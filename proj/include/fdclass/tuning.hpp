#pragma once

// Leave-one-out estimate of classification error and exhaustive search over
// bandwidth scale factors (γ for new curves, γ₁ for training curves) and the
// QDA truncation p.

#include <optional>
#include <string>
#include <vector>

#include "fdclass/classifiers.hpp"
#include "fdclass/smoothing.hpp"

namespace fdc {

struct Priors {
    double pi0 = 0.5;
    double pi1 = 0.5;
};

struct TuningConfig {
    std::vector<double> gamma_grid{0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 1, 1.4, 2, 3, 5};
    std::vector<double> gamma1_grid{0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 1, 1.4, 2, 3, 5};
    std::vector<int> p_grid{1, 2, 3, 4, 5, 6, 7, 8};
    Priors priors;

    /// Grids nonempty, strictly ascending and positive; priors sum to one.
    void validate() const;
};

struct Candidate {
    double gamma = 1.0;
    double gamma1 = 1.0;
    std::optional<int> p;  // QDA only

    bool operator==(const Candidate&) const = default;
};

struct SurfacePoint {
    Candidate candidate;
    double cv_error;
};

struct SkippedCandidate {
    Candidate candidate;
    std::string reason;
};

struct TuningResult {
    Candidate best;
    double cv_error = 0.0;
    std::vector<SurfacePoint> surface;  // in (γ, γ₁, p) order
    std::vector<SkippedCandidate> skipped;
};

/// Weighted leave-one-out error on curves that are already smoothed.
/// `training[j]` is curve j smoothed as a training curve and `held_out[j]`
/// the same curve smoothed as a new curve. Builds, for every fold, the
/// population of the held-out curve without it.
class LooCrossValidator {
public:
    /// Throws TooFewCurves unless each population has >= 3 curves.
    LooCrossValidator(std::vector<FunctionOnGrid> training, std::vector<int> labels,
                      ClassifierKind kind, int p_max = 1);

    /// Largest p every fold supports (QDA); 1 for the centroid classifiers.
    int feasible_p() const { return feasible_p_; }

    /// CV error for each p = 1..feasible_p() (a single entry for the
    /// centroid classifiers). Throws ZeroScale for the scaled centroid when a
    /// fold has a vanishing scale.
    std::vector<double> errors(const std::vector<FunctionOnGrid>& held_out, const Priors& priors) const;

private:
    struct Fold {
        std::shared_ptr<const PopulationEstimate> own;
    };

    ClassifierKind kind_;
    std::vector<int> labels_;
    int n0_ = 0;
    int n1_ = 0;
    int feasible_p_ = 1;
    std::shared_ptr<const PopulationEstimate> full_[2];
    std::vector<Fold> folds_;
};

/// Plug-in bandwidth per curve; these do not depend on the fold or on γ.
std::vector<double> plugin_bandwidths(const std::vector<SampledCurve>& curves);

/// CV error of one (γ, γ₁, p) candidate.
double cv_error(const std::vector<SampledCurve>& training, ClassifierKind kind, double gamma,
                double gamma1, std::optional<int> p, const Grid& grid, const Priors& priors = {});

/// Exhaustive search; ties go to the smallest γ, then γ₁, then p.
TuningResult select_tuning(const std::vector<SampledCurve>& training, ClassifierKind kind,
                           const TuningConfig& config, const Grid& grid);

/// As select_tuning but with `h_pi` supplied (the per-curve plug-in bandwidths).
TuningResult select_tuning(const std::vector<SampledCurve>& training, const std::vector<double>& h_pi,
                           ClassifierKind kind, const TuningConfig& config, const Grid& grid);

/// Choice of p alone for curves smoothed by a fixed rule (PI or NS). For the
/// centroid classifiers this just reports the CV error.
TuningResult select_truncation(const std::vector<FunctionOnGrid>& training,
                               const std::vector<FunctionOnGrid>& held_out,
                               const std::vector<int>& labels, ClassifierKind kind,
                               const TuningConfig& config);

std::vector<int> labels_of(const std::vector<SampledCurve>& curves);

}  // namespace fdc
