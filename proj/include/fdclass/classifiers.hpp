#pragma once

// Centroid, scale-adjusted centroid and truncated functional quadratic
// discriminant statistics. Every score is oriented so that a value <= 0
// assigns the curve to population 0.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fdclass/numerics.hpp"
#include "fdclass/population.hpp"

namespace fdc {

enum class ClassifierKind { Centroid, ScaledCentroid, Qda };

std::string_view to_string(ClassifierKind kind);
/// Accepts the short names "cent", "centsc" and "qda".
ClassifierKind classifier_from_string(std::string_view name);

/// Eigenvalues at or below this fraction of θ̂_k1 are unusable in QDA.
inline constexpr double kEigenvalueFloor = 1e-8;
/// Scales at or below this fraction of max(s0², s1²) count as zero.
inline constexpr double kZeroScaleFraction = 1e-12;

class TrainedClassifier {
public:
    /// Validates the populations for the requested kind; throws GridMismatch,
    /// ZeroScale (scaled centroid) or RankDeficient (QDA).
    TrainedClassifier(ClassifierKind kind, std::shared_ptr<const PopulationEstimate> pop0,
                      std::shared_ptr<const PopulationEstimate> pop1, int p = 1);

    ClassifierKind kind() const { return kind_; }
    int p() const { return p_; }
    const PopulationEstimate& pop0() const { return *pop0_; }
    const PopulationEstimate& pop1() const { return *pop1_; }

    /// Score for this classifier's kind.
    double score(const FunctionOnGrid& g) const;
    int classify(const FunctionOnGrid& g) const;

private:
    ClassifierKind kind_;
    std::shared_ptr<const PopulationEstimate> pop0_;
    std::shared_ptr<const PopulationEstimate> pop1_;
    int p_;
};

/// Estimates both populations from smoothed curves with labels in {0, 1}.
/// QDA forms only the first p eigenfunctions (p defaults to 1).
TrainedClassifier train_classifier(const std::vector<FunctionOnGrid>& smoothed,
                                   const std::vector<int>& labels, ClassifierKind kind,
                                   std::optional<int> p = std::nullopt);

/// Largest p for which every θ̂_kℓ, ℓ <= p, of this population clears the floor.
int usable_rank(const PopulationEstimate& pop);

/// ∫(ĝ-μ̂₀)² - ∫(ĝ-μ̂₁)².
double centroid_score(const FunctionOnGrid& g, const TrainedClassifier& c);
/// s₀⁻²∫(ĝ-μ̂₀)² - s₁⁻²∫(ĝ-μ̂₁)² + log(s₀²/s₁²).
double scaled_centroid_score(const FunctionOnGrid& g, const TrainedClassifier& c);
/// Truncated quadratic discriminant with the classifier's p.
double qda_score(const FunctionOnGrid& g, const TrainedClassifier& c);

/// Quadratic discriminant for every truncation 1..p_max at once; element
/// p-1 holds the statistic truncated at p.
std::vector<double> qda_score_prefixes(const FunctionOnGrid& g, const PopulationEstimate& pop0,
                                       const PopulationEstimate& pop1, int p_max);

/// Known population law used by the likelihood-ratio oracle.
struct PopulationLaw {
    FunctionOnGrid mean;
    std::vector<double> eigenvalues;
    std::vector<FunctionOnGrid> eigenfunctions;
};

/// The quadratic discriminant evaluated with true means and eigenpairs.
double oracle_qda_score(const FunctionOnGrid& g, const PopulationLaw& law0,
                        const PopulationLaw& law1, int p);

/// 0 iff score <= 0. Throws NonFiniteScore.
int decide(double score);

}  // namespace fdc
