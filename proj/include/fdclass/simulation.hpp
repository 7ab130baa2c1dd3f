#pragma once

// Curve generators for the six two-population benchmark models, the Monte
// Carlo experiment runner and the fixed-bandwidth error sweep on Gaussian
// scenarios.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fdclass/classifiers.hpp"
#include "fdclass/smoothing.hpp"
#include "fdclass/tuning.hpp"

namespace fdc {

enum class Model { A, B, C, D, E, F };

std::string to_string(Model model);
Model model_from_string(std::string_view name);

enum class Strategy { CV, PI, NS };

std::string_view to_string(Strategy strategy);
/// Accepts "cv", "pi" and "ns" (any case).
Strategy strategy_from_string(std::string_view name);

/// Every benchmark model lives on [0, 100].
inline constexpr double kDomainLower = 0.0;
inline constexpr double kDomainUpper = 100.0;

struct SimulationSpec {
    Model model = Model::A;
    int noise_version = 1;
    int n_tr = 50;
    int n_test = 100;
    int B = 50;
    std::uint64_t seed = 1;
    int m = 50;
    /// Evaluation grid; model_grid(model) when unset.
    std::optional<Grid> grid_override;
    /// Standard deviation of the design jitter of models D-F.
    double jitter_sd = 0.5;

    // Diagnostic hooks.
    bool zero_scores = false;
    bool zero_noise = false;

    /// Throws InvalidArgument.
    void validate() const;
    Grid grid() const;
};

/// Closed forms of one benchmark model.
struct ModelDefinition {
    Model model;
    /// Prior of population 1.
    double pi1;
    double mean(int k, double t) const;
    /// Multiplier of Z in g = μ_k + a_k(t) Z.
    double amplitude(int k, double t) const;
    /// Z ~ U[-w, w].
    double score_half_width(int k) const;
    /// Noise draw for version 1..3; always mean zero.
    double noise(int k, int version, RandomStream& stream) const;
    /// Standard deviation of that noise.
    double noise_sd(int k, int version) const;
    bool jittered() const;
};

ModelDefinition model_definition(Model model);

/// Default evaluation grid. Fixed designs (A-C) are evaluated at their own
/// design points 1, 3, ..., 99 (for m = 50): the unsmoothed curve is then the
/// raw data and no integral depends on extrapolation. Jittered designs (D-F)
/// use 251 nodes on [0, 100].
Grid model_grid(Model model, int m);

/// φ_σ(x): normal density with mean 0 and standard deviation σ.
double normal_density(double x, double sigma);

struct GeneratedCurve {
    SampledCurve curve;
    int true_label;
    FunctionOnGrid true_function;
};

struct Dataset {
    std::vector<GeneratedCurve> training;
    std::vector<GeneratedCurve> test;
};

/// Labels are drawn with the model's priors; a training sample with fewer
/// than 3 curves in either population has its labels redrawn.
Dataset generate_dataset(const SimulationSpec& spec, RandomStream& stream);

std::vector<SampledCurve> curves_of(const std::vector<GeneratedCurve>& generated);

struct CellKey {
    ClassifierKind classifier;
    Strategy strategy;
    auto operator<=>(const CellKey&) const = default;
};

struct CellResult {
    double percent_correct;
    Candidate selected;
};

struct ReplicateResult {
    int index;
    bool excluded = false;
    std::string exclusion_reason;
    std::map<CellKey, CellResult> cells;
    /// CV-error surface per classifier (CV strategy only).
    std::map<ClassifierKind, std::vector<SurfacePoint>> surfaces;
};

struct CellSummary {
    CellKey key;
    int replicates;
    double mean_percent;
    double standard_error;
    std::optional<double> mean_gamma;   // CV and PI only
    std::optional<double> mean_gamma1;
    std::optional<double> mean_p;
    /// Mean CV error per candidate over the replicates (CV strategy only).
    std::vector<SurfacePoint> mean_surface;
};

struct ExperimentReport {
    SimulationSpec spec;
    TuningConfig tuning;
    std::vector<ClassifierKind> classifiers;
    std::vector<Strategy> strategies;
    std::string generator;
    std::vector<CellSummary> cells;  // classifier-major, in request order
    std::vector<std::pair<int, std::string>> excluded;
    std::vector<ReplicateResult> replicates;

    const CellSummary& cell(ClassifierKind kind, Strategy strategy) const;
};

/// Runs replicate `index` of the experiment on its own child stream.
ReplicateResult run_replicate(const SimulationSpec& spec, int index,
                              const std::vector<Strategy>& strategies,
                              const std::vector<ClassifierKind>& classifiers,
                              const TuningConfig& tuning);

/// Replicates run on up to `threads` workers; the report does not depend on
/// the worker count. Throws Error when more than 5% of replicates are excluded.
ExperimentReport run_experiment(const SimulationSpec& spec, const std::vector<Strategy>& strategies,
                                const std::vector<ClassifierKind>& classifiers,
                                const TuningConfig& tuning, int threads = 1);

/// Gaussian populations given by a truncated Karhunen-Loève expansion.
struct GaussianScenario {
    FunctionOnGrid mean0;
    FunctionOnGrid mean1;
    std::vector<double> eigenvalues0;
    std::vector<FunctionOnGrid> eigenfunctions0;
    std::vector<double> eigenvalues1;
    std::vector<FunctionOnGrid> eigenfunctions1;
    double sigma_eps0;
    double sigma_eps1;
    int m;
    double pi0;
};

/// Curves at the cell-midpoint design lower + (2i-1)|I|/(2m), i = 1..m.
class GaussianGenerator {
public:
    /// Throws NonOrthonormalBasis unless each basis is orthonormal to 1e-6,
    /// and InvalidArgument for negative eigenvalues or bad noise levels.
    explicit GaussianGenerator(GaussianScenario scenario);

    const GaussianScenario& scenario() const { return scenario_; }
    const Grid& grid() const { return scenario_.mean0.grid(); }
    std::vector<double> design() const;

    GeneratedCurve draw(int k, RandomStream& stream, std::string id) const;
    /// Label drawn with the scenario's prior.
    GeneratedCurve draw_labelled(RandomStream& stream, std::string id) const;

    PopulationLaw law(int k) const;

private:
    GaussianScenario scenario_;
};

struct SweepConfig {
    std::vector<double> h_grid;
    std::vector<double> h1_grid;
    int n_train0 = 10;
    int n_train1 = 10;
    int n_test = 100;
    int B = 100;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct SweepPoint {
    double h;
    double h1;
    double err;
    double standard_error;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // h-major
    /// per_replicate[b][i] is the test error of replicate b at points[i].
    std::vector<std::vector<double>> per_replicate;
    int test_per_replicate = 0;
};

/// Centroid-classifier test error at every (h, h₁) with common random numbers
/// across the grid: each replicate draws one training and one test sample.
SweepResult bandwidth_sweep(const GaussianGenerator& generator, const SweepConfig& config);

/// Mean and standard error of per_replicate[.][a] - per_replicate[.][b].
std::pair<double, double> paired_difference(const SweepResult& result, std::size_t a, std::size_t b);

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + correction_; }

private:
    double sum_ = 0.0;
    double correction_ = 0.0;
};

/// Runs fn(0..count-1) on up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace fdc
