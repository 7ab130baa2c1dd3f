#pragma once

// Local linear kernel smoothing of discretely observed curves onto a grid.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fdclass/numerics.hpp"

namespace fdc {

struct Observation {
    double x;
    double y;
};

/// One individual's raw observations, optionally labelled with its population.
struct SampledCurve {
    std::string id;
    std::vector<Observation> points;
    std::optional<int> label;

    /// Throws InvalidArgument unless there are >= 2 finite points and the
    /// label, when present, is 0 or 1.
    void validate() const;
    /// Throws InvalidArgument if any x lies outside the grid's interval.
    void check_within(const Grid& grid) const;
};

enum class KernelName { Epanechnikov };

struct Kernel {
    KernelName name = KernelName::Epanechnikov;

    double operator()(double u) const {
        return (u > -1.0 && u < 1.0) ? 0.75 * (1.0 - u * u) : 0.0;
    }
    /// ∫ u^order K(u) du.
    double moment(int order) const;
};

struct KernelMoments {
    double kappa2;  // ∫ u² K
    double kappa;   // ∫ K²
};

KernelMoments kernel_moments(const Kernel& kernel = {});

/// Local linear estimate at every grid point. Throws DegenerateFit when some
/// kernel window holds fewer than two distinct design points.
FunctionOnGrid local_linear_fit(const SampledCurve& curve, double h, const Grid& grid);

/// Direct plug-in regression bandwidth (blocked quartic pilot, Mallows Cp
/// block choice, local cubic curvature estimate), on the Epanechnikov scale.
double plugin_bandwidth(const SampledCurve& curve);

/// Piecewise-linear interpolation of the raw points; y is averaged over
/// duplicate x and the ends are extended as constants.
FunctionOnGrid no_smoothing_interpolant(const SampledCurve& curve, const Grid& grid);

namespace plan {
struct PlugIn {};
struct ScaledPlugIn {
    double gamma;   // new curves
    double gamma1;  // training curves
};
struct Fixed {
    double h;
    double h1;
};
struct NoSmoothing {};
}  // namespace plan

using BandwidthPlan = std::variant<plan::PlugIn, plan::ScaledPlugIn, plan::Fixed, plan::NoSmoothing>;

enum class CurveRole { NewCurve, TrainingCurve };

inline constexpr int kMaxBandwidthDoublings = 6;

struct SmoothResult {
    FunctionOnGrid function;
    double bandwidth;  // bandwidth actually used, 0 for the interpolant
};

/// Smallest h at which every grid point's open kernel window holds two
/// distinct design points.
double minimal_bandwidth(const SampledCurve& curve, const Grid& grid);

/// First retry after a DegenerateFit uses this multiple of minimal_bandwidth.
inline constexpr double kMinimalBandwidthMargin = 1.001;

/// local_linear_fit with escalation on DegenerateFit: the first retry moves
/// up to kMinimalBandwidthMargin·minimal_bandwidth (or doubles when that is
/// not larger), later retries double. At most kMaxBandwidthDoublings retries.
SmoothResult smooth_with_bandwidth(const SampledCurve& curve, double h, const Grid& grid);

FunctionOnGrid smooth_with_plan(const SampledCurve& curve, const BandwidthPlan& plan,
                                const Grid& grid, CurveRole role);

void validate_plan(const BandwidthPlan& plan);

/// smooth_with_bandwidth of curve j at factor·h_pi[j].
std::vector<FunctionOnGrid> smooth_scaled(const std::vector<SampledCurve>& curves,
                                          const std::vector<double>& h_pi, double factor,
                                          const Grid& grid);
std::vector<FunctionOnGrid> interpolate_all(const std::vector<SampledCurve>& curves, const Grid& grid);

}  // namespace fdc
