#include "fdclass/smoothing.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "fdclass/errors.hpp"

namespace fdc {

void SampledCurve::validate() const {
    if (points.size() < 2)
        throw InvalidArgument("curve '" + id + "' needs at least two observations");
    for (const auto& p : points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw InvalidArgument("curve '" + id + "' has a non-finite observation");
    if (label && *label != 0 && *label != 1)
        throw InvalidArgument("curve '" + id + "' has a label other than 0 or 1");
}

void SampledCurve::check_within(const Grid& grid) const {
    for (const auto& p : points)
        if (p.x < grid.lower() || p.x > grid.upper())
            throw InvalidArgument("curve '" + id + "' has x=" + std::to_string(p.x) +
                                  " outside the grid interval");
}

double Kernel::moment(int order) const {
    if (order < 0) throw InvalidArgument("kernel moment order must be non-negative");
    if (order % 2 == 1) return 0.0;
    // ∫_{-1}^{1} (3/4)(1-u²) u^r du = (3/2) [1/(r+1) - 1/(r+3)]
    const double r = order;
    return 1.5 * (1.0 / (r + 1.0) - 1.0 / (r + 3.0));
}

KernelMoments kernel_moments(const Kernel& kernel) {
    switch (kernel.name) {
        case KernelName::Epanechnikov:
            return {kernel.moment(2), 3.0 / 5.0};
    }
    throw InvalidArgument("unknown kernel");
}

namespace {

std::vector<Observation> sorted_points(const SampledCurve& curve) {
    std::vector<Observation> pts = curve.points;
    std::stable_sort(pts.begin(), pts.end(),
                     [](const Observation& a, const Observation& b) { return a.x < b.x; });
    return pts;
}

// Solves the small dense system a x = b in place (partial pivoting).
// Returns false when the system is numerically singular.
template <std::size_t N>
bool solve_dense(std::array<std::array<double, N>, N> a, std::array<double, N> b,
                 std::array<double, N>& x, std::size_t n = N) {
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) <= 1e-13 * scale) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
        x[i] = s / a[i][i];
    }
    return true;
}

struct QuarticBlockFit {
    double rss = 0.0;
    double theta22 = 0.0;  // mean of (g'')² over the points
    double theta24 = 0.0;  // mean of g''·g'''' over the points
    bool ok = true;
};

// Least-squares quartics on `blocks` consecutive equal-count blocks.
QuarticBlockFit fit_quartic_blocks(const std::vector<Observation>& pts, int blocks) {
    QuarticBlockFit out;
    const auto n = static_cast<int>(pts.size());
    const int per_block = n / blocks;
    for (int b = 0; b < blocks; ++b) {
        const int lo = b * per_block;
        const int hi = (b == blocks - 1) ? n : (b + 1) * per_block;
        double xmin = pts[static_cast<std::size_t>(lo)].x;
        double xmax = pts[static_cast<std::size_t>(hi - 1)].x;
        const double center = 0.5 * (xmin + xmax);
        const double half = 0.5 * (xmax - xmin);
        if (!(half > 0) || hi - lo < 5) {
            out.ok = false;
            return out;
        }
        std::array<std::array<double, 5>, 5> xtx{};
        std::array<double, 5> xty{};
        for (int i = lo; i < hi; ++i) {
            const double t = (pts[static_cast<std::size_t>(i)].x - center) / half;
            std::array<double, 5> pw{1.0, t, t * t, t * t * t, t * t * t * t};
            for (std::size_t r = 0; r < 5; ++r) {
                xty[r] += pw[r] * pts[static_cast<std::size_t>(i)].y;
                for (std::size_t c = 0; c < 5; ++c) xtx[r][c] += pw[r] * pw[c];
            }
        }
        std::array<double, 5> beta{};
        if (!solve_dense(xtx, xty, beta)) {
            out.ok = false;
            return out;
        }
        for (int i = lo; i < hi; ++i) {
            const auto& p = pts[static_cast<std::size_t>(i)];
            const double t = (p.x - center) / half;
            const double fit = beta[0] + t * (beta[1] + t * (beta[2] + t * (beta[3] + t * beta[4])));
            const double d2 = (2 * beta[2] + 6 * beta[3] * t + 12 * beta[4] * t * t) / (half * half);
            const double d4 = 24 * beta[4] / (half * half * half * half);
            out.rss += (p.y - fit) * (p.y - fit);
            out.theta22 += d2 * d2;
            out.theta24 += d2 * d4;
        }
    }
    out.theta22 /= n;
    out.theta24 /= n;
    return out;
}

double gaussian_kernel(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); }

// Second derivative at x0 from a Gaussian-weighted local cubic fit.
std::optional<double> local_cubic_second_derivative(const std::vector<Observation>& pts,
                                                    double x0, double h) {
    std::array<std::array<double, 4>, 4> xtx{};
    std::array<double, 4> xty{};
    for (const auto& p : pts) {
        const double t = (p.x - x0) / h;
        const double w = gaussian_kernel(t);
        if (w == 0.0) continue;
        std::array<double, 4> pw{1.0, t, t * t, t * t * t};
        for (std::size_t r = 0; r < 4; ++r) {
            xty[r] += w * pw[r] * p.y;
            for (std::size_t c = 0; c < 4; ++c) xtx[r][c] += w * pw[r] * pw[c];
        }
    }
    std::array<double, 4> beta{};
    if (!solve_dense(xtx, xty, beta)) return std::nullopt;
    return 2.0 * beta[2] / (h * h);
}

double median_gap(const std::vector<Observation>& pts) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < pts.size(); ++i) gaps.push_back(pts[i].x - pts[i - 1].x);
    std::sort(gaps.begin(), gaps.end());
    const std::size_t k = gaps.size();
    return (k % 2 == 1) ? gaps[k / 2] : 0.5 * (gaps[k / 2 - 1] + gaps[k / 2]);
}

}  // namespace

FunctionOnGrid local_linear_fit(const SampledCurve& curve, double h, const Grid& grid) {
    if (!(h > 0) || !std::isfinite(h)) throw InvalidArgument("bandwidth must be positive");
    curve.validate();
    curve.check_within(grid);
    const std::vector<Observation> pts = sorted_points(curve);
    const Kernel kernel;

    std::vector<double> out(static_cast<std::size_t>(grid.size()));
    std::size_t first = 0;
    for (int g = 0; g < grid.size(); ++g) {
        const double x = grid.point(g);
        while (first < pts.size() && pts[first].x <= x - h) ++first;
        double u0 = 0, u1 = 0, u2 = 0, v0 = 0, v1 = 0;
        for (std::size_t i = first; i < pts.size() && pts[i].x < x + h; ++i) {
            const double u = (x - pts[i].x) / h;
            const double w = kernel(u);
            u0 += w;
            u1 += u * w;
            u2 += u * u * w;
            v0 += pts[i].y * w;
            v1 += pts[i].y * u * w;
        }
        const double det = u2 * u0 - u1 * u1;
        if (!(u0 > 0) || det <= 1e-12 * u0 * u0) throw DegenerateFit(x, h);
        out[static_cast<std::size_t>(g)] = (u2 * v0 - u1 * v1) / det;
    }
    return {grid, std::move(out)};
}

double plugin_bandwidth(const SampledCurve& curve) {
    curve.validate();
    if (curve.points.size() < 10)
        throw InsufficientData("plug-in bandwidth needs at least 10 observations, curve '" +
                               curve.id + "' has " + std::to_string(curve.points.size()));
    std::vector<Observation> pts = sorted_points(curve);
    const double a = pts.front().x;
    const double b = pts.back().x;
    const double range = b - a;
    if (!(range > 0)) throw InsufficientData("plug-in bandwidth needs distinct x values");
    const double upper_cap = range / 2.0;
    const double lower_cap = std::min(2.0 * median_gap(pts), upper_cap);
    auto clamp = [&](double h) { return std::clamp(h, lower_cap, upper_cap); };

    // 1% trim at each end in x.
    const std::size_t trim = static_cast<std::size_t>(std::floor(0.01 * static_cast<double>(pts.size())));
    if (trim > 0) pts = std::vector<Observation>(pts.begin() + static_cast<long>(trim),
                                                 pts.end() - static_cast<long>(trim));
    const int n = static_cast<int>(pts.size());

    // Pilot: number of quartic blocks by Mallows' Cp.
    const int max_blocks = std::max(std::min(n / 20, 5), 1);
    const QuarticBlockFit full = fit_quartic_blocks(pts, max_blocks);
    if (!full.ok) return upper_cap;
    int blocks = 1;
    if (max_blocks > 1) {
        const double sigma_full = full.rss / (n - 5 * max_blocks);
        double best_cp = 0.0;
        for (int nb = 1; nb <= max_blocks; ++nb) {
            const QuarticBlockFit fit = nb == max_blocks ? full : fit_quartic_blocks(pts, nb);
            if (!fit.ok) continue;
            const double cp = fit.rss / sigma_full - (n - 10 * nb);
            if (nb == 1 || cp < best_cp) {
                best_cp = cp;
                blocks = nb;
            }
        }
    }
    const QuarticBlockFit pilot = fit_quartic_blocks(pts, blocks);
    if (!pilot.ok || n - 5 * blocks <= 0) return upper_cap;
    const double sigma2_q = pilot.rss / (n - 5 * blocks);
    const double theta24 = pilot.theta24;
    // Residuals at rounding level: the data are polynomial, no curvature to balance.
    double y_max = 0.0;
    for (const auto& p : pts) y_max = std::max(y_max, std::abs(p.y));
    const double rounding = 64 * std::numeric_limits<double>::epsilon() * y_max;
    if (sigma2_q <= rounding * rounding) return upper_cap;
    if (!(sigma2_q > 0) || theta24 == 0.0 || !std::isfinite(theta24)) return upper_cap;

    // Curvature functional from a local cubic with a rule-of-thumb bandwidth.
    double g = sigma2_q * range / (std::abs(theta24) * n);
    g = theta24 < 0 ? std::pow(3.0 * g / (8.0 * std::sqrt(std::numbers::pi)), 1.0 / 7.0)
                    : std::pow(15.0 * g / (16.0 * std::sqrt(std::numbers::pi)), 1.0 / 7.0);
    const double lo_x = a + 0.05 * range;
    const double hi_x = b - 0.05 * range;
    double theta22 = 0.0;
    for (const auto& p : pts) {
        if (p.x < lo_x || p.x > hi_x) continue;
        const auto d2 = local_cubic_second_derivative(pts, p.x, g);
        if (!d2) return upper_cap;
        theta22 += (*d2) * (*d2);
    }
    theta22 /= n;
    if (!(theta22 > 0) || !std::isfinite(theta22)) return upper_cap;

    // Error variance from a local linear fit with its own plug-in bandwidth.
    const double c3k = std::pow(
        4.0 * (0.5 + 2.0 * std::sqrt(2.0) - 4.0 / 3.0 * std::sqrt(3.0)) / std::sqrt(2.0 * std::numbers::pi),
        1.0 / 5.0);
    const double lambda = c3k * std::pow(sigma2_q * sigma2_q * range / (theta22 * n * theta22 * n), 1.0 / 5.0);
    double rss = 0.0;
    double trace_s = 0.0;
    double trace_sts = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x0 = pts[static_cast<std::size_t>(i)].x;
        double s0 = 0, s1 = 0, s2 = 0;
        std::vector<double> w(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const double d = pts[static_cast<std::size_t>(j)].x - x0;
            w[static_cast<std::size_t>(j)] = gaussian_kernel(d / lambda);
            s0 += w[static_cast<std::size_t>(j)];
            s1 += w[static_cast<std::size_t>(j)] * d;
            s2 += w[static_cast<std::size_t>(j)] * d * d;
        }
        const double det = s0 * s2 - s1 * s1;
        if (!(det > 1e-12 * s0 * s0 * lambda * lambda)) return upper_cap;
        double fit = 0.0;
        double row_sq = 0.0;
        for (int j = 0; j < n; ++j) {
            const double d = pts[static_cast<std::size_t>(j)].x - x0;
            const double l = w[static_cast<std::size_t>(j)] * (s2 - d * s1) / det;
            fit += l * pts[static_cast<std::size_t>(j)].y;
            row_sq += l * l;
            if (j == i) trace_s += l;
        }
        const double r = pts[static_cast<std::size_t>(i)].y - fit;
        rss += r * r;
        trace_sts += row_sq;
    }
    const double dof = n - 2.0 * trace_s + trace_sts;
    if (!(dof > 0)) return upper_cap;
    const double sigma2 = rss / dof;

    const KernelMoments km = kernel_moments();
    const double h = std::pow(km.kappa * sigma2 * range / (km.kappa2 * km.kappa2 * theta22 * n), 1.0 / 5.0);
    if (!std::isfinite(h)) return upper_cap;
    return clamp(h);
}

FunctionOnGrid no_smoothing_interpolant(const SampledCurve& curve, const Grid& grid) {
    curve.validate();
    const std::vector<Observation> pts = sorted_points(curve);
    std::vector<Observation> knots;
    for (std::size_t i = 0; i < pts.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < pts.size() && pts[j].x == pts[i].x) sum += pts[j++].y;
        knots.push_back({pts[i].x, sum / static_cast<double>(j - i)});
        i = j;
    }
    std::vector<double> out(static_cast<std::size_t>(grid.size()));
    std::size_t seg = 0;
    for (int g = 0; g < grid.size(); ++g) {
        const double x = grid.point(g);
        double value;
        if (x <= knots.front().x) {
            value = knots.front().y;
        } else if (x >= knots.back().x) {
            value = knots.back().y;
        } else {
            while (knots[seg + 1].x < x) ++seg;
            const auto& l = knots[seg];
            const auto& r = knots[seg + 1];
            if (x == r.x) {
                value = r.y;
            } else {
                const double t = (x - l.x) / (r.x - l.x);
                value = l.y + t * (r.y - l.y);
            }
        }
        out[static_cast<std::size_t>(g)] = value;
    }
    return {grid, std::move(out)};
}

double minimal_bandwidth(const SampledCurve& curve, const Grid& grid) {
    curve.validate();
    std::vector<double> xs;
    for (const auto& o : sorted_points(curve))
        if (xs.empty() || o.x != xs.back()) xs.push_back(o.x);
    if (xs.size() < 2) throw DegenerateFit(grid.lower(), 0.0);
    double widest = 0.0;
    for (int g = 0; g < grid.size(); ++g) {
        const double x = grid.point(g);
        // Merge outwards from x; the second distance taken is the answer.
        auto right = std::lower_bound(xs.begin(), xs.end(), x);
        auto left = right;
        double second = 0.0;
        for (int taken = 0; taken < 2; ++taken) {
            const bool can_left = left != xs.begin();
            const bool can_right = right != xs.end();
            if (can_right && (!can_left || *right - x <= x - *(left - 1))) {
                second = *right - x;
                ++right;
            } else {
                second = x - *(left - 1);
                --left;
            }
        }
        widest = std::max(widest, second);
    }
    return widest;
}

SmoothResult smooth_with_bandwidth(const SampledCurve& curve, double h, const Grid& grid) {
    double bandwidth = h;
    for (int attempt = 0;; ++attempt) {
        try {
            return {local_linear_fit(curve, bandwidth, grid), bandwidth};
        } catch (const DegenerateFit&) {
            if (attempt == kMaxBandwidthDoublings) throw;
            const double floor = kMinimalBandwidthMargin * minimal_bandwidth(curve, grid);
            bandwidth = attempt == 0 && floor > bandwidth ? floor : 2.0 * bandwidth;
        }
    }
}

void validate_plan(const BandwidthPlan& plan) {
    if (const auto* s = std::get_if<plan::ScaledPlugIn>(&plan)) {
        if (!(s->gamma > 0) || !(s->gamma1 > 0))
            throw InvalidArgument("bandwidth scale factors must be positive");
    } else if (const auto* f = std::get_if<plan::Fixed>(&plan)) {
        if (!(f->h > 0) || !(f->h1 > 0)) throw InvalidArgument("fixed bandwidths must be positive");
    }
}

FunctionOnGrid smooth_with_plan(const SampledCurve& curve, const BandwidthPlan& plan,
                                const Grid& grid, CurveRole role) {
    validate_plan(plan);
    const bool training = role == CurveRole::TrainingCurve;
    return std::visit(
        [&](const auto& p) -> FunctionOnGrid {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, plan::NoSmoothing>) {
                return no_smoothing_interpolant(curve, grid);
            } else if constexpr (std::is_same_v<P, plan::PlugIn>) {
                return smooth_with_bandwidth(curve, plugin_bandwidth(curve), grid).function;
            } else if constexpr (std::is_same_v<P, plan::ScaledPlugIn>) {
                const double factor = training ? p.gamma1 : p.gamma;
                return smooth_with_bandwidth(curve, factor * plugin_bandwidth(curve), grid).function;
            } else {
                return smooth_with_bandwidth(curve, training ? p.h1 : p.h, grid).function;
            }
        },
        plan);
}

std::vector<FunctionOnGrid> smooth_scaled(const std::vector<SampledCurve>& curves,
                                          const std::vector<double>& h_pi, double factor,
                                          const Grid& grid) {
    if (h_pi.size() != curves.size()) throw InvalidArgument("one bandwidth per curve is required");
    std::vector<FunctionOnGrid> out;
    out.reserve(curves.size());
    for (std::size_t j = 0; j < curves.size(); ++j)
        out.push_back(smooth_with_bandwidth(curves[j], factor * h_pi[j], grid).function);
    return out;
}

std::vector<FunctionOnGrid> interpolate_all(const std::vector<SampledCurve>& curves, const Grid& grid) {
    std::vector<FunctionOnGrid> out;
    out.reserve(curves.size());
    for (const auto& c : curves) out.push_back(no_smoothing_interpolant(c, grid));
    return out;
}

}  // namespace fdc
