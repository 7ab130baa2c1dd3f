#include "fdclass/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fdclass/errors.hpp"

namespace fdc {

namespace {

void normalise_and_orient(std::vector<double>& psi, const std::vector<double>& w) {
    double norm = 0.0;
    for (std::size_t g = 0; g < psi.size(); ++g) norm += w[g] * psi[g] * psi[g];
    norm = std::sqrt(norm);
    std::size_t arg = 0;
    for (std::size_t g = 1; g < psi.size(); ++g)
        if (std::abs(psi[g]) > std::abs(psi[arg])) arg = g;
    const double s = (psi[arg] < 0 ? -1.0 : 1.0) / norm;
    for (double& v : psi) v *= s;
}

}  // namespace

SymmetricMatrix PopulationEstimate::covariance() const {
    const int dim = grid().size();
    SymmetricMatrix cov(dim);
    const double inv_n = 1.0 / n_curves_;
    for (int u = 0; u < dim; ++u) {
        for (int v = 0; v <= u; ++v) {
            double s = 0.0;
            for (const auto& d : deviations_)
                s += d[static_cast<std::size_t>(u)] * d[static_cast<std::size_t>(v)];
            cov.set(u, v, s * inv_n);
        }
    }
    return cov;
}

PopulationEstimate estimate_population(const std::vector<FunctionOnGrid>& smoothed, int k,
                                       const PopulationOptions& options) {
    const int n = static_cast<int>(smoothed.size());
    if (n < 2)
        throw TooFewCurves("population " + std::to_string(k) + " needs at least two curves, got " +
                           std::to_string(n));
    const Grid grid = smoothed.front().grid();
    for (const auto& f : smoothed)
        if (!(f.grid() == grid)) throw GridMismatch();
    const auto dim = static_cast<std::size_t>(grid.size());

    // Canonical (lexicographic) order makes every result independent of the
    // order in which curves were supplied.
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto va = smoothed[a].values();
        auto vb = smoothed[b].values();
        return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
    });

    // Running mean: equal curves give their common value exactly, so tied
    // populations produce exactly tied scores.
    std::vector<double> mean(dim, 0.0);
    double count = 0.0;
    for (std::size_t j : order) {
        auto v = smoothed[j].values();
        count += 1.0;
        for (std::size_t g = 0; g < dim; ++g) mean[g] += (v[g] - mean[g]) / count;
    }

    PopulationEstimate pop(k, n, FunctionOnGrid(grid, mean));
    pop.deviations_.reserve(static_cast<std::size_t>(n));
    for (std::size_t j : order) {
        auto v = smoothed[j].values();
        std::vector<double> d(dim);
        for (std::size_t g = 0; g < dim; ++g) d[g] = v[g] - mean[g];
        pop.deviations_.push_back(std::move(d));
    }

    auto wants_more = [&](const PopulationEstimate& p) {
        return options.max_eigenfunctions < 0 ||
               static_cast<int>(p.eigenfunctions_.size()) < options.max_eigenfunctions;
    };

    const std::vector<double> w = grid.weights();
    double scale = 0.0;
    for (const auto& d : pop.deviations_)
        for (std::size_t g = 0; g < dim; ++g) scale += w[g] * d[g] * d[g];
    pop.scale_sq_ = scale / n;

    if (options.route == EigenRoute::Gram) {
        SymmetricMatrix gram(n);
        for (int i = 0; i < n; ++i) {
            const auto& di = pop.deviations_[static_cast<std::size_t>(i)];
            for (int j = 0; j <= i; ++j) {
                const auto& dj = pop.deviations_[static_cast<std::size_t>(j)];
                double s = 0.0;
                for (std::size_t g = 0; g < dim; ++g) s += w[g] * di[g] * dj[g];
                gram.set(i, j, s / n);
            }
        }
        const EigenDecomposition eig = symmetric_eigen(gram);
        const double top = std::max(eig.values.front(), 0.0);
        for (int l = 0; l < n; ++l) {
            const double lambda = std::max(eig.values[static_cast<std::size_t>(l)], 0.0);
            pop.eigenvalues_.push_back(lambda);
            if (top > 0 && lambda > options.eigenfunction_cutoff * top && wants_more(pop)) {
                const auto& u = eig.vectors[static_cast<std::size_t>(l)];
                std::vector<double> psi(dim, 0.0);
                for (int j = 0; j < n; ++j) {
                    const double c = u[static_cast<std::size_t>(j)];
                    const auto& dj = pop.deviations_[static_cast<std::size_t>(j)];
                    for (std::size_t g = 0; g < dim; ++g) psi[g] += c * dj[g];
                }
                normalise_and_orient(psi, w);
                pop.eigenfunctions_.emplace_back(grid, std::move(psi));
            }
        }
    } else {
        const SymmetricMatrix cov = pop.covariance();
        std::vector<double> root_w(dim);
        for (std::size_t g = 0; g < dim; ++g) root_w[g] = std::sqrt(w[g]);
        SymmetricMatrix op(static_cast<int>(dim));
        for (std::size_t u = 0; u < dim; ++u)
            for (std::size_t v = 0; v <= u; ++v)
                op.set(static_cast<int>(u), static_cast<int>(v),
                       root_w[u] * cov(static_cast<int>(u), static_cast<int>(v)) * root_w[v]);
        const EigenDecomposition eig = symmetric_eigen(op);
        const double top = std::max(eig.values.front(), 0.0);
        const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(n), dim);
        for (std::size_t l = 0; l < keep; ++l) {
            const double lambda = std::max(eig.values[l], 0.0);
            pop.eigenvalues_.push_back(lambda);
            if (top > 0 && lambda > options.eigenfunction_cutoff * top && wants_more(pop)) {
                std::vector<double> psi(dim);
                for (std::size_t g = 0; g < dim; ++g) psi[g] = eig.vectors[l][g] / root_w[g];
                normalise_and_orient(psi, w);
                pop.eigenfunctions_.emplace_back(grid, std::move(psi));
            }
        }
    }
    return pop;
}

double scale_sq_identity_check(const PopulationEstimate& pop) {
    double sum = 0.0;
    for (double t : pop.eigenvalues()) sum += t;
    return std::abs(pop.scale_sq() - sum);
}

}  // namespace fdc
