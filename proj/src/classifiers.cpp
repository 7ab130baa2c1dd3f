#include "fdclass/classifiers.hpp"

#include <cmath>

#include "fdclass/errors.hpp"

namespace fdc {

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Centroid: return "cent";
        case ClassifierKind::ScaledCentroid: return "centsc";
        case ClassifierKind::Qda: return "qda";
    }
    return "?";
}

ClassifierKind classifier_from_string(std::string_view name) {
    if (name == "cent") return ClassifierKind::Centroid;
    if (name == "centsc") return ClassifierKind::ScaledCentroid;
    if (name == "qda") return ClassifierKind::Qda;
    throw InvalidArgument("unknown classifier '" + std::string(name) + "' (expected cent, centsc or qda)");
}

int usable_rank(const PopulationEstimate& pop) {
    const auto& theta = pop.eigenvalues();
    if (theta.empty() || !(theta.front() > 0)) return 0;
    const double floor = kEigenvalueFloor * theta.front();
    int r = 0;
    while (r < static_cast<int>(pop.eigenfunctions().size()) &&
           theta[static_cast<std::size_t>(r)] > floor)
        ++r;
    return r;
}

TrainedClassifier::TrainedClassifier(ClassifierKind kind,
                                     std::shared_ptr<const PopulationEstimate> pop0,
                                     std::shared_ptr<const PopulationEstimate> pop1, int p)
    : kind_(kind), pop0_(std::move(pop0)), pop1_(std::move(pop1)), p_(p) {
    if (!pop0_ || !pop1_) throw InvalidArgument("classifier needs two populations");
    if (!(pop0_->grid() == pop1_->grid())) throw GridMismatch();
    if (kind_ == ClassifierKind::ScaledCentroid) {
        const double s0 = pop0_->scale_sq();
        const double s1 = pop1_->scale_sq();
        const double limit = kZeroScaleFraction * std::max(s0, s1);
        if (!(s0 > limit) || !(s1 > limit))
            throw ZeroScale("scaled centroid needs positive scales, got s0^2=" + std::to_string(s0) +
                            " s1^2=" + std::to_string(s1));
    }
    if (kind_ == ClassifierKind::Qda) {
        if (p_ < 1) throw InvalidArgument("QDA truncation p must be at least 1");
        for (int k = 0; k < 2; ++k) {
            const int rank = usable_rank(k == 0 ? *pop0_ : *pop1_);
            if (rank < p_) throw RankDeficient(k, rank + 1);
        }
    }
}

double TrainedClassifier::score(const FunctionOnGrid& g) const {
    switch (kind_) {
        case ClassifierKind::Centroid: return centroid_score(g, *this);
        case ClassifierKind::ScaledCentroid: return scaled_centroid_score(g, *this);
        case ClassifierKind::Qda: return qda_score(g, *this);
    }
    throw InvalidArgument("unknown classifier kind");
}

int TrainedClassifier::classify(const FunctionOnGrid& g) const { return decide(score(g)); }

double centroid_score(const FunctionOnGrid& g, const TrainedClassifier& c) {
    return squared_distance(g, c.pop0().mean()) - squared_distance(g, c.pop1().mean());
}

double scaled_centroid_score(const FunctionOnGrid& g, const TrainedClassifier& c) {
    const double s0 = c.pop0().scale_sq();
    const double s1 = c.pop1().scale_sq();
    // Written so that swapping the populations negates the score exactly.
    return (squared_distance(g, c.pop0().mean()) / s0 - squared_distance(g, c.pop1().mean()) / s1) +
           (std::log(s0) - std::log(s1));
}

namespace {

double projection(const FunctionOnGrid& g, const FunctionOnGrid& mean, const FunctionOnGrid& psi) {
    if (!(g.grid() == mean.grid()) || !(g.grid() == psi.grid())) throw GridMismatch();
    auto a = g.values();
    auto m = mean.values();
    auto p = psi.values();
    const std::size_t n = a.size();
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) interior += (a[i] - m[i]) * p[i];
    return g.grid().spacing() *
           (interior + 0.5 * ((a[0] - m[0]) * p[0] + (a[n - 1] - m[n - 1]) * p[n - 1]));
}

double qda_term(double z0, double theta0, double z1, double theta1) {
    return (z0 * z0 / theta0 - z1 * z1 / theta1) + (std::log(theta0) - std::log(theta1));
}

}  // namespace

std::vector<double> qda_score_prefixes(const FunctionOnGrid& g, const PopulationEstimate& pop0,
                                       const PopulationEstimate& pop1, int p_max) {
    if (p_max > static_cast<int>(pop0.eigenfunctions().size()) ||
        p_max > static_cast<int>(pop1.eigenfunctions().size()))
        throw InvalidArgument("truncation exceeds the available eigenfunctions");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(p_max));
    double total = 0.0;
    for (int l = 0; l < p_max; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        const double z0 = projection(g, pop0.mean(), pop0.eigenfunctions()[ul]);
        const double z1 = projection(g, pop1.mean(), pop1.eigenfunctions()[ul]);
        total += qda_term(z0, pop0.eigenvalues()[ul], z1, pop1.eigenvalues()[ul]);
        out.push_back(total);
    }
    return out;
}

double qda_score(const FunctionOnGrid& g, const TrainedClassifier& c) {
    return qda_score_prefixes(g, c.pop0(), c.pop1(), c.p()).back();
}

double oracle_qda_score(const FunctionOnGrid& g, const PopulationLaw& law0,
                        const PopulationLaw& law1, int p) {
    if (p < 1) throw InvalidArgument("truncation p must be at least 1");
    for (const PopulationLaw* law : {&law0, &law1}) {
        if (static_cast<int>(law->eigenvalues.size()) < p ||
            static_cast<int>(law->eigenfunctions.size()) < p)
            throw InvalidArgument("population law has fewer than p eigenpairs");
        for (int l = 0; l < p; ++l)
            if (!(law->eigenvalues[static_cast<std::size_t>(l)] > 0))
                throw RankDeficient(law == &law0 ? 0 : 1, l + 1);
    }
    double total = 0.0;
    for (int l = 0; l < p; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        const double z0 = projection(g, law0.mean, law0.eigenfunctions[ul]);
        const double z1 = projection(g, law1.mean, law1.eigenfunctions[ul]);
        total += qda_term(z0, law0.eigenvalues[ul], z1, law1.eigenvalues[ul]);
    }
    return total;
}

int decide(double score) {
    if (!std::isfinite(score)) throw NonFiniteScore();
    return score <= 0.0 ? 0 : 1;
}

TrainedClassifier train_classifier(const std::vector<FunctionOnGrid>& smoothed,
                                   const std::vector<int>& labels, ClassifierKind kind,
                                   std::optional<int> p) {
    if (smoothed.size() != labels.size()) throw InvalidArgument("one label per curve is required");
    std::vector<FunctionOnGrid> groups[2];
    for (std::size_t j = 0; j < smoothed.size(); ++j) {
        if (labels[j] != 0 && labels[j] != 1) throw InvalidArgument("labels must be 0 or 1");
        groups[labels[j]].push_back(smoothed[j]);
    }
    PopulationOptions options;
    options.max_eigenfunctions = kind == ClassifierKind::Qda ? p.value_or(1) : 0;
    auto pop0 = std::make_shared<const PopulationEstimate>(estimate_population(groups[0], 0, options));
    auto pop1 = std::make_shared<const PopulationEstimate>(estimate_population(groups[1], 1, options));
    return TrainedClassifier(kind, std::move(pop0), std::move(pop1), p.value_or(1));
}

}  // namespace fdc
