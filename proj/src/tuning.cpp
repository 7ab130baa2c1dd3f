#include "fdclass/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fdclass/errors.hpp"

namespace fdc {

namespace {

template <typename T>
void check_ascending(const std::vector<T>& grid, const char* name) {
    if (grid.empty()) throw InvalidArgument(std::string(name) + " must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0)) throw InvalidArgument(std::string(name) + " entries must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw InvalidArgument(std::string(name) + " must be strictly ascending");
    }
}

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.gamma != b.gamma) return a.gamma < b.gamma;
    if (a.gamma1 != b.gamma1) return a.gamma1 < b.gamma1;
    return a.p.value_or(0) < b.p.value_or(0);
}

void finish(TuningResult& result) {
    std::stable_sort(result.surface.begin(), result.surface.end(),
                     [](const SurfacePoint& a, const SurfacePoint& b) {
                         return candidate_less(a.candidate, b.candidate);
                     });
    if (result.surface.empty()) {
        std::string why = result.skipped.empty() ? "no candidates" : result.skipped.front().reason;
        throw Error("every tuning candidate failed; first failure: " + why);
    }
    const SurfacePoint* best = &result.surface.front();
    for (const auto& pt : result.surface)
        if (pt.cv_error < best->cv_error) best = &pt;
    result.best = best->candidate;
    result.cv_error = best->cv_error;
}

// Surface entries for one smoothed (training, held-out) pair.
void evaluate_pair(const LooCrossValidator& validator, const std::vector<FunctionOnGrid>& held_out,
                   ClassifierKind kind, const TuningConfig& config, double gamma, double gamma1,
                   TuningResult& result) {
    std::vector<double> errs;
    try {
        errs = validator.errors(held_out, config.priors);
    } catch (const Error& e) {
        if (kind == ClassifierKind::Qda) {
            for (int p : config.p_grid) result.skipped.push_back({{gamma, gamma1, p}, e.what()});
        } else {
            result.skipped.push_back({{gamma, gamma1, std::nullopt}, e.what()});
        }
        return;
    }
    if (kind != ClassifierKind::Qda) {
        result.surface.push_back({{gamma, gamma1, std::nullopt}, errs.front()});
        return;
    }
    for (int p : config.p_grid) {
        if (p <= validator.feasible_p())
            result.surface.push_back({{gamma, gamma1, p}, errs[static_cast<std::size_t>(p - 1)]});
        else
            result.skipped.push_back({{gamma, gamma1, p}, "p exceeds the usable rank of some fold"});
    }
}

int p_cap(ClassifierKind kind, const TuningConfig& config) {
    return kind == ClassifierKind::Qda ? config.p_grid.back() : 1;
}

}  // namespace

void TuningConfig::validate() const {
    check_ascending(gamma_grid, "gamma grid");
    check_ascending(gamma1_grid, "gamma1 grid");
    check_ascending(p_grid, "p grid");
    if (!(priors.pi0 >= 0) || !(priors.pi1 >= 0) || std::abs(priors.pi0 + priors.pi1 - 1.0) > 1e-12)
        throw InvalidArgument("priors must be non-negative and sum to one");
}

std::vector<int> labels_of(const std::vector<SampledCurve>& curves) {
    std::vector<int> labels;
    labels.reserve(curves.size());
    for (const auto& c : curves) {
        if (!c.label) throw InvalidArgument("training curve '" + c.id + "' is unlabelled");
        if (*c.label != 0 && *c.label != 1)
            throw InvalidArgument("training curve '" + c.id + "' has a label other than 0 or 1");
        labels.push_back(*c.label);
    }
    return labels;
}

LooCrossValidator::LooCrossValidator(std::vector<FunctionOnGrid> training, std::vector<int> labels,
                                     ClassifierKind kind, int p_max)
    : kind_(kind), labels_(std::move(labels)) {
    if (training.size() != labels_.size())
        throw InvalidArgument("training curves and labels differ in length");
    std::vector<FunctionOnGrid> groups[2];
    for (std::size_t j = 0; j < training.size(); ++j) {
        const int k = labels_[j];
        if (k != 0 && k != 1) throw InvalidArgument("labels must be 0 or 1");
        groups[k].push_back(training[j]);
    }
    n0_ = static_cast<int>(groups[0].size());
    n1_ = static_cast<int>(groups[1].size());
    if (n0_ < 3 || n1_ < 3)
        throw TooFewCurves("leave-one-out needs at least 3 curves per population, got " +
                           std::to_string(n0_) + " and " + std::to_string(n1_));

    PopulationOptions options;
    options.max_eigenfunctions = kind == ClassifierKind::Qda ? p_max : 0;
    for (int k = 0; k < 2; ++k)
        full_[k] = std::make_shared<const PopulationEstimate>(
            estimate_population(groups[k], k, options));

    folds_.reserve(training.size());
    for (std::size_t j = 0; j < training.size(); ++j) {
        const int k = labels_[j];
        std::vector<FunctionOnGrid> rest;
        rest.reserve(groups[k].size() - 1);
        for (std::size_t i = 0; i < training.size(); ++i)
            if (i != j && labels_[i] == k) rest.push_back(training[i]);
        folds_.push_back({std::make_shared<const PopulationEstimate>(
            estimate_population(rest, k, options))});
    }

    if (kind_ == ClassifierKind::Qda) {
        if (p_max < 1) throw InvalidArgument("QDA truncation must be at least 1");
        int feasible = std::min({p_max, usable_rank(*full_[0]), usable_rank(*full_[1])});
        for (const auto& f : folds_) feasible = std::min(feasible, usable_rank(*f.own));
        if (feasible < 1) throw RankDeficient(0, 1);
        feasible_p_ = feasible;
    }
}

std::vector<double> LooCrossValidator::errors(const std::vector<FunctionOnGrid>& held_out,
                                              const Priors& priors) const {
    if (held_out.size() != folds_.size())
        throw InvalidArgument("held-out curves do not match the training set");
    const std::size_t n_out = kind_ == ClassifierKind::Qda ? static_cast<std::size_t>(feasible_p_) : 1;
    std::vector<long> missed0(n_out, 0);
    std::vector<long> missed1(n_out, 0);
    for (std::size_t j = 0; j < folds_.size(); ++j) {
        const int k = labels_[j];
        const auto& pop0 = k == 0 ? folds_[j].own : full_[0];
        const auto& pop1 = k == 1 ? folds_[j].own : full_[1];
        auto& missed = k == 0 ? missed0 : missed1;
        if (kind_ == ClassifierKind::Qda) {
            const auto scores = qda_score_prefixes(held_out[j], *pop0, *pop1, feasible_p_);
            for (std::size_t p = 0; p < n_out; ++p)
                if (decide(scores[p]) != k) ++missed[p];
        } else {
            const TrainedClassifier c(kind_, pop0, pop1);
            if (c.classify(held_out[j]) != k) ++missed[0];
        }
    }
    std::vector<double> out(n_out);
    for (std::size_t p = 0; p < n_out; ++p)
        out[p] = priors.pi0 / n0_ * static_cast<double>(missed0[p]) +
                 priors.pi1 / n1_ * static_cast<double>(missed1[p]);
    return out;
}

std::vector<double> plugin_bandwidths(const std::vector<SampledCurve>& curves) {
    std::vector<double> h;
    h.reserve(curves.size());
    for (const auto& c : curves) h.push_back(plugin_bandwidth(c));
    return h;
}

double cv_error(const std::vector<SampledCurve>& training, ClassifierKind kind, double gamma,
                double gamma1, std::optional<int> p, const Grid& grid, const Priors& priors) {
    if (!(gamma > 0) || !(gamma1 > 0)) throw InvalidArgument("scale factors must be positive");
    if (kind == ClassifierKind::Qda && !p) throw InvalidArgument("QDA needs a truncation p");
    const std::vector<int> labels = labels_of(training);
    const std::vector<double> h_pi = plugin_bandwidths(training);
    const int p_max = kind == ClassifierKind::Qda ? *p : 1;
    const LooCrossValidator validator(smooth_scaled(training, h_pi, gamma1, grid), labels, kind, p_max);
    if (p_max > validator.feasible_p()) throw RankDeficient(0, validator.feasible_p() + 1);
    const auto errs = validator.errors(smooth_scaled(training, h_pi, gamma, grid), priors);
    return errs[static_cast<std::size_t>(p_max - 1)];
}

TuningResult select_tuning(const std::vector<SampledCurve>& training, ClassifierKind kind,
                           const TuningConfig& config, const Grid& grid) {
    return select_tuning(training, plugin_bandwidths(training), kind, config, grid);
}

TuningResult select_tuning(const std::vector<SampledCurve>& training, const std::vector<double>& h_pi,
                           ClassifierKind kind, const TuningConfig& config, const Grid& grid) {
    config.validate();
    if (h_pi.size() != training.size())
        throw InvalidArgument("one plug-in bandwidth per training curve is required");
    const std::vector<int> labels = labels_of(training);
    TuningResult result;

    // Held-out smoothings depend only on γ; compute each once.
    std::map<double, std::optional<std::vector<FunctionOnGrid>>> held_cache;
    std::map<double, std::string> held_failure;
    for (double gamma : config.gamma_grid) {
        try {
            held_cache[gamma] = smooth_scaled(training, h_pi, gamma, grid);
        } catch (const DegenerateFit& e) {
            held_cache[gamma] = std::nullopt;
            held_failure[gamma] = e.what();
        }
    }

    auto skip_all = [&](double gamma, double gamma1, const std::string& why) {
        if (kind == ClassifierKind::Qda) {
            for (int p : config.p_grid) result.skipped.push_back({{gamma, gamma1, p}, why});
        } else {
            result.skipped.push_back({{gamma, gamma1, std::nullopt}, why});
        }
    };

    for (double gamma1 : config.gamma1_grid) {
        std::optional<LooCrossValidator> validator;
        std::string failure;
        try {
            validator.emplace(smooth_scaled(training, h_pi, gamma1, grid), labels, kind,
                              p_cap(kind, config));
        } catch (const TooFewCurves&) {
            throw;
        } catch (const Error& e) {
            failure = e.what();
        }
        for (double gamma : config.gamma_grid) {
            if (!validator) {
                skip_all(gamma, gamma1, failure);
            } else if (!held_cache[gamma]) {
                skip_all(gamma, gamma1, held_failure[gamma]);
            } else {
                evaluate_pair(*validator, *held_cache[gamma], kind, config, gamma, gamma1, result);
            }
        }
    }
    finish(result);
    return result;
}

TuningResult select_truncation(const std::vector<FunctionOnGrid>& training,
                               const std::vector<FunctionOnGrid>& held_out,
                               const std::vector<int>& labels, ClassifierKind kind,
                               const TuningConfig& config) {
    config.validate();
    TuningResult result;
    try {
        const LooCrossValidator validator(training, labels, kind, p_cap(kind, config));
        evaluate_pair(validator, held_out, kind, config, 1.0, 1.0, result);
    } catch (const TooFewCurves&) {
        throw;
    } catch (const Error& e) {
        if (kind == ClassifierKind::Qda) {
            for (int p : config.p_grid) result.skipped.push_back({{1.0, 1.0, p}, e.what()});
        } else {
            result.skipped.push_back({{1.0, 1.0, std::nullopt}, e.what()});
        }
    }
    finish(result);
    return result;
}

}  // namespace fdc
