#include "fdclass/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "fdclass/errors.hpp"
#include "fdclass/population.hpp"

namespace fdc {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Model base_model(Model m) {
    switch (m) {
        case Model::D: return Model::A;
        case Model::E: return Model::B;
        case Model::F: return Model::C;
        default: return m;
    }
}

std::string curve_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04d", prefix, i);
    return buf;
}

// Linear interpolation of a grid function; constant beyond the ends.
double evaluate_linear(const FunctionOnGrid& f, double x) {
    const Grid& grid = f.grid();
    if (x <= grid.lower()) return f[0];
    if (x >= grid.upper()) return f[grid.size() - 1];
    const double pos = (x - grid.lower()) / grid.spacing();
    const int i = std::min(static_cast<int>(pos), grid.size() - 2);
    const double frac = pos - i;
    return f[i] + frac * (f[i + 1] - f[i]);
}

std::vector<int> draw_labels(int n, double pi1, RandomStream& stream) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = stream.next_unit() < pi1 ? 1 : 0;
    return labels;
}

GeneratedCurve draw_model_curve(const SimulationSpec& spec, const ModelDefinition& def, int k,
                                const Grid& grid, RandomStream& stream, std::string id) {
    double z = stream.uniform(-def.score_half_width(k), def.score_half_width(k));
    if (spec.zero_scores) z = 0.0;
    SampledCurve curve{std::move(id), {}, k};
    curve.points.reserve(static_cast<std::size_t>(spec.m));
    for (int i = 1; i <= spec.m; ++i) {
        double x = kDomainLower + (2.0 * i - 1.0) * (kDomainUpper - kDomainLower) / (2.0 * spec.m);
        if (def.jittered()) x = std::clamp(x + stream.normal(0.0, spec.jitter_sd), kDomainLower, kDomainUpper);
        double eps = def.noise(k, spec.noise_version, stream);
        if (spec.zero_noise) eps = 0.0;
        curve.points.push_back({x, def.mean(k, x) + def.amplitude(k, x) * z + eps});
    }
    auto truth = FunctionOnGrid::sample(grid, [&](double t) { return def.mean(k, t) + def.amplitude(k, t) * z; });
    return {std::move(curve), k, std::move(truth)};
}

double percent_correct(const TrainedClassifier& c, const std::vector<FunctionOnGrid>& test,
                       const std::vector<GeneratedCurve>& truth) {
    int correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (c.classify(test[i]) == truth[i].true_label) ++correct;
    return 100.0 * correct / static_cast<double>(test.size());
}

}  // namespace

std::string to_string(Model model) {
    return std::string(1, static_cast<char>('A' + static_cast<int>(model)));
}

Model model_from_string(std::string_view name) {
    if (name.size() == 1) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        if (c >= 'A' && c <= 'F') return static_cast<Model>(c - 'A');
    }
    throw InvalidArgument("unknown model '" + std::string(name) + "' (expected A-F)");
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::CV: return "cv";
        case Strategy::PI: return "pi";
        case Strategy::NS: return "ns";
    }
    return "?";
}

Strategy strategy_from_string(std::string_view name) {
    const std::string s = lower(name);
    if (s == "cv") return Strategy::CV;
    if (s == "pi") return Strategy::PI;
    if (s == "ns") return Strategy::NS;
    throw InvalidArgument("unknown strategy '" + std::string(name) + "' (expected cv, pi or ns)");
}

void SimulationSpec::validate() const {
    if (noise_version < 1 || noise_version > 3) throw InvalidArgument("noise version must be 1, 2 or 3");
    if (n_tr < 6) throw InvalidArgument("n_tr must be at least 6");
    if (n_test < 1) throw InvalidArgument("n_test must be at least 1");
    if (B < 1) throw InvalidArgument("B must be at least 1");
    if (m < 10) throw InvalidArgument("m must be at least 10 for the plug-in bandwidth");
    if (grid_override && (grid_override->lower() < kDomainLower || grid_override->upper() > kDomainUpper))
        throw InvalidArgument("evaluation grid must lie inside [0, 100]");
    if (!(jitter_sd > 0)) throw InvalidArgument("jitter sd must be positive");
}

Grid SimulationSpec::grid() const { return grid_override ? *grid_override : model_grid(model, m); }

Grid model_grid(Model model, int m) {
    if (model_definition(model).jittered()) return Grid(kDomainLower, kDomainUpper, kDefaultGridPoints);
    const double half_gap = (kDomainUpper - kDomainLower) / (2.0 * m);
    return Grid(kDomainLower + half_gap, kDomainUpper - half_gap, m);
}

double normal_density(double x, double sigma) {
    return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double ModelDefinition::mean(int k, double t) const {
    switch (base_model(model)) {
        case Model::A: {
            const double mu0 = normal_density(t - 5, 10);
            return k == 0 ? mu0 : mu0 + 0.3 * std::cos(t / 5) + 0.1;
        }
        case Model::B: {
            const double mu0 = 30 * (0.2 * normal_density(t - 5, 4) + 0.1 * normal_density(t - 10, 4) +
                                     0.4 * normal_density(t - 20, 6) + 0.4 * normal_density(t - 35, 6) +
                                     0.6 * normal_density(t - 55, 7) + 0.6 * normal_density(t - 80, 7));
            return k == 0 ? mu0 : mu0 + 4 / ((t - 50) * (t - 50) + 10);
        }
        default: {
            const double mu0 = 15 * normal_density(t - 65, 17) * std::cos(t / 7);
            return k == 0 ? mu0 : mu0 + 5 * normal_density(t - 50, 20);
        }
    }
}

double ModelDefinition::amplitude(int k, double t) const {
    switch (base_model(model)) {
        case Model::A: return std::sqrt(3 * t + 100) * (k == 0 ? 1.0 : std::cos(t / 50));
        case Model::B: return std::sqrt(3 * t + 100);
        default: return k == 0 ? std::sqrt(3 * t + 100) : t + 5;
    }
}

double ModelDefinition::score_half_width(int k) const {
    switch (base_model(model)) {
        case Model::A: return 1.0 / (30 - 10 * k);
        case Model::B: return 1.0 / (60 + 15 * k);
        default: return 1.0 / (50 - 10 * k);
    }
}

double ModelDefinition::noise_sd(int k, int version) const {
    switch (base_model(model)) {
        case Model::A: {
            const double c = version == 1 ? 1.0 : version == 2 ? std::numbers::sqrt2 : 2.0;
            return c / (4 - 2 * k);
        }
        case Model::B: {
            // Exp(0.5) has standard deviation 2.
            const double f = version == 1 ? 1.0 / (2 + 2 * k)
                           : version == 2 ? std::numbers::sqrt2 / (2 + 2 * k)
                                          : 1.0 / (1 + k);
            return 2 * f;
        }
        default: {
            const double c = version == 1 ? 10.0 : version == 2 ? std::sqrt(50.0) : 5.0;
            return (4 - k) / c;
        }
    }
}

double ModelDefinition::noise(int k, int version, RandomStream& stream) const {
    if (base_model(model) == Model::B) {
        // Centred Exp(0.5), rescaled.
        return (stream.exponential(0.5) - 2.0) * noise_sd(k, version) / 2.0;
    }
    return stream.normal(0.0, noise_sd(k, version));
}

bool ModelDefinition::jittered() const {
    return model == Model::D || model == Model::E || model == Model::F;
}

ModelDefinition model_definition(Model model) {
    switch (base_model(model)) {
        case Model::A: return {model, 2.0 / 3.0};
        case Model::B: return {model, 3.0 / 5.0};
        default: return {model, 1.0 / 3.0};
    }
}

Dataset generate_dataset(const SimulationSpec& spec, RandomStream& stream) {
    spec.validate();
    const ModelDefinition def = model_definition(spec.model);
    const Grid grid = spec.grid();

    std::vector<int> train_labels;
    for (;;) {
        train_labels = draw_labels(spec.n_tr, def.pi1, stream);
        const auto ones = std::count(train_labels.begin(), train_labels.end(), 1);
        if (ones >= 3 && spec.n_tr - ones >= 3) break;
    }
    const std::vector<int> test_labels = draw_labels(spec.n_test, def.pi1, stream);

    Dataset data;
    data.training.reserve(train_labels.size());
    for (std::size_t i = 0; i < train_labels.size(); ++i)
        data.training.push_back(draw_model_curve(spec, def, train_labels[i], grid, stream,
                                                 curve_id("tr", static_cast<int>(i))));
    data.test.reserve(test_labels.size());
    for (std::size_t i = 0; i < test_labels.size(); ++i)
        data.test.push_back(draw_model_curve(spec, def, test_labels[i], grid, stream,
                                             curve_id("te", static_cast<int>(i))));
    return data;
}

std::vector<SampledCurve> curves_of(const std::vector<GeneratedCurve>& generated) {
    std::vector<SampledCurve> out;
    out.reserve(generated.size());
    for (const auto& g : generated) out.push_back(g.curve);
    return out;
}

ReplicateResult run_replicate(const SimulationSpec& spec, int index,
                              const std::vector<Strategy>& strategies,
                              const std::vector<ClassifierKind>& classifiers,
                              const TuningConfig& tuning) {
    ReplicateResult result;
    result.index = index;
    RandomStream stream = RandomStream(spec.seed).child(static_cast<std::uint64_t>(index));
    try {
        const Dataset data = generate_dataset(spec, stream);
        const Grid grid = spec.grid();
        const auto training = curves_of(data.training);
        const auto test = curves_of(data.test);
        const std::vector<int> labels = labels_of(training);

        const bool needs_pi = std::any_of(strategies.begin(), strategies.end(),
                                          [](Strategy s) { return s != Strategy::NS; });
        std::vector<double> h_train, h_test;
        if (needs_pi) {
            h_train = plugin_bandwidths(training);
            h_test = plugin_bandwidths(test);
        }

        for (Strategy strategy : strategies) {
            std::optional<std::vector<FunctionOnGrid>> fixed_train, fixed_test;
            if (strategy == Strategy::PI) {
                fixed_train = smooth_scaled(training, h_train, 1.0, grid);
                fixed_test = smooth_scaled(test, h_test, 1.0, grid);
            } else if (strategy == Strategy::NS) {
                fixed_train = interpolate_all(training, grid);
                fixed_test = interpolate_all(test, grid);
            }
            for (ClassifierKind kind : classifiers) {
                Candidate chosen{1.0, 1.0, std::nullopt};
                std::vector<FunctionOnGrid> tr, te;
                if (strategy == Strategy::CV) {
                    TuningResult tuned = select_tuning(training, h_train, kind, tuning, grid);
                    chosen = tuned.best;
                    result.surfaces[kind] = std::move(tuned.surface);
                    tr = smooth_scaled(training, h_train, chosen.gamma1, grid);
                    te = smooth_scaled(test, h_test, chosen.gamma, grid);
                } else {
                    tr = *fixed_train;
                    te = *fixed_test;
                    if (kind == ClassifierKind::Qda)
                        chosen.p = select_truncation(tr, tr, labels, kind, tuning).best.p;
                }
                const TrainedClassifier c = train_classifier(tr, labels, kind, chosen.p);
                result.cells[{kind, strategy}] = {percent_correct(c, te, data.test), chosen};
            }
        }
    } catch (const Error& e) {
        result.excluded = true;
        result.exclusion_reason = e.what();
        result.cells.clear();
        result.surfaces.clear();
    }
    return result;
}

const CellSummary& ExperimentReport::cell(ClassifierKind kind, Strategy strategy) const {
    for (const auto& c : cells)
        if (c.key.classifier == kind && c.key.strategy == strategy) return c;
    throw InvalidArgument("no such cell in the report");
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        correction_ += (sum_ - t) + x;
    else
        correction_ += (x - t) + sum_;
    sum_ = t;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    const int workers = std::max(1, std::min(threads, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mutex;
    int failed_index = count;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    // Lowest failing index wins, as in a serial run.
                    if (i < failed_index) {
                        failed_index = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

ExperimentReport run_experiment(const SimulationSpec& spec, const std::vector<Strategy>& strategies,
                                const std::vector<ClassifierKind>& classifiers,
                                const TuningConfig& tuning, int threads) {
    spec.validate();
    tuning.validate();
    if (strategies.empty() || classifiers.empty())
        throw InvalidArgument("at least one strategy and one classifier are required");

    ExperimentReport report;
    report.spec = spec;
    report.tuning = tuning;
    report.classifiers = classifiers;
    report.strategies = strategies;
    report.generator = RandomStream::kAlgorithm;
    report.replicates.resize(static_cast<std::size_t>(spec.B));
    parallel_for(spec.B, threads, [&](int b) {
        report.replicates[static_cast<std::size_t>(b)] = run_replicate(spec, b, strategies, classifiers, tuning);
    });

    for (const auto& r : report.replicates)
        if (r.excluded) report.excluded.emplace_back(r.index, r.exclusion_reason);
    if (static_cast<double>(report.excluded.size()) > 0.05 * spec.B)
        throw Error(std::to_string(report.excluded.size()) + " of " + std::to_string(spec.B) +
                    " replicates excluded (limit 5%); first: " + report.excluded.front().second);

    for (ClassifierKind kind : classifiers) {
        for (Strategy strategy : strategies) {
            CellSummary cell{{kind, strategy}, 0, 0.0, 0.0, std::nullopt, std::nullopt, std::nullopt, {}};
            CompensatedSum pct, gamma, gamma1, p;
            std::vector<double> values;
            std::map<std::tuple<double, double, int>, std::pair<CompensatedSum, int>> surface;
            for (const auto& r : report.replicates) {
                if (r.excluded) continue;
                const CellResult& res = r.cells.at({kind, strategy});
                values.push_back(res.percent_correct);
                pct.add(res.percent_correct);
                gamma.add(res.selected.gamma);
                gamma1.add(res.selected.gamma1);
                if (res.selected.p) p.add(*res.selected.p);
                if (strategy == Strategy::CV) {
                    for (const auto& pt : r.surfaces.at(kind)) {
                        auto& slot = surface[{pt.candidate.gamma, pt.candidate.gamma1,
                                              pt.candidate.p.value_or(0)}];
                        slot.first.add(pt.cv_error);
                        ++slot.second;
                    }
                }
            }
            const int n = static_cast<int>(values.size());
            cell.replicates = n;
            cell.mean_percent = pct.value() / n;
            if (n > 1) {
                CompensatedSum ss;
                for (double v : values) ss.add((v - cell.mean_percent) * (v - cell.mean_percent));
                cell.standard_error = std::sqrt(ss.value() / (n - 1) / n);
            }
            if (strategy != Strategy::NS) {
                cell.mean_gamma = gamma.value() / n;
                cell.mean_gamma1 = gamma1.value() / n;
            }
            if (kind == ClassifierKind::Qda) cell.mean_p = p.value() / n;
            for (const auto& [key, slot] : surface) {
                const auto& [g, g1, pp] = key;
                cell.mean_surface.push_back(
                    {{g, g1, pp > 0 ? std::optional<int>(pp) : std::nullopt}, slot.first.value() / slot.second});
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

GaussianGenerator::GaussianGenerator(GaussianScenario scenario) : scenario_(std::move(scenario)) {
    const auto& s = scenario_;
    if (!(s.mean0.grid() == s.mean1.grid())) throw GridMismatch();
    if (s.m < 2) throw InvalidArgument("a Gaussian scenario needs m >= 2");
    if (!(s.sigma_eps0 >= 0) || !(s.sigma_eps1 >= 0)) throw InvalidArgument("noise levels must be non-negative");
    if (!(s.pi0 >= 0 && s.pi0 <= 1)) throw InvalidArgument("pi0 must lie in [0, 1]");
    const std::vector<double>* values[2] = {&s.eigenvalues0, &s.eigenvalues1};
    const std::vector<FunctionOnGrid>* bases[2] = {&s.eigenfunctions0, &s.eigenfunctions1};
    for (int k = 0; k < 2; ++k) {
        if (values[k]->size() != bases[k]->size())
            throw InvalidArgument("eigenvalue and eigenfunction counts differ");
        for (double t : *values[k])
            if (!(t >= 0)) throw InvalidArgument("eigenvalues must be non-negative");
        const auto& psi = *bases[k];
        for (std::size_t a = 0; a < psi.size(); ++a) {
            if (!(psi[a].grid() == grid())) throw GridMismatch();
            for (std::size_t b = 0; b <= a; ++b) {
                const double target = a == b ? 1.0 : 0.0;
                if (std::abs(inner_product(psi[a], psi[b]) - target) > 1e-6)
                    throw NonOrthonormalBasis("population " + std::to_string(k) + " basis functions " +
                                              std::to_string(b) + " and " + std::to_string(a));
            }
        }
    }
}

std::vector<double> GaussianGenerator::design() const {
    std::vector<double> x(static_cast<std::size_t>(scenario_.m));
    const double lo = grid().lower();
    const double len = grid().length();
    for (int i = 1; i <= scenario_.m; ++i)
        x[static_cast<std::size_t>(i - 1)] = lo + (2.0 * i - 1.0) * len / (2.0 * scenario_.m);
    return x;
}

GeneratedCurve GaussianGenerator::draw(int k, RandomStream& stream, std::string id) const {
    const auto& values = k == 0 ? scenario_.eigenvalues0 : scenario_.eigenvalues1;
    const auto& basis = k == 0 ? scenario_.eigenfunctions0 : scenario_.eigenfunctions1;
    FunctionOnGrid g = k == 0 ? scenario_.mean0 : scenario_.mean1;
    for (std::size_t l = 0; l < values.size(); ++l) {
        const double z = stream.normal(0.0, 1.0);
        if (values[l] > 0) g += basis[l] * (std::sqrt(values[l]) * z);
    }
    const double sigma = k == 0 ? scenario_.sigma_eps0 : scenario_.sigma_eps1;
    SampledCurve curve{std::move(id), {}, k};
    for (double x : design()) {
        const double eps = sigma > 0 ? stream.normal(0.0, sigma) : 0.0;
        curve.points.push_back({x, evaluate_linear(g, x) + eps});
    }
    return {std::move(curve), k, std::move(g)};
}

GeneratedCurve GaussianGenerator::draw_labelled(RandomStream& stream, std::string id) const {
    const int k = stream.next_unit() < scenario_.pi0 ? 0 : 1;
    return draw(k, stream, std::move(id));
}

PopulationLaw GaussianGenerator::law(int k) const {
    if (k == 0) return {scenario_.mean0, scenario_.eigenvalues0, scenario_.eigenfunctions0};
    return {scenario_.mean1, scenario_.eigenvalues1, scenario_.eigenfunctions1};
}

SweepResult bandwidth_sweep(const GaussianGenerator& generator, const SweepConfig& config) {
    if (config.h_grid.empty() || config.h1_grid.empty()) throw InvalidArgument("bandwidth grids must be nonempty");
    for (double h : config.h_grid)
        if (!(h > 0)) throw InvalidArgument("bandwidths must be positive");
    for (double h : config.h1_grid)
        if (!(h > 0)) throw InvalidArgument("bandwidths must be positive");
    if (config.n_train0 < 2 || config.n_train1 < 2) throw InvalidArgument("each population needs >= 2 training curves");
    if (config.n_test < 1 || config.B < 1) throw InvalidArgument("n_test and B must be positive");

    const Grid& grid = generator.grid();
    const std::size_t n_points = config.h_grid.size() * config.h1_grid.size();
    SweepResult result;
    result.test_per_replicate = config.n_test;
    result.per_replicate.assign(static_cast<std::size_t>(config.B), std::vector<double>(n_points));

    parallel_for(config.B, config.threads, [&](int b) {
        RandomStream stream = RandomStream(config.seed).child(static_cast<std::uint64_t>(b));
        std::vector<SampledCurve> training;
        std::vector<int> labels;
        for (int k = 0; k < 2; ++k) {
            const int n = k == 0 ? config.n_train0 : config.n_train1;
            for (int j = 0; j < n; ++j) {
                training.push_back(generator.draw(k, stream, curve_id(k == 0 ? "a" : "b", j)).curve);
                labels.push_back(k);
            }
        }
        std::vector<GeneratedCurve> test;
        for (int i = 0; i < config.n_test; ++i) test.push_back(generator.draw_labelled(stream, curve_id("t", i)));

        std::vector<std::vector<FunctionOnGrid>> test_smooth;
        for (double h : config.h_grid) {
            std::vector<FunctionOnGrid> s;
            for (const auto& t : test) s.push_back(smooth_with_bandwidth(t.curve, h, grid).function);
            test_smooth.push_back(std::move(s));
        }
        auto& row = result.per_replicate[static_cast<std::size_t>(b)];
        for (std::size_t j = 0; j < config.h1_grid.size(); ++j) {
            std::vector<FunctionOnGrid> tr;
            for (const auto& c : training) tr.push_back(smooth_with_bandwidth(c, config.h1_grid[j], grid).function);
            const TrainedClassifier c = train_classifier(tr, labels, ClassifierKind::Centroid, std::nullopt);
            for (std::size_t i = 0; i < config.h_grid.size(); ++i) {
                int wrong = 0;
                for (std::size_t t = 0; t < test.size(); ++t)
                    if (c.classify(test_smooth[i][t]) != test[t].true_label) ++wrong;
                row[i * config.h1_grid.size() + j] = static_cast<double>(wrong) / config.n_test;
            }
        }
    });

    for (std::size_t i = 0; i < config.h_grid.size(); ++i) {
        for (std::size_t j = 0; j < config.h1_grid.size(); ++j) {
            const std::size_t idx = i * config.h1_grid.size() + j;
            CompensatedSum sum;
            for (const auto& row : result.per_replicate) sum.add(row[idx]);
            const double mean = sum.value() / config.B;
            double se = 0.0;
            if (config.B > 1) {
                CompensatedSum ss;
                for (const auto& row : result.per_replicate) ss.add((row[idx] - mean) * (row[idx] - mean));
                se = std::sqrt(ss.value() / (config.B - 1) / config.B);
            }
            result.points.push_back({config.h_grid[i], config.h1_grid[j], mean, se});
        }
    }
    return result;
}

std::pair<double, double> paired_difference(const SweepResult& result, std::size_t a, std::size_t b) {
    const auto n = static_cast<double>(result.per_replicate.size());
    CompensatedSum sum;
    for (const auto& row : result.per_replicate) sum.add(row.at(a) - row.at(b));
    const double mean = sum.value() / n;
    if (result.per_replicate.size() < 2) return {mean, 0.0};
    CompensatedSum ss;
    for (const auto& row : result.per_replicate) {
        const double d = row[a] - row[b] - mean;
        ss.add(d * d);
    }
    return {mean, std::sqrt(ss.value() / (n - 1) / n)};
}

}  // namespace fdc
