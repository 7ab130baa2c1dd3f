#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "fdclass/classifiers.hpp"
#include "fdclass/errors.hpp"
#include "fdclass/simulation.hpp"
#include "oracles.hpp"

using namespace fdc;

namespace {

const Grid kGrid(0, 1, 81);

using PopPtr = std::shared_ptr<const PopulationEstimate>;

PopPtr make_pop(const std::vector<FunctionOnGrid>& curves, int k) {
    return std::make_shared<const PopulationEstimate>(estimate_population(curves, k));
}

std::vector<FunctionOnGrid> sample_pop(RandomStream& s, int n, double shift, double spread) {
    std::vector<FunctionOnGrid> out;
    for (int j = 0; j < n; ++j) {
        const double a = s.normal(0, spread), b = s.normal(0, spread / 2), c = s.normal(0, spread / 4);
        out.push_back(FunctionOnGrid::sample(kGrid, [&](double t) {
            return shift * t + a * std::sin(2 * std::numbers::pi * t) + b * std::cos(2 * std::numbers::pi * t) + c * t * t;
        }));
    }
    return out;
}

FunctionOnGrid random_function(RandomStream& s) {
    const double a = s.normal(0, 1), b = s.normal(0, 1);
    return FunctionOnGrid::sample(kGrid, [&](double t) { return a * t + b * std::sin(5 * t); });
}

struct Pair {
    PopPtr p0, p1;
};

Pair random_pair(std::uint64_t seed) {
    RandomStream s(seed);
    return {make_pop(sample_pop(s, 12, 0.0, 1.0), 0), make_pop(sample_pop(s, 15, 1.0, 1.6), 1)};
}

}  // namespace

TEST_CASE("centroid: means and midpoint") {
    const auto pr = random_pair(1);
    const TrainedClassifier c(ClassifierKind::Centroid, pr.p0, pr.p1);
    const double gap = squared_distance(pr.p0->mean(), pr.p1->mean());
    CHECK(c.score(pr.p0->mean()) == doctest::Approx(-gap).epsilon(1e-12));
    CHECK(c.score(pr.p1->mean()) == doctest::Approx(gap).epsilon(1e-12));
    CHECK(c.classify(pr.p0->mean()) == 0);
    CHECK(c.classify(pr.p1->mean()) == 1);
    CHECK(std::abs(c.score((pr.p0->mean() + pr.p1->mean()) * 0.5)) <= 1e-12 * gap);
}

TEST_CASE("property: centroid score equals ∫(μ̂₁-μ̂₀)(2ĝ-μ̂₀-μ̂₁)") {
    RandomStream s(8);
    const auto pr = random_pair(2);
    const TrainedClassifier c(ClassifierKind::Centroid, pr.p0, pr.p1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = random_function(s);
        const double alt = inner_product(pr.p1->mean() - pr.p0->mean(), g * 2.0 - pr.p0->mean() - pr.p1->mean());
        CHECK(c.score(g) == doctest::Approx(alt).epsilon(1e-10));
        // Translation invariance: shifting ĝ and both means together.
        const auto h = random_function(s);
        const auto q0 = make_pop({pr.p0->mean() + h, pr.p0->mean() + h}, 0);
        const auto q1 = make_pop({pr.p1->mean() + h, pr.p1->mean() + h}, 1);
        const TrainedClassifier shifted(ClassifierKind::Centroid, q0, q1);
        CHECK(shifted.score(g + h) == doctest::Approx(c.score(g)).epsilon(1e-9).scale(1));
    }
}

TEST_CASE("scaled centroid") {
    // Two-curve populations mu ± u with ∫u² = 1 have s² = 1.
    const auto u = FunctionOnGrid::sample(kGrid, [](double t) { return std::sin(3 * t) + 0.2; });
    const auto unit = u * (1 / std::sqrt(inner_product(u, u)));
    const auto m0 = FunctionOnGrid::constant(kGrid, 0), m1 = FunctionOnGrid::sample(kGrid, [](double t) { return t; });
    const auto p0 = make_pop({m0 + unit, m0 - unit}, 0), p1 = make_pop({m1 + unit, m1 - unit}, 1);
    REQUIRE(p0->scale_sq() == doctest::Approx(1).epsilon(1e-14));
    const TrainedClassifier sc(ClassifierKind::ScaledCentroid, p0, p1), ce(ClassifierKind::Centroid, p0, p1);
    RandomStream s(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = random_function(s);
        CHECK(sc.score(g) == doctest::Approx(ce.score(g)).epsilon(1e-12));
    }
    CHECK(sc.score(m0) == doctest::Approx(-squared_distance(m0, m1)).epsilon(1e-12));

    const auto same = make_pop({m0, m0}, 0);
    CHECK_THROWS_AS(TrainedClassifier(ClassifierKind::ScaledCentroid, same, p1), ZeroScale);
}

TEST_CASE("QDA: identical populations, hand expansion at p = 1, incremental structure") {
    const auto pr = random_pair(3);
    const TrainedClassifier same(ClassifierKind::Qda, pr.p0, pr.p0, 3);
    RandomStream s(12);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_function(s);
        CHECK(same.score(g) == 0.0);
        CHECK(same.classify(g) == 0);
    }

    const TrainedClassifier q1(ClassifierKind::Qda, pr.p0, pr.p1, 1);
    const auto& psi11 = pr.p1->eigenfunctions()[0];
    const double t00 = pr.p0->eigenvalues()[0], t11 = pr.p1->eigenvalues()[0];
    const double proj = oracle::integral(
        [&] {
            std::vector<double> v;
            for (int i = 0; i < kGrid.size(); ++i) v.push_back((pr.p0->mean()[i] - pr.p1->mean()[i]) * psi11[i]);
            return v;
        }(),
        kGrid);
    CHECK(q1.score(pr.p0->mean()) == doctest::Approx(-proj * proj / t11 + std::log(t00 / t11)).epsilon(1e-10));

    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_function(s);
        const auto prefixes = qda_score_prefixes(g, *pr.p0, *pr.p1, 3);
        for (int p = 1; p <= 3; ++p) {
            const TrainedClassifier qp(ClassifierKind::Qda, pr.p0, pr.p1, p);
            CHECK(qp.score(g) == prefixes[p - 1]);
        }
        for (int p = 1; p < 3; ++p) {
            const double z0 = inner_product(g - pr.p0->mean(), pr.p0->eigenfunctions()[p]);
            const double z1 = inner_product(g - pr.p1->mean(), pr.p1->eigenfunctions()[p]);
            const double term = z0 * z0 / pr.p0->eigenvalues()[p] - z1 * z1 / pr.p1->eigenvalues()[p] +
                                std::log(pr.p0->eigenvalues()[p] / pr.p1->eigenvalues()[p]);
            CHECK(prefixes[p] - prefixes[p - 1] == doctest::Approx(term).epsilon(1e-9).scale(1));
        }
    }
}

TEST_CASE("QDA rank checks") {
    RandomStream s(6);
    const auto small = make_pop(sample_pop(s, 2, 0, 1), 0);
    const auto big = make_pop(sample_pop(s, 10, 1, 1), 1);
    CHECK(usable_rank(*small) == 1);
    CHECK_NOTHROW(TrainedClassifier(ClassifierKind::Qda, small, big, 1));
    CHECK_THROWS_AS(TrainedClassifier(ClassifierKind::Qda, small, big, 2), RankDeficient);
    try {
        TrainedClassifier(ClassifierKind::Qda, big, small, 2);
    } catch (const RankDeficient& e) {
        CHECK(e.population() == 1);
        CHECK(e.component() == 2);
    }
}

TEST_CASE("property: swapping populations negates every score exactly") {
    RandomStream s(31);
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const auto pr = random_pair(seed);
        for (auto kind : {ClassifierKind::Centroid, ClassifierKind::ScaledCentroid, ClassifierKind::Qda}) {
            const TrainedClassifier a(kind, pr.p0, pr.p1, 3), b(kind, pr.p1, pr.p0, 3);
            for (int trial = 0; trial < 5; ++trial) {
                const auto g = random_function(s);
                CHECK(a.score(g) == -b.score(g));
            }
        }
    }
}

TEST_CASE("determinism and grid refinement") {
    const auto pr = random_pair(5);
    const TrainedClassifier c(ClassifierKind::Qda, pr.p0, pr.p1, 2);
    RandomStream s(2);
    const auto g = random_function(s);
    CHECK(c.score(g) == c.score(g));

    // Doubling the resolution moves S by no more than the trapezoid error.
    auto score_on = [](int n) {
        const Grid grid(0, 1, n);
        const auto g = FunctionOnGrid::sample(grid, [](double t) { return std::sin(4 * t); });
        const auto m0 = FunctionOnGrid::sample(grid, [](double t) { return t * t; });
        const auto m1 = FunctionOnGrid::sample(grid, [](double t) { return std::cos(t); });
        return squared_distance(g, m0) - squared_distance(g, m1);
    };
    CHECK(std::abs(score_on(201) - score_on(101)) <= 1e-3);
}

TEST_CASE("oracle QDA") {
    const auto psi = FunctionOnGrid::sample(kGrid, [](double t) { return std::numbers::sqrt2 * std::sin(std::numbers::pi * t); });
    const auto m0 = FunctionOnGrid::constant(kGrid, 0), m1 = FunctionOnGrid::sample(kGrid, [](double t) { return t; });
    const PopulationLaw l0{m0, {2.0}, {psi}}, l1{m1, {2.0}, {psi}};
    const double z = inner_product(m0 - m1, psi);
    CHECK(oracle_qda_score(m0, l0, l1, 1) == doctest::Approx(-z * z / 2.0).epsilon(1e-12));
    CHECK(oracle_qda_score(m0, l0, l1, 1) <= 0);
    CHECK(oracle_qda_score(m1, l0, l0, 1) == 0.0);
    CHECK_THROWS_AS(oracle_qda_score(m0, l0, l1, 2), InvalidArgument);
}

TEST_CASE("QDA approaches the oracle rule with many training curves") {
    const Grid grid(0, 1, 51);
    std::vector<FunctionOnGrid> basis;
    for (int l = 1; l <= 2; ++l)
        basis.push_back(FunctionOnGrid::sample(grid, [l](double t) { return std::numbers::sqrt2 * std::sin(l * std::numbers::pi * t); }));
    for (auto& b : basis) b *= 1 / std::sqrt(inner_product(b, b));
    GaussianScenario sc{FunctionOnGrid::constant(grid, 0),
                        FunctionOnGrid::sample(grid, [](double t) { return 0.8 * std::sin(std::numbers::pi * t); }),
                        {1.0, 0.3}, basis, {0.4, 0.9}, basis, 0.1, 0.1, 50, 0.5};
    const GaussianGenerator gen(sc);
    RandomStream s(77);
    std::vector<FunctionOnGrid> c0, c1;
    for (int j = 0; j < 400; ++j) {
        c0.push_back(gen.draw(0, s, "a").true_function);
        c1.push_back(gen.draw(1, s, "b").true_function);
    }
    const TrainedClassifier q(ClassifierKind::Qda, make_pop(c0, 0), make_pop(c1, 1), 2);
    int agree = 0;
    for (int i = 0; i < 200; ++i) {
        const auto g = gen.draw_labelled(s, "t").true_function;
        agree += q.classify(g) == decide(oracle_qda_score(g, gen.law(0), gen.law(1), 2));
    }
    CHECK(agree >= 190);
}

TEST_CASE("decision rule") {
    CHECK(decide(-3.2) == 0);
    CHECK(decide(0.0) == 0);
    CHECK(decide(1e-9) == 1);
    CHECK_THROWS_AS(decide(NAN), NonFiniteScore);
    CHECK_THROWS_AS(decide(INFINITY), NonFiniteScore);
    CHECK(classifier_from_string("centsc") == ClassifierKind::ScaledCentroid);
    CHECK_THROWS_AS(classifier_from_string("lda"), InvalidArgument);
}
