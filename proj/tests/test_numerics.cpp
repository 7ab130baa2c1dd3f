#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fdclass/errors.hpp"
#include "fdclass/numerics.hpp"
#include "oracles.hpp"

using namespace fdc;

namespace {

SymmetricMatrix random_symmetric(int n, std::uint64_t seed) {
    RandomStream s(seed);
    SymmetricMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) m.set(i, j, s.uniform(-1, 1));
    return m;
}

double max_abs(const std::vector<double>& v) {
    double out = 0;
    for (double x : v) out = std::max(out, std::abs(x));
    return out;
}

}  // namespace

TEST_CASE("grid geometry and validation") {
    const Grid g(0, 100, 251);
    CHECK(g.spacing() == doctest::Approx(0.4));
    CHECK(g.point(0) == 0.0);
    CHECK(g.point(250) == 100.0);
    const auto w = g.weights();
    CHECK(w.front() == doctest::Approx(0.2));
    CHECK(w[1] == doctest::Approx(0.4));
    CHECK_THROWS_AS(Grid(1, 1, 5), InvalidArgument);
    CHECK_THROWS_AS(Grid(0, 1, 1), InvalidArgument);
    CHECK_THROWS_AS(FunctionOnGrid(g, std::vector<double>(250, 0.0)), InvalidArgument);
    CHECK_THROWS_AS(FunctionOnGrid(Grid(0, 1, 2), {0.0, NAN}), InvalidArgument);
}

TEST_CASE("integrate: exact for affine, analytic trapezoid sum for x^2") {
    CHECK(integrate(FunctionOnGrid::sample(Grid(0, 1, 11), [](double x) { return x; })) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(integrate(FunctionOnGrid::constant(Grid(0, 100, 101), 1.0)) == doctest::Approx(100).epsilon(1e-14));
    // Trapezoid sum of x^2 on n = 100 intervals: h^3 n(n+1)(2n+1)/6 - h/2.
    const double h = 0.01, n = 100;
    const double analytic = h * h * h * n * (n + 1) * (2 * n + 1) / 6 - h / 2;
    const double value = integrate(FunctionOnGrid::sample(Grid(0, 1, 101), [](double x) { return x * x; }));
    CHECK(analytic == doctest::Approx(0.33335).epsilon(1e-12));
    CHECK(value == doctest::Approx(analytic).epsilon(1e-13));
}

TEST_CASE("property: trapezoid exact on random affine functions and grids") {
    RandomStream s(3);
    for (int trial = 0; trial < 200; ++trial) {
        const double lo = s.uniform(-50, 50), len = s.uniform(0.1, 100);
        const int n = 2 + static_cast<int>(s.next_unit() * 300);
        const double a = s.uniform(-10, 10), b = s.uniform(-10, 10);
        const Grid g(lo, lo + len, n);
        const double exact = a * len + b * ((lo + len) * (lo + len) - lo * lo) / 2;
        const double got = integrate(FunctionOnGrid::sample(g, [&](double x) { return a + b * x; }));
        CHECK(std::abs(got - exact) <= 1e-11 * (std::abs(a) * len + std::abs(b) * len * (std::abs(lo) + len)));
    }
}

TEST_CASE("inner_product") {
    const Grid g(0, 1, 11);
    CHECK(inner_product(FunctionOnGrid::constant(g, 1), FunctionOnGrid::constant(g, 1)) == doctest::Approx(1));
    const Grid g2(0, 2, 21);
    CHECK(inner_product(FunctionOnGrid::sample(g2, [](double x) { return x; }), FunctionOnGrid::constant(g2, 1)) ==
          doctest::Approx(2));
    CHECK_THROWS_AS(inner_product(FunctionOnGrid::constant(g, 1), FunctionOnGrid::constant(g2, 1)), GridMismatch);

    // sin·cos on [0, π]: compare with a 2·10^5-node reference quadrature of the
    // same integrand (exact value 0).
    const Grid gp(0, std::numbers::pi, 201);
    const double got = inner_product(FunctionOnGrid::sample(gp, [](double x) { return std::sin(x); }),
                                     FunctionOnGrid::sample(gp, [](double x) { return std::cos(x); }));
    const Grid fine(0, std::numbers::pi, 200001);
    std::vector<double> prod;
    for (int i = 0; i < fine.size(); ++i) prod.push_back(std::sin(fine.point(i)) * std::cos(fine.point(i)));
    CHECK(std::abs(got - oracle::integral(prod, fine)) <= 1e-6);
}

TEST_CASE("symmetric_eigen: small exact cases") {
    SymmetricMatrix id(3);
    for (int i = 0; i < 3; ++i) id.set(i, i, 1);
    const auto e = symmetric_eigen(id);
    for (double v : e.values) CHECK(v == doctest::Approx(1));

    SymmetricMatrix d(3);
    d.set(0, 0, -1);
    d.set(1, 1, 2);
    d.set(2, 2, 0);
    const auto ed = symmetric_eigen(d);
    CHECK(ed.values == std::vector<double>{2, 0, -1});
    CHECK(ed.vectors[0] == std::vector<double>{0, 1, 0});
    CHECK(ed.vectors[1] == std::vector<double>{0, 0, 1});
    CHECK(ed.vectors[2] == std::vector<double>{1, 0, 0});
}

TEST_CASE("property: eigen residual, orthonormality, reconstruction, trace, sign") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const int n = 2 + static_cast<int>(seed % 15);
        const SymmetricMatrix m = random_symmetric(n, seed);
        const auto e = symmetric_eigen(m);
        const double norm = m.norm_inf();
        REQUIRE(e.values.size() == static_cast<std::size_t>(n));
        for (int l = 0; l + 1 < n; ++l) CHECK(e.values[l] >= e.values[l + 1]);
        double sum = 0;
        for (int l = 0; l < n; ++l) {
            const auto& v = e.vectors[l];
            std::vector<double> r(n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) r[i] += m(i, j) * v[j];
                r[i] -= e.values[l] * v[i];
            }
            CHECK(max_abs(r) <= 1e-10 * norm);
            for (int k = 0; k < n; ++k) {
                double dot = 0;
                for (int i = 0; i < n; ++i) dot += v[i] * e.vectors[k][i];
                CHECK(std::abs(dot - (k == l ? 1.0 : 0.0)) <= 1e-10);
            }
            // Sign convention: largest-magnitude entry positive.
            double big = 0;
            for (double x : v)
                if (std::abs(x) > std::abs(big)) big = x;
            CHECK(big > 0);
            sum += e.values[l];
        }
        CHECK(std::abs(sum - m.trace()) <= 1e-9 * n * norm);
        double recon = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0;
                for (int l = 0; l < n; ++l) s += e.vectors[l][i] * e.values[l] * e.vectors[l][j];
                recon = std::max(recon, std::abs(s - m(i, j)));
            }
        CHECK(recon <= 1e-9);
    }
}

TEST_CASE("property: eigenvalues of AᵀA are non-negative and match Eigen") {
    RandomStream s(99);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + trial, k = 2 + trial / 2;
        std::vector<std::vector<double>> a(k, std::vector<double>(n));
        for (auto& row : a)
            for (double& x : row) x = s.normal(0, 1);
        SymmetricMatrix m(n);
        Eigen::MatrixXd dense(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                double v = 0;
                for (const auto& row : a) v += row[i] * row[j];
                m.set(i, j, v);
                dense(i, j) = dense(j, i) = v;
            }
        const auto e = symmetric_eigen(m);
        const Eigen::VectorXd ref = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
        for (int l = 0; l < n; ++l) {
            CHECK(e.values[l] >= -1e-10 * m.norm_inf());
            CHECK(std::abs(e.values[l] - ref(n - 1 - l)) <= 1e-10 * m.norm_inf());
        }
    }
}

TEST_CASE("random stream: domains, determinism, moments") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform(0, 1);
        CHECK(u == b.uniform(0, 1));
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK_THROWS_AS(a.uniform(1, 1), InvalidArgument);
    CHECK_THROWS_AS(a.normal(0, 0), InvalidArgument);
    CHECK_THROWS_AS(a.exponential(0), InvalidArgument);

    RandomStream e(5);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) sum += e.exponential(0.5);
    CHECK(std::abs(sum / 1e5 - 2.0) <= 0.05);

    RandomStream n(6);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < 100000; ++i) {
        const double z = n.normal(1, 2);
        s1 += z;
        s2 += z * z;
    }
    const double mean = s1 / 1e5, var = s2 / 1e5 - mean * mean;
    CHECK(std::abs(mean - 1) <= 0.03);
    CHECK(std::abs(var - 4) <= 0.1);

    // Children depend on (seed, index) only.
    RandomStream c1 = RandomStream(7).child(3), c2 = RandomStream(7).child(3), c3 = RandomStream(7).child(4);
    const auto x1 = c1.next_u64();
    CHECK(x1 == c2.next_u64());
    CHECK(x1 != c3.next_u64());
}

TEST_CASE("standard normal pdf and cdf") {
    CHECK(standard_normal_pdf(0) == doctest::Approx(1 / std::sqrt(2 * std::numbers::pi)));
    CHECK(standard_normal_cdf(0) == doctest::Approx(0.5));
    CHECK(standard_normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
}
