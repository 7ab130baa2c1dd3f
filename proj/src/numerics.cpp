#include "fdclass/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fdclass/errors.hpp"

namespace fdc {

Grid::Grid(double lower, double upper, int n_points)
    : lower_(lower), upper_(upper), n_points_(n_points) {
    if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
        throw InvalidArgument("grid requires finite lower < upper");
    if (n_points < 2) throw InvalidArgument("grid requires at least two points");
}

double Grid::point(int i) const {
    if (i == n_points_ - 1) return upper_;
    return lower_ + spacing() * i;
}

std::vector<double> Grid::points() const {
    std::vector<double> out(static_cast<std::size_t>(n_points_));
    for (int i = 0; i < n_points_; ++i) out[static_cast<std::size_t>(i)] = point(i);
    return out;
}

std::vector<double> Grid::weights() const {
    std::vector<double> w(static_cast<std::size_t>(n_points_), spacing());
    w.front() *= 0.5;
    w.back() *= 0.5;
    return w;
}

FunctionOnGrid::FunctionOnGrid(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.size())
        throw InvalidArgument("function length does not match grid size");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidArgument("function values must be finite");
}

FunctionOnGrid FunctionOnGrid::constant(const Grid& grid, double value) {
    return {grid, std::vector<double>(static_cast<std::size_t>(grid.size()), value)};
}

FunctionOnGrid FunctionOnGrid::sample(const Grid& grid, const std::function<double(double)>& f) {
    std::vector<double> v(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) v[static_cast<std::size_t>(i)] = f(grid.point(i));
    return {grid, std::move(v)};
}

FunctionOnGrid& FunctionOnGrid::operator+=(const FunctionOnGrid& other) {
    if (!(grid_ == other.grid_)) throw GridMismatch();
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

FunctionOnGrid& FunctionOnGrid::operator-=(const FunctionOnGrid& other) {
    if (!(grid_ == other.grid_)) throw GridMismatch();
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

FunctionOnGrid& FunctionOnGrid::operator*=(double factor) {
    for (double& v : values_) v *= factor;
    return *this;
}

double integrate(const FunctionOnGrid& f) {
    auto v = f.values();
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) interior += v[i];
    return f.grid().spacing() * (interior + 0.5 * (v.front() + v.back()));
}

double inner_product(const FunctionOnGrid& f, const FunctionOnGrid& g) {
    if (!(f.grid() == g.grid())) throw GridMismatch();
    auto a = f.values();
    auto b = g.values();
    const std::size_t n = a.size();
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) interior += a[i] * b[i];
    return f.grid().spacing() * (interior + 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]));
}

double squared_distance(const FunctionOnGrid& f, const FunctionOnGrid& g) {
    if (!(f.grid() == g.grid())) throw GridMismatch();
    auto a = f.values();
    auto b = g.values();
    const std::size_t n = a.size();
    double interior = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) interior += (a[i] - b[i]) * (a[i] - b[i]);
    const double d0 = a[0] - b[0];
    const double d1 = a[n - 1] - b[n - 1];
    return f.grid().spacing() * (interior + 0.5 * (d0 * d0 + d1 * d1));
}

SymmetricMatrix::SymmetricMatrix(int dim) : dim_(dim) {
    if (dim < 1) throw InvalidArgument("matrix dimension must be positive");
    packed_.assign(static_cast<std::size_t>(dim) * (static_cast<std::size_t>(dim) + 1) / 2, 0.0);
}

double SymmetricMatrix::norm_inf() const {
    double best = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double row = 0.0;
        for (int j = 0; j < dim_; ++j) row += std::abs((*this)(i, j));
        best = std::max(best, row);
    }
    return best;
}

double SymmetricMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

EigenDecomposition symmetric_eigen(const SymmetricMatrix& m) {
    const int n = m.dim();
    const auto un = static_cast<std::size_t>(n);
    std::vector<double> a(un * un);
    std::vector<double> v(un * un, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i * n + j)] = m(i, j);
        v[static_cast<std::size_t>(i * n + i)] = 1.0;
    }
    auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * n + j)]; };
    auto V = [&](int i, int j) -> double& { return v[static_cast<std::size_t>(i * n + j)]; };

    double frob = 0.0;
    for (double x : a) frob += x * x;
    frob = std::sqrt(frob);

    const long long max_rotations = 50LL * n * n;
    long long rotations = 0;
    for (int sweep = 1;; ++sweep) {
        double off_abs = 0.0;
        double off_sq = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                off_abs += std::abs(A(p, q));
                off_sq += A(p, q) * A(p, q);
            }
        if (off_abs == 0.0 || std::sqrt(off_sq) <= 1e-17 * frob) break;
        // Early sweeps only rotate the larger elements.
        const double threshold = sweep < 4 ? 0.2 * off_abs / (static_cast<double>(n) * n) : 0.0;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = A(p, q);
                const double app = A(p, p);
                const double aqq = A(q, q);
                const double g = 100.0 * std::abs(apq);
                if (sweep > 4 && std::abs(app) + g == std::abs(app) &&
                    std::abs(aqq) + g == std::abs(aqq)) {
                    A(p, q) = 0.0;
                    A(q, p) = 0.0;
                    continue;
                }
                if (std::abs(apq) <= threshold || apq == 0.0) continue;
                if (++rotations > max_rotations)
                    throw ConvergenceFailure("Jacobi iteration cap exceeded");
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p);
                    const double akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k);
                    const double aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                A(p, q) = 0.0;
                A(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double vkp = V(k, p);
                    const double vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(un);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return A(x, x) > A(y, y); });

    EigenDecomposition out;
    out.values.reserve(un);
    out.vectors.reserve(un);
    for (int idx : order) {
        out.values.push_back(A(idx, idx));
        std::vector<double> col(un);
        for (int k = 0; k < n; ++k) col[static_cast<std::size_t>(k)] = V(k, idx);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < un; ++k)
            if (std::abs(col[k]) > std::abs(col[arg])) arg = k;
        if (col[arg] < 0)
            for (double& x : col) x = -x;
        out.vectors.push_back(std::move(col));
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

RandomStream RandomStream::child(std::uint64_t index) const {
    return RandomStream(splitmix64(seed_ ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

double RandomStream::next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double a, double b) {
    if (!(b > a)) throw InvalidArgument("uniform requires b > a");
    return a + (b - a) * next_unit();
}

double RandomStream::normal(double mean, double sd) {
    if (!(sd > 0)) throw InvalidArgument("normal requires sd > 0");
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return mean + sd * spare_normal_;
    }
    const double u1 = 1.0 - next_unit();  // (0, 1]
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = r * std::sin(angle);
    has_spare_normal_ = true;
    return mean + sd * r * std::cos(angle);
}

double RandomStream::exponential(double rate) {
    if (!(rate > 0)) throw InvalidArgument("exponential requires rate > 0");
    return -std::log(1.0 - next_unit()) / rate;
}

double standard_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double standard_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace fdc
