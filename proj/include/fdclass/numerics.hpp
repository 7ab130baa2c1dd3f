#pragma once

// Grids, trapezoid quadrature, a cyclic Jacobi eigensolver and the seeded
// random stream shared by the whole library.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fdc {

/// Uniform grid on [lower, upper], both endpoints included.
class Grid {
public:
    Grid(double lower, double upper, int n_points);

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    int size() const { return n_points_; }
    double spacing() const { return (upper_ - lower_) / (n_points_ - 1); }
    double length() const { return upper_ - lower_; }
    double point(int i) const;
    std::vector<double> points() const;

    /// Trapezoid weights: spacing * (1/2, 1, ..., 1, 1/2).
    std::vector<double> weights() const;

    bool operator==(const Grid& other) const = default;

private:
    double lower_;
    double upper_;
    int n_points_;
};

inline constexpr int kDefaultGridPoints = 251;

class FunctionOnGrid {
public:
    FunctionOnGrid(Grid grid, std::vector<double> values);
    static FunctionOnGrid constant(const Grid& grid, double value);
    static FunctionOnGrid sample(const Grid& grid, const std::function<double(double)>& f);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    int size() const { return grid_.size(); }

    FunctionOnGrid& operator+=(const FunctionOnGrid& other);
    FunctionOnGrid& operator-=(const FunctionOnGrid& other);
    FunctionOnGrid& operator*=(double factor);

    friend FunctionOnGrid operator+(FunctionOnGrid a, const FunctionOnGrid& b) { return a += b; }
    friend FunctionOnGrid operator-(FunctionOnGrid a, const FunctionOnGrid& b) { return a -= b; }
    friend FunctionOnGrid operator*(FunctionOnGrid a, double s) { return a *= s; }
    friend FunctionOnGrid operator*(double s, FunctionOnGrid a) { return a *= s; }

    bool operator==(const FunctionOnGrid& other) const = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

double integrate(const FunctionOnGrid& f);
double inner_product(const FunctionOnGrid& f, const FunctionOnGrid& g);
double squared_distance(const FunctionOnGrid& f, const FunctionOnGrid& g);

/// Dense symmetric matrix stored as its packed lower triangle, so that
/// entry(i, j) == entry(j, i) holds by construction.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(int dim);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return packed_[index(i, j)]; }
    void set(int i, int j, double value) { packed_[index(i, j)] = value; }
    void add(int i, int j, double value) { packed_[index(i, j)] += value; }

    /// Max absolute row sum.
    double norm_inf() const;
    double trace() const;

    bool operator==(const SymmetricMatrix& other) const = default;

private:
    std::size_t index(int i, int j) const {
        if (i < j) std::swap(i, j);
        return static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) + 1) / 2 +
               static_cast<std::size_t>(j);
    }

    int dim_;
    std::vector<double> packed_;
};

struct EigenDecomposition {
    std::vector<double> values;               // descending
    std::vector<std::vector<double>> vectors; // vectors[l] is the l-th unit eigenvector
};

/// Cyclic Jacobi. Eigenvalues come back in descending order; each eigenvector
/// is flipped so that its largest-magnitude entry is positive.
EigenDecomposition symmetric_eigen(const SymmetricMatrix& m);

/// Seedable stream with a platform-independent output sequence. All variate
/// transforms are written out here rather than taken from <random>
/// distributions, whose algorithms are implementation-defined.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    static constexpr const char* kAlgorithm =
        "mt19937_64+splitmix64-child;u53-uniform;box-muller-normal;inversion-exponential";

    std::uint64_t seed() const { return seed_; }

    /// Independent stream for work item `index`; depends only on (seed, index).
    RandomStream child(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double next_unit();

    double uniform(double a, double b);
    double normal(double mean, double sd);
    double exponential(double rate);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

double standard_normal_pdf(double x);
double standard_normal_cdf(double x);

}  // namespace fdc
