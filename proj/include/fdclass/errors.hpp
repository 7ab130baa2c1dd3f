#pragma once

#include <stdexcept>
#include <string>

namespace fdc {

// Base for every library failure so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
public:
    GridMismatch() : Error("grid mismatch: functions live on different grids") {}
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    DegenerateFit(double x, double h)
        : Error("degenerate local linear fit at x=" + std::to_string(x) +
                " with bandwidth " + std::to_string(h)),
          x_(x), h_(h) {}
    double x() const { return x_; }
    double bandwidth() const { return h_; }

private:
    double x_;
    double h_;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class TooFewCurves : public Error {
public:
    using Error::Error;
};

class ZeroScale : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    RankDeficient(int population, int component)
        : Error("population " + std::to_string(population) + " eigenvalue " +
                std::to_string(component) + " is below the usable floor"),
          population_(population), component_(component) {}
    int population() const { return population_; }
    int component() const { return component_; }

private:
    int population_;
    int component_;
};

class NonFiniteScore : public Error {
public:
    NonFiniteScore() : Error("classification score is not finite") {}
};

class ZeroTau : public Error {
public:
    using Error::Error;
};

class NonOrthonormalBasis : public Error {
public:
    using Error::Error;
};

}  // namespace fdc
