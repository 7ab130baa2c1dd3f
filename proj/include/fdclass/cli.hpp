#pragma once

// Curve CSV ingestion, report serialisation and the three subcommands
// (simulate, classify, theory) behind the fdclass executable.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fdclass/errors.hpp"
#include "fdclass/simulation.hpp"
#include "fdclass/smoothing.hpp"
#include "fdclass/theory.hpp"

namespace fdc {

class ParseError : public Error {
public:
    ParseError(int line, const std::string& detail, const std::string& source = "")
        : Error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line), detail_(detail) {}
    int line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    int line_;
    std::string detail_;
};

class InconsistentLabel : public Error {
public:
    explicit InconsistentLabel(const std::string& curve_id)
        : Error("curve '" + curve_id + "' has rows with different labels"), curve_id_(curve_id) {}
    const std::string& curve_id() const { return curve_id_; }

private:
    std::string curve_id_;
};

class EmptyFile : public Error {
public:
    using Error::Error;
};

/// Malformed theory inputs; `path` is a JSON pointer to the offending value.
class SchemaError : public Error {
public:
    SchemaError(const std::string& path, const std::string& what)
        : Error((path.empty() ? std::string("/") : path) + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Flag combinations that cannot be honoured together.
class UsageError : public Error {
public:
    using Error::Error;
};

inline constexpr const char* kCurveCsvHeader = "curve_id,label,x,y";

/// Curves in order of first appearance; rows of one curve need not be
/// contiguous. An empty label field leaves the curve unlabelled.
std::vector<SampledCurve> ingest_csv(std::istream& in);
std::vector<SampledCurve> ingest_csv(const std::filesystem::path& path);

void write_curves_csv(std::ostream& out, const std::vector<SampledCurve>& curves);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Writes every file to a temporary sibling first and renames only after all
/// writes succeeded, so a failure leaves none of the targets touched.
void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

/// The design shared by all curves when it is equally spaced; otherwise
/// kDefaultGridPoints nodes spanning every observed x.
Grid common_grid(const std::vector<SampledCurve>& curves);

std::string report_tsv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);

/// Parses the --inputs document. Throws SchemaError.
TheoryInputs theory_inputs_from_json(const std::string& text);

std::string theory_report(const TheoryConstants& c, double nu0);

/// {"schema": 1, "theory": {...}} plus a "sweep" array when one was run.
std::string theory_json(const TheoryConstants& c, double nu0, const SweepResult* sweep = nullptr);

/// err_surface.tsv: one row per (h, h₁) with the expansion's excess error.
std::string sweep_tsv(const SweepResult& result, const TheoryConstants& c, double nu0);

struct SimulateOptions {
    SimulationSpec spec;
    std::vector<ClassifierKind> classifiers{ClassifierKind::Centroid, ClassifierKind::ScaledCentroid,
                                            ClassifierKind::Qda};
    std::vector<Strategy> strategies{Strategy::CV, Strategy::PI, Strategy::NS};
    TuningConfig tuning;
    std::filesystem::path out_dir = ".";
    int threads = 1;
};

/// Runs the experiment and writes report.tsv and report.json into out_dir.
ExperimentReport cmd_simulate(const SimulateOptions& options);

struct ClassifyOptions {
    std::filesystem::path train;
    std::filesystem::path predict;
    ClassifierKind classifier = ClassifierKind::Centroid;
    Strategy strategy = Strategy::CV;
    std::optional<double> gamma;
    std::optional<double> gamma1;
    std::optional<int> p;
    TuningConfig tuning;
};

struct Prediction {
    std::string curve_id;
    int label;
    double score;
};

struct ClassifyResult {
    Candidate chosen;
    Grid grid;
    std::vector<Prediction> predictions;
};

/// Throws UsageError for conflicting flags (CV or NS with --gamma/--gamma1,
/// CV with --p, --p for a centroid classifier) and InvalidArgument when a
/// training curve is unlabelled.
ClassifyResult cmd_classify(const ClassifyOptions& options);

std::string predictions_csv(const std::vector<Prediction>& predictions);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fdc
