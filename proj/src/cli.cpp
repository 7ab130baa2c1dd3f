#include "fdclass/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace fdc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return std::string(s.substr(a, b - a));
}

// RFC 4180 fields; quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && trim(field).empty()) {
            quoted = was_quoted = true;
            field.clear();
        } else if (ch == ',') {
            fields.push_back(was_quoted ? field : trim(field));
            field.clear();
            was_quoted = false;
        } else {
            field += ch;
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quoted field");
    fields.push_back(was_quoted ? field : trim(field));
    return fields;
}

double parse_real(const std::string& text, int line_no, const char* column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last)
        throw ParseError(line_no, std::string(column) + "='" + text + "' is not a number");
    if (!std::isfinite(value)) throw ParseError(line_no, std::string(column) + "='" + text + "' is not finite");
    return value;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

ordered_json candidate_json(const Candidate& c) {
    ordered_json j;
    j["gamma"] = c.gamma;
    j["gamma1"] = c.gamma1;
    j["p"] = c.p ? ordered_json(*c.p) : ordered_json(nullptr);
    return j;
}

ordered_json grid_json(const Grid& g) {
    return ordered_json{{"lower", g.lower()}, {"upper", g.upper()}, {"points", g.size()}};
}

std::string cell_name(ClassifierKind kind, Strategy strategy) {
    std::string s(to_string(strategy));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return std::string(to_string(kind)) + ":" + s;
}

// JSON schema helpers; `path` is a JSON pointer.
const nlohmann::json& member(const nlohmann::json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "/" + key, "missing");
    return *it;
}

double number_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
    return v;
}

std::vector<double> numbers_at(const nlohmann::json& j, const std::string& path, std::optional<int> length) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
    if (length && static_cast<int>(j.size()) != *length)
        throw SchemaError(path, "expected " + std::to_string(*length) + " values, found " + std::to_string(j.size()));
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_at(j[i], path + "/" + std::to_string(i)));
    return out;
}

FunctionOnGrid function_at(const nlohmann::json& j, const std::string& path, const Grid& grid) {
    return {grid, numbers_at(j, path, grid.size())};
}

SymmetricMatrix covariance_at(const nlohmann::json& j, const std::string& path, const Grid& grid) {
    if (!j.is_object()) throw SchemaError(path, "expected an object with 'matrix' or 'eigenvalues'/'eigenfunctions'");
    const int n = grid.size();
    if (j.contains("matrix")) {
        const auto& rows = j["matrix"];
        const std::string mpath = path + "/matrix";
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
            throw SchemaError(mpath, "expected " + std::to_string(n) + " rows");
        std::vector<std::vector<double>> full;
        for (int i = 0; i < n; ++i) full.push_back(numbers_at(rows[static_cast<std::size_t>(i)], mpath + "/" + std::to_string(i), n));
        SymmetricMatrix g(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k <= i; ++k) {
                const double a = full[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                const double b = full[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}))
                    throw SchemaError(mpath + "/" + std::to_string(i) + "/" + std::to_string(k), "matrix is not symmetric");
                g.set(i, k, 0.5 * (a + b));
            }
        return g;
    }
    const auto values = numbers_at(member(j, "eigenvalues", path), path + "/eigenvalues", std::nullopt);
    const auto& fns = member(j, "eigenfunctions", path);
    const std::string fpath = path + "/eigenfunctions";
    if (!fns.is_array() || fns.size() != values.size())
        throw SchemaError(fpath, "expected one eigenfunction per eigenvalue");
    std::vector<FunctionOnGrid> basis;
    for (std::size_t l = 0; l < fns.size(); ++l) basis.push_back(function_at(fns[l], fpath + "/" + std::to_string(l), grid));
    for (std::size_t l = 0; l < values.size(); ++l)
        if (values[l] < 0) throw SchemaError(path + "/eigenvalues/" + std::to_string(l), "must be non-negative");
    return covariance_from_eigenpairs(values, basis);
}

int default_threads() {
    if (const char* env = std::getenv("FDA_THREADS")) {
        int n = 0;
        const std::string s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec != std::errc() || ptr != s.data() + s.size() || n < 1)
            throw UsageError("FDA_THREADS='" + s + "' is not a positive integer");
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class T, class F>
std::vector<T> parse_names(const std::string& text, F convert, const char* flag) {
    std::vector<T> out;
    for (const auto& name : split_list(text)) {
        try {
            out.push_back(convert(name));
        } catch (const Error& e) {
            throw UsageError(std::string(flag) + ": " + e.what());
        }
    }
    if (out.empty()) throw UsageError(std::string(flag) + " needs at least one value");
    return out;
}

std::vector<double> parse_reals(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || !(v > 0) || !std::isfinite(v))
            throw UsageError(std::string(flag) + ": '" + item + "' is not a positive number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string(flag) + " needs at least one value");
    return out;
}

}  // namespace

std::vector<SampledCurve> ingest_csv(std::istream& in) {
    std::string line;
    int line_no = 0;
    bool have_header = false;
    std::vector<SampledCurve> curves;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (trim(line).empty()) continue;
            if (trim(line) != kCurveCsvHeader)
                throw ParseError(line_no, std::string("expected header '") + kCurveCsvHeader + "'");
            have_header = true;
            continue;
        }
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line, line_no);
        if (f.size() != 4) throw ParseError(line_no, "expected 4 fields, found " + std::to_string(f.size()));
        if (f[0].empty()) throw ParseError(line_no, "empty curve_id");
        std::optional<int> label;
        if (f[1] == "0" || f[1] == "1") label = f[1][0] - '0';
        else if (!f[1].empty()) throw ParseError(line_no, "label='" + f[1] + "' must be 0, 1 or empty");
        const Observation obs{parse_real(f[2], line_no, "x"), parse_real(f[3], line_no, "y")};

        auto [it, inserted] = index.try_emplace(f[0], curves.size());
        if (inserted) {
            curves.push_back(SampledCurve{f[0], {}, label});
        } else if (curves[it->second].label != label) {
            throw InconsistentLabel(f[0]);
        }
        curves[it->second].points.push_back(obs);
    }
    if (in.bad()) throw Error("read failure");
    if (!have_header) throw EmptyFile("no header line");
    if (curves.empty()) throw EmptyFile("no data rows");
    return curves;
}

std::vector<SampledCurve> ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return ingest_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), e.detail(), path.string());
    }
}

void write_curves_csv(std::ostream& out, const std::vector<SampledCurve>& curves) {
    out << kCurveCsvHeader << '\n';
    for (const auto& c : curves) {
        const std::string id = csv_field(c.id);
        const std::string label = c.label ? std::to_string(*c.label) : "";
        for (const auto& p : c.points) out << id << ',' << label << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
    }
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw Error("number formatting failed");
    return std::string(buf, ptr);
}

void write_files_atomically(const std::vector<std::pair<std::filesystem::path, std::string>>& files) {
    std::vector<std::filesystem::path> temps;
    auto cleanup = [&] {
        std::error_code ignored;
        for (const auto& t : temps) std::filesystem::remove(t, ignored);
    };
    try {
        for (const auto& [path, content] : files) {
            if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
            auto temp = path;
            temp += ".tmp." + std::to_string(::getpid());
            temps.push_back(temp);
            std::ofstream out(temp, std::ios::binary | std::ios::trunc);
            out << content;
            out.close();
            if (!out) throw Error("cannot write '" + temp.string() + "'");
        }
        for (std::size_t i = 0; i < files.size(); ++i) std::filesystem::rename(temps[i], files[i].first);
    } catch (const std::filesystem::filesystem_error& e) {
        cleanup();
        throw Error(e.what());
    } catch (...) {
        cleanup();
        throw;
    }
}

Grid common_grid(const std::vector<SampledCurve>& curves) {
    if (curves.empty()) throw InvalidArgument("no curves");
    auto sorted_x = [](const SampledCurve& c) {
        std::vector<double> xs;
        for (const auto& p : c.points) xs.push_back(p.x);
        std::sort(xs.begin(), xs.end());
        return xs;
    };
    const std::vector<double> first = sorted_x(curves.front());
    bool shared = first.size() >= 2 && first.front() < first.back();
    for (std::size_t i = 1; shared && i < curves.size(); ++i) shared = sorted_x(curves[i]) == first;
    if (shared) {
        const double step = (first.back() - first.front()) / static_cast<double>(first.size() - 1);
        for (std::size_t i = 0; shared && i < first.size(); ++i)
            shared = std::abs(first[i] - (first.front() + step * static_cast<double>(i))) <= 1e-9 * (first.back() - first.front());
        if (shared) return Grid(first.front(), first.back(), static_cast<int>(first.size()));
    }
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            lo = std::min(lo, p.x);
            hi = std::max(hi, p.x);
        }
    if (!(lo < hi)) throw InvalidArgument("all design points coincide");
    return Grid(lo, hi, kDefaultGridPoints);
}

std::string report_tsv(const ExperimentReport& r) {
    // One row per (noise, n_tr); each cell is "mean percent correct (standard error)".
    std::ostringstream out;
    out << "model\tnoise\tn_tr\tB";
    for (const auto& c : r.cells) out << '\t' << cell_name(c.key.classifier, c.key.strategy);
    out << '\n' << to_string(r.spec.model) << '\t' << r.spec.noise_version << '\t' << r.spec.n_tr << '\t' << r.spec.B;
    for (const auto& c : r.cells) out << '\t' << fixed(c.mean_percent, 1) << " (" << fixed(c.standard_error, 2) << ')';
    out << '\n';
    return out.str();
}

std::string report_json(const ExperimentReport& r) {
    ordered_json j;
    j["schema"] = 1;
    j["generator"] = r.generator;
    const SimulationSpec& s = r.spec;
    j["spec"] = {{"model", to_string(s.model)}, {"noise", s.noise_version}, {"n_tr", s.n_tr},
                 {"n_test", s.n_test},           {"B", s.B},                 {"seed", s.seed},
                 {"m", s.m},                     {"grid", grid_json(s.grid())}, {"jitter_sd", s.jitter_sd}};
    j["tuning"] = {{"gamma_grid", r.tuning.gamma_grid},
                   {"gamma1_grid", r.tuning.gamma1_grid},
                   {"p_grid", r.tuning.p_grid},
                   {"priors", {r.tuning.priors.pi0, r.tuning.priors.pi1}}};
    ordered_json cells = ordered_json::array();
    for (const auto& c : r.cells) {
        ordered_json cj;
        cj["classifier"] = to_string(c.key.classifier);
        cj["strategy"] = to_string(c.key.strategy);
        cj["replicates"] = c.replicates;
        cj["mean_percent"] = c.mean_percent;
        cj["standard_error"] = c.standard_error;
        cj["mean_gamma"] = c.mean_gamma ? ordered_json(*c.mean_gamma) : ordered_json(nullptr);
        cj["mean_gamma1"] = c.mean_gamma1 ? ordered_json(*c.mean_gamma1) : ordered_json(nullptr);
        cj["mean_p"] = c.mean_p ? ordered_json(*c.mean_p) : ordered_json(nullptr);
        ordered_json surface = ordered_json::array();
        for (const auto& pt : c.mean_surface) {
            ordered_json pj = candidate_json(pt.candidate);
            pj["cv_error"] = pt.cv_error;
            surface.push_back(std::move(pj));
        }
        cj["mean_surface"] = std::move(surface);
        cells.push_back(std::move(cj));
    }
    j["cells"] = std::move(cells);
    ordered_json excluded = ordered_json::array();
    for (const auto& [index, reason] : r.excluded) excluded.push_back({{"replicate", index}, {"reason", reason}});
    j["excluded"] = std::move(excluded);
    ordered_json reps = ordered_json::array();
    for (const auto& rep : r.replicates) {
        if (rep.excluded) continue;
        ordered_json rj;
        rj["index"] = rep.index;
        ordered_json rc = ordered_json::array();
        for (const auto& [key, res] : rep.cells) {
            ordered_json cj = candidate_json(res.selected);
            cj = ordered_json{{"classifier", to_string(key.classifier)},
                              {"strategy", to_string(key.strategy)},
                              {"percent_correct", res.percent_correct},
                              {"selected", cj}};
            rc.push_back(std::move(cj));
        }
        rj["cells"] = std::move(rc);
        reps.push_back(std::move(rj));
    }
    j["replicates"] = std::move(reps);
    return j.dump(2) + "\n";
}

TheoryInputs theory_inputs_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("", std::string("not valid JSON: ") + e.what());
    }
    const auto& g = member(doc, "grid", "");
    const double lower = number_at(member(g, "lower", "/grid"), "/grid/lower");
    const double upper = number_at(member(g, "upper", "/grid"), "/grid/upper");
    const auto& pts = member(g, "points", "/grid");
    if (!pts.is_number_integer() || pts.get<long long>() < 4)
        throw SchemaError("/grid/points", "expected an integer >= 4");
    if (!(lower < upper)) throw SchemaError("/grid", "lower must be below upper");
    const Grid grid(lower, upper, static_cast<int>(pts.get<long long>()));

    auto fn = [&](const char* key) { return function_at(member(doc, key, ""), std::string("/") + key, grid); };
    auto optional_fn = [&](const char* key) -> std::optional<FunctionOnGrid> {
        if (!doc.contains(key)) return std::nullopt;
        return function_at(doc[key], std::string("/") + key, grid);
    };
    auto num = [&](const char* key) { return number_at(member(doc, key, ""), std::string("/") + key); };

    FunctionOnGrid mu0 = fn("mu0");
    FunctionOnGrid mu1 = fn("mu1");
    FunctionOnGrid mu0_dd = optional_fn("mu0_dd").value_or(second_derivative(mu0));
    FunctionOnGrid mu1_dd = optional_fn("mu1_dd").value_or(second_derivative(mu1));
    SymmetricMatrix g0 = covariance_at(member(doc, "covariance0", ""), "/covariance0", grid);
    SymmetricMatrix g1 = covariance_at(member(doc, "covariance1", ""), "/covariance1", grid);
    const double pi0 = doc.contains("pi0") ? num("pi0") : 0.5;
    const double pi1 = doc.contains("pi1") ? num("pi1") : 1.0 - pi0;
    if (doc.contains("kernel")) {
        const auto& k = doc["kernel"];
        if (!k.is_string() || k.get<std::string>() != "epanechnikov")
            throw SchemaError("/kernel", "only \"epanechnikov\" is supported");
    }
    TheoryInputs in{std::move(mu0), std::move(mu1), std::move(mu0_dd), std::move(mu1_dd), std::move(g0),
                    std::move(g1),  optional_fn("design_density"), num("sigma_eps0_sq"), num("sigma_eps1_sq"),
                    pi0,            pi1, num("nu0"), num("nu1"), kernel_moments()};
    try {
        in.validate();
    } catch (const Error& e) {
        throw SchemaError("", e.what());
    }
    return in;
}

std::string theory_report(const TheoryConstants& c, double nu0) {
    std::ostringstream out;
    auto row = [&](const char* name, double v) { out << name << " = " << format_double(v) << '\n'; };
    row("b00", c.b00);
    row("b10", c.b10);
    row("tau0^2", c.tau0_sq);
    row("tau1^2", c.tau1_sq);
    row("alpha0", c.alpha0);
    row("alpha1", c.alpha1);
    row("c0", c.c0);
    row("c1", c.c1);
    row("c01", c.c01);
    row("c11", c.c11);
    row("d00", c.d[0][0]);
    row("d01", c.d[0][1]);
    row("d10", c.d[1][0]);
    row("d11", c.d[1][1]);
    row("c^0", c.c_0);
    row("c1^0", c.c1_0);
    if (c.regime == Regime::DegenerateD0)
        out << "d0 = 0 (Degenerate-d0)\n";
    else
        row("d0", c.d_0);
    row("nu0", nu0);
    const RegimeAdvice advice = classify_regime(c);
    out << "regime " << to_string(advice.regime) << ": " << advice.recommendation << '\n';
    if (advice.regime == Regime::I) row("h1_opt", expansion_minimizer(c, nu0));
    return out.str();
}

std::string theory_json(const TheoryConstants& c, double nu0, const SweepResult* sweep) {
    nlohmann::ordered_json t;
    t["b00"] = c.b00;
    t["b10"] = c.b10;
    t["tau0_sq"] = c.tau0_sq;
    t["tau1_sq"] = c.tau1_sq;
    t["alpha0"] = c.alpha0;
    t["alpha1"] = c.alpha1;
    t["c0"] = c.c0;
    t["c1"] = c.c1;
    t["c01"] = c.c01;
    t["c11"] = c.c11;
    t["d"] = {{c.d[0][0], c.d[0][1]}, {c.d[1][0], c.d[1][1]}};
    t["c_0"] = c.c_0;
    t["c1_0"] = c.c1_0;
    t["d_0"] = c.d_0;
    t["nu0"] = nu0;
    const RegimeAdvice advice = classify_regime(c);
    t["regime"] = std::string(to_string(advice.regime));
    t["recommendation"] = advice.recommendation;
    if (advice.regime == Regime::I) t["h1_opt"] = expansion_minimizer(c, nu0);
    nlohmann::ordered_json doc;
    doc["schema"] = 1;
    doc["theory"] = std::move(t);
    if (sweep) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& p : sweep->points)
            rows.push_back({{"h", p.h}, {"h1", p.h1}, {"err", p.err}, {"se", p.standard_error},
                            {"expansion_excess", expansion_predict(c, 0.0, p.h, p.h1, nu0)}});
        doc["sweep"] = std::move(rows);
    }
    return doc.dump(2) + "\n";
}

std::string sweep_tsv(const SweepResult& result, const TheoryConstants& c, double nu0) {
    std::ostringstream out;
    out << "h\th1\terr\tse\texpansion_excess\n";
    for (const auto& p : result.points)
        out << format_double(p.h) << '\t' << format_double(p.h1) << '\t' << format_double(p.err) << '\t'
            << format_double(p.standard_error) << '\t' << format_double(expansion_predict(c, 0.0, p.h, p.h1, nu0))
            << '\n';
    return out.str();
}

ExperimentReport cmd_simulate(const SimulateOptions& o) {
    ExperimentReport report = run_experiment(o.spec, o.strategies, o.classifiers, o.tuning, o.threads);
    write_files_atomically({{o.out_dir / "report.tsv", report_tsv(report)},
                            {o.out_dir / "report.json", report_json(report)}});
    return report;
}

ClassifyResult cmd_classify(const ClassifyOptions& o) {
    const bool gammas = o.gamma || o.gamma1;
    if (o.strategy == Strategy::CV && gammas)
        throw UsageError("--strategy cv selects gamma and gamma1 itself; drop --gamma/--gamma1");
    if (o.strategy == Strategy::CV && o.p) throw UsageError("--strategy cv selects p itself; drop --p");
    if (o.strategy == Strategy::NS && gammas) throw UsageError("--strategy ns does not smooth; drop --gamma/--gamma1");
    if (o.p && o.classifier != ClassifierKind::Qda) throw UsageError("--p applies to the qda classifier only");
    if (o.p && *o.p < 1) throw UsageError("--p must be at least 1");
    for (const auto& g : {o.gamma, o.gamma1})
        if (g && !(*g > 0)) throw UsageError("--gamma and --gamma1 must be positive");

    const auto training = ingest_csv(o.train);
    const auto predict = ingest_csv(o.predict);
    const std::vector<int> labels = labels_of(training);
    std::vector<SampledCurve> all = training;
    all.insert(all.end(), predict.begin(), predict.end());
    for (const auto& c : all) c.validate();
    const Grid grid = common_grid(all);

    Candidate chosen{o.gamma.value_or(1.0), o.gamma1.value_or(1.0), o.p};
    std::vector<FunctionOnGrid> train_smooth, held_out, new_smooth;
    if (o.strategy == Strategy::NS) {
        train_smooth = interpolate_all(training, grid);
        held_out = train_smooth;
        new_smooth = interpolate_all(predict, grid);
    } else {
        const auto h_train = plugin_bandwidths(training);
        const auto h_new = plugin_bandwidths(predict);
        if (o.strategy == Strategy::CV) chosen = select_tuning(training, h_train, o.classifier, o.tuning, grid).best;
        train_smooth = smooth_scaled(training, h_train, chosen.gamma1, grid);
        held_out = chosen.gamma == chosen.gamma1 ? train_smooth : smooth_scaled(training, h_train, chosen.gamma, grid);
        new_smooth = smooth_scaled(predict, h_new, chosen.gamma, grid);
    }
    if (o.classifier == ClassifierKind::Qda && !chosen.p)
        chosen.p = select_truncation(train_smooth, held_out, labels, o.classifier, o.tuning).best.p;

    const TrainedClassifier classifier = train_classifier(train_smooth, labels, o.classifier, chosen.p);
    ClassifyResult result{chosen, grid, {}};
    for (std::size_t i = 0; i < predict.size(); ++i) {
        const double score = classifier.score(new_smooth[i]);
        result.predictions.push_back({predict[i].id, decide(score), score});
    }
    return result;
}

std::string predictions_csv(const std::vector<Prediction>& predictions) {
    std::ostringstream out;
    out << "curve_id,label,score\n";
    for (const auto& p : predictions) out << csv_field(p.curve_id) << ',' << p.label << ',' << format_double(p.score) << '\n';
    return out.str();
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Classification of discretely sampled noisy curves"};
    app.name("fdclass");
    app.require_subcommand(1);

    std::optional<int> threads;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment on a benchmark model");
    std::string model, classifiers = "cent,centsc,qda", strategies = "cv,pi,ns", out_dir = ".";
    SimulationSpec spec;
    sim->add_option("--model", model, "Benchmark model A-F")->required();
    sim->add_option("--noise", spec.noise_version, "Noise version 1-3")->check(CLI::Range(1, 3))->capture_default_str();
    sim->add_option("--ntr", spec.n_tr, "Training curves per replicate")->capture_default_str();
    sim->add_option("--ntest", spec.n_test, "Test curves per replicate")->capture_default_str();
    sim->add_option("--B", spec.B, "Replicates")->capture_default_str();
    sim->add_option("--seed", spec.seed, "Master seed")->capture_default_str();
    sim->add_option("--classifiers", classifiers, "Subset of cent,centsc,qda")->capture_default_str();
    sim->add_option("--strategies", strategies, "Subset of cv,pi,ns")->capture_default_str();
    sim->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sim->add_option("--threads", threads, "Worker threads (default: FDA_THREADS, else all cores)");

    auto* cls = app.add_subcommand("classify", "Train on labelled curves and label new ones");
    ClassifyOptions copt;
    std::string train_path, predict_path, classifier = "cent", strategy = "cv", predictions_out;
    cls->add_option("--train", train_path, "Labelled training CSV")->required();
    cls->add_option("--predict", predict_path, "CSV of curves to label")->required();
    cls->add_option("--classifier", classifier, "cent, centsc or qda")->capture_default_str();
    cls->add_option("--strategy", strategy, "cv, pi or ns")->capture_default_str();
    cls->add_option("--gamma", copt.gamma, "Plug-in factor for new curves (pi only)");
    cls->add_option("--gamma1", copt.gamma1, "Plug-in factor for training curves (pi only)");
    cls->add_option("--p", copt.p, "QDA truncation");
    cls->add_option("--out", predictions_out, "Output CSV (default: stdout)");

    auto* thy = app.add_subcommand("theory", "Error-expansion constants and bandwidth regime");
    std::string scenario, inputs_path, sweep, h_list, sweep_out = ".", json_out;
    SweepConfig sweep_config;
    auto* scen_opt = thy->add_option("--scenario", scenario, "builtin-gaussian-1 or builtin-symmetric");
    auto* in_opt = thy->add_option("--inputs", inputs_path, "Theory inputs JSON");
    scen_opt->excludes(in_opt);
    thy->add_option("--sweep", sweep, "Comma-separated h1 values for a Monte Carlo error sweep");
    thy->add_option("--h-new", h_list, "Comma-separated new-curve bandwidths (default: the scenario's)");
    thy->add_option("--B", sweep_config.B, "Sweep replicates")->capture_default_str();
    thy->add_option("--ntest", sweep_config.n_test, "Test curves per replicate")->capture_default_str();
    thy->add_option("--seed", sweep_config.seed, "Sweep seed")->capture_default_str();
    thy->add_option("--out", sweep_out, "Directory for err_surface.tsv")->capture_default_str();
    thy->add_option("--json", json_out, "Also write the constants (and sweep) as JSON to this file");
    thy->add_option("--threads", threads, "Worker threads (default: FDA_THREADS, else all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sim->parsed()) {
            SimulateOptions o;
            try {
                spec.model = model_from_string(model);
            } catch (const Error& e) {
                throw UsageError(std::string("--model: ") + e.what());
            }
            o.spec = spec;
            o.classifiers = parse_names<ClassifierKind>(classifiers, classifier_from_string, "--classifiers");
            o.strategies = parse_names<Strategy>(strategies, strategy_from_string, "--strategies");
            o.out_dir = out_dir;
            o.threads = threads ? *threads : default_threads();
            if (o.threads < 1) throw UsageError("--threads must be at least 1");
            try {
                o.spec.validate();
            } catch (const InvalidArgument& e) {
                throw UsageError(e.what());
            }
            const ExperimentReport report = cmd_simulate(o);
            out << report_tsv(report);
            return 0;
        }
        if (cls->parsed()) {
            copt.train = train_path;
            copt.predict = predict_path;
            try {
                copt.classifier = classifier_from_string(classifier);
                copt.strategy = strategy_from_string(strategy);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            const ClassifyResult result = cmd_classify(copt);
            const std::string csv = predictions_csv(result.predictions);
            if (predictions_out.empty())
                out << csv;
            else
                write_files_atomically({{predictions_out, csv}});
            err << "gamma=" << format_double(result.chosen.gamma) << " gamma1=" << format_double(result.chosen.gamma1);
            if (result.chosen.p) err << " p=" << *result.chosen.p;
            err << " grid=[" << format_double(result.grid.lower()) << ", " << format_double(result.grid.upper())
                << "] x " << result.grid.size() << '\n';
            return 0;
        }
        if (thy->parsed()) {
            if (scenario.empty() == inputs_path.empty()) throw UsageError("give exactly one of --scenario and --inputs");
            std::optional<BuiltinScenario> builtin;
            TheoryInputs inputs = [&] {
                if (!scenario.empty()) {
                    builtin = builtin_scenario(scenario);
                    return builtin->inputs;
                }
                std::ifstream in(inputs_path, std::ios::binary);
                if (!in) throw Error("cannot open '" + inputs_path + "'");
                std::stringstream buf;
                buf << in.rdbuf();
                return theory_inputs_from_json(buf.str());
            }();
            const TheoryConstants constants = compute_constants(inputs);
            out << theory_report(constants, inputs.nu0);
            std::vector<std::pair<std::filesystem::path, std::string>> files;
            std::optional<SweepResult> result;
            if (!sweep.empty()) {
                if (!builtin) throw UsageError("--sweep needs a --scenario that can generate curves");
                sweep_config.h1_grid = parse_reals(sweep, "--sweep");
                sweep_config.h_grid = h_list.empty() ? std::vector<double>{builtin->h_test} : parse_reals(h_list, "--h-new");
                sweep_config.n_train0 = builtin->n_train0;
                sweep_config.n_train1 = builtin->n_train1;
                sweep_config.threads = threads ? *threads : default_threads();
                const GaussianGenerator generator(builtin->scenario);
                result = bandwidth_sweep(generator, sweep_config);
                files.emplace_back(std::filesystem::path(sweep_out) / "err_surface.tsv",
                                   sweep_tsv(*result, constants, inputs.nu0));
            }
            if (!json_out.empty())
                files.emplace_back(json_out, theory_json(constants, inputs.nu0, result ? &*result : nullptr));
            if (!files.empty()) write_files_atomically(files);
            return 0;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const ZeroTau& e) {
        err << "error: " << e.what() << '\n'
            << "tau_k^2 is the variance of the projection of population k's curves onto the mean difference. "
               "When it is zero the classification statistic has no spread in that direction and the error "
               "expansion is undefined; give the populations covariance along mu1 - mu0.\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace fdc
