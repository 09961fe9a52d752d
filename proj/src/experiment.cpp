#include "mra/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "mra/datagen.hpp"
#include "mra/eval.hpp"
#include "mra/parallel.hpp"

namespace mra {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& key, int line) {
    double x = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, x);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        throw ConfigError(key + ": '" + s + "' is not a number", line);
    return x;
}

std::uint64_t parse_uint(const std::string& s, const std::string& key, int line) {
    std::uint64_t x = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, x);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        throw ConfigError(key + ": '" + s + "' is not a non-negative integer", line);
    return x;
}

bool parse_bool(const std::string& s, const std::string& key, int line) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'", line);
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& value, const std::string& key, int line, Fn&& one) {
    std::vector<T> out;
    for (const auto& item : split(value, ',')) {
        if (item.empty()) throw ConfigError(key + ": empty list entry", line);
        out.push_back(one(item));
    }
    if (out.empty()) throw ConfigError(key + ": list is empty", line);
    return out;
}

template <typename T>
std::string join(const std::vector<T>& v, std::string (*f)(T)) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
    return s;
}

std::string fmt_u64(std::uint64_t x) { return std::to_string(x); }
std::string fmt_size(std::size_t x) { return std::to_string(x); }

U0Policy parse_u0(const std::string& s) {
    if (s == "first-observation") return U0Policy::FirstObservation;
    if (s == "mean-observation") return U0Policy::MeanObservation;
    if (s == "aligned-median") return U0Policy::AlignedMedian;
    throw ParameterError("unknown u0 policy '" + s + "'");
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string error_status(const std::exception& e) {
    std::string kind = "error";
    if (dynamic_cast<const DegenerateLikelihoodError*>(&e)) kind = "degenerate-likelihood";
    else if (dynamic_cast<const DegenerateComponentError*>(&e)) kind = "degenerate-component";
    else if (dynamic_cast<const DivergenceError*>(&e)) kind = "divergence";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "invalid-argument";
    return sanitize(kind + ": " + e.what());
}

std::string run_tag(const RunSpec& run, const std::string& init) {
    std::string tag = "run_" + std::to_string(run.run_id) + "_" + to_string(run.method);
    if (!init.empty()) tag += "_" + init;
    return tag;
}

}  // namespace

std::string to_string(Method m) { return m == Method::MggSoftmax ? "mgg-softmax" : "em-baseline"; }

std::string to_string(ThetaInit t) {
    switch (t) {
        case ThetaInit::Spread: return "spread";
        case ThetaInit::WideMinority: return "wide-minority";
        case ThetaInit::WideMajority: return "wide-majority";
        case ThetaInit::Supplied: return "supplied";
    }
    return "?";
}

std::string to_string(U0Policy p) {
    switch (p) {
        case U0Policy::FirstObservation: return "first-observation";
        case U0Policy::MeanObservation: return "mean-observation";
        case U0Policy::AlignedMedian: return "aligned-median";
        case U0Policy::Supplied: return "supplied";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    if (s == "mgg-softmax") return Method::MggSoftmax;
    if (s == "em-baseline") return Method::EmBaseline;
    throw ParameterError("unknown method '" + s + "'");
}

ThetaInit parse_theta_init(const std::string& s) {
    if (s == "spread") return ThetaInit::Spread;
    if (s == "wide-minority") return ThetaInit::WideMinority;
    if (s == "wide-majority") return ThetaInit::WideMajority;
    if (s == "supplied") return ThetaInit::Supplied;
    throw ParameterError("unknown initializer '" + s + "'");
}

void ExperimentGrid::validate() const {
    if (m_values.empty() || alpha_values.empty() || sigma1_values.empty() || sigma2_values.empty() ||
        seeds.empty() || methods.empty() || gamma_values.empty() || inits.empty())
        throw ConfigError("every list must be non-empty");
    for (auto m : m_values)
        if (m < 1) throw ConfigError("m must be at least 1");
    for (double a : alpha_values)
        for (double s1 : sigma1_values)
            for (double s2 : sigma2_values) {
                if (!(s1 > 0.0) || !(s2 > 0.0)) throw ConfigError("sigma1 and sigma2 must be positive");
                try {
                    NoiseModel(a, s1 * s1, s2 * s2);
                } catch (const ParameterError& e) {
                    throw ConfigError(std::string("alpha: ") + e.what());
                }
            }
    for (double g : gamma_values)
        if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("gamma must be finite and non-negative");
    if (signal.kind != SignalKind::File && signal.n < 2) throw ConfigError("n must be at least 2");
    if (signal.kind == SignalKind::Piecewise && signal.n < 60) throw ConfigError("piecewise signal needs n >= 60");
    if (signal.kind == SignalKind::File && signal.path.empty()) throw ConfigError("signal = file needs signal_file");
    if (solver.u0_policy == U0Policy::Supplied) throw ConfigError("u0_policy supplied is not available in grids");
    SolverConfig probe = solver;
    probe.theta_init = std::find(inits.begin(), inits.end(), ThetaInit::Supplied) != inits.end()
                           ? ThetaInit::Supplied
                           : ThetaInit::Spread;
    try {
        probe.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
}

std::size_t ExperimentGrid::run_count() const {
    return m_values.size() * alpha_values.size() * sigma1_values.size() * sigma2_values.size() *
           gamma_values.size() * seeds.size() * methods.size();
}

ExperimentGrid parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    ExperimentGrid g;
    std::map<std::string, int> seen;
    std::string raw;
    int line = 0;
    bool theta0_given = false;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + text + "'", line);
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key", line);
        if (value.empty()) throw ConfigError(key + ": missing value", line);
        if (auto [it, fresh] = seen.emplace(key, line); !fresh)
            throw ConfigError(key + ": repeated (first set on line " + std::to_string(it->second) + ")", line);

        auto num = [&](const std::string& s) { return parse_double(s, key, line); };
        auto uint = [&](const std::string& s) { return parse_uint(s, key, line); };
        auto named = [&](auto parse) {
            return [&, parse](const std::string& s) {
                try {
                    return parse(s);
                } catch (const ParameterError& e) {
                    throw ConfigError(key + ": " + e.what(), line);
                }
            };
        };

        if (key == "signal") {
            if (value == "random") g.signal.kind = SignalKind::Random;
            else if (value == "piecewise") g.signal.kind = SignalKind::Piecewise;
            else if (value == "file") g.signal.kind = SignalKind::File;
            else throw ConfigError("signal: expected random, piecewise or file, got '" + value + "'", line);
        } else if (key == "n") {
            g.signal.n = uint(value);
        } else if (key == "signal_seed") {
            g.signal.seed = uint(value);
        } else if (key == "signal_file") {
            const std::filesystem::path p(value);
            g.signal.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        } else if (key == "m") {
            g.m_values = parse_list<std::size_t>(value, key, line, [&](const std::string& s) {
                return static_cast<std::size_t>(uint(s));
            });
        } else if (key == "alpha") {
            g.alpha_values = parse_list<double>(value, key, line, num);
        } else if (key == "sigma1") {
            g.sigma1_values = parse_list<double>(value, key, line, num);
        } else if (key == "sigma2") {
            g.sigma2_values = parse_list<double>(value, key, line, num);
        } else if (key == "seeds") {
            g.seeds = parse_list<std::uint64_t>(value, key, line, uint);
        } else if (key == "methods") {
            g.methods = parse_list<Method>(value, key, line, named(parse_method));
        } else if (key == "gamma") {
            g.gamma_values = parse_list<double>(value, key, line, num);
        } else if (key == "inits") {
            g.inits = parse_list<ThetaInit>(value, key, line, named(parse_theta_init));
        } else if (key == "theta0") {
            const auto v = parse_list<double>(value, key, line, num);
            if (v.size() != 3) throw ConfigError("theta0: expected alpha, sigma1_sq, sigma2_sq", line);
            try {
                g.solver.theta0 = NoiseModel(v[0], v[1], v[2]);
            } catch (const ParameterError& e) {
                throw ConfigError(std::string("theta0: ") + e.what(), line);
            }
            theta0_given = true;
        } else if (key == "u0_policy") {
            g.solver.u0_policy = named(parse_u0)(value);
        } else if (key == "r") {
            g.solver.admm.r = num(value);
        } else if (key == "tau") {
            g.solver.admm.tau = num(value);
        } else if (key == "max_inner") {
            g.solver.admm.max_inner = static_cast<int>(uint(value));
        } else if (key == "inner_tol") {
            g.solver.admm.inner_tol = num(value);
        } else if (key == "dual_update") {
            if (value == "post-update") g.solver.admm.dual = DualUpdate::PostUpdate;
            else if (value == "as-printed") g.solver.admm.dual = DualUpdate::AsPrinted;
            else throw ConfigError("dual_update: expected post-update or as-printed", line);
        } else if (key == "outer_tol") {
            g.solver.outer_tol = num(value);
        } else if (key == "max_outer") {
            g.solver.max_outer = static_cast<int>(uint(value));
        } else if (key == "sigma_mode") {
            if (value == "em-standard") g.solver.sigma_mode = SigmaMode::EmStandard;
            else if (value == "paper-literal") g.solver.sigma_mode = SigmaMode::PaperLiteral;
            else throw ConfigError("sigma_mode: expected em-standard or paper-literal", line);
        } else if (key == "solver_threads") {
            g.solver.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, uint(value)));
        } else if (key == "output_dir") {
            const std::filesystem::path p(value);
            g.output_dir = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        } else if (key == "traces") {
            g.write_traces = parse_bool(value, key, line);
        } else {
            throw ConfigError("unknown key '" + key + "'", line);
        }
    }
    if (std::find(g.inits.begin(), g.inits.end(), ThetaInit::Supplied) != g.inits.end() && !theta0_given)
        throw ConfigError("inits: 'supplied' needs theta0");
    g.validate();
    return g;
}

ExperimentGrid parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return parse_config(in, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string canonical_config(const ExperimentGrid& g) {
    std::ostringstream out;
    const char* kinds[] = {"random", "piecewise", "file"};
    out << "signal = " << kinds[static_cast<int>(g.signal.kind)] << '\n';
    if (g.signal.kind == SignalKind::File) {
        out << "signal_file = " << g.signal.path.string() << '\n';
    } else {
        out << "n = " << g.signal.n << '\n';
        if (g.signal.kind == SignalKind::Random) out << "signal_seed = " << g.signal.seed << '\n';
    }
    out << "m = " << join(g.m_values, fmt_size) << '\n';
    out << "alpha = " << join(g.alpha_values, fmt) << '\n';
    out << "sigma1 = " << join(g.sigma1_values, fmt) << '\n';
    out << "sigma2 = " << join(g.sigma2_values, fmt) << '\n';
    out << "seeds = " << join(g.seeds, fmt_u64) << '\n';
    out << "methods = " << join(g.methods, +[](Method x) { return to_string(x); }) << '\n';
    out << "gamma = " << join(g.gamma_values, fmt) << '\n';
    out << "inits = " << join(g.inits, +[](ThetaInit x) { return to_string(x); }) << '\n';
    if (std::find(g.inits.begin(), g.inits.end(), ThetaInit::Supplied) != g.inits.end())
        out << "theta0 = " << fmt(g.solver.theta0.alpha) << ", " << fmt(g.solver.theta0.sigma1_sq) << ", "
            << fmt(g.solver.theta0.sigma2_sq) << '\n';
    const auto& s = g.solver;
    out << "u0_policy = " << to_string(s.u0_policy) << '\n';
    out << "r = " << fmt(s.admm.r) << '\n';
    out << "tau = " << fmt(s.admm.tau) << '\n';
    out << "max_inner = " << s.admm.max_inner << '\n';
    out << "inner_tol = " << fmt(s.admm.inner_tol) << '\n';
    out << "dual_update = " << (s.admm.dual == DualUpdate::PostUpdate ? "post-update" : "as-printed") << '\n';
    out << "outer_tol = " << fmt(s.outer_tol) << '\n';
    out << "max_outer = " << s.max_outer << '\n';
    out << "sigma_mode = " << (s.sigma_mode == SigmaMode::EmStandard ? "em-standard" : "paper-literal") << '\n';
    return out.str();
}

std::string config_hash(const ExperimentGrid& grid) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_config(grid)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

Signal make_signal(const SignalSpec& spec) {
    switch (spec.kind) {
        case SignalKind::Random: return make_random_signal(spec.n, spec.seed);
        case SignalKind::Piecewise: return make_piecewise_signal(spec.n);
        case SignalKind::File: return load_signal(spec.path);
    }
    throw ParameterError("unknown signal kind");
}

std::vector<RunSpec> expand_runs(const ExperimentGrid& g) {
    std::vector<RunSpec> runs;
    runs.reserve(g.run_count());
    for (auto m : g.m_values)
        for (double a : g.alpha_values)
            for (double s1 : g.sigma1_values)
                for (double s2 : g.sigma2_values)
                    for (double gamma : g.gamma_values)
                        for (auto seed : g.seeds)
                            for (auto method : g.methods)
                                runs.push_back({runs.size(), method, m, a, s1, s2, seed, gamma});
    return runs;
}

ResultRow execute_run(const ExperimentGrid& grid, const Signal& truth, const RunSpec& run,
                      const std::filesystem::path& trace_dir) {
    ResultRow row;
    row.run_id = run.run_id;
    row.method = to_string(run.method);
    row.n = truth.size();
    row.m = run.m;
    row.alpha = run.alpha;
    row.sigma1 = run.sigma1;
    row.sigma2 = run.sigma2;
    row.seed = run.seed;
    row.gamma = run.gamma;
    row.rel_error = std::numeric_limits<double>::quiet_NaN();
    row.final_energy = std::numeric_limits<double>::quiet_NaN();
    row.init = run.method == Method::MggSoftmax ? "" : "-";

    try {
        const NoiseModel noise(run.alpha, run.sigma1 * run.sigma1, run.sigma2 * run.sigma2);
        const ObservationSet obs = generate_observations(truth, GenSpec{run.m, noise, run.seed});

        const auto start = std::chrono::steady_clock::now();
        SolverConfig base = grid.solver;
        base.admm.gamma = run.gamma;
        if (base.u0_policy == U0Policy::AlignedMedian) {
            // shared by every initializer of this run
            base.u0 = aligned_median_signal(obs, 10, base.threads);
            base.u0_policy = U0Policy::Supplied;
        }

        std::optional<SolverReport> best;
        std::string best_init, last_error;
        const std::vector<ThetaInit> inits =
            run.method == Method::MggSoftmax ? grid.inits : std::vector<ThetaInit>{ThetaInit::Spread};
        for (auto init : inits) {
            SolverConfig cfg = base;
            cfg.theta_init = init;
            const std::string name = run.method == Method::MggSoftmax ? to_string(init) : "";
            try {
                SolverReport rep =
                    run.method == Method::MggSoftmax ? mgg_softmax_solve(obs, cfg) : em_single_gaussian_solve(obs, cfg);
                if (!trace_dir.empty()) {
                    std::ofstream t(trace_dir / (run_tag(run, name) + ".csv"));
                    write_trace(t, rep);
                }
                // strict comparison keeps the first initializer on ties
                if (!best || rep.energy_trace.back() < best->energy_trace.back()) {
                    best = std::move(rep);
                    best_init = name;
                }
            } catch (const std::exception& e) {
                last_error = error_status(e);
            }
        }
        row.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!best) {
            row.status = last_error;
            return row;
        }
        if (run.method == Method::MggSoftmax) row.init = best_init;
        row.rel_error = relative_error(best->u_hat, truth);
        row.outer_iters = best->outer_iters;
        row.converged = best->converged;
        row.final_energy = best->energy_trace.back();
        row.inner_iters = best->inner_iters_total;
        if (!trace_dir.empty()) save_signal(trace_dir / (run_tag(run, "") + "_u_hat.txt"), best->u_hat);
    } catch (const std::exception& e) {
        row.status = error_status(e);
    }
    return row;
}

GridOutcome run_experiment_grid(const ExperimentGrid& grid, unsigned threads) {
    grid.validate();
    namespace fs = std::filesystem;
    fs::create_directories(grid.output_dir);
    const fs::path trace_dir = grid.write_traces ? grid.output_dir / "traces" : fs::path{};
    if (!trace_dir.empty()) fs::create_directories(trace_dir);

    const Signal truth = make_signal(grid.signal);
    save_signal(grid.output_dir / "signal.txt", truth);
    const auto runs = expand_runs(grid);

    std::vector<ResultRow> rows(runs.size());
    run_chunks(runs.size(), threads, [&](std::size_t k) { rows[k] = execute_run(grid, truth, runs[k], trace_dir); });

    GridOutcome outcome;
    outcome.results_csv = grid.output_dir / "results.csv";
    {
        std::ofstream out(outcome.results_csv);
        if (!out) throw std::runtime_error("cannot write " + outcome.results_csv.string());
        write_results(out, rows);
    }
    for (const auto& r : rows)
        if (r.status != "ok") ++outcome.failed;

    std::ofstream man(grid.output_dir / "manifest.txt");
    man << "version = " << MRA_VERSION << '\n'
        << "config_hash = " << config_hash(grid) << '\n'
        << "rng = splitmix64 counter; key = mix64(seed + G*(stream+1)), draw = mix64(key + G*(counter+1)), "
           "G = 0x9E3779B97F4A7C15; streams shifts=0 components=1 noise=2 signal=3; "
           "sample (i;j) uses counter i*n+j; normals by Box-Muller on counters 2c and 2c+1\n"
        << "data_seed = the run's seed column\n"
        << "selection = lowest final energy over inits\n"
        << "runs = " << rows.size() << '\n'
        << "failed = " << outcome.failed << '\n'
        << "columns = " << kResultsHeader << '\n'
        << "[config]\n"
        << canonical_config(grid);
    outcome.rows = std::move(rows);
    return outcome;
}

void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows)
        out << r.method << ',' << r.n << ',' << r.m << ',' << fmt(r.alpha) << ',' << fmt(r.sigma1) << ','
            << fmt(r.sigma2) << ',' << r.seed << ',' << fmt(r.gamma) << ',' << fmt(r.rel_error) << ','
            << r.outer_iters << ',' << fmt(r.wall_time_sec) << ',' << (r.converged ? "true" : "false") << ','
            << r.init << ',' << sanitize(r.status) << ',' << fmt(r.final_energy) << ',' << r.inner_iters << ','
            << r.run_id << '\n';
}

std::vector<ResultRow> read_results(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ConfigError("results file is empty");
    const auto cols = split(trim(header), ',');
    const auto expected = split(kResultsHeader, ',');
    for (std::size_t k = 0; k < expected.size(); ++k)
        if (k >= cols.size() || cols[k] != expected[k])
            throw ConfigError("results header: missing or misplaced column '" + expected[k] + "'", 1);

    std::vector<ResultRow> rows;
    std::string raw;
    int line = 1;
    while (std::getline(in, raw)) {
        ++line;
        if (trim(raw).empty()) continue;
        const auto f = split(trim(raw), ',');
        if (f.size() != cols.size()) throw ConfigError("expected " + std::to_string(cols.size()) + " fields", line);
        auto num = [&](std::size_t k) { return parse_double(f[k], expected[k], line); };
        auto uint = [&](std::size_t k) { return parse_uint(f[k], expected[k], line); };
        ResultRow r;
        r.method = f[0];
        r.n = uint(1);
        r.m = uint(2);
        r.alpha = num(3);
        r.sigma1 = num(4);
        r.sigma2 = num(5);
        r.seed = uint(6);
        r.gamma = num(7);
        r.rel_error = num(8);
        r.outer_iters = static_cast<int>(uint(9));
        r.wall_time_sec = num(10);
        r.converged = parse_bool(f[11], "converged", line);
        r.init = f[12];
        r.status = f[13];
        r.final_energy = num(14);
        r.inner_iters = static_cast<long>(uint(15));
        r.run_id = uint(16);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open results file " + path.string());
    return read_results(in);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    using Key = std::tuple<std::string, std::size_t, std::size_t, double, double, double, double>;
    std::vector<Key> order;
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) {
        Key k{r.method, r.n, r.m, r.alpha, r.sigma1, r.sigma2, r.gamma};
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh) order.push_back(k);
        it->second.push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto& k : order) {
        const auto& g = groups[k];
        SummaryRow s;
        std::tie(s.method, s.n, s.m, s.alpha, s.sigma1, s.sigma2, s.gamma) = k;
        s.runs = g.size();
        std::vector<const ResultRow*> ok;
        for (const auto* r : g)
            if (r->status == "ok") ok.push_back(r);
        s.failed = g.size() - ok.size();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        if (ok.empty()) {
            s.mean_error = s.sd_error = s.min_error = s.max_error = nan;
            s.mean_outer_iters = s.mean_wall_time = nan;
            out.push_back(s);
            continue;
        }
        const double cnt = static_cast<double>(ok.size());
        double sum = 0.0, iters = 0.0, wall = 0.0, conv = 0.0;
        s.min_error = s.max_error = ok.front()->rel_error;
        for (const auto* r : ok) {
            sum += r->rel_error;
            iters += r->outer_iters;
            wall += r->wall_time_sec;
            conv += r->converged ? 1.0 : 0.0;
            s.min_error = std::min(s.min_error, r->rel_error);
            s.max_error = std::max(s.max_error, r->rel_error);
        }
        s.mean_error = sum / cnt;
        double ss = 0.0;
        for (const auto* r : ok) ss += (r->rel_error - s.mean_error) * (r->rel_error - s.mean_error);
        s.sd_error = ok.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : 0.0;
        s.mean_outer_iters = iters / cnt;
        s.mean_wall_time = wall / cnt;
        s.converged_fraction = conv / cnt;
        out.push_back(s);
    }
    return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "method,n,m,alpha,sigma1,sigma2,gamma,runs,failed,mean_error,sd_error,min_error,max_error,"
           "mean_outer_iters,mean_wall_time_sec,converged_fraction\n";
    for (const auto& s : rows)
        out << s.method << ',' << s.n << ',' << s.m << ',' << fmt(s.alpha) << ',' << fmt(s.sigma1) << ','
            << fmt(s.sigma2) << ',' << fmt(s.gamma) << ',' << s.runs << ',' << s.failed << ',' << fmt(s.mean_error)
            << ',' << fmt(s.sd_error) << ',' << fmt(s.min_error) << ',' << fmt(s.max_error) << ','
            << fmt(s.mean_outer_iters) << ',' << fmt(s.mean_wall_time) << ',' << fmt(s.converged_fraction) << '\n';
}

}  // namespace mra
