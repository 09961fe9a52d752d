#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mra/core.hpp"
#include "mra/solver.hpp"

namespace mra {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

enum class Method { MggSoftmax, EmBaseline };
enum class SignalKind { Random, Piecewise, File };

struct SignalSpec {
    SignalKind kind = SignalKind::Random;
    std::size_t n = 41;
    std::uint64_t seed = 7;  ///< random signals only
    std::filesystem::path path;  ///< file signals only, relative to the config file
};

/// A declarative experiment: the Cartesian product of the value lists,
/// each cell run for every seed and method. Noise levels are standard
/// deviations; the solver sees their squares.
struct ExperimentGrid {
    SignalSpec signal;
    std::vector<std::size_t> m_values{1000};
    std::vector<double> alpha_values{0.2};
    std::vector<double> sigma1_values{10.0};
    std::vector<double> sigma2_values{0.01};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<Method> methods{Method::MggSoftmax, Method::EmBaseline};
    std::vector<double> gamma_values{0.0};
    /// Starting noise models tried for mgg-softmax; the run with the lowest
    /// final energy is reported. The EM baseline ignores them.
    std::vector<ThetaInit> inits{ThetaInit::Spread};
    SolverConfig solver;
    std::filesystem::path output_dir = "results";
    bool write_traces = true;

    void validate() const;
    std::size_t run_count() const;
};

/// Plain-text key/value format, one `key = value` per line, `#` starts a
/// comment, lists are comma separated. Unknown keys, repeated keys and
/// malformed values are errors carrying the line number.
ExperimentGrid parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentGrid parse_config(const std::filesystem::path& path);

/// Canonical text of a grid; reparsing it gives back the same canonical text.
std::string canonical_config(const ExperimentGrid& grid);
/// FNV-1a 64 of canonical_config, as 16 hex digits.
std::string config_hash(const ExperimentGrid& grid);

Signal make_signal(const SignalSpec& spec);

std::string to_string(Method m);
std::string to_string(ThetaInit t);
std::string to_string(U0Policy p);
Method parse_method(const std::string& s);
ThetaInit parse_theta_init(const std::string& s);

struct RunSpec {
    std::size_t run_id = 0;
    Method method = Method::MggSoftmax;
    std::size_t m = 0;
    double alpha = 0, sigma1 = 0, sigma2 = 0;
    std::uint64_t seed = 0;
    double gamma = 0;
};

/// One row of results.csv.
struct ResultRow {
    std::string method;
    std::size_t n = 0, m = 0;
    double alpha = 0, sigma1 = 0, sigma2 = 0;
    std::uint64_t seed = 0;
    double gamma = 0;
    double rel_error = 0;
    int outer_iters = 0;
    double wall_time_sec = 0;
    bool converged = false;
    std::string init;
    std::string status = "ok";
    double final_energy = 0;
    long inner_iters = 0;
    std::size_t run_id = 0;
};

inline constexpr const char* kResultsHeader =
    "method,n,m,alpha,sigma1,sigma2,seed,gamma,rel_error,outer_iters,wall_time_sec,converged,"
    "init,status,final_energy,inner_iters,run_id";

/// Runs in config order: m, alpha, sigma1, sigma2, gamma, seed, method
/// (outermost first).
std::vector<RunSpec> expand_runs(const ExperimentGrid& grid);

/// Generates the data of one run and solves it. A failing solve comes back
/// as a row whose status names the error; rel_error is then NaN.
ResultRow execute_run(const ExperimentGrid& grid, const Signal& truth, const RunSpec& run,
                      const std::filesystem::path& trace_dir = {});

struct GridOutcome {
    std::vector<ResultRow> rows;
    std::filesystem::path results_csv;
    std::size_t failed = 0;
};

/// Writes results.csv, manifest.txt, signal.txt and traces/ under
/// grid.output_dir. Runs execute on `threads` workers; rows are written in
/// config order once all runs are done.
GridOutcome run_experiment_grid(const ExperimentGrid& grid, unsigned threads = 1);

void write_results(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results(std::istream& in);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

/// Seed aggregate of one (method, n, m, alpha, sigma1, sigma2, gamma) cell.
/// Failed runs are counted but excluded from the statistics.
struct SummaryRow {
    std::string method;
    std::size_t n = 0, m = 0;
    double alpha = 0, sigma1 = 0, sigma2 = 0, gamma = 0;
    std::size_t runs = 0, failed = 0;
    double mean_error = 0, sd_error = 0, min_error = 0, max_error = 0;
    double mean_outer_iters = 0, mean_wall_time = 0;
    double converged_fraction = 0;
};

/// Groups in order of first appearance. The standard deviation uses the
/// n - 1 denominator and is 0 for a single run.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace mra
