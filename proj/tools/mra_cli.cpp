#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "mra/datagen.hpp"
#include "mra/eval.hpp"
#include "mra/experiment.hpp"
#include "mra/solver.hpp"

namespace fs = std::filesystem;
using namespace mra;

namespace {

ExperimentGrid load_grid(const std::string& config) {
    if (config.empty()) return ExperimentGrid{};
    return parse_config(fs::path(config));
}

// generate: the first cell of the grid, one observation file per seed.
int cmd_generate(const std::string& config, const std::string& output, std::optional<std::uint64_t> seed) {
    const ExperimentGrid grid = load_grid(config);
    const fs::path out_dir = output.empty() ? grid.output_dir : fs::path(output);
    fs::create_directories(out_dir);
    const Signal truth = make_signal(grid.signal);
    save_signal(out_dir / "signal.txt", truth);
    const double s1 = grid.sigma1_values.front(), s2 = grid.sigma2_values.front();
    const NoiseModel noise(grid.alpha_values.front(), s1 * s1, s2 * s2);
    const auto seeds = seed ? std::vector<std::uint64_t>{*seed} : grid.seeds;
    for (auto s : seeds) {
        const auto obs = generate_observations(truth, GenSpec{grid.m_values.front(), noise, s});
        const fs::path path = out_dir / ("observations_seed" + std::to_string(s) + ".txt");
        save_observations(path, obs);
        std::cout << path.string() << '\n';
    }
    return 0;
}

int cmd_solve(const std::string& config, const std::string& input, const std::string& output,
              const std::string& truth_path, unsigned threads) {
    const ExperimentGrid grid = load_grid(config);
    const ObservationSet obs = load_observations(input);
    SolverConfig base = grid.solver;
    base.admm.gamma = grid.gamma_values.front();
    base.threads = threads;
    if (base.u0_policy == U0Policy::AlignedMedian) {
        base.u0 = aligned_median_signal(obs, 10, threads);
        base.u0_policy = U0Policy::Supplied;
    }
    const Method method = grid.methods.front();
    std::optional<SolverReport> best;
    std::string best_init;
    const auto inits = method == Method::MggSoftmax ? grid.inits : std::vector<ThetaInit>{ThetaInit::Spread};
    for (auto init : inits) {
        SolverConfig cfg = base;
        cfg.theta_init = init;
        auto rep = method == Method::MggSoftmax ? mgg_softmax_solve(obs, cfg) : em_single_gaussian_solve(obs, cfg);
        std::cerr << to_string(method) << " init " << to_string(init) << ": energy " << rep.energy_trace.back()
                  << ", " << rep.outer_iters << " outer iterations" << (rep.converged ? "" : " (not converged)")
                  << '\n';
        if (!best || rep.energy_trace.back() < best->energy_trace.back()) {
            best = std::move(rep);
            best_init = to_string(init);
        }
    }
    const fs::path out_dir = output.empty() ? fs::path(".") : fs::path(output);
    fs::create_directories(out_dir);
    save_signal(out_dir / "u_hat.txt", best->u_hat);
    std::ofstream trace(out_dir / "trace.csv");
    write_trace(trace, *best);
    const auto& th = best->theta_hat;
    std::cout << "init " << (method == Method::MggSoftmax ? best_init : "-") << "\nalpha " << th.alpha
              << "\nsigma1_sq " << th.sigma1_sq << "\nsigma2_sq " << th.sigma2_sq << "\nouter_iters "
              << best->outer_iters << "\nconverged " << (best->converged ? "true" : "false") << '\n';
    if (!truth_path.empty()) std::cout << "rel_error " << relative_error(best->u_hat, load_signal(truth_path)) << '\n';
    return 0;
}

int cmd_grid(const std::string& config, const std::string& output, unsigned threads) {
    ExperimentGrid grid = load_grid(config);
    if (!output.empty()) grid.output_dir = output;
    const auto outcome = run_experiment_grid(grid, threads);
    std::cout << outcome.rows.size() << " runs, " << outcome.failed << " failed\n"
              << outcome.results_csv.string() << '\n';
    return 0;
}

int cmd_report(const std::string& input, const std::string& output) {
    fs::path in = input;
    if (fs::is_directory(in)) in /= "results.csv";
    const auto summary = summarize(read_results(in));
    if (output.empty()) {
        write_summary(std::cout, summary);
    } else {
        std::ofstream out(output);
        if (!out) throw std::runtime_error("cannot write " + output);
        write_summary(out, summary);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Signal recovery from cyclically shifted observations under two-component Gaussian noise"};
    app.set_version_flag("--version", std::string(MRA_VERSION));
    app.require_subcommand(1);

    std::string config, output, input, truth;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;

    auto* gen = app.add_subcommand("generate", "write observation files for the first cell of a grid config");
    gen->add_option("--config", config, "grid config (defaults apply when omitted)");
    gen->add_option("--output", output, "output directory");
    gen->add_option("--seed", seed, "single data seed instead of the config's seed list");

    auto* solve = app.add_subcommand("solve", "solve one observation file");
    solve->add_option("--config", config, "config supplying method, inits, gamma and solver settings");
    solve->add_option("--input", input, "observation file")->required();
    solve->add_option("--output", output, "directory for u_hat.txt and trace.csv");
    solve->add_option("--truth", truth, "true signal, to print the relative error");
    solve->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* grid = app.add_subcommand("grid", "run every cell, seed and method of a config");
    grid->add_option("--config", config, "grid config")->required();
    grid->add_option("--output", output, "output directory (overrides output_dir)");
    grid->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "aggregate a results CSV over seeds");
    report->add_option("--input", input, "results.csv or a grid output directory")->required();
    report->add_option("--output", output, "summary CSV (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (gen->parsed()) return cmd_generate(config, output, seed);
        if (solve->parsed()) return cmd_solve(config, input, output, truth, threads);
        if (grid->parsed()) return cmd_grid(config, output, threads);
        if (report->parsed()) return cmd_report(input, output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
