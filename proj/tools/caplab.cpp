#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_common(CLI::App* cmd, caplab::cli::CommonOptions& opts)
{
    cmd->add_option("--config", opts.config, "Scenario JSON file")->required();
    cmd->add_option("--out", opts.out, "Output directory (overrides config 'outputs')");
    cmd->add_option("--seed", opts.seed, "Random seed (overrides config)");
    cmd->add_option("--paths", opts.paths, "Number of paths (overrides config)");
    cmd->add_option("--scheme", opts.scheme, "rk4 | euler_maruyama | milstein (overrides config)");
    cmd->add_option("--workers", opts.workers, "Worker threads, 0 = all cores")->capture_default_str();
    cmd->add_flag("--quiet", opts.quiet, "Suppress the stdout summary");
}

} // namespace

int main(int argc, char** argv)
{
    using namespace caplab::cli;

    CLI::App app{"caplab: stochastic capital-labour model simulator"};
    app.require_subcommand(1);

    CommonOptions opts;
    ConvergenceOptions conv;
    SweepOptions sweep;

    auto* thresholds = app.add_subcommand("thresholds", "Extinction/persistence thresholds for the config");
    auto* simulate = app.add_subcommand("simulate", "One stochastic path plus the deterministic companion");
    auto* ensemble = app.add_subcommand("ensemble", "Per-time statistics over n_paths paths");
    auto* convergence = app.add_subcommand("convergence", "Empirical strong order on a dt ladder");
    auto* sweep_cmd = app.add_subcommand("sweep", "Predicted vs observed regime over an (m, sigma) grid");
    for (auto* cmd : {thresholds, simulate, ensemble, convergence, sweep_cmd}) add_common(cmd, opts);

    convergence->add_option("--levels", conv.levels, "Number of rungs (>= 3)")->capture_default_str();
    convergence->add_option("--first-level", conv.first_level, "Coarsening exponent of the finest rung")
        ->capture_default_str();
    sweep_cmd->add_option("--m-grid", sweep.m_grid, "Comma-separated m values")->delimiter(',')->required();
    sweep_cmd->add_option("--sigma-grid", sweep.sigma_grid, "Comma-separated sigma values")
        ->delimiter(',')
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ConfigFailure;
    }

    if (*thresholds) return run_thresholds(opts);
    if (*simulate) return run_simulate(opts);
    if (*ensemble) return run_ensemble(opts);
    if (*convergence) return run_convergence(opts, conv);
    if (*sweep_cmd) return run_sweep(opts, sweep);
    return ConfigFailure;
}
