// SPDX-License-Identifier: MIT
//
// ordstat: batch evaluation of ordered-statistics partial-sum densities,
// capture and outage probabilities, and the built-in validation suite.
//
//   ordstat capture  --config sweep.cfg --out capture.csv [--seed N] [--jobs K]
//   ordstat outage   --config sweep.cfg --out outage.csv  [--seed N] [--jobs K]
//   ordstat pdf      --config grid.cfg  --out pdf.csv     [--jobs K]
//   ordstat validate --config suite.cfg --out report.csv  [--seed N] [--jobs K]
//
// The config file format and exit codes are documented in the README and
// in ordstat/cli.hpp.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ordstat/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, ordstat::RunOptions& opt) {
    cmd->add_option("--config", opt.config_path, "scenario config file")
        ->required();
    cmd->add_option("--out", opt.out_path, "output CSV path")->required();
    cmd->add_option("--seed", opt.seed,
                    "override the Monte Carlo seed from the config");
    cmd->add_option("--jobs", opt.jobs,
                    "worker threads (also: ORDSTAT_JOBS, jobs= in config)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ordered-statistics partial-sum toolkit"};
    app.require_subcommand(1);

    ordstat::RunOptions opt;
    CLI::App* capture =
        app.add_subcommand("capture", "capture probability sweep");
    CLI::App* outage = app.add_subcommand("outage", "outage probability sweep");
    CLI::App* pdf = app.add_subcommand("pdf", "density table on a grid");
    CLI::App* validate =
        app.add_subcommand("validate", "run the validation suite");
    for (CLI::App* cmd : {capture, outage, pdf, validate})
        add_common_options(cmd, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return ordstat::exit_code::kUsage;
    }

    try {
        if (capture->parsed()) return ordstat::run_capture(opt, std::cerr);
        if (outage->parsed()) return ordstat::run_outage(opt, std::cerr);
        if (pdf->parsed()) return ordstat::run_pdf(opt, std::cerr);
        return ordstat::run_validate(opt, std::cerr);
    } catch (const ordstat::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return ordstat::exit_code::kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ordstat::exit_code::kNumerical;
    }
}
