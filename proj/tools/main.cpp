#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cloudheight/errors.hpp"

namespace {

using namespace cloudheight;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    std::vector<std::string> methods;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON run configuration (or a previous manifest.json)");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--mode", o.mode, "low, high or baseline");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--workers", o.workers, "worker threads");
}

cli::RunConfig resolve(const Overrides& o)
{
    cli::RunConfig cfg = o.config.empty() ? cli::default_config() : cli::load_config(o.config);
    if (o.seed)
        cfg.seed = *o.seed;
    if (o.reps)
        cfg.table1.reps = *o.reps;
    if (o.mode)
        cfg.mode = parse_mode(*o.mode);
    if (o.out)
        cfg.out = std::filesystem::absolute(*o.out);
    if (o.workers)
        cfg.workers = *o.workers;
    if (!o.methods.empty()) {
        cfg.table1.methods.clear();
        for (const auto& m : o.methods)
            cfg.table1.methods.push_back(parse_method(m));
    }
    cli::validate(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cloud-top height retrieval from multi-angle imagery"};
    app.require_subcommand(1);
    Overrides o;

    auto* heights = app.add_subcommand("heights", "sliding-window height map from one raster per camera");
    add_common(heights, o);
    auto* stab = app.add_subcommand("stabilize", "per-camera brightness gains and stabilized rasters");
    add_common(stab, o);
    auto* sim = app.add_subcommand("simulate", "synthetic multi-camera scene at a known height");
    add_common(sim, o);
    auto* table = app.add_subcommand("table1", "strip simulation comparing five matching methods");
    add_common(table, o);
    table->add_option("--reps", o.reps, "replicates");
    table->add_option("--methods", o.methods, "subset of full, pairwise, no_newton, baseline, wrong_nu")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const cli::RunConfig cfg = resolve(o);
        if (heights->parsed()) {
            const auto s = cli::run_heights(cfg);
            std::printf("%zu of %zu windows valid (coverage %.4f); outputs in %s\n", s.valid, s.cells, s.coverage,
                        cfg.out.string().c_str());
        } else if (stab->parsed()) {
            const auto map = cli::run_stabilize(cfg);
            for (std::size_t k = 0; k < map.cameras.size(); ++k)
                std::printf("%s gain %.6g offset %.6g\n", cfg.cameras[k].spec.name.c_str(), map.cameras[k].gain,
                            map.cameras[k].offset);
        } else if (sim->parsed()) {
            cli::run_simulate(cfg);
            std::printf("scene written to %s\n", cfg.out.string().c_str());
        } else if (table->parsed()) {
            std::fputs(cli::run_table1(cfg).c_str(), stdout);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    }
    return 0;
}
