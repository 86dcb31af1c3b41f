#include <CLI11.hpp>
#include <iostream>

#include "plateflow/cli/commands.hpp"

using namespace plateflow::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Implicit time stepping for the clamped-plate obstacle flow"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    bool timings = false;
    for (const char* name : {"solve", "verify", "refine", "penalty-study"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
        sub->add_flag("--timings", timings, "also write timings.json");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_code::ok : exit_code::usage_error;
    }

    const Command cmd = parse_command(app.get_subcommands().front()->get_name());
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigParseError& e) {
        std::cerr << config_path << ": " << e.what() << '\n';
        return exit_code::usage_error;
    }

    CommandOptions opts;
    opts.out_dir = out_dir.empty() ? cfg.out_dir : out_dir;
    opts.write_timings = timings;
    if (opts.out_dir.empty()) {
        std::cerr << "no output directory: pass --out or set [output] dir\n";
        return exit_code::usage_error;
    }
    try {
        return run_command(cmd, cfg, opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code::usage_error;
    }
}
