// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "evoagent/errors.hpp"
#include "evoagent/harness.hpp"
#include "evoagent/trajectory.hpp"

using namespace evoagent;

int main(int argc, char** argv) {
    CLI::App app{"evoagent - self-evolving agent runtime harness"};
    app.require_subcommand(1);

    std::string config_path, scenario_path, tasks_path, out_dir, store_path;
    std::string log_path, run_dir, mode, pool_path, query, snapshot_path, out_path;
    std::uint64_t budget = 1024;
    bool no_emo = false;
    bool trace = false;

    auto* run = app.add_subcommand("run", "run every task in a task file");
    run->add_option("--config", config_path, "config file (json)")->required();
    run->add_option("--scenario", scenario_path, "scenario file (jsonl)")->required();
    run->add_option("--tasks", tasks_path, "task file (jsonl)")->required();
    run->add_option("--out", out_dir, "run directory to create")->required();
    run->add_option("--store", store_path, "start from this cognition store snapshot");
    run->add_flag("--no-emo", no_emo, "replace memory assembly with raw concatenation");
    run->add_flag("--trace", trace, "print SELECT/EXECUTE/UPDATE lines to stderr");

    auto* replay = app.add_subcommand("replay", "re-execute a log and compare bytes");
    replay->add_option("--log", log_path, "trajectory log file")->required();
    replay->add_option("--scenario", scenario_path, "override the scenario reference");

    auto* ablate = app.add_subcommand("ablate", "run a comparative ablation");
    ablate->add_option("--mode", mode, "emo_on_off | cognition_evolution")->required();
    ablate->add_option("--config", config_path, "config file")->required();
    ablate->add_option("--scenario", scenario_path, "scenario file")->required();
    ablate->add_option("--tasks", tasks_path, "task file")->required();
    ablate->add_option("--out", out_dir, "output directory")->required();

    auto* evolve = app.add_subcommand("evolve", "run one evolution cycle over a run directory");
    evolve->add_option("--run", run_dir, "run directory (from `run`)")->required();
    evolve->add_option("--out", out_dir, "output directory")->required();

    auto* report = app.add_subcommand("report", "recompute a run directory's report");
    report->add_option("--run", run_dir, "run directory")->required();

    auto* memory_cmd = app.add_subcommand("memory", "memory pool inspection");
    memory_cmd->require_subcommand(1);
    auto* memory_dump_cmd = memory_cmd->add_subcommand("dump", "print a pool snapshot");
    memory_dump_cmd->add_option("--pool", pool_path, "pool snapshot file")->required();
    auto* memory_stats_cmd = memory_cmd->add_subcommand("stats", "pool statistics");
    memory_stats_cmd->add_option("--pool", pool_path, "pool snapshot file")->required();
    memory_stats_cmd->add_option("--budget", budget, "assembly budget in tokens");
    memory_stats_cmd->add_option("--query", query, "episode retrieval query");

    auto* cognition_cmd = app.add_subcommand("cognition", "cognition store snapshots");
    cognition_cmd->require_subcommand(1);
    auto* cognition_export_cmd =
        cognition_cmd->add_subcommand("export", "canonicalize a store snapshot");
    cognition_export_cmd->add_option("--store", snapshot_path, "store snapshot file")->required();
    cognition_export_cmd->add_option("--out", out_path, "output file")->required();
    auto* cognition_import_cmd =
        cognition_cmd->add_subcommand("import", "validate and replay a store snapshot");
    cognition_import_cmd->add_option("--store", snapshot_path, "store snapshot file")->required();
    cognition_import_cmd->add_option("--out", out_path, "optional canonical rewrite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            harness::RunOptions options;
            options.store_file = store_path;
            options.emo_enabled = !no_emo;
            if (trace) options.trace = &std::cerr;
            harness::RunOutputs outputs =
                harness::run_command(config_path, scenario_path, tasks_path, out_dir, options);
            std::cout << harness::report_to_json(outputs.report).dump(2) << "\n";
            std::cout << "run directory: " << outputs.run_dir << "\n";
        } else if (*replay) {
            harness::ReplayResult result = harness::replay_command(log_path, scenario_path);
            if (result.match) {
                std::cout << "Match\n";
            } else {
                std::cout << "Diverged: " << result.detail << "\n";
                return 1;
            }
        } else if (*ablate) {
            Json result =
                harness::ablate_command(mode, config_path, scenario_path, tasks_path, out_dir);
            std::cout << result.dump(2) << "\n";
        } else if (*evolve) {
            harness::EvolveOutputs outputs = harness::evolve_command(run_dir, out_dir);
            std::cout << outputs.report_json.dump(2) << "\n";
            std::cout << "evolved store: " << outputs.evolved_store_file << "\n";
        } else if (*report) {
            std::cout << harness::report_command(run_dir).dump(2) << "\n";
        } else if (*memory_dump_cmd) {
            std::cout << harness::memory_dump(pool_path);
        } else if (*memory_stats_cmd) {
            std::cout << harness::memory_stats(pool_path, budget, query).dump(2) << "\n";
        } else if (*cognition_export_cmd) {
            harness::cognition_export(snapshot_path, out_path);
            std::cout << "exported to " << out_path << "\n";
        } else if (*cognition_import_cmd) {
            std::uint64_t version = harness::cognition_import(snapshot_path, out_path);
            std::cout << "imported store at version " << version << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
