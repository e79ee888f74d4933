// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evoagent/backend.hpp"
#include "evoagent/cognition.hpp"
#include "evoagent/evolution.hpp"
#include "evoagent/metrics.hpp"
#include "evoagent/types.hpp"
#include "evoagent/world.hpp"

namespace evoagent::harness {

struct HttpConfig {
    std::string endpoint;
    std::string api_key;
    std::string api_key_env = "EVOAGENT_API_KEY"; // environment override, never logged
    std::string model = "default";
};

struct EvolutionKnobs {
    int failure_pattern_min_count = 3;
    int max_examples_per_tool = 3;
    double peer_high_threshold = 0.8;
    double peer_low_threshold = 0.2;
    std::size_t min_support = 3;
    double min_success = 0.8;
    std::size_t max_len = 4;
};

/// Harness configuration with the standard defaults: 5 steps (50 embodied),
/// 1024 generation tokens, temperature 0.7. Unknown or mistyped keys raise
/// ConfigError naming the key path.
struct HarnessConfig {
    int max_steps = 5;
    int embodied_max_steps = 50;
    int max_generation_tokens = 1024;
    double temperature = 0.7;
    std::uint64_t memory_budget = 1024;
    std::uint64_t seed = 0;
    std::string backend = "scripted"; // scripted | http | policy
    int parallel_workers = 1;
    int fold_threshold = 12;
    int delegation_cap = 2;
    HttpConfig http;
    EvolutionKnobs evolution;
    Json canonical; // resolved form, used for hashing and snapshots
};

HarnessConfig config_from_json(const Json& j);
HarnessConfig load_config_file(const std::string& path);
std::uint64_t config_hash(const HarnessConfig& config); // FNV-1a over the canonical form

/// A scenario declares tools (built-in handlers), per-tool failure
/// injection, peers (scripted or nested), an optional mini environment, and
/// scripted completion entries (optionally scoped to one task).
struct Scenario {
    std::string name;
    std::vector<world::ToolSpec> tools;
    std::map<std::string, double> failure_probabilities;
    std::vector<world::PeerSpec> peers;
    std::optional<world::MiniEnv> env;

    struct CompletionEntry {
        std::string task_id; // empty = applies to every task
        backend::CallSite site = backend::CallSite::Select;
        std::size_t occurrence = 0;
        std::string response;
    };
    std::vector<CompletionEntry> completions;

    struct DefaultEntry {
        std::string task_id; // empty = every task
        std::optional<backend::CallSite> site; // nullopt = every call site
        std::string response;
    };
    std::vector<DefaultEntry> defaults;
};

Scenario load_scenario_file(const std::string& path);
std::vector<TaskSpec> load_tasks_file(const std::string& path);

/// The scripted scenario one task's backend sees: task-scoped entries plus
/// the unscoped ones.
backend::ScriptedScenario scripted_for_task(const Scenario& scenario, const std::string& task_id);

/// Fresh world for one task: tools registered, injector seeded, peers and
/// mini env installed, delegation wired.
world::World build_world(const Scenario& scenario, std::uint64_t injector_seed,
                         int delegation_cap);

/// Deterministic selection policy used by the evolving-cognition ablation:
/// a pure function of the prompt bytes. On the first select of a task it
/// picks the offered tool with the highest rendered reliability estimate
/// (alternating by task index when all estimates tie); on any later select
/// it answers final_answer with the last outcome. Other call sites raise
/// ScenarioExhausted so the deterministic fallbacks apply.
class PolicyBackend : public backend::CompletionBackend {
public:
    explicit PolicyBackend(std::size_t task_index) : task_index_(task_index) {}
    backend::Completion complete(const backend::CompletionRequest& request) override;

private:
    std::size_t task_index_;
};

std::unique_ptr<backend::CompletionBackend> make_task_backend(const HarnessConfig& config,
                                                              const Scenario& scenario,
                                                              const std::string& task_id,
                                                              std::size_t task_index);

struct Report {
    std::vector<TaskRow> rows; // sorted by task_id
    Metrics aggregate;
    Json config_snapshot;
    std::uint64_t config_hash = 0;
    std::uint64_t store_version_before = 0;
    std::uint64_t store_version_after = 0;
};

Json report_to_json(const Report& report);

struct RunOptions {
    std::string store_file; // start from this snapshot; empty = seed from the scenario
    bool emo_enabled = true;
    std::ostream* trace = nullptr; // per-phase trace lines (use one worker with this)
};

struct RunOutputs {
    std::string run_dir;
    std::vector<std::string> log_files; // run_dir-relative
    std::vector<Trajectory> trajectories;
    Report report;
};

/// Runs every task listed in the task file, one isolated agent per task,
/// writing one log and one pool snapshot each plus a report and manifest.
RunOutputs run_command(const std::string& config_path, const std::string& scenario_path,
                       const std::string& tasks_path, const std::string& out_dir,
                       const RunOptions& options = {});

struct ReplayResult {
    bool match = false;
    std::size_t first_diff_line = 0; // 1-based, 0 when match
    std::string detail;
};

/// Re-executes a log's run with the scripted backend and byte-compares the
/// regenerated log against the input.
ReplayResult replay_command(const std::string& log_path,
                            const std::string& scenario_override = "");

/// mode "emo_on_off": the suite twice (EMO assembly vs raw concatenation).
/// mode "cognition_evolution": the two-identical-tools scenario before and
/// after one evolution cycle, reporting tool-choice frequencies and rendered
/// reliabilities. Anything else raises ConfigError.
Json ablate_command(const std::string& mode, const std::string& config_path,
                    const std::string& scenario_path, const std::string& tasks_path,
                    const std::string& out_dir);

struct EvolveOutputs {
    evolution::EvolutionReport report;
    std::string evolved_store_file;
    Json report_json;
};

/// Reads a run directory (manifest, logs, pools, store), runs one evolution
/// cycle (plus skill distillation over folded episodes), and writes the
/// evolved store snapshot, the new revisions, and a report.
EvolveOutputs evolve_command(const std::string& run_dir, const std::string& out_dir);

/// Recomputes the report from a run directory's logs and task file.
Json report_command(const std::string& run_dir);

Json memory_stats(const std::string& pool_path, std::uint64_t budget, const std::string& query = "");
std::string memory_dump(const std::string& pool_path);

void cognition_export(const std::string& store_path, const std::string& out_path);
std::uint64_t cognition_import(const std::string& snapshot_path, const std::string& out_path);

} // namespace evoagent::harness
