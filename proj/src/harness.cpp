// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <sstream>
#include <thread>

#include "evoagent/decision.hpp"
#include "evoagent/errors.hpp"
#include "evoagent/harness.hpp"
#include "evoagent/memory.hpp"
#include "evoagent/trajectory.hpp"

namespace fs = std::filesystem;

namespace evoagent::harness {

Json report_to_json(const Report& report) {
    Json j;
    Json rows = Json::array();
    for (const TaskRow& row : report.rows) rows.push_back(row_to_json(row));
    j["rows"] = rows;
    j["aggregate"] = metrics_to_json(report.aggregate);
    j["config"] = report.config_snapshot;
    j["config_hash"] = report.config_hash;
    j["store_version_before"] = report.store_version_before;
    j["store_version_after"] = report.store_version_after;
    return j;
}

namespace {

cognition::CognitionStore store_for_run(const Scenario& scenario, const std::string& store_file,
                                        int delegation_cap) {
    if (!store_file.empty())
        return cognition::deserialize_store(read_text_file(store_file));
    world::World reference = build_world(scenario, 0, delegation_cap);
    return decision::seed_store_from_world(reference);
}

struct TaskRun {
    Trajectory trajectory;
    decision::Usage usage;
    std::string log_file;  // run_dir-relative
    std::string pool_file; // run_dir-relative
};

TaskRun run_one_task(const HarnessConfig& config, const Scenario& scenario,
                     const cognition::CognitionStore& store, const TaskSpec& task,
                     std::size_t task_index, const RunOptions& options,
                     const std::string& scenario_path, const fs::path& run_dir) {
    TaskRun result;
    std::uint64_t task_seed = world::FailureInjector::derive_task_seed(config.seed, task_index);

    world::World w = build_world(scenario, task_seed, config.delegation_cap);
    std::unique_ptr<backend::CompletionBackend> task_backend =
        make_task_backend(config, scenario, task.task_id, task_index);

    RunConfig run_config;
    run_config.max_steps = task.embodied() ? config.embodied_max_steps : config.max_steps;
    run_config.max_generation_tokens = config.max_generation_tokens;
    run_config.temperature = config.temperature;
    run_config.memory_budget = {config.memory_budget};
    run_config.seed = task_seed;

    memory::MemoryPool pool;
    decision::AgentComponents components;
    components.store = &store;
    components.world = &w;
    components.backend = task_backend.get();
    components.pool = &pool;
    components.usage = &result.usage;
    components.trace = options.trace;
    components.emo_enabled = options.emo_enabled;
    components.fold_threshold = config.fold_threshold;
    components.delegation_cap = config.delegation_cap;

    result.trajectory = decision::run_seu_loop(task, run_config, components);
    result.trajectory.meta.scenario_file = scenario_path;
    result.trajectory.meta.backend_kind = config.backend;
    result.trajectory.meta.task_index = task_index;
    result.trajectory.meta.emo_enabled = options.emo_enabled;
    result.trajectory.meta.fold_threshold = config.fold_threshold;
    result.trajectory.meta.delegation_cap = config.delegation_cap;
    result.trajectory.meta.store_file = options.store_file;

    result.log_file = "logs/" + task.task_id + ".jsonl";
    result.pool_file = "pools/" + task.task_id + ".jsonl";
    write_text_file((run_dir / result.log_file).string(),
                    serialize_trajectory(result.trajectory));
    write_text_file((run_dir / result.pool_file).string(), memory::serialize_pool(pool));
    return result;
}

TaskRow row_for(const TaskRun& run, const TaskSpec& task) {
    TaskRow row;
    row.task_id = task.task_id;
    row.final_status = run.trajectory.final_status;
    row.steps = run.trajectory.records.size();
    row.prompt_tokens = run.usage.prompt_tokens;
    row.completion_tokens = run.usage.completion_tokens;
    if (task.reference_path && !task.reference_path->empty())
        row.path_similarity = path_similarity(run.trajectory, task);
    return row;
}

} // namespace

RunOutputs run_command(const std::string& config_path, const std::string& scenario_path,
                       const std::string& tasks_path, const std::string& out_dir,
                       const RunOptions& options) {
    HarnessConfig config = load_config_file(config_path);
    Scenario scenario = load_scenario_file(scenario_path);
    std::vector<TaskSpec> tasks = load_tasks_file(tasks_path);
    cognition::CognitionStore store =
        store_for_run(scenario, options.store_file, config.delegation_cap);

    fs::path run_dir(out_dir);
    fs::create_directories(run_dir / "logs");
    fs::create_directories(run_dir / "pools");

    std::vector<TaskRun> runs(tasks.size());
    auto worker = [&](std::size_t worker_index) {
        for (std::size_t i = worker_index; i < tasks.size();
             i += static_cast<std::size_t>(config.parallel_workers))
            runs[i] = run_one_task(config, scenario, store, tasks[i], i, options, scenario_path,
                                   run_dir);
    };
    if (config.parallel_workers <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < config.parallel_workers; ++t)
            threads.emplace_back(worker, static_cast<std::size_t>(t));
        for (auto& t : threads) t.join();
    }

    RunOutputs outputs;
    outputs.run_dir = run_dir.string();

    Report report;
    report.config_snapshot = config.canonical;
    report.config_hash = config_hash(config);
    report.store_version_before = store.version();
    report.store_version_after = store.version();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        report.rows.push_back(row_for(runs[i], tasks[i]));
        outputs.log_files.push_back(runs[i].log_file);
        outputs.trajectories.push_back(runs[i].trajectory);
    }
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const TaskRow& a, const TaskRow& b) { return a.task_id < b.task_id; });
    report.aggregate = aggregate_rows(report.rows);
    outputs.report = report;

    write_text_file((run_dir / "store.jsonl").string(), cognition::serialize_store(store));
    write_text_file((run_dir / "report.json").string(), report_to_json(report).dump(2) + "\n");

    Json manifest;
    manifest["config"] = config.canonical;
    manifest["config_file"] = config_path;
    manifest["scenario_file"] = scenario_path;
    manifest["task_file"] = tasks_path;
    manifest["store_file"] = "store.jsonl";
    manifest["input_store_file"] = options.store_file;
    manifest["emo"] = options.emo_enabled;
    Json task_entries = Json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i)
        task_entries.push_back(Json::object({{"task_id", tasks[i].task_id},
                                             {"log", runs[i].log_file},
                                             {"pool", runs[i].pool_file}}));
    manifest["tasks"] = task_entries;
    manifest["report"] = "report.json";
    write_text_file((run_dir / "manifest.json").string(), manifest.dump(2) + "\n");

    return outputs;
}

ReplayResult replay_command(const std::string& log_path, const std::string& scenario_override) {
    std::string original = read_text_file(log_path);
    Trajectory logged = deserialize_trajectory(original);

    std::string scenario_path =
        scenario_override.empty() ? logged.meta.scenario_file : scenario_override;
    if (scenario_path.empty())
        return {false, 0, "log carries no scenario reference and none was given"};
    if (logged.meta.backend_kind == "http")
        return {false, 0, "http-backed logs cannot be replayed deterministically"};

    Scenario scenario = load_scenario_file(scenario_path);
    cognition::CognitionStore store =
        store_for_run(scenario, logged.meta.store_file, logged.meta.delegation_cap);
    world::World w =
        build_world(scenario, logged.config_snapshot.seed, logged.meta.delegation_cap);

    std::unique_ptr<backend::CompletionBackend> task_backend;
    if (logged.meta.backend_kind == "policy") {
        task_backend = std::make_unique<PolicyBackend>(logged.meta.task_index);
    } else {
        task_backend = std::make_unique<backend::ScriptedBackend>(
            scripted_for_task(scenario, logged.task.task_id));
    }

    memory::MemoryPool pool;
    decision::AgentComponents components;
    components.store = &store;
    components.world = &w;
    components.backend = task_backend.get();
    components.pool = &pool;
    components.emo_enabled = logged.meta.emo_enabled;
    components.fold_threshold = logged.meta.fold_threshold;
    components.delegation_cap = logged.meta.delegation_cap;

    Trajectory regenerated = decision::run_seu_loop(logged.task, logged.config_snapshot, components);
    regenerated.meta = logged.meta;
    std::string regenerated_text = serialize_trajectory(regenerated);

    if (regenerated_text == original) return {true, 0, "match"};

    std::istringstream a(original), b(regenerated_text);
    std::string line_a, line_b;
    std::size_t line_number = 0;
    while (true) {
        bool more_a = static_cast<bool>(std::getline(a, line_a));
        bool more_b = static_cast<bool>(std::getline(b, line_b));
        ++line_number;
        if (!more_a && !more_b) break;
        if (!more_a || !more_b || line_a != line_b)
            return {false, line_number, "first divergence at line " + std::to_string(line_number)};
    }
    return {false, 0, "content differs"};
}

namespace {

std::map<std::string, std::size_t> tool_choice_counts(const std::vector<Trajectory>& trajectories) {
    std::map<std::string, std::size_t> counts;
    for (const Trajectory& t : trajectories)
        for (const ActionRecord& r : t.records)
            if (r.kind.variant == ActionVariant::EmicToolCall) ++counts[r.kind.target];
    return counts;
}

Json counts_to_json(const std::map<std::string, std::size_t>& counts) {
    Json j = Json::object();
    for (const auto& [name, count] : counts) j[name] = count;
    return j;
}

} // namespace

Json ablate_command(const std::string& mode, const std::string& config_path,
                    const std::string& scenario_path, const std::string& tasks_path,
                    const std::string& out_dir) {
    fs::create_directories(out_dir);
    Json result;
    result["mode"] = mode;

    if (mode == "emo_on_off") {
        RunOptions emo_options;
        emo_options.emo_enabled = true;
        RunOptions raw_options;
        raw_options.emo_enabled = false;
        RunOutputs emo_arm =
            run_command(config_path, scenario_path, tasks_path, out_dir + "/emo", emo_options);
        RunOutputs raw_arm =
            run_command(config_path, scenario_path, tasks_path, out_dir + "/raw", raw_options);
        result["arms"] = Json::object({{"emo", report_to_json(emo_arm.report)},
                                       {"raw", report_to_json(raw_arm.report)}});
        result["config_hash_equal"] =
            emo_arm.report.config_hash == raw_arm.report.config_hash;
    } else if (mode == "cognition_evolution") {
        RunOutputs pre = run_command(config_path, scenario_path, tasks_path, out_dir + "/pre", {});
        EvolveOutputs evolved = evolve_command(out_dir + "/pre", out_dir + "/evolution");
        RunOptions post_options;
        post_options.store_file = evolved.evolved_store_file;
        RunOutputs post =
            run_command(config_path, scenario_path, tasks_path, out_dir + "/post", post_options);

        cognition::CognitionStore evolved_store =
            cognition::deserialize_store(read_text_file(evolved.evolved_store_file));
        Json reliabilities = Json::object();
        for (const auto& [name, tool] : evolved_store.tools()) {
            Json per_tag = Json::object();
            for (const auto& [tag, stat] : tool.reliability)
                per_tag[tag] = cognition::smoothed_estimate(stat);
            reliabilities[name] = per_tag;
        }
        Scenario scenario = load_scenario_file(scenario_path);
        Json injected = Json::object();
        for (const auto& [tool, probability] : scenario.failure_probabilities)
            injected[tool] = probability;

        result["pre"] = Json::object({{"choices", counts_to_json(tool_choice_counts(pre.trajectories))},
                                      {"report", report_to_json(pre.report)}});
        result["post"] =
            Json::object({{"choices", counts_to_json(tool_choice_counts(post.trajectories))},
                          {"report", report_to_json(post.report)}});
        result["evolution"] = evolved.report_json;
        result["rendered_reliability"] = reliabilities;
        result["injected_failure_probability"] = injected;
        result["config_hash_equal"] = pre.report.config_hash == post.report.config_hash;
    } else {
        throw ConfigError("mode", "unsupported ablation mode: " + mode);
    }

    write_text_file(out_dir + "/ablation_report.json", result.dump(2) + "\n");
    return result;
}

EvolveOutputs evolve_command(const std::string& run_dir, const std::string& out_dir) {
    fs::path run(run_dir);
    Json manifest = Json::parse(read_text_file((run / "manifest.json").string()));
    HarnessConfig config = config_from_json(manifest.at("config"));
    Scenario scenario = load_scenario_file(manifest.at("scenario_file").get<std::string>());

    std::vector<Trajectory> corpus;
    std::vector<std::pair<TaskSpec, memory::MemoryPool>> pools;
    for (const auto& entry : manifest.at("tasks")) {
        Trajectory t = deserialize_trajectory(
            read_text_file((run / entry.at("log").get<std::string>()).string()));
        memory::MemoryPool pool = memory::deserialize_pool(
            read_text_file((run / entry.at("pool").get<std::string>()).string()));
        pools.emplace_back(t.task, std::move(pool));
        corpus.push_back(std::move(t));
    }
    std::stable_sort(corpus.begin(), corpus.end(), [](const Trajectory& a, const Trajectory& b) {
        return a.task.task_id < b.task.task_id;
    });
    std::stable_sort(pools.begin(), pools.end(), [](const auto& a, const auto& b) {
        return a.first.task_id < b.first.task_id;
    });

    cognition::CognitionStore store =
        cognition::deserialize_store(read_text_file((run / "store.jsonl").string()));
    std::uint64_t version_before = store.version();

    evolution::EvolutionConfig evolution_config;
    evolution_config.failure_pattern_min_count = config.evolution.failure_pattern_min_count;
    evolution_config.max_examples_per_tool = config.evolution.max_examples_per_tool;
    evolution_config.peer_high_threshold = config.evolution.peer_high_threshold;
    evolution_config.peer_low_threshold = config.evolution.peer_low_threshold;
    evolution_config.min_support = config.evolution.min_support;
    evolution_config.min_success = config.evolution.min_success;
    evolution_config.max_len = config.evolution.max_len;
    evolution_config.fold_threshold = config.fold_threshold;

    backend::ScriptedBackend analyzer(scripted_for_task(scenario, ""));
    evolution::EvolutionReport report =
        evolution::evolution_cycle(corpus, store, evolution_config, &analyzer);

    // Skill distillation over folded episodes, using a fresh analyzer so
    // scripted occurrence numbering starts from zero again.
    backend::ScriptedBackend distill_analyzer(scripted_for_task(scenario, ""));
    evolution::VerdictMap verdicts = evolution::align_corpus(corpus, &distill_analyzer);
    for (const auto& [task, pool] : pools) {
        const Trajectory* trajectory = nullptr;
        for (const Trajectory& t : corpus)
            if (t.task.task_id == task.task_id) trajectory = &t;
        if (!trajectory) continue;
        for (const memory::Episode& episode : pool.episodes) {
            cognition::SkillTemplate skill;
            try {
                skill = evolution::distill_skill(episode, task, trajectory->records, verdicts,
                                                 &distill_analyzer);
            } catch (const EpisodeNotSuccessful&) {
                continue;
            }
            std::vector<std::pair<std::string, std::size_t>> provenance;
            for (std::size_t i = episode.first_step; i <= episode.last_step; ++i)
                provenance.push_back({task.task_id, i});
            cognition::Revision revision =
                evolution::make_add_skill_revision(skill, std::move(provenance));
            if (store.validate_revision(revision).accepted) {
                store.commit_revision(std::move(revision));
                ++report.committed;
                ++report.commits_per_kind["add_skill"];
            } else {
                ++report.rejected;
            }
        }
    }
    report.store_version_after = store.version();
    report.store_version_before = version_before;

    fs::create_directories(out_dir);
    EvolveOutputs outputs;
    outputs.report = report;
    outputs.evolved_store_file = (fs::path(out_dir) / "store_evolved.jsonl").string();
    write_text_file(outputs.evolved_store_file, cognition::serialize_store(store));

    std::ostringstream revisions;
    for (const cognition::Revision& r : store.revision_log())
        if (std::stoull(r.revision_id.substr(1)) > version_before)
            revisions << cognition::revision_to_json(r).dump() << '\n';
    write_text_file((fs::path(out_dir) / "revisions.jsonl").string(), revisions.str());

    Json j;
    j["committed"] = report.committed;
    j["rejected"] = report.rejected;
    Json per_kind = Json::object();
    for (const auto& [kind, count] : report.commits_per_kind) per_kind[kind] = count;
    j["commits_per_kind"] = per_kind;
    j["store_version_before"] = report.store_version_before;
    j["store_version_after"] = report.store_version_after;
    j["budget_overflow_frequency"] = report.budget_overflow_frequency;
    j["suggested_fold_threshold"] = report.suggested_fold_threshold;
    outputs.report_json = j;
    write_text_file((fs::path(out_dir) / "evolution_report.json").string(), j.dump(2) + "\n");
    return outputs;
}

Json report_command(const std::string& run_dir) {
    fs::path run(run_dir);
    Json manifest = Json::parse(read_text_file((run / "manifest.json").string()));
    Json stored = Json::parse(read_text_file((run / "report.json").string()));

    // Rows hold runtime token usage; recompute everything else from the logs
    // and re-aggregate, then check the stored aggregate matches.
    std::vector<TaskRow> rows;
    for (const auto& entry : manifest.at("tasks")) {
        Trajectory t = deserialize_trajectory(
            read_text_file((run / entry.at("log").get<std::string>()).string()));
        TaskRow row;
        row.task_id = t.task.task_id;
        row.final_status = t.final_status;
        row.steps = t.records.size();
        for (const auto& stored_row : stored.at("rows")) {
            if (stored_row.at("task_id") == t.task.task_id) {
                row.prompt_tokens = {stored_row.at("prompt_tokens").get<std::uint64_t>()};
                row.completion_tokens = {stored_row.at("completion_tokens").get<std::uint64_t>()};
            }
        }
        if (t.task.reference_path && !t.task.reference_path->empty())
            row.path_similarity = path_similarity(t, t.task);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const TaskRow& a, const TaskRow& b) { return a.task_id < b.task_id; });
    Metrics recomputed = aggregate_rows(rows);

    Json j;
    Json row_json = Json::array();
    for (const TaskRow& row : rows) row_json.push_back(row_to_json(row));
    j["rows"] = row_json;
    j["aggregate"] = metrics_to_json(recomputed);
    j["matches_stored_report"] = (metrics_to_json(recomputed) == stored.at("aggregate"));
    return j;
}

Json memory_stats(const std::string& pool_path, std::uint64_t budget, const std::string& query) {
    memory::MemoryPool pool = memory::deserialize_pool(read_text_file(pool_path));
    Json j;
    j["steps"] = pool.steps.size();
    j["episodes"] = pool.episodes.size();
    TokenCount raw_total, summary_total;
    for (const auto& entry : pool.steps) {
        raw_total += entry.record.raw_tokens;
        summary_total += entry.summary.summary_tokens;
    }
    j["raw_tokens_total"] = raw_total.value;
    j["summary_tokens_total"] = summary_total.value;
    if (!pool.steps.empty()) {
        memory::WorkingMemory wm = memory::assemble_working_memory(
            pool, memory::heuristic_fallback_decision(pool), {budget});
        j["assembled_tokens"] = wm.total_tokens.value;
        j["budget"] = budget;
        j["degraded"] = wm.degraded;
    }
    if (!query.empty()) {
        Json matches = Json::array();
        for (const memory::Episode* e : memory::retrieve_episodes(pool, query, 5))
            matches.push_back(e->episode_id);
        j["episode_matches"] = matches;
    }
    return j;
}

std::string memory_dump(const std::string& pool_path) {
    // Round-trips through the canonical serializer, validating the snapshot.
    return memory::serialize_pool(memory::deserialize_pool(read_text_file(pool_path)));
}

void cognition_export(const std::string& store_path, const std::string& out_path) {
    cognition::CognitionStore store = cognition::deserialize_store(read_text_file(store_path));
    write_text_file(out_path, cognition::serialize_store(store));
}

std::uint64_t cognition_import(const std::string& snapshot_path, const std::string& out_path) {
    cognition::CognitionStore store = cognition::deserialize_store(read_text_file(snapshot_path));
    if (!out_path.empty()) write_text_file(out_path, cognition::serialize_store(store));
    return store.version();
}

} // namespace evoagent::harness
