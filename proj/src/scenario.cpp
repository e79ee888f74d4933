// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "evoagent/decision.hpp"
#include "evoagent/errors.hpp"
#include "evoagent/harness.hpp"
#include "evoagent/trajectory.hpp"

namespace evoagent::harness {

namespace {

void require_keys(const Json& j, const std::string& prefix,
                  const std::vector<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(prefix.empty() ? it.key() : prefix + "." + it.key(),
                              "unknown key");
    }
}

template <typename T>
T get_key(const Json& j, const std::string& prefix, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(prefix.empty() ? key : prefix + "." + key, e.what());
    }
}

} // namespace

HarnessConfig config_from_json(const Json& j) {
    HarnessConfig c;
    require_keys(j, "",
                 {"max_steps", "embodied_max_steps", "max_generation_tokens", "temperature",
                  "memory_budget", "seed", "backend", "parallel_workers", "fold_threshold",
                  "delegation_cap", "http", "evolution"});
    c.max_steps = get_key<int>(j, "", "max_steps", c.max_steps);
    c.embodied_max_steps = get_key<int>(j, "", "embodied_max_steps", c.embodied_max_steps);
    c.max_generation_tokens =
        get_key<int>(j, "", "max_generation_tokens", c.max_generation_tokens);
    c.temperature = get_key<double>(j, "", "temperature", c.temperature);
    c.memory_budget = get_key<std::uint64_t>(j, "", "memory_budget", c.memory_budget);
    c.seed = get_key<std::uint64_t>(j, "", "seed", c.seed);
    c.backend = get_key<std::string>(j, "", "backend", c.backend);
    c.parallel_workers = get_key<int>(j, "", "parallel_workers", c.parallel_workers);
    c.fold_threshold = get_key<int>(j, "", "fold_threshold", c.fold_threshold);
    c.delegation_cap = get_key<int>(j, "", "delegation_cap", c.delegation_cap);

    if (c.max_steps < 1) throw ConfigError("max_steps", "must be >= 1");
    if (c.embodied_max_steps < 1) throw ConfigError("embodied_max_steps", "must be >= 1");
    if (c.temperature < 0.0 || c.temperature > 2.0)
        throw ConfigError("temperature", "must be in [0, 2]");
    if (c.parallel_workers < 1) throw ConfigError("parallel_workers", "must be >= 1");
    if (c.backend != "scripted" && c.backend != "http" && c.backend != "policy")
        throw ConfigError("backend", "must be scripted, http, or policy");

    if (j.contains("http")) {
        const Json& h = j.at("http");
        require_keys(h, "http", {"endpoint", "api_key", "api_key_env", "model"});
        c.http.endpoint = get_key<std::string>(h, "http", "endpoint", "");
        c.http.api_key = get_key<std::string>(h, "http", "api_key", "");
        c.http.api_key_env = get_key<std::string>(h, "http", "api_key_env", c.http.api_key_env);
        c.http.model = get_key<std::string>(h, "http", "model", c.http.model);
    }
    if (c.backend == "http" && c.http.endpoint.empty())
        throw ConfigError("http.endpoint", "required when backend is http");
    if (!c.http.api_key_env.empty()) {
        if (const char* from_env = std::getenv(c.http.api_key_env.c_str()))
            c.http.api_key = from_env;
    }

    if (j.contains("evolution")) {
        const Json& e = j.at("evolution");
        require_keys(e, "evolution",
                     {"failure_pattern_min_count", "max_examples_per_tool", "peer_high_threshold",
                      "peer_low_threshold", "min_support", "min_success", "max_len"});
        c.evolution.failure_pattern_min_count = get_key<int>(
            e, "evolution", "failure_pattern_min_count", c.evolution.failure_pattern_min_count);
        c.evolution.max_examples_per_tool =
            get_key<int>(e, "evolution", "max_examples_per_tool", c.evolution.max_examples_per_tool);
        c.evolution.peer_high_threshold =
            get_key<double>(e, "evolution", "peer_high_threshold", c.evolution.peer_high_threshold);
        c.evolution.peer_low_threshold =
            get_key<double>(e, "evolution", "peer_low_threshold", c.evolution.peer_low_threshold);
        c.evolution.min_support =
            get_key<std::uint64_t>(e, "evolution", "min_support", c.evolution.min_support);
        c.evolution.min_success =
            get_key<double>(e, "evolution", "min_success", c.evolution.min_success);
        c.evolution.max_len = get_key<std::uint64_t>(e, "evolution", "max_len", c.evolution.max_len);
    }

    // Canonical resolved form (api_key deliberately excluded: never logged).
    Json canonical;
    canonical["max_steps"] = c.max_steps;
    canonical["embodied_max_steps"] = c.embodied_max_steps;
    canonical["max_generation_tokens"] = c.max_generation_tokens;
    canonical["temperature"] = c.temperature;
    canonical["memory_budget"] = c.memory_budget;
    canonical["seed"] = c.seed;
    canonical["backend"] = c.backend;
    canonical["parallel_workers"] = c.parallel_workers;
    canonical["fold_threshold"] = c.fold_threshold;
    canonical["delegation_cap"] = c.delegation_cap;
    canonical["evolution"] = Json::object(
        {{"failure_pattern_min_count", c.evolution.failure_pattern_min_count},
         {"max_examples_per_tool", c.evolution.max_examples_per_tool},
         {"peer_high_threshold", c.evolution.peer_high_threshold},
         {"peer_low_threshold", c.evolution.peer_low_threshold},
         {"min_support", c.evolution.min_support},
         {"min_success", c.evolution.min_success},
         {"max_len", c.evolution.max_len}});
    if (c.backend == "http")
        canonical["http"] =
            Json::object({{"endpoint", c.http.endpoint}, {"model", c.http.model}});
    c.canonical = std::move(canonical);
    return c;
}

HarnessConfig load_config_file(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        throw ConfigError(path, e.what());
    }
    return config_from_json(j);
}

std::uint64_t config_hash(const HarnessConfig& config) {
    std::string bytes = config.canonical.dump();
    std::uint64_t hash = 1469598103934665603ULL; // FNV-1a 64
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

// --- scenario / tasks ---

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

world::ToolSpec build_tool(const Json& j, std::size_t line_number) {
    std::string kind = j.at("kind").get<std::string>();
    world::ToolSpec tool;
    if (kind == "calculator") {
        tool = world::make_calculator_tool();
    } else if (kind == "lookup") {
        std::map<std::string, std::string> table;
        if (j.contains("table"))
            for (auto it = j["table"].begin(); it != j["table"].end(); ++it)
                table[world::World::normalize_query(it.key())] = it.value().get<std::string>();
        tool = world::make_lookup_tool(j.at("name").get<std::string>(),
                                       j.at("description").get<std::string>(), std::move(table),
                                       j.value("miss", std::string("no results")));
    } else if (kind == "extract") {
        tool = world::make_extract_tool();
    } else if (kind == "echo") {
        tool = world::make_echo_tool();
    } else {
        throw MalformedLine(line_number, "unknown tool kind: " + kind);
    }
    if (j.contains("name") && kind != "lookup") tool.name = j.at("name").get<std::string>();
    if (j.contains("description") && kind != "lookup")
        tool.description = j.at("description").get<std::string>();
    if (j.contains("duration_ticks")) tool.duration_ticks = j.at("duration_ticks").get<int>();
    if (j.contains("timeout_ticks")) tool.timeout_ticks = j.at("timeout_ticks").get<int>();
    return tool;
}

backend::ScriptedScenario nested_scenario_from_json(const Json& j) {
    backend::ScriptedScenario scenario;
    if (j.contains("completions")) {
        for (const auto& entry : j["completions"]) {
            backend::CallSite site =
                backend::call_site_from_string(entry.at("call_site").get<std::string>());
            scenario.entries[{site, entry.at("occurrence").get<std::size_t>()}] =
                entry.at("response").get<std::string>();
        }
    }
    if (j.contains("default_response") && !j["default_response"].is_null())
        scenario.default_response = j["default_response"].get<std::string>();
    return scenario;
}

} // namespace

Scenario load_scenario_file(const std::string& path) {
    Scenario scenario;
    std::vector<std::string> lines = split_lines(read_text_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        Json j;
        try {
            j = Json::parse(lines[i]);
        } catch (const Json::exception& e) {
            throw MalformedLine(i + 1, e.what());
        }
        try {
            std::string type = j.at("type").get<std::string>();
            if (type == "scenario") {
                scenario.name = j.value("name", std::string{});
            } else if (type == "tool") {
                scenario.tools.push_back(build_tool(j, i + 1));
            } else if (type == "injector") {
                scenario.failure_probabilities[j.at("tool").get<std::string>()] =
                    j.at("probability").get<double>();
            } else if (type == "peer") {
                world::PeerSpec peer;
                peer.peer_id = j.at("peer_id").get<std::string>();
                if (j.contains("expertise_tags"))
                    peer.expertise_tags = j["expertise_tags"].get<std::vector<std::string>>();
                if (j.contains("nested")) {
                    peer.nested = true;
                    peer.nested_scenario = nested_scenario_from_json(j["nested"]);
                    peer.nested_max_steps = j["nested"].value("max_steps", 5);
                } else {
                    if (j.contains("table"))
                        for (auto it = j["table"].begin(); it != j["table"].end(); ++it)
                            peer.table[world::World::normalize_query(it.key())] =
                                it.value().get<std::string>();
                    peer.default_answer = j.value("default", std::string("unknown"));
                }
                scenario.peers.push_back(std::move(peer));
            } else if (type == "minienv") {
                world::MiniEnv env;
                for (const auto& room : j.at("rooms")) env.rooms.insert(room.get<std::string>());
                if (j.contains("connections")) {
                    for (const auto& pair : j["connections"]) {
                        std::string a = pair.at(0).get<std::string>();
                        std::string b = pair.at(1).get<std::string>();
                        env.connections[a].insert(b);
                        env.connections[b].insert(a);
                    }
                }
                if (j.contains("objects"))
                    for (auto it = j["objects"].begin(); it != j["objects"].end(); ++it)
                        env.object_rooms[it.key()] = it.value().get<std::string>();
                env.agent_location = j.at("agent_location").get<std::string>();
                env.goal.object = j.at("goal").at("object").get<std::string>();
                env.goal.room = j.at("goal").at("room").get<std::string>();
                scenario.env = std::move(env);
            } else if (type == "completion") {
                Scenario::CompletionEntry entry;
                entry.task_id = j.value("task_id", std::string{});
                entry.site = backend::call_site_from_string(j.at("call_site").get<std::string>());
                entry.occurrence = j.at("occurrence").get<std::size_t>();
                entry.response = j.at("response").get<std::string>();
                scenario.completions.push_back(std::move(entry));
            } else if (type == "default_response") {
                Scenario::DefaultEntry entry;
                entry.task_id = j.value("task_id", std::string{});
                if (j.contains("call_site"))
                    entry.site = backend::call_site_from_string(j["call_site"].get<std::string>());
                entry.response = j.at("response").get<std::string>();
                scenario.defaults.push_back(std::move(entry));
            } else {
                throw Error("unknown scenario line type: " + type);
            }
        } catch (const MalformedLine&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedLine(i + 1, e.what());
        }
    }
    return scenario;
}

std::vector<TaskSpec> load_tasks_file(const std::string& path) {
    std::vector<TaskSpec> tasks;
    std::set<std::string> seen_ids;
    std::vector<std::string> lines = split_lines(read_text_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            TaskSpec task = task_from_json(Json::parse(lines[i]));
            if (task.task_id.empty() || task.instruction.empty())
                throw Error("task needs a non-empty task_id and instruction");
            if (!seen_ids.insert(task.task_id).second)
                throw Error("duplicate task_id: " + task.task_id);
            tasks.push_back(std::move(task));
        } catch (const std::exception& e) {
            throw MalformedLine(i + 1, e.what());
        }
    }
    return tasks;
}

backend::ScriptedScenario scripted_for_task(const Scenario& scenario, const std::string& task_id) {
    backend::ScriptedScenario scripted;
    // Unscoped entries first, then task-scoped ones override.
    for (const auto& entry : scenario.completions)
        if (entry.task_id.empty())
            scripted.entries[{entry.site, entry.occurrence}] = entry.response;
    for (const auto& entry : scenario.completions)
        if (!entry.task_id.empty() && entry.task_id == task_id)
            scripted.entries[{entry.site, entry.occurrence}] = entry.response;
    for (const auto& entry : scenario.defaults) {
        if (!entry.task_id.empty() && entry.task_id != task_id) continue;
        if (entry.site)
            scripted.site_defaults[*entry.site] = entry.response;
        else
            scripted.default_response = entry.response;
    }
    return scripted;
}

world::World build_world(const Scenario& scenario, std::uint64_t injector_seed,
                         int delegation_cap) {
    world::World w;
    for (const auto& tool : scenario.tools) w.register_tool(tool);
    if (scenario.env) {
        w.set_mini_env(*scenario.env);
        for (auto& tool : world::make_affordance_tools()) w.register_tool(std::move(tool));
    }
    for (const auto& [tool, probability] : scenario.failure_probabilities)
        w.set_failure_probability(tool, probability);
    w.init_injector(injector_seed);
    for (const auto& peer : scenario.peers) w.register_peer(peer);
    decision::install_delegate_runner(w, delegation_cap);
    return w;
}

// --- policy backend ---

namespace {

struct OfferedTool {
    std::string name;
    double estimate = 0.5;
};

std::string section(const std::string& prompt, const std::string& heading) {
    auto start = prompt.find(heading);
    if (start == std::string::npos) return "";
    start += heading.size();
    auto end = prompt.find("\n# ", start);
    return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::vector<OfferedTool> parse_offered_tools(const std::string& actions_section) {
    std::vector<OfferedTool> tools;
    std::istringstream in(actions_section);
    std::string line;
    OfferedTool current;
    bool open = false, has_reliability = false;
    auto flush = [&]() {
        if (open && has_reliability && current.name.find(':') == std::string::npos
            && current.name != "generate" && current.name != "final_answer")
            tools.push_back(current);
        open = false;
        has_reliability = false;
    };
    while (std::getline(in, line)) {
        if (line.rfind("- ", 0) == 0) {
            flush();
            current = OfferedTool{line.substr(2), 0.5};
            open = true;
            continue;
        }
        if (!open) continue;
        auto est_pos = line.find("(est ");
        if (line.find("reliability:") != std::string::npos && est_pos != std::string::npos) {
            has_reliability = true;
            try {
                current.estimate = std::stod(line.substr(est_pos + 5));
            } catch (const std::exception&) {
                current.estimate = 0.5;
            }
        }
    }
    flush();
    return tools;
}

} // namespace

backend::Completion PolicyBackend::complete(const backend::CompletionRequest& request) {
    if (request.call_site != backend::CallSite::Select)
        throw ScenarioExhausted(backend::to_string(request.call_site), 0);

    const std::string& prompt = request.messages.back().text;
    TokenCount prompt_tokens;
    for (const auto& m : request.messages) prompt_tokens += token_count(m.text);

    std::string history = section(prompt, "# history\n");
    bool first_select = history.rfind("no prior steps", 0) == 0;

    std::string response;
    if (first_select) {
        std::vector<OfferedTool> tools = parse_offered_tools(section(prompt, "# actions\n"));
        if (tools.empty()) {
            response = "ACTION: final_answer; PARAMS: answer=nothing to consult; "
                       "INTENTION: no tools are offered";
        } else {
            double best = tools[0].estimate, worst = tools[0].estimate;
            for (const auto& t : tools) {
                best = std::max(best, t.estimate);
                worst = std::min(worst, t.estimate);
            }
            std::size_t pick = 0;
            if (best - worst < 1e-9) {
                pick = task_index_ % tools.size(); // indistinguishable: alternate
            } else {
                for (std::size_t i = 0; i < tools.size(); ++i)
                    if (tools[i].estimate > tools[pick].estimate) pick = i;
            }
            std::string task_text = section(prompt, "# task\n");
            auto cut = task_text.find("\n\n");
            std::string instruction =
                cut == std::string::npos ? task_text : task_text.substr(0, cut);
            for (char& c : instruction)
                if (c == '\n' || c == ';') c = ' ';
            std::size_t b = instruction.find_first_not_of(' ');
            std::size_t e = instruction.find_last_not_of(' ');
            instruction = b == std::string::npos ? "" : instruction.substr(b, e - b + 1);
            response = "ACTION: " + tools[pick].name + "; PARAMS: query=" + instruction
                     + "; INTENTION: consult " + tools[pick].name;
        }
    } else {
        response = "ACTION: final_answer; PARAMS: answer=done; INTENTION: report the result";
    }
    return {response, prompt_tokens, token_count(response)};
}

std::unique_ptr<backend::CompletionBackend> make_task_backend(const HarnessConfig& config,
                                                              const Scenario& scenario,
                                                              const std::string& task_id,
                                                              std::size_t task_index) {
    if (config.backend == "scripted")
        return std::make_unique<backend::ScriptedBackend>(scripted_for_task(scenario, task_id));
    if (config.backend == "policy") return std::make_unique<PolicyBackend>(task_index);
    backend::HttpBackendConfig http;
    http.endpoint = config.http.endpoint;
    http.api_key = config.http.api_key;
    http.model = config.http.model;
    return std::make_unique<backend::HttpBackend>(http);
}

} // namespace evoagent::harness
