// SPDX-License-Identifier: Apache-2.0
#include "evoagent/trajectory.hpp"

#include <fstream>
#include <sstream>

#include "evoagent/errors.hpp"

namespace evoagent {

Json task_to_json(const TaskSpec& task) {
    Json j;
    j["task_id"] = task.task_id;
    j["instruction"] = task.instruction;
    j["domain_tags"] = task.domain_tags; // std::set serializes sorted
    if (task.reference_path) j["reference_path"] = *task.reference_path;
    if (task.expected_answer) j["expected_answer"] = *task.expected_answer;
    return j;
}

TaskSpec task_from_json(const Json& j) {
    TaskSpec t;
    t.task_id = j.at("task_id").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    if (j.contains("domain_tags"))
        t.domain_tags = j.at("domain_tags").get<std::set<std::string>>();
    if (j.contains("reference_path") && !j.at("reference_path").is_null())
        t.reference_path = j.at("reference_path").get<std::vector<std::string>>();
    if (j.contains("expected_answer") && !j.at("expected_answer").is_null())
        t.expected_answer = j.at("expected_answer").get<std::string>();
    return t;
}

Json run_config_to_json(const RunConfig& config) {
    Json j;
    j["max_steps"] = config.max_steps;
    j["max_generation_tokens"] = config.max_generation_tokens;
    j["temperature"] = config.temperature;
    j["memory_budget"] = config.memory_budget.value;
    j["seed"] = config.seed;
    return j;
}

RunConfig run_config_from_json(const Json& j) {
    RunConfig c;
    c.max_steps = j.at("max_steps").get<int>();
    c.max_generation_tokens = j.at("max_generation_tokens").get<int>();
    c.temperature = j.at("temperature").get<double>();
    c.memory_budget = {j.at("memory_budget").get<std::uint64_t>()};
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

Json action_kind_to_json(const ActionKind& kind) {
    Json j;
    j["variant"] = to_string(kind.variant);
    if (variant_needs_target(kind.variant)) j["target"] = kind.target;
    return j;
}

ActionKind action_kind_from_json(const Json& j) {
    ActionKind k;
    k.variant = action_variant_from_string(j.at("variant").get<std::string>());
    if (variant_needs_target(k.variant)) {
        k.target = j.at("target").get<std::string>();
        if (k.target.empty()) throw Error("action kind requires a target");
    } else if (j.contains("target") && !j.at("target").get<std::string>().empty()) {
        throw Error("action kind must not carry a target");
    }
    return k;
}

Json outcome_to_json(const Outcome& outcome) {
    Json j;
    j["status"] = to_string(outcome.status);
    j["payload"] = outcome.payload;
    if (outcome.error_detail) j["error_detail"] = *outcome.error_detail;
    return j;
}

Outcome outcome_from_json(const Json& j) {
    Outcome o;
    o.status = outcome_status_from_string(j.at("status").get<std::string>());
    o.payload = j.at("payload").get<std::string>();
    if (j.contains("error_detail") && !j.at("error_detail").is_null())
        o.error_detail = j.at("error_detail").get<std::string>();
    if (is_error_status(o.status) != o.error_detail.has_value())
        throw Error("outcome error_detail presence does not match status");
    if (o.payload.empty() && o.status != OutcomeStatus::CapExceeded)
        throw Error("only cap_exceeded outcomes may have an empty payload");
    return o;
}

Json record_to_json(const ActionRecord& record) {
    Json j;
    j["step_index"] = record.step_index;
    j["intention"] = record.intention;
    j["kind"] = action_kind_to_json(record.kind);
    Json params = Json::array();
    for (const auto& [k, v] : record.parameters) params.push_back(Json::array({k, v}));
    j["parameters"] = params;
    j["outcome"] = outcome_to_json(record.outcome);
    j["start_tick"] = record.start_tick;
    j["end_tick"] = record.end_tick;
    return j;
}

ActionRecord record_from_json(const Json& j) {
    ActionRecord r;
    r.step_index = j.at("step_index").get<std::size_t>();
    r.intention = j.at("intention").get<std::string>();
    r.kind = action_kind_from_json(j.at("kind"));
    for (const auto& pair : j.at("parameters"))
        r.parameters.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    r.outcome = outcome_from_json(j.at("outcome"));
    r.start_tick = j.at("start_tick").get<std::uint64_t>();
    r.end_tick = j.at("end_tick").get<std::uint64_t>();
    return r;
}

std::string serialize_trajectory(const Trajectory& trajectory) {
    std::ostringstream out;
    Json header;
    header["format_version"] = kLogFormatVersion;
    header["task_id"] = trajectory.task.task_id;
    header["config_snapshot"] = run_config_to_json(trajectory.config_snapshot);
    header["task"] = task_to_json(trajectory.task);
    Json meta;
    meta["scenario_file"] = trajectory.meta.scenario_file;
    meta["backend"] = trajectory.meta.backend_kind;
    meta["task_index"] = trajectory.meta.task_index;
    meta["emo"] = trajectory.meta.emo_enabled;
    meta["fold_threshold"] = trajectory.meta.fold_threshold;
    meta["delegation_cap"] = trajectory.meta.delegation_cap;
    meta["store_file"] = trajectory.meta.store_file;
    header["run_meta"] = std::move(meta);
    out << header.dump() << '\n';
    for (const auto& record : trajectory.records)
        out << record_to_json(record).dump() << '\n';
    Json footer;
    footer["final_status"] = to_string(trajectory.final_status);
    footer["final_answer"] = trajectory.final_answer ? Json(*trajectory.final_answer) : Json(nullptr);
    footer["budget_overflows"] = trajectory.budget_overflow_count;
    out << footer.dump() << '\n';
    return out.str();
}

namespace {

Json parse_line(const std::string& line, std::size_t line_number) {
    try {
        return Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw MalformedLine(line_number, e.what());
    }
}

} // namespace

Trajectory deserialize_trajectory(const std::string& stream) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : stream) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) lines.push_back(current); // missing trailing newline
    if (lines.empty()) throw MalformedLine(1, "empty stream");

    Trajectory t;
    Json header = parse_line(lines[0], 1);
    try {
        int version = header.at("format_version").get<int>();
        if (version != kLogFormatVersion)
            throw FormatVersionMismatch(kLogFormatVersion, version);
        t.config_snapshot = run_config_from_json(header.at("config_snapshot"));
        t.task = task_from_json(header.at("task"));
        if (header.contains("run_meta")) {
            const Json& meta = header["run_meta"];
            t.meta.scenario_file = meta.value("scenario_file", std::string{});
            t.meta.backend_kind = meta.value("backend", std::string{});
            t.meta.task_index = meta.value("task_index", std::size_t{0});
            t.meta.emo_enabled = meta.value("emo", true);
            t.meta.fold_threshold = meta.value("fold_threshold", 12);
            t.meta.delegation_cap = meta.value("delegation_cap", 2);
            t.meta.store_file = meta.value("store_file", std::string{});
        }
    } catch (const FormatVersionMismatch&) {
        throw;
    } catch (const std::exception& e) {
        throw MalformedLine(1, e.what());
    }

    if (lines.size() < 2) throw MalformedLine(lines.size(), "missing footer line");

    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
        Json j = parse_line(lines[i], i + 1);
        try {
            ActionRecord r = record_from_json(j);
            if (r.step_index != t.records.size())
                throw Error("step index gap");
            t.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw MalformedLine(i + 1, e.what());
        }
    }

    std::size_t footer_line = lines.size();
    Json footer = parse_line(lines.back(), footer_line);
    try {
        t.final_status = final_status_from_string(footer.at("final_status").get<std::string>());
        if (!footer.at("final_answer").is_null())
            t.final_answer = footer.at("final_answer").get<std::string>();
        t.budget_overflow_count = footer.value("budget_overflows", std::uint64_t{0});
    } catch (const std::exception& e) {
        throw MalformedLine(footer_line, e.what());
    }
    return t;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open for writing: " + path);
    f << content;
    if (!f) throw Error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace evoagent
