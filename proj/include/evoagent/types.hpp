// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "evoagent/token.hpp"

namespace evoagent {

/// Ordered name -> value parameter map. Order is preserved as written.
using Params = std::vector<std::pair<std::string, std::string>>;

const std::string* find_param(const Params& params, const std::string& name);

struct TaskSpec {
    std::string task_id;
    std::string instruction;
    std::set<std::string> domain_tags;
    std::optional<std::vector<std::string>> reference_path;
    std::optional<std::string> expected_answer; // gold answer for alignment, if any

    bool embodied() const { return domain_tags.count("embodied") > 0; }
};

enum class ActionVariant {
    EmicGenerate,
    EmicToolCall,
    EmicSkillInvoke,
    EmicCompositeInvoke,
    EticAsk,
    EticDelegate,
    FinalAnswer,
};

/// True when the variant addresses a named tool/skill/composite/peer.
bool variant_needs_target(ActionVariant v);

std::string to_string(ActionVariant v);
ActionVariant action_variant_from_string(const std::string& s); // throws MalformedLine-free Error on unknown

/// A selectable action: the emic/etic variant plus its target name, when one applies.
struct ActionKind {
    ActionVariant variant = ActionVariant::EmicGenerate;
    std::string target; // empty iff variant does not need one

    /// Canonical action name used in prompts, logs, and mining keys.
    std::string name() const;

    static ActionKind generate() { return {ActionVariant::EmicGenerate, ""}; }
    static ActionKind final_answer() { return {ActionVariant::FinalAnswer, ""}; }
    static ActionKind tool(std::string name) { return {ActionVariant::EmicToolCall, std::move(name)}; }
    static ActionKind skill(std::string id) { return {ActionVariant::EmicSkillInvoke, std::move(id)}; }
    static ActionKind composite(std::string id) { return {ActionVariant::EmicCompositeInvoke, std::move(id)}; }
    static ActionKind ask(std::string peer) { return {ActionVariant::EticAsk, std::move(peer)}; }
    static ActionKind delegate(std::string peer) { return {ActionVariant::EticDelegate, std::move(peer)}; }

    bool operator==(const ActionKind&) const = default;
    bool operator<(const ActionKind& o) const {
        if (variant != o.variant) return variant < o.variant;
        return target < o.target;
    }
};

enum class OutcomeStatus {
    Success,
    ToolError,
    ParseError,
    PeerResponse,
    Timeout,
    CapExceeded,
};

std::string to_string(OutcomeStatus s);
OutcomeStatus outcome_status_from_string(const std::string& s);

bool is_error_status(OutcomeStatus s); // ToolError, ParseError or Timeout

/// Observed result of one executed step.
struct Outcome {
    OutcomeStatus status = OutcomeStatus::Success;
    std::string payload;
    std::optional<std::string> error_detail; // present iff status is an error status

    static Outcome success(std::string payload);
    static Outcome tool_error(std::string payload, std::string detail);
    static Outcome parse_error(std::string payload, std::string detail);
    static Outcome peer_response(std::string payload);
    static Outcome timeout(std::string payload, std::string detail);
    static Outcome cap_exceeded(std::string payload = "");

    bool operator==(const Outcome&) const = default;
};

/// One executed step of a trajectory: intention, action, parameters, outcome.
struct ActionRecord {
    std::size_t step_index = 0;
    std::string intention;
    ActionKind kind;
    Params parameters;
    Outcome outcome;
    std::uint64_t start_tick = 0;
    std::uint64_t end_tick = 0;

    bool operator==(const ActionRecord&) const = default;
};

enum class FinalStatus { Solved, Failed, CapHit };

std::string to_string(FinalStatus s);
FinalStatus final_status_from_string(const std::string& s);

/// Per-run resolved limits. Defaults follow the standard configuration:
/// 5 steps (50 for embodied tasks), 1024 generation tokens, temperature 0.7.
struct RunConfig {
    int max_steps = 5;
    int max_generation_tokens = 1024;
    double temperature = 0.7;
    TokenCount memory_budget{1024};
    std::uint64_t seed = 0;

    bool operator==(const RunConfig&) const = default;
};

/// Run provenance recorded in the log header so `replay` can rebuild the
/// exact run. Empty fields mean the trajectory was built outside the harness.
struct RunMeta {
    std::string scenario_file;
    std::string backend_kind; // "scripted" | "http" | "policy"
    std::size_t task_index = 0;
    bool emo_enabled = true;
    int fold_threshold = 12;
    int delegation_cap = 2;
    std::string store_file; // snapshot the run started from; "" = seeded from the scenario

    bool operator==(const RunMeta&) const = default;
};

struct Trajectory {
    TaskSpec task;
    std::vector<ActionRecord> records;
    FinalStatus final_status = FinalStatus::Failed;
    std::optional<std::string> final_answer;
    RunConfig config_snapshot;
    RunMeta meta;
    std::uint64_t budget_overflow_count = 0; // assemblies that needed degradation
};

/// Appends in place. The record's step_index must equal records.size(); throws IndexGap otherwise.
void append_record(Trajectory& trajectory, ActionRecord record);

} // namespace evoagent
