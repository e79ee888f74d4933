// SPDX-License-Identifier: Apache-2.0
#include "evoagent/types.hpp"

#include "evoagent/errors.hpp"

namespace evoagent {

const std::string* find_param(const Params& params, const std::string& name) {
    for (const auto& [k, v] : params)
        if (k == name) return &v;
    return nullptr;
}

bool variant_needs_target(ActionVariant v) {
    switch (v) {
    case ActionVariant::EmicGenerate:
    case ActionVariant::FinalAnswer:
        return false;
    default:
        return true;
    }
}

std::string to_string(ActionVariant v) {
    switch (v) {
    case ActionVariant::EmicGenerate: return "emic_generate";
    case ActionVariant::EmicToolCall: return "emic_tool_call";
    case ActionVariant::EmicSkillInvoke: return "emic_skill_invoke";
    case ActionVariant::EmicCompositeInvoke: return "emic_composite_invoke";
    case ActionVariant::EticAsk: return "etic_ask";
    case ActionVariant::EticDelegate: return "etic_delegate";
    case ActionVariant::FinalAnswer: return "final_answer";
    }
    return "emic_generate";
}

ActionVariant action_variant_from_string(const std::string& s) {
    if (s == "emic_generate") return ActionVariant::EmicGenerate;
    if (s == "emic_tool_call") return ActionVariant::EmicToolCall;
    if (s == "emic_skill_invoke") return ActionVariant::EmicSkillInvoke;
    if (s == "emic_composite_invoke") return ActionVariant::EmicCompositeInvoke;
    if (s == "etic_ask") return ActionVariant::EticAsk;
    if (s == "etic_delegate") return ActionVariant::EticDelegate;
    if (s == "final_answer") return ActionVariant::FinalAnswer;
    throw Error("unknown action variant: " + s);
}

std::string ActionKind::name() const {
    switch (variant) {
    case ActionVariant::EmicGenerate: return "generate";
    case ActionVariant::FinalAnswer: return "final_answer";
    case ActionVariant::EticAsk: return "ask:" + target;
    case ActionVariant::EticDelegate: return "delegate:" + target;
    default: return target;
    }
}

std::string to_string(OutcomeStatus s) {
    switch (s) {
    case OutcomeStatus::Success: return "success";
    case OutcomeStatus::ToolError: return "tool_error";
    case OutcomeStatus::ParseError: return "parse_error";
    case OutcomeStatus::PeerResponse: return "peer_response";
    case OutcomeStatus::Timeout: return "timeout";
    case OutcomeStatus::CapExceeded: return "cap_exceeded";
    }
    return "success";
}

OutcomeStatus outcome_status_from_string(const std::string& s) {
    if (s == "success") return OutcomeStatus::Success;
    if (s == "tool_error") return OutcomeStatus::ToolError;
    if (s == "parse_error") return OutcomeStatus::ParseError;
    if (s == "peer_response") return OutcomeStatus::PeerResponse;
    if (s == "timeout") return OutcomeStatus::Timeout;
    if (s == "cap_exceeded") return OutcomeStatus::CapExceeded;
    throw Error("unknown outcome status: " + s);
}

bool is_error_status(OutcomeStatus s) {
    return s == OutcomeStatus::ToolError || s == OutcomeStatus::ParseError
        || s == OutcomeStatus::Timeout;
}

namespace {

// Only CapExceeded may carry an empty payload.
std::string non_empty(std::string payload) {
    return payload.empty() ? "(empty)" : std::move(payload);
}

} // namespace

Outcome Outcome::success(std::string payload) {
    return {OutcomeStatus::Success, non_empty(std::move(payload)), std::nullopt};
}
Outcome Outcome::tool_error(std::string payload, std::string detail) {
    return {OutcomeStatus::ToolError, non_empty(std::move(payload)), std::move(detail)};
}
Outcome Outcome::parse_error(std::string payload, std::string detail) {
    return {OutcomeStatus::ParseError, non_empty(std::move(payload)), std::move(detail)};
}
Outcome Outcome::peer_response(std::string payload) {
    return {OutcomeStatus::PeerResponse, non_empty(std::move(payload)), std::nullopt};
}
Outcome Outcome::timeout(std::string payload, std::string detail) {
    return {OutcomeStatus::Timeout, non_empty(std::move(payload)), std::move(detail)};
}
Outcome Outcome::cap_exceeded(std::string payload) {
    return {OutcomeStatus::CapExceeded, std::move(payload), std::nullopt};
}

std::string to_string(FinalStatus s) {
    switch (s) {
    case FinalStatus::Solved: return "solved";
    case FinalStatus::Failed: return "failed";
    case FinalStatus::CapHit: return "cap_hit";
    }
    return "failed";
}

FinalStatus final_status_from_string(const std::string& s) {
    if (s == "solved") return FinalStatus::Solved;
    if (s == "failed") return FinalStatus::Failed;
    if (s == "cap_hit") return FinalStatus::CapHit;
    throw Error("unknown final status: " + s);
}

void append_record(Trajectory& trajectory, ActionRecord record) {
    if (record.step_index != trajectory.records.size())
        throw IndexGap(trajectory.records.size(), record.step_index);
    trajectory.records.push_back(std::move(record));
}

} // namespace evoagent
