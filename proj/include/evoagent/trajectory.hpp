// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "evoagent/types.hpp"

namespace evoagent {

using Json = nlohmann::ordered_json;

inline constexpr int kLogFormatVersion = 1;

// JSON forms of the shared domain types. Field order is part of the log
// format and is frozen per format version.
Json task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const Json& j);

Json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const Json& j);

Json action_kind_to_json(const ActionKind& kind);
ActionKind action_kind_from_json(const Json& j);

Json outcome_to_json(const Outcome& outcome);
Outcome outcome_from_json(const Json& j);

Json record_to_json(const ActionRecord& record);
ActionRecord record_from_json(const Json& j);

/// Line-delimited log: header line, one record per line, footer line.
/// Header: {format_version, task_id, config_snapshot, task, scenario_file}.
/// Footer: {final_status, final_answer, budget_overflows}.
std::string serialize_trajectory(const Trajectory& trajectory);

/// Inverse of serialize_trajectory. Throws FormatVersionMismatch or
/// MalformedLine (with the 1-based line number) on bad input.
Trajectory deserialize_trajectory(const std::string& stream);

// File helpers used by the harness and CLI.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace evoagent
