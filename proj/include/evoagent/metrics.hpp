// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evoagent/trajectory.hpp"
#include "evoagent/types.hpp"

namespace evoagent::harness {

struct TaskRow {
    std::string task_id;
    FinalStatus final_status = FinalStatus::Failed;
    std::size_t steps = 0;
    TokenCount prompt_tokens;
    TokenCount completion_tokens;
    std::optional<double> path_similarity;
};

struct Metrics {
    double success_rate = 0.0;
    double avg_steps = 0.0;
    TokenCount prompt_tokens_total;
    TokenCount completion_tokens_total;
    std::optional<double> path_similarity; // mean over tasks carrying a reference path
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Canonical action names of the executed records, in order.
std::vector<std::string> executed_action_names(const Trajectory& trajectory);

/// LCS(executed, reference) / |reference|. 1.0 exactly when the reference
/// path occurs as a subsequence of the executed sequence.
/// Throws MissingReferencePath when the task has none.
double path_similarity(const Trajectory& trajectory, const TaskSpec& task);

/// Deterministic aggregation; every value is recomputable from the rows.
Metrics aggregate_rows(const std::vector<TaskRow>& rows);

Json metrics_to_json(const Metrics& metrics);
Json row_to_json(const TaskRow& row);

} // namespace evoagent::harness
