// SPDX-License-Identifier: Apache-2.0
#include "evoagent/metrics.hpp"

#include <algorithm>

#include "evoagent/errors.hpp"

namespace evoagent::harness {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> previous(b.size() + 1, 0), current(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                current[j] = previous[j - 1] + 1;
            else
                current[j] = std::max(previous[j], current[j - 1]);
        }
        std::swap(previous, current);
    }
    return previous[b.size()];
}

std::vector<std::string> executed_action_names(const Trajectory& trajectory) {
    std::vector<std::string> names;
    names.reserve(trajectory.records.size());
    for (const ActionRecord& record : trajectory.records) names.push_back(record.kind.name());
    return names;
}

double path_similarity(const Trajectory& trajectory, const TaskSpec& task) {
    if (!task.reference_path || task.reference_path->empty())
        throw MissingReferencePath(task.task_id);
    std::vector<std::string> executed = executed_action_names(trajectory);
    return static_cast<double>(lcs_length(executed, *task.reference_path))
         / static_cast<double>(task.reference_path->size());
}

Metrics aggregate_rows(const std::vector<TaskRow>& rows) {
    Metrics m;
    if (rows.empty()) return m;
    std::size_t solved = 0, total_steps = 0;
    double similarity_sum = 0.0;
    std::size_t similarity_count = 0;
    for (const TaskRow& row : rows) {
        if (row.final_status == FinalStatus::Solved) ++solved;
        total_steps += row.steps;
        m.prompt_tokens_total += row.prompt_tokens;
        m.completion_tokens_total += row.completion_tokens;
        if (row.path_similarity) {
            similarity_sum += *row.path_similarity;
            ++similarity_count;
        }
    }
    m.success_rate = static_cast<double>(solved) / rows.size();
    m.avg_steps = static_cast<double>(total_steps) / rows.size();
    if (similarity_count > 0) m.path_similarity = similarity_sum / similarity_count;
    return m;
}

Json metrics_to_json(const Metrics& metrics) {
    Json j;
    j["success_rate"] = metrics.success_rate;
    j["avg_steps"] = metrics.avg_steps;
    j["prompt_tokens_total"] = metrics.prompt_tokens_total.value;
    j["completion_tokens_total"] = metrics.completion_tokens_total.value;
    j["path_similarity"] = metrics.path_similarity ? Json(*metrics.path_similarity) : Json(nullptr);
    return j;
}

Json row_to_json(const TaskRow& row) {
    Json j;
    j["task_id"] = row.task_id;
    j["final_status"] = to_string(row.final_status);
    j["steps"] = row.steps;
    j["prompt_tokens"] = row.prompt_tokens.value;
    j["completion_tokens"] = row.completion_tokens.value;
    j["path_similarity"] = row.path_similarity ? Json(*row.path_similarity) : Json(nullptr);
    return j;
}

} // namespace evoagent::harness
