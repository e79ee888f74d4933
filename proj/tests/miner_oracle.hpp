// SPDX-License-Identifier: Apache-2.0
// Test-only brute-force composite enumerator. Written directly against the
// documented mining rule; shares no code with evolution::mine_composites.
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "evoagent/evolution.hpp"

namespace miner_oracle {

struct OracleBinding {
    std::string param;
    bool is_output = false;
    std::string literal;
    std::size_t from_step = 0;
};

struct OracleCandidate {
    std::vector<std::string> pattern;
    std::size_t support = 0;
    double success_rate = 0.0;
    std::vector<std::vector<OracleBinding>> bindings;
};

inline std::vector<OracleCandidate> oracle_mine(const std::vector<evoagent::Trajectory>& corpus,
                                                const evoagent::evolution::VerdictMap& verdicts,
                                                std::size_t min_support, double min_success,
                                                std::size_t max_len) {
    using evoagent::ActionRecord;
    using evoagent::ActionVariant;
    using evoagent::Trajectory;
    using evoagent::evolution::Verdict;

    std::vector<const Trajectory*> ordered;
    for (const auto& t : corpus) ordered.push_back(&t);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Trajectory* a, const Trajectory* b) {
                         return a->task.task_id < b->task.task_id;
                     });

    struct Window {
        const Trajectory* t;
        std::size_t start;
    };
    std::map<std::vector<std::string>, std::vector<Window>> groups;
    for (const Trajectory* t : ordered) {
        for (std::size_t start = 0; start < t->records.size(); ++start) {
            for (std::size_t len = 2; len <= max_len && start + len <= t->records.size(); ++len) {
                bool has_final = false;
                std::vector<std::string> names;
                for (std::size_t k = 0; k < len; ++k) {
                    const ActionRecord& r = t->records[start + k];
                    if (r.kind.variant == ActionVariant::FinalAnswer) has_final = true;
                    names.push_back(r.kind.name());
                }
                if (has_final) continue;
                groups[names].push_back({t, start});
            }
        }
    }

    std::vector<OracleCandidate> qualifying;
    for (const auto& [pattern, windows] : groups) {
        if (windows.size() < min_support) continue;
        std::size_t fulfilled = 0;
        for (const Window& w : windows) {
            auto it = verdicts.find(
                {w.t->task.task_id, w.t->records[w.start + pattern.size() - 1].step_index});
            if (it != verdicts.end() && it->second.verdict == Verdict::Fulfilled) ++fulfilled;
        }
        double rate = static_cast<double>(fulfilled) / windows.size();
        if (rate < min_success) continue;

        bool ok = true;
        OracleCandidate candidate;
        candidate.pattern = pattern;
        candidate.support = windows.size();
        candidate.success_rate = rate;
        for (std::size_t i = 0; i < pattern.size() && ok; ++i) {
            const ActionRecord& proto = windows[0].t->records[windows[0].start + i];
            for (const Window& w : windows) {
                const ActionRecord& other = w.t->records[w.start + i];
                if (other.parameters.size() != proto.parameters.size()) ok = false;
                for (std::size_t p = 0; ok && p < proto.parameters.size(); ++p)
                    if (other.parameters[p].first != proto.parameters[p].first) ok = false;
            }
            if (!ok) break;
            std::vector<OracleBinding> step_bindings;
            for (std::size_t p = 0; p < proto.parameters.size() && ok; ++p) {
                bool bound = false;
                for (std::size_t j = 0; j < i && !bound; ++j) {
                    bool all = true;
                    for (const Window& w : windows)
                        if (w.t->records[w.start + i].parameters[p].second
                            != w.t->records[w.start + j].outcome.payload)
                            all = false;
                    if (all) {
                        step_bindings.push_back({proto.parameters[p].first, true, "", j});
                        bound = true;
                    }
                }
                if (bound) continue;
                bool same_literal = true;
                for (const Window& w : windows)
                    if (w.t->records[w.start + i].parameters[p].second != proto.parameters[p].second)
                        same_literal = false;
                if (same_literal)
                    step_bindings.push_back(
                        {proto.parameters[p].first, false, proto.parameters[p].second, 0});
                else
                    ok = false;
            }
            if (ok) candidate.bindings.push_back(std::move(step_bindings));
        }
        if (ok) qualifying.push_back(std::move(candidate));
    }

    auto contains = [](const std::vector<std::string>& big, const std::vector<std::string>& small) {
        if (small.size() >= big.size()) return false;
        for (std::size_t o = 0; o + small.size() <= big.size(); ++o) {
            bool match = true;
            for (std::size_t i = 0; i < small.size(); ++i)
                if (big[o + i] != small[i]) match = false;
            if (match) return true;
        }
        return false;
    };
    std::vector<OracleCandidate> kept;
    for (const auto& c : qualifying) {
        bool subsumed = false;
        for (const auto& other : qualifying)
            if (&other != &c && other.support == c.support && contains(other.pattern, c.pattern))
                subsumed = true;
        if (!subsumed) kept.push_back(c);
    }
    auto signature = [](const std::vector<std::string>& names) {
        std::string s;
        for (const auto& n : names) {
            if (!s.empty()) s += " -> ";
            s += n;
        }
        return s;
    };
    std::stable_sort(kept.begin(), kept.end(),
                     [&](const OracleCandidate& a, const OracleCandidate& b) {
                         if (a.support != b.support) return a.support > b.support;
                         return signature(a.pattern) < signature(b.pattern);
                     });
    return kept;
}

/// Field-by-field comparison: empty string when equal, else a description
/// of the first mismatch.
inline std::string compare_with_oracle(const std::vector<evoagent::evolution::MinedComposite>& mined,
                                       const std::vector<OracleCandidate>& expected) {
    using evoagent::cognition::Binding;
    if (mined.size() != expected.size())
        return "candidate count " + std::to_string(mined.size()) + " != "
             + std::to_string(expected.size());
    for (std::size_t i = 0; i < mined.size(); ++i) {
        if (mined[i].pattern != expected[i].pattern) return "pattern mismatch at " + std::to_string(i);
        if (mined[i].support != expected[i].support) return "support mismatch at " + std::to_string(i);
        if (std::abs(mined[i].success_rate - expected[i].success_rate) > 1e-12)
            return "success rate mismatch at " + std::to_string(i);
        if (mined[i].candidate.steps.size() != expected[i].bindings.size())
            return "step count mismatch at " + std::to_string(i);
        for (std::size_t s = 0; s < expected[i].bindings.size(); ++s) {
            const auto& got = mined[i].candidate.steps[s].bindings;
            const auto& want = expected[i].bindings[s];
            if (got.size() != want.size()) return "binding count mismatch at " + std::to_string(i);
            for (std::size_t p = 0; p < want.size(); ++p) {
                if (got[p].first != want[p].param) return "param name mismatch";
                if (want[p].is_output) {
                    if (got[p].second.kind != Binding::Kind::StepOutput
                        || got[p].second.step != want[p].from_step)
                        return "output binding mismatch";
                } else {
                    if (got[p].second.kind != Binding::Kind::Literal
                        || got[p].second.literal != want[p].literal)
                        return "literal binding mismatch";
                }
            }
        }
    }
    return "";
}

} // namespace miner_oracle
