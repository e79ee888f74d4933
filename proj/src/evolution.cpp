// SPDX-License-Identifier: Apache-2.0
#include "evoagent/evolution.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "evoagent/errors.hpp"

namespace evoagent::evolution {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string fold_case(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string first_words(const std::string& text, std::size_t count) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string word;
    std::size_t n = 0;
    while (n < count && in >> word) {
        if (n > 0) out << ' ';
        out << word;
        ++n;
    }
    return out.str();
}

std::string normalize_answer(const std::string& s) {
    return fold_case(trim(s));
}

} // namespace

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Fulfilled: return "fulfilled";
    case Verdict::Partial: return "partial";
    case Verdict::Violated: return "violated";
    case Verdict::Indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

AlignmentVerdict align(const TaskSpec& task, const ActionRecord& record,
                       backend::CompletionBackend* analyzer) {
    AlignmentVerdict verdict;
    verdict.task_id = task.task_id;
    verdict.step_index = record.step_index;

    // Structural floor rules come before any analyzer judgment.
    if (is_error_status(record.outcome.status)) {
        verdict.verdict = Verdict::Violated;
        verdict.rationale = "structural: outcome status " + evoagent::to_string(record.outcome.status);
        return verdict;
    }
    if (record.kind.variant == ActionVariant::FinalAnswer && task.expected_answer) {
        bool match = normalize_answer(record.outcome.payload) == normalize_answer(*task.expected_answer);
        verdict.verdict = match ? Verdict::Fulfilled : Verdict::Violated;
        verdict.rationale = match ? "structural: final answer matches the expected answer"
                                  : "structural: final answer does not match the expected answer";
        return verdict;
    }

    if (!analyzer) {
        verdict.verdict = Verdict::Indeterminate;
        verdict.rationale = "no analyzer available";
        return verdict;
    }

    std::ostringstream user;
    user << "intention: " << record.intention << "\n";
    user << "action: " << record.kind.name() << "\n";
    user << "outcome: " << evoagent::to_string(record.outcome.status) << ": "
         << record.outcome.payload << "\n";
    user << "Did the outcome fulfil the intention? Reply exactly one of "
            "`Fulfilled: <why>`, `Partial: <why>`, `Violated: <why>`.";

    backend::CompletionRequest request;
    request.call_site = backend::CallSite::Align;
    request.messages = {{"system", "You audit agent steps for intention-outcome alignment."},
                        {"user", user.str()}};
    request.max_tokens = 128;
    request.temperature = 0.0;

    try {
        std::string response = trim(analyzer->complete(request).text);
        std::string folded = fold_case(response);
        auto with_rationale = [&](std::size_t prefix_length) {
            std::string rest = trim(response.substr(prefix_length));
            if (!rest.empty() && rest.front() == ':') rest = trim(rest.substr(1));
            return rest.empty() ? "(no rationale)" : rest;
        };
        if (folded.rfind("fulfilled", 0) == 0) {
            verdict.verdict = Verdict::Fulfilled;
            verdict.rationale = with_rationale(9);
        } else if (folded.rfind("partial", 0) == 0) {
            verdict.verdict = Verdict::Partial;
            verdict.rationale = with_rationale(7);
        } else if (folded.rfind("violated", 0) == 0) {
            verdict.verdict = Verdict::Violated;
            verdict.rationale = with_rationale(8);
        } else {
            verdict.verdict = Verdict::Indeterminate;
            verdict.rationale = "unparsable analyzer output";
        }
    } catch (const Error& e) {
        verdict.verdict = Verdict::Indeterminate;
        verdict.rationale = std::string("analyzer unavailable: ") + e.what();
    }
    return verdict;
}

VerdictMap align_corpus(const std::vector<Trajectory>& corpus,
                        backend::CompletionBackend* analyzer) {
    VerdictMap verdicts;
    for (const Trajectory& t : corpus)
        for (const ActionRecord& record : t.records)
            verdicts[{t.task.task_id, record.step_index}] = align(t.task, record, analyzer);
    return verdicts;
}

namespace {

struct StepRef {
    const Trajectory* trajectory;
    const ActionRecord* record;
};

std::vector<const Trajectory*> sorted_by_task(const std::vector<Trajectory>& corpus) {
    std::vector<const Trajectory*> out;
    for (const Trajectory& t : corpus) out.push_back(&t);
    std::stable_sort(out.begin(), out.end(), [](const Trajectory* a, const Trajectory* b) {
        return a->task.task_id < b->task.task_id;
    });
    return out;
}

std::vector<std::string> task_tags(const TaskSpec& task) {
    if (task.domain_tags.empty()) return {"general"};
    return {task.domain_tags.begin(), task.domain_tags.end()};
}

Verdict verdict_for(const VerdictMap& verdicts, const std::string& task_id, std::size_t step) {
    auto it = verdicts.find({task_id, step});
    return it == verdicts.end() ? Verdict::Indeterminate : it->second.verdict;
}

std::optional<std::pair<cognition::TargetKind, std::string>> reliability_target(
    const ActionKind& kind) {
    switch (kind.variant) {
    case ActionVariant::EmicToolCall:
        return std::make_pair(cognition::TargetKind::Tool, kind.target);
    case ActionVariant::EticAsk:
    case ActionVariant::EticDelegate:
        return std::make_pair(cognition::TargetKind::Peer, kind.target);
    default:
        return std::nullopt;
    }
}

} // namespace

std::vector<cognition::Revision> propose_revisions(const std::vector<Trajectory>& corpus,
                                                   const VerdictMap& verdicts,
                                                   const EvolutionConfig& config) {
    std::vector<cognition::Revision> proposals;
    std::vector<const Trajectory*> ordered = sorted_by_task(corpus);

    // (a) per-step reliability adjustments for every tool/peer step with a
    // substantive verdict.
    for (const Trajectory* t : ordered) {
        std::vector<std::string> tags = task_tags(t->task);
        for (const ActionRecord& record : t->records) {
            auto target = reliability_target(record.kind);
            if (!target) continue;
            Verdict verdict = verdict_for(verdicts, t->task.task_id, record.step_index);
            if (verdict == Verdict::Indeterminate) continue;
            for (const std::string& tag : tags) {
                cognition::Revision r;
                r.target_kind = target->first;
                r.target = target->second;
                r.edit_kind = cognition::EditKind::AdjustReliability;
                r.payload = cognition::Json::object(
                    {{"tag", tag}, {"success", verdict == Verdict::Fulfilled}});
                r.provenance = {{t->task.task_id, record.step_index}};
                proposals.push_back(std::move(r));
            }
        }
    }

    // (b) shared-prefix failure patterns: the same tool violated >= N times
    // with error details sharing their first three words.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, std::size_t>>>
        failure_groups;
    for (const Trajectory* t : ordered) {
        for (const ActionRecord& record : t->records) {
            if (record.kind.variant != ActionVariant::EmicToolCall) continue;
            if (verdict_for(verdicts, t->task.task_id, record.step_index) != Verdict::Violated)
                continue;
            if (!record.outcome.error_detail) continue;
            std::string prefix = fold_case(first_words(*record.outcome.error_detail, 3));
            if (prefix.empty()) continue;
            failure_groups[{record.kind.target, prefix}].push_back(
                {t->task.task_id, record.step_index});
        }
    }
    for (const auto& [key, steps] : failure_groups) {
        if (steps.size() < static_cast<std::size_t>(config.failure_pattern_min_count)) continue;
        cognition::Revision r;
        r.target_kind = cognition::TargetKind::Tool;
        r.target = key.first;
        r.edit_kind = cognition::EditKind::AddFailurePattern;
        r.payload = key.second;
        r.provenance = steps;
        proposals.push_back(std::move(r));
    }

    // (c) positive usage examples for fulfilled tool steps, capped per tool.
    std::map<std::string, int> examples_emitted;
    for (const Trajectory* t : ordered) {
        for (const ActionRecord& record : t->records) {
            if (record.kind.variant != ActionVariant::EmicToolCall) continue;
            if (verdict_for(verdicts, t->task.task_id, record.step_index) != Verdict::Fulfilled)
                continue;
            int& count = examples_emitted[record.kind.target];
            if (count >= config.max_examples_per_tool) continue;
            ++count;
            cognition::Revision r;
            r.target_kind = cognition::TargetKind::Tool;
            r.target = record.kind.target;
            r.edit_kind = cognition::EditKind::AddExample;
            cognition::Json params = cognition::Json::array();
            for (const auto& [k, v] : record.parameters)
                params.push_back(cognition::Json::array({k, v}));
            r.payload = cognition::Json::object(
                {{"parameters", params},
                 {"outcome_summary", first_words(record.outcome.payload, 20)}});
            r.provenance = {{t->task.task_id, record.step_index}};
            proposals.push_back(std::move(r));
        }
    }

    // (d) peer expertise amendments when the corpus-level estimate crosses a
    // threshold.
    struct PeerTagStats {
        std::uint64_t successes = 0;
        std::uint64_t attempts = 0;
        std::vector<std::pair<std::string, std::size_t>> steps;
    };
    std::map<std::pair<std::string, std::string>, PeerTagStats> peer_stats;
    for (const Trajectory* t : ordered) {
        std::vector<std::string> tags = task_tags(t->task);
        for (const ActionRecord& record : t->records) {
            if (record.kind.variant != ActionVariant::EticAsk
                && record.kind.variant != ActionVariant::EticDelegate)
                continue;
            Verdict verdict = verdict_for(verdicts, t->task.task_id, record.step_index);
            if (verdict == Verdict::Indeterminate) continue;
            for (const std::string& tag : tags) {
                PeerTagStats& stats = peer_stats[{record.kind.target, tag}];
                stats.attempts += 1;
                if (verdict == Verdict::Fulfilled) stats.successes += 1;
                stats.steps.push_back({t->task.task_id, record.step_index});
            }
        }
    }
    for (const auto& [key, stats] : peer_stats) {
        if (stats.attempts == 0) continue;
        double estimate = cognition::smoothed_estimate({stats.successes, stats.attempts});
        bool strong = estimate >= config.peer_high_threshold;
        bool weak = estimate <= config.peer_low_threshold;
        if (!strong && !weak) continue;
        char estimate_text[16];
        std::snprintf(estimate_text, sizeof(estimate_text), "%.3f", estimate);
        cognition::Revision r;
        r.target_kind = cognition::TargetKind::Peer;
        r.target = key.first;
        r.edit_kind = cognition::EditKind::AmendPeerExpertise;
        std::string text = std::string(strong ? "reliable" : "unreliable") + " on " + key.second
                         + ": estimated " + estimate_text + " over "
                         + std::to_string(stats.attempts) + " interactions";
        r.payload = cognition::Json::object({{"tag", key.second}, {"text", text}});
        r.provenance = stats.steps;
        proposals.push_back(std::move(r));
    }

    return proposals;
}

// --- composite mining ---

namespace {

std::string sanitize_for_id(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') c = '_';
    return s;
}

std::string pattern_signature(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += " -> ";
        out += n;
    }
    return out;
}

struct Occurrence {
    const Trajectory* trajectory;
    std::size_t start;
};

} // namespace

std::vector<MinedComposite> mine_composites(const std::vector<Trajectory>& corpus,
                                            const VerdictMap& verdicts, std::size_t min_support,
                                            double min_success, std::size_t max_len) {
    if (min_support < 2) throw Error("min_support must be >= 2");
    if (max_len < 2 || max_len > 6) throw Error("max_len must be in [2, 6]");

    std::vector<const Trajectory*> ordered = sorted_by_task(corpus);

    // Enumerate every contiguous window of length 2..max_len that does not
    // cross a FinalAnswer step.
    std::map<std::string, std::pair<std::vector<std::string>, std::vector<Occurrence>>> windows;
    for (const Trajectory* t : ordered) {
        const auto& records = t->records;
        for (std::size_t start = 0; start < records.size(); ++start) {
            std::vector<std::string> names;
            for (std::size_t len = 1; len <= max_len && start + len <= records.size(); ++len) {
                const ActionRecord& record = records[start + len - 1];
                if (record.kind.variant == ActionVariant::FinalAnswer) break;
                names.push_back(record.kind.name());
                if (len < 2) continue;
                std::string key = pattern_signature(names);
                auto& entry = windows[key];
                entry.first = names;
                entry.second.push_back({t, start});
            }
        }
    }

    struct Qualifying {
        std::vector<std::string> pattern;
        std::size_t support;
        double success_rate;
        std::vector<cognition::BoundStep> steps;
        std::vector<std::pair<std::string, std::size_t>> provenance;
        std::string expected_output;
    };
    std::vector<Qualifying> qualifying;

    for (const auto& [signature, entry] : windows) {
        (void)signature;
        const std::vector<std::string>& names = entry.first;
        const std::vector<Occurrence>& occurrences = entry.second;
        if (occurrences.size() < min_support) continue;

        std::size_t fulfilled = 0;
        for (const Occurrence& occ : occurrences) {
            std::size_t last_step = occ.start + names.size() - 1;
            if (verdict_for(verdicts, occ.trajectory->task.task_id,
                            occ.trajectory->records[last_step].step_index)
                == Verdict::Fulfilled)
                ++fulfilled;
        }
        double success_rate = static_cast<double>(fulfilled) / occurrences.size();
        if (success_rate < min_success) continue;

        // Parameter-flow synthesis by exact payload reuse, consistent across
        // every occurrence; unstable parameters disqualify the pattern.
        bool ok = true;
        std::vector<cognition::BoundStep> steps;
        for (std::size_t i = 0; i < names.size() && ok; ++i) {
            const ActionRecord& proto = occurrences[0].trajectory->records[occurrences[0].start + i];
            for (const Occurrence& occ : occurrences) {
                const ActionRecord& other = occ.trajectory->records[occ.start + i];
                if (other.parameters.size() != proto.parameters.size()) { ok = false; break; }
                for (std::size_t p = 0; p < proto.parameters.size(); ++p)
                    if (other.parameters[p].first != proto.parameters[p].first) { ok = false; break; }
                if (!ok) break;
            }
            if (!ok) break;

            cognition::BoundStep step;
            step.kind = proto.kind;
            for (std::size_t p = 0; p < proto.parameters.size() && ok; ++p) {
                const std::string& param_name = proto.parameters[p].first;
                std::optional<std::size_t> bound_output;
                for (std::size_t j = 0; j < i && !bound_output; ++j) {
                    bool all_match = true;
                    for (const Occurrence& occ : occurrences) {
                        const ActionRecord& here = occ.trajectory->records[occ.start + i];
                        const ActionRecord& earlier = occ.trajectory->records[occ.start + j];
                        if (here.parameters[p].second != earlier.outcome.payload) {
                            all_match = false;
                            break;
                        }
                    }
                    if (all_match) bound_output = j;
                }
                if (bound_output) {
                    step.bindings.emplace_back(param_name, cognition::Binding::output(*bound_output));
                    continue;
                }
                bool all_literal = true;
                const std::string& literal = proto.parameters[p].second;
                for (const Occurrence& occ : occurrences) {
                    if (occ.trajectory->records[occ.start + i].parameters[p].second != literal) {
                        all_literal = false;
                        break;
                    }
                }
                if (all_literal)
                    step.bindings.emplace_back(param_name, cognition::Binding::lit(literal));
                else
                    ok = false; // unstable parameter: no synthesizable flow
            }
            if (ok) steps.push_back(std::move(step));
        }
        if (!ok) continue;

        Qualifying q;
        q.pattern = names;
        q.support = occurrences.size();
        q.success_rate = success_rate;
        q.steps = std::move(steps);
        for (const Occurrence& occ : occurrences)
            q.provenance.push_back({occ.trajectory->task.task_id, occ.start});
        const Occurrence& first = occurrences[0];
        q.expected_output =
            first_words(first.trajectory->records[first.start + names.size() - 1].outcome.payload, 10);
        qualifying.push_back(std::move(q));
    }

    // Maximality: drop any candidate that is a proper contiguous subsequence
    // of another qualifying candidate with equal support.
    auto is_contiguous_subsequence = [](const std::vector<std::string>& small,
                                        const std::vector<std::string>& big) {
        if (small.size() >= big.size()) return false;
        for (std::size_t offset = 0; offset + small.size() <= big.size(); ++offset) {
            bool match = true;
            for (std::size_t i = 0; i < small.size(); ++i)
                if (big[offset + i] != small[i]) { match = false; break; }
            if (match) return true;
        }
        return false;
    };

    std::vector<MinedComposite> result;
    for (const Qualifying& q : qualifying) {
        bool subsumed = false;
        for (const Qualifying& other : qualifying) {
            if (&other == &q) continue;
            if (other.support == q.support && is_contiguous_subsequence(q.pattern, other.pattern)) {
                subsumed = true;
                break;
            }
        }
        if (subsumed) continue;

        MinedComposite mined;
        mined.pattern = q.pattern;
        mined.support = q.support;
        mined.success_rate = q.success_rate;
        mined.provenance = q.provenance;

        cognition::CompositeAction& c = mined.candidate;
        std::string id = "mined";
        for (const auto& name : q.pattern) id += "_" + sanitize_for_id(name);
        c.composite_id = id;
        std::string goal = "runs";
        for (std::size_t i = 0; i < q.pattern.size(); ++i)
            goal += (i == 0 ? " " : " then ") + q.pattern[i];
        c.goal = goal;
        c.steps = q.steps;
        c.expected_output_pattern = q.expected_output;
        result.push_back(std::move(mined));
    }

    std::stable_sort(result.begin(), result.end(), [](const MinedComposite& a, const MinedComposite& b) {
        if (a.support != b.support) return a.support > b.support;
        return pattern_signature(a.pattern) < pattern_signature(b.pattern);
    });
    return result;
}

// --- skill distillation ---

cognition::SkillTemplate distill_skill(const memory::Episode& episode, const TaskSpec& task,
                                       const std::vector<ActionRecord>& records,
                                       const VerdictMap& verdicts,
                                       backend::CompletionBackend* analyzer) {
    for (std::size_t i = episode.first_step; i <= episode.last_step; ++i) {
        Verdict v = verdict_for(verdicts, task.task_id, i);
        if (v != Verdict::Fulfilled && v != Verdict::Partial)
            throw EpisodeNotSuccessful(episode.episode_id);
    }

    cognition::SkillTemplate skill;
    skill.skill_id = "skill_" + sanitize_for_id(task.task_id) + "_" + episode.episode_id;
    skill.intent = episode.goal;

    if (analyzer) {
        std::ostringstream user;
        user << "episode goal: " << episode.goal << "\n";
        user << "key actions:";
        for (const auto& k : episode.key_actions) user << ' ' << k << ';';
        user << "\nList 1-3 trigger conditions for reusing this procedure, one per line.";
        backend::CompletionRequest request;
        request.call_site = backend::CallSite::Distill;
        request.messages = {{"system", "You distill reusable skills from successful episodes."},
                            {"user", user.str()}};
        request.max_tokens = 128;
        request.temperature = 0.0;
        try {
            std::istringstream in(analyzer->complete(request).text);
            std::string line;
            while (std::getline(in, line)) {
                line = trim(line);
                if (!line.empty()) skill.trigger_conditions.push_back(line);
            }
        } catch (const Error&) {
            // analyzer unavailable; fall back below
        }
    }
    if (skill.trigger_conditions.empty()) skill.trigger_conditions = episode.key_actions;

    // Lift literal parameter values that appear verbatim in the task
    // instruction to {subject} placeholders, one per distinct value.
    std::map<std::string, std::string> lifted; // value -> placeholder
    auto placeholder_for = [&](const std::string& value) -> std::optional<std::string> {
        if (value.size() < 3) return std::nullopt;
        if (task.instruction.find(value) == std::string::npos) return std::nullopt;
        auto it = lifted.find(value);
        if (it != lifted.end()) return it->second;
        std::string name = lifted.empty() ? "subject" : "subject" + std::to_string(lifted.size() + 1);
        lifted.emplace(value, name);
        skill.parameters.push_back(name);
        return name;
    };

    skill.body.kind = cognition::SkillBody::Kind::ActionList;
    for (std::size_t i = episode.first_step; i <= episode.last_step; ++i) {
        if (i >= records.size()) throw Error("episode range exceeds the record list");
        const ActionRecord& record = records[i];
        cognition::BoundStep step;
        step.kind = record.kind;
        for (const auto& [name, value] : record.parameters) {
            if (auto placeholder = placeholder_for(value))
                step.bindings.emplace_back(name, cognition::Binding::lit("{" + *placeholder + "}"));
            else
                step.bindings.emplace_back(name, cognition::Binding::lit(value));
        }
        skill.body.steps.push_back(std::move(step));
    }
    return skill;
}

cognition::Revision make_add_skill_revision(
    const cognition::SkillTemplate& skill,
    std::vector<std::pair<std::string, std::size_t>> provenance) {
    cognition::Revision r;
    r.target_kind = cognition::TargetKind::Skill;
    r.target = skill.skill_id;
    r.edit_kind = cognition::EditKind::AddSkill;
    r.payload = cognition::skill_payload(skill);
    r.provenance = std::move(provenance);
    return r;
}

// --- the evolution cycle ---

EvolutionReport evolution_cycle(const std::vector<Trajectory>& corpus,
                                cognition::CognitionStore& store, const EvolutionConfig& config,
                                backend::CompletionBackend* analyzer) {
    EvolutionReport report;
    report.store_version_before = store.version();
    report.suggested_fold_threshold = config.fold_threshold;

    VerdictMap verdicts = align_corpus(corpus, analyzer);

    auto try_commit = [&](cognition::Revision revision) {
        std::string kind = cognition::to_string(revision.edit_kind);
        cognition::ValidationResult validation = store.validate_revision(revision);
        if (!validation.accepted) {
            ++report.rejected;
            return;
        }
        store.commit_revision(std::move(revision));
        ++report.committed;
        ++report.commits_per_kind[kind];
    };

    for (cognition::Revision& r : propose_revisions(corpus, verdicts, config))
        try_commit(std::move(r));

    for (const MinedComposite& mined :
         mine_composites(corpus, verdicts, config.min_support, config.min_success, config.max_len)) {
        cognition::Revision r;
        r.target_kind = cognition::TargetKind::Composite;
        r.target = mined.candidate.composite_id;
        r.edit_kind = cognition::EditKind::AddComposite;
        r.payload = cognition::composite_payload(mined.candidate);
        r.provenance = mined.provenance;
        try_commit(std::move(r));
    }

    // Memory-policy feedback: when most trajectories overflowed the budget,
    // suggest folding earlier.
    if (!corpus.empty()) {
        std::size_t overflowed = 0;
        for (const Trajectory& t : corpus)
            if (t.budget_overflow_count > 0) ++overflowed;
        report.budget_overflow_frequency = static_cast<double>(overflowed) / corpus.size();
        if (report.budget_overflow_frequency > 0.5)
            report.suggested_fold_threshold = std::max(4, config.fold_threshold - 4);
    }

    report.store_version_after = store.version();
    return report;
}

} // namespace evoagent::evolution
