// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoagent/backend.hpp"
#include "evoagent/cognition.hpp"
#include "evoagent/memory.hpp"
#include "evoagent/types.hpp"

namespace evoagent::evolution {

enum class Verdict { Fulfilled, Partial, Violated, Indeterminate };

std::string to_string(Verdict v);

struct AlignmentVerdict {
    std::string task_id;
    std::size_t step_index = 0;
    Verdict verdict = Verdict::Indeterminate;
    std::string rationale;
};

using VerdictMap = std::map<std::pair<std::string, std::size_t>, AlignmentVerdict>;

/// Intention-outcome alignment for one record. Structural floor rules come
/// first: error-status outcomes are Violated; a FinalAnswer matching the
/// task's expected answer is Fulfilled (a mismatch is Violated). Everything
/// else goes to the analyzer (Align call site), whose unparsable or missing
/// output yields Indeterminate.
AlignmentVerdict align(const TaskSpec& task, const ActionRecord& record,
                       backend::CompletionBackend* analyzer);

VerdictMap align_corpus(const std::vector<Trajectory>& corpus,
                        backend::CompletionBackend* analyzer);

struct EvolutionConfig {
    int failure_pattern_min_count = 3; // shared-prefix Violated threshold
    int max_examples_per_tool = 3;
    double peer_high_threshold = 0.8;
    double peer_low_threshold = 0.2;
    std::size_t min_support = 3;
    double min_success = 0.8;
    std::size_t max_len = 4;
    int fold_threshold = 12; // current auto-fold threshold, for the feedback hook
};

/// Pure function of (corpus, verdicts, config): emits AdjustReliability per
/// tool/peer step, AddFailurePattern for repeated Violated details sharing a
/// prefix, AddExample for fulfilled tool steps (capped), and
/// AmendPeerExpertise when a peer's corpus estimate crosses a threshold.
/// Each revision carries full provenance.
std::vector<cognition::Revision> propose_revisions(const std::vector<Trajectory>& corpus,
                                                   const VerdictMap& verdicts,
                                                   const EvolutionConfig& config);

struct MinedComposite {
    cognition::CompositeAction candidate;
    std::vector<std::string> pattern; // canonical action names, in order
    std::size_t support = 0;
    double success_rate = 0.0;
    std::vector<std::pair<std::string, std::size_t>> provenance; // (task_id, window start)
};

/// Enumerates contiguous action subsequences of length 2..max_len (windows
/// never cross a FinalAnswer step), counts support over all occurrences,
/// scores the fraction whose terminal step is Fulfilled, and synthesizes
/// parameter flow by exact payload reuse: a parameter byte-equal to an
/// earlier window step's outcome payload in every occurrence becomes
/// output[j]; values identical across occurrences stay literals; anything
/// else disqualifies the pattern. Emitted candidates are maximal (no
/// qualifying proper supersequence with equal support) and ordered by
/// support descending, then signature.
std::vector<MinedComposite> mine_composites(const std::vector<Trajectory>& corpus,
                                            const VerdictMap& verdicts, std::size_t min_support,
                                            double min_success, std::size_t max_len);

/// Turns a fully successful episode into a reusable skill: intent from the
/// episode goal, triggers from the analyzer (Distill call site; fallback is
/// the episode key actions), body from the covered action list with literal
/// parameters lifted to {subject} placeholders when they appear verbatim in
/// the task instruction (length >= 3). Throws EpisodeNotSuccessful.
cognition::SkillTemplate distill_skill(const memory::Episode& episode, const TaskSpec& task,
                                       const std::vector<ActionRecord>& records,
                                       const VerdictMap& verdicts,
                                       backend::CompletionBackend* analyzer);

cognition::Revision make_add_skill_revision(const cognition::SkillTemplate& skill,
                                            std::vector<std::pair<std::string, std::size_t>> provenance);

struct EvolutionReport {
    std::uint64_t committed = 0;
    std::uint64_t rejected = 0;
    std::map<std::string, std::uint64_t> commits_per_kind;
    std::uint64_t store_version_before = 0;
    std::uint64_t store_version_after = 0;
    double budget_overflow_frequency = 0.0;
    int suggested_fold_threshold = 12;
};

/// One batch evolution pass: align, propose, validate+commit, then mine and
/// commit composites. Duplicate proposals are rejected by validation, so a
/// second pass over a frozen corpus commits nothing. The memory-policy
/// feedback hook lowers the suggested auto-fold threshold when more than
/// half the corpus trajectories overflowed their budget.
EvolutionReport evolution_cycle(const std::vector<Trajectory>& corpus,
                                cognition::CognitionStore& store, const EvolutionConfig& config,
                                backend::CompletionBackend* analyzer);

} // namespace evoagent::evolution
