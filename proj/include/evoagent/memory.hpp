// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoagent/backend.hpp"
#include "evoagent/token.hpp"
#include "evoagent/trajectory.hpp"
#include "evoagent/types.hpp"

namespace evoagent::memory {

/// Lossless raw record of one step. raw_text is rendered deterministically
/// from the fields; raw_tokens is its token count.
struct StepRecord {
    std::size_t step_index = 0;
    std::string selection_rationale;
    ActionKind action;
    Params parameters;
    Outcome outcome;
    std::string raw_text;
    TokenCount raw_tokens;

    bool operator==(const StepRecord&) const = default;
};

/// Renders the canonical raw text and fills raw_text/raw_tokens.
StepRecord make_step_record(std::size_t step_index, std::string rationale, ActionKind action,
                            Params parameters, Outcome outcome);

enum class OutcomeTag { Ok, Err, Peer };

std::string to_string(OutcomeTag t);
OutcomeTag outcome_tag_from_status(OutcomeStatus s);

/// Compressed abstract of one step; summary_tokens never exceeds the raw
/// record's raw_tokens.
struct StepSummary {
    std::size_t step_index = 0;
    std::string summary_text;
    OutcomeTag outcome_tag = OutcomeTag::Ok;
    TokenCount summary_tokens;

    bool operator==(const StepSummary&) const = default;
};

/// Narrative abstraction of a contiguous step range. entry_text is the
/// canonical text used in working memory; episode_tokens is its count and
/// is always strictly below the sum of the covered steps' summary tokens.
struct Episode {
    std::string episode_id;
    std::size_t first_step = 0;
    std::size_t last_step = 0;
    std::string goal;
    std::vector<std::string> key_actions;
    std::string resolution;
    std::string entry_text;
    TokenCount episode_tokens;
};

struct FoldOp {
    std::size_t first = 0;
    std::size_t last = 0;
    std::string episode_id;
};

/// Dual-representation memory pool. Every ingested StepRecord is retained
/// forever, even when its range is folded into an episode.
struct MemoryPool {
    struct DualEntry {
        StepRecord record;
        StepSummary summary;
    };

    std::vector<DualEntry> steps;
    std::vector<Episode> episodes;
    std::vector<FoldOp> fold_log;

    std::size_t step_count() const { return steps.size(); }
    const StepRecord& raw_record(std::size_t step_index) const;
    bool is_folded(std::size_t step_index) const;
    std::vector<std::size_t> unfolded_steps() const;
    const Episode* episode_covering(std::size_t step_index) const;
};

enum class Rep { Raw, Summary, Omit };

std::string to_string(Rep r);

/// Per-step representation choice over exactly the un-folded steps, plus an
/// optional contiguous range to fold.
struct SelectorDecision {
    std::map<std::size_t, Rep> per_step;
    std::optional<std::pair<std::size_t, std::size_t>> fold_directive;
};

struct WorkingMemoryEntry {
    enum class Kind { Raw, Summary, EpisodeEntry };
    Kind kind = Kind::Summary;
    std::size_t position = 0; // step index, or the episode's first step
    std::string label;        // e.g. "step 4 raw" / "episode e0 steps 0-3"
    std::string text;
    TokenCount tokens;
};

struct WorkingMemory {
    std::vector<WorkingMemoryEntry> entries;
    TokenCount total_tokens;
    TokenCount budget;
    bool degraded = false; // budget enforcement had to demote or drop entries
};

/// Appends the step's dual representation. The compressor (Compress call
/// site) produces the summary; on failure, or when its output would exceed
/// the raw record's tokens, the deterministic fallback abstract is used
/// (action name + outcome tag + first 20 words of the payload).
/// Throws IndexGap when the record is out of sequence.
void ingest_step(MemoryPool& pool, StepRecord record, backend::CompletionBackend* compressor);

/// Deterministic fallback abstract for a record.
std::string fallback_abstract(const StepRecord& record);

/// Prompts the selector (Selector call site) with the compressed summaries
/// and the current task context. Any unparsable or invalid output falls
/// back to the heuristic decision: most recent 2 steps Raw, all others
/// Summary, no fold.
SelectorDecision select_representations(const MemoryPool& pool, const std::string& task_context,
                                        backend::CompletionBackend* selector);

SelectorDecision heuristic_fallback_decision(const MemoryPool& pool);

/// Grammar: comma-separated `<index>:<Raw|Summary|Omit>` items, optionally
/// one `fold:<first>-<last>`. Returns nullopt when the text does not form a
/// valid, total decision for the pool.
std::optional<SelectorDecision> parse_selector_output(const MemoryPool& pool,
                                                      const std::string& text);

/// Interleaves the chosen representations in step order, episodes standing
/// in for their covered ranges. When the total exceeds the budget,
/// degradation applies deterministically: oldest Raw entries demote to
/// Summary first, then oldest Summary entries drop, then oldest episode
/// entries drop; the entry covering the most recent step is never dropped.
/// Throws BudgetTooSmall when even that entry's cheapest form exceeds the
/// budget.
WorkingMemory assemble_working_memory(const MemoryPool& pool, const SelectorDecision& decision,
                                      TokenCount budget);

/// All-raw assembly with no budget enforcement (the ablation baseline arm).
WorkingMemory assemble_raw_concatenation(const MemoryPool& pool);

/// Folds [first, last] into one episode (Fold call site; fallback is the
/// concatenated summaries truncated to half their tokens). Raw records stay
/// in the pool. Throws RangeTooShort / RangeOverlap.
const Episode& mem_fold(MemoryPool& pool, std::size_t first, std::size_t last,
                        backend::CompletionBackend* summarizer);

/// Keyword retrieval: score = |case-folded word set of the query ∩ word set
/// of goal + key actions|; ties broken by recency (higher last_step first).
/// Episodes with zero overlap are not returned.
std::vector<const Episode*> retrieve_episodes(const MemoryPool& pool, const std::string& query,
                                              std::size_t k);

// Pool snapshot (line-delimited, same family as the trajectory log).
std::string serialize_pool(const MemoryPool& pool);
MemoryPool deserialize_pool(const std::string& stream);

} // namespace evoagent::memory
