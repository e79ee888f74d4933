// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evoagent/types.hpp"

namespace evoagent::cognition {

using Json = nlohmann::ordered_json;

struct ReliabilityStat {
    std::uint64_t successes = 0;
    std::uint64_t attempts = 0;
    bool operator==(const ReliabilityStat&) const = default;
};

/// Laplace-smoothed estimate (s+1)/(n+2); always in (0,1).
double smoothed_estimate(const ReliabilityStat& stat);

/// Fixed-precision rendering of the estimate used in knowledge blocks.
std::string render_estimate(const ReliabilityStat& stat);

struct UsageExample {
    Params parameters;
    std::string outcome_summary;
    bool operator==(const UsageExample&) const = default;
};

struct ToolProfile {
    std::string name;
    std::string description;
    std::vector<std::string> preconditions;
    std::vector<std::string> failure_patterns;
    std::vector<UsageExample> usage_examples;
    std::map<std::string, ReliabilityStat> reliability; // per domain tag
    std::vector<std::string> revision_log;              // committed revision ids
};

/// A parameter binding inside a composite or skill step: either a literal
/// value or a reference to the outcome payload of an earlier step.
struct Binding {
    enum class Kind { Literal, StepOutput };
    Kind kind = Kind::Literal;
    std::string literal;
    std::size_t step = 0;

    static Binding lit(std::string value) { return {Kind::Literal, std::move(value), 0}; }
    static Binding output(std::size_t step) { return {Kind::StepOutput, "", step}; }
    bool operator==(const Binding&) const = default;
};

struct BoundStep {
    ActionKind kind;
    std::vector<std::pair<std::string, Binding>> bindings;
    bool operator==(const BoundStep&) const = default;
};

struct CompositeAction {
    std::string composite_id;
    std::string goal;
    std::vector<std::string> preconditions;
    std::vector<BoundStep> steps;
    std::string expected_output_pattern;
    std::vector<std::string> revision_log;
};

struct SkillBody {
    enum class Kind { PromptTemplate, ActionList };
    Kind kind = Kind::PromptTemplate;
    std::string prompt_template;  // uses {placeholder} markers
    std::vector<BoundStep> steps; // literal bindings may carry {placeholder} markers
    bool operator==(const SkillBody&) const = default;
};

struct SkillTemplate {
    std::string skill_id;
    std::string intent;
    std::vector<std::string> trigger_conditions;
    SkillBody body;
    std::vector<std::string> parameters; // declared placeholders
    std::vector<std::string> revision_log;
};

struct PeerProfile {
    std::string peer_id;
    std::map<std::string, std::string> expertise; // tag -> descriptive text
    std::map<std::string, ReliabilityStat> reliability;
    std::vector<std::string> response_pattern_notes;
    std::vector<std::string> revision_log;
};

struct FeedbackEstimate {
    std::string action_pattern;
    std::string expected_outcome_note;
    std::uint64_t support_count = 1;
};

enum class EditKind {
    AmendDescription,
    AddPrecondition,
    AddFailurePattern,
    AddExample,
    AdjustReliability,
    AddSkill,
    AddComposite,
    AmendPeerExpertise,
};

std::string to_string(EditKind k);
EditKind edit_kind_from_string(const std::string& s);

enum class TargetKind { Tool, Skill, Composite, Peer };

std::string to_string(TargetKind k);
TargetKind target_kind_from_string(const std::string& s);

/// A validated, provenance-carrying edit to descriptive cognition.
/// Committed revisions are immutable and replayable.
struct Revision {
    std::string revision_id; // assigned at commit time: "r<version>"
    TargetKind target_kind = TargetKind::Tool;
    std::string target;
    EditKind edit_kind = EditKind::AmendDescription;
    Json payload;
    std::vector<std::pair<std::string, std::size_t>> provenance; // (task_id, step_index)
    bool committed = false;
};

Json revision_to_json(const Revision& r);
Revision revision_from_json(const Json& j);

/// Canonical payload forms used inside AddSkill / AddComposite revisions.
Json skill_payload(const SkillTemplate& skill);
Json composite_payload(const CompositeAction& composite);

struct ValidationResult {
    bool accepted = false;
    std::string reason;

    static ValidationResult ok() { return {true, ""}; }
    static ValidationResult rejected(std::string reason) { return {false, std::move(reason)}; }
};

/// Versioned store of internal (tools, skills, composites) and external
/// (peers, feedback) cognition. The committed revision log is the source
/// of truth: replaying it over the seed reproduces the live store exactly.
class CognitionStore {
public:
    // Seeding is only legal at version 0, before any commit.
    void seed_tool(ToolProfile profile);
    void seed_peer(PeerProfile profile);
    void seed_skill(SkillTemplate skill);
    void seed_feedback(FeedbackEstimate estimate);

    std::uint64_t version() const { return version_; }

    const std::map<std::string, ToolProfile>& tools() const { return tools_; }
    const std::map<std::string, SkillTemplate>& skills() const { return skills_; }
    const std::map<std::string, CompositeAction>& composites() const { return composites_; }
    const std::map<std::string, PeerProfile>& peers() const { return peers_; }
    const std::vector<FeedbackEstimate>& feedback() const { return feedback_; }

    const ToolProfile* find_tool(const std::string& name) const;
    const SkillTemplate* find_skill(const std::string& id) const;
    const CompositeAction* find_composite(const std::string& id) const;
    const PeerProfile* find_peer(const std::string& id) const;

    /// Rejection is a value, not a fault. Rules: unknown/duplicate target,
    /// empty payload, missing provenance, duplicate precondition/failure
    /// pattern (case-folded), duplicate example, exact duplicate of an
    /// already-committed revision, dangling composite references,
    /// non-forward parameter flow, undeclared skill placeholders.
    ValidationResult validate_revision(const Revision& revision) const;

    /// Validates, stamps revision_id, applies, appends to the log.
    /// Returns the new version. Throws NotValidated when rejected.
    std::uint64_t commit_revision(Revision revision);

    const std::vector<Revision>& revision_log() const { return log_; }

    /// The store as seeded, before any commit (version 0, empty log).
    CognitionStore seed_copy() const;

    /// fold(seed, revisions): replays a committed revision log over a seed
    /// store. Replaying this store's own log over its seed reproduces it
    /// byte-for-byte (serialized form).
    static CognitionStore replay(const CognitionStore& seed, const std::vector<Revision>& revisions);

    /// Canonical serialization of the live state (sorted keys, fixed field
    /// order). Two stores at the same version with the same history produce
    /// identical bytes.
    Json to_json() const;

private:
    void apply_revision(const Revision& revision);
    void freeze_seed_if_needed();

    std::uint64_t version_ = 0;
    std::map<std::string, ToolProfile> tools_;
    std::map<std::string, SkillTemplate> skills_;
    std::map<std::string, CompositeAction> composites_;
    std::map<std::string, PeerProfile> peers_;
    std::vector<FeedbackEstimate> feedback_;
    std::vector<Revision> log_;

    bool seed_frozen_ = false;
    std::map<std::string, ToolProfile> seed_tools_;
    std::map<std::string, SkillTemplate> seed_skills_;
    std::map<std::string, CompositeAction> seed_composites_;
    std::map<std::string, PeerProfile> seed_peers_;
    std::vector<FeedbackEstimate> seed_feedback_;
};

/// Renders one descriptive text block for a tool, skill, composite, or
/// peer, in that lookup order. Blocks have a fixed shape: description,
/// preconditions, top-K failure patterns (K=3, most recent), reliability
/// summary. Rendering is deterministic for a given store version.
/// Throws UnknownAction for names not present anywhere.
std::string render_knowledge_block(const CognitionStore& store, const std::string& name,
                                   const std::set<std::string>& domain_tags);

/// One block per requested name, in request order.
std::vector<std::string> query_action_knowledge(const CognitionStore& store,
                                                const std::vector<std::string>& names,
                                                const std::set<std::string>& domain_tags);

/// Proposes (does not commit) the AdjustReliability revision for one
/// executed step: attempts +1, successes +1 iff the outcome is Success or
/// a PeerResponse the caller judged fulfilled.
Revision reliability_update(const CognitionStore& store, TargetKind target_kind,
                            const std::string& target, const std::string& domain_tag,
                            const Outcome& outcome,
                            std::vector<std::pair<std::string, std::size_t>> provenance,
                            bool peer_fulfilled = false);

// Snapshot file: header line, seed line, one committed revision per line.
std::string serialize_store(const CognitionStore& store);
CognitionStore deserialize_store(const std::string& stream);

Json store_state_to_json(const CognitionStore& store); // live state only, no log
CognitionStore store_from_seed_json(const Json& seed);

} // namespace evoagent::cognition
