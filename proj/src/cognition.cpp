// SPDX-License-Identifier: Apache-2.0
#include "evoagent/cognition.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#include "evoagent/errors.hpp"
#include "evoagent/trajectory.hpp"

namespace evoagent::cognition {

double smoothed_estimate(const ReliabilityStat& stat) {
    return (static_cast<double>(stat.successes) + 1.0) / (static_cast<double>(stat.attempts) + 2.0);
}

std::string render_estimate(const ReliabilityStat& stat) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", smoothed_estimate(stat));
    return buf;
}

std::string to_string(EditKind k) {
    switch (k) {
    case EditKind::AmendDescription: return "amend_description";
    case EditKind::AddPrecondition: return "add_precondition";
    case EditKind::AddFailurePattern: return "add_failure_pattern";
    case EditKind::AddExample: return "add_example";
    case EditKind::AdjustReliability: return "adjust_reliability";
    case EditKind::AddSkill: return "add_skill";
    case EditKind::AddComposite: return "add_composite";
    case EditKind::AmendPeerExpertise: return "amend_peer_expertise";
    }
    return "amend_description";
}

EditKind edit_kind_from_string(const std::string& s) {
    if (s == "amend_description") return EditKind::AmendDescription;
    if (s == "add_precondition") return EditKind::AddPrecondition;
    if (s == "add_failure_pattern") return EditKind::AddFailurePattern;
    if (s == "add_example") return EditKind::AddExample;
    if (s == "adjust_reliability") return EditKind::AdjustReliability;
    if (s == "add_skill") return EditKind::AddSkill;
    if (s == "add_composite") return EditKind::AddComposite;
    if (s == "amend_peer_expertise") return EditKind::AmendPeerExpertise;
    throw Error("unknown edit kind: " + s);
}

std::string to_string(TargetKind k) {
    switch (k) {
    case TargetKind::Tool: return "tool";
    case TargetKind::Skill: return "skill";
    case TargetKind::Composite: return "composite";
    case TargetKind::Peer: return "peer";
    }
    return "tool";
}

TargetKind target_kind_from_string(const std::string& s) {
    if (s == "tool") return TargetKind::Tool;
    if (s == "skill") return TargetKind::Skill;
    if (s == "composite") return TargetKind::Composite;
    if (s == "peer") return TargetKind::Peer;
    throw Error("unknown target kind: " + s);
}

// --- json converters ---

namespace {

std::string fold_case(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Json params_to_json(const Params& params) {
    Json arr = Json::array();
    for (const auto& [k, v] : params) arr.push_back(Json::array({k, v}));
    return arr;
}

Params params_from_json(const Json& j) {
    Params out;
    for (const auto& pair : j) out.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    return out;
}

Json reliability_to_json(const std::map<std::string, ReliabilityStat>& reliability) {
    Json j = Json::object();
    for (const auto& [tag, stat] : reliability)
        j[tag] = Json::array({stat.successes, stat.attempts});
    return j;
}

std::map<std::string, ReliabilityStat> reliability_from_json(const Json& j) {
    std::map<std::string, ReliabilityStat> out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out[it.key()] = {it.value().at(0).get<std::uint64_t>(), it.value().at(1).get<std::uint64_t>()};
    return out;
}

Json binding_to_json(const Binding& b) {
    Json j;
    if (b.kind == Binding::Kind::Literal) {
        j["kind"] = "literal";
        j["value"] = b.literal;
    } else {
        j["kind"] = "output";
        j["step"] = b.step;
    }
    return j;
}

Binding binding_from_json(const Json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "literal") return Binding::lit(j.at("value").get<std::string>());
    if (kind == "output") return Binding::output(j.at("step").get<std::size_t>());
    throw Error("unknown binding kind: " + kind);
}

Json bound_step_to_json(const BoundStep& s) {
    Json j;
    j["kind"] = action_kind_to_json(s.kind);
    Json bindings = Json::array();
    for (const auto& [name, b] : s.bindings)
        bindings.push_back(Json::object({{"param", name}, {"binding", binding_to_json(b)}}));
    j["bindings"] = bindings;
    return j;
}

BoundStep bound_step_from_json(const Json& j) {
    BoundStep s;
    s.kind = action_kind_from_json(j.at("kind"));
    for (const auto& b : j.at("bindings"))
        s.bindings.emplace_back(b.at("param").get<std::string>(), binding_from_json(b.at("binding")));
    return s;
}

Json tool_to_json(const ToolProfile& t) {
    Json j;
    j["name"] = t.name;
    j["description"] = t.description;
    j["preconditions"] = t.preconditions;
    j["failure_patterns"] = t.failure_patterns;
    Json examples = Json::array();
    for (const auto& ex : t.usage_examples)
        examples.push_back(Json::object(
            {{"parameters", params_to_json(ex.parameters)}, {"outcome_summary", ex.outcome_summary}}));
    j["usage_examples"] = examples;
    j["reliability"] = reliability_to_json(t.reliability);
    j["revision_log"] = t.revision_log;
    return j;
}

ToolProfile tool_from_json(const Json& j) {
    ToolProfile t;
    t.name = j.at("name").get<std::string>();
    t.description = j.at("description").get<std::string>();
    t.preconditions = j.value("preconditions", std::vector<std::string>{});
    t.failure_patterns = j.value("failure_patterns", std::vector<std::string>{});
    if (j.contains("usage_examples"))
        for (const auto& ex : j["usage_examples"])
            t.usage_examples.push_back(
                {params_from_json(ex.at("parameters")), ex.at("outcome_summary").get<std::string>()});
    if (j.contains("reliability")) t.reliability = reliability_from_json(j["reliability"]);
    t.revision_log = j.value("revision_log", std::vector<std::string>{});
    return t;
}

Json skill_to_json(const SkillTemplate& s) {
    Json j;
    j["skill_id"] = s.skill_id;
    j["intent"] = s.intent;
    j["trigger_conditions"] = s.trigger_conditions;
    Json body;
    if (s.body.kind == SkillBody::Kind::PromptTemplate) {
        body["kind"] = "prompt_template";
        body["template"] = s.body.prompt_template;
    } else {
        body["kind"] = "action_list";
        Json steps = Json::array();
        for (const auto& step : s.body.steps) steps.push_back(bound_step_to_json(step));
        body["steps"] = steps;
    }
    j["body"] = body;
    j["parameters"] = s.parameters;
    j["revision_log"] = s.revision_log;
    return j;
}

SkillTemplate skill_from_json(const Json& j) {
    SkillTemplate s;
    s.skill_id = j.at("skill_id").get<std::string>();
    s.intent = j.at("intent").get<std::string>();
    s.trigger_conditions = j.value("trigger_conditions", std::vector<std::string>{});
    const Json& body = j.at("body");
    std::string kind = body.at("kind").get<std::string>();
    if (kind == "prompt_template") {
        s.body.kind = SkillBody::Kind::PromptTemplate;
        s.body.prompt_template = body.at("template").get<std::string>();
    } else if (kind == "action_list") {
        s.body.kind = SkillBody::Kind::ActionList;
        for (const auto& step : body.at("steps")) s.body.steps.push_back(bound_step_from_json(step));
    } else {
        throw Error("unknown skill body kind: " + kind);
    }
    s.parameters = j.value("parameters", std::vector<std::string>{});
    s.revision_log = j.value("revision_log", std::vector<std::string>{});
    return s;
}

Json composite_to_json(const CompositeAction& c) {
    Json j;
    j["composite_id"] = c.composite_id;
    j["goal"] = c.goal;
    j["preconditions"] = c.preconditions;
    Json steps = Json::array();
    for (const auto& step : c.steps) steps.push_back(bound_step_to_json(step));
    j["steps"] = steps;
    j["expected_output_pattern"] = c.expected_output_pattern;
    j["revision_log"] = c.revision_log;
    return j;
}

CompositeAction composite_from_json(const Json& j) {
    CompositeAction c;
    c.composite_id = j.at("composite_id").get<std::string>();
    c.goal = j.at("goal").get<std::string>();
    c.preconditions = j.value("preconditions", std::vector<std::string>{});
    for (const auto& step : j.at("steps")) c.steps.push_back(bound_step_from_json(step));
    c.expected_output_pattern = j.value("expected_output_pattern", std::string{});
    c.revision_log = j.value("revision_log", std::vector<std::string>{});
    return c;
}

Json peer_to_json(const PeerProfile& p) {
    Json j;
    j["peer_id"] = p.peer_id;
    Json expertise = Json::object();
    for (const auto& [tag, text] : p.expertise) expertise[tag] = text;
    j["expertise"] = expertise;
    j["reliability"] = reliability_to_json(p.reliability);
    j["response_pattern_notes"] = p.response_pattern_notes;
    j["revision_log"] = p.revision_log;
    return j;
}

PeerProfile peer_from_json(const Json& j) {
    PeerProfile p;
    p.peer_id = j.at("peer_id").get<std::string>();
    if (j.contains("expertise"))
        for (auto it = j["expertise"].begin(); it != j["expertise"].end(); ++it)
            p.expertise[it.key()] = it.value().get<std::string>();
    if (j.contains("reliability")) p.reliability = reliability_from_json(j["reliability"]);
    p.response_pattern_notes = j.value("response_pattern_notes", std::vector<std::string>{});
    p.revision_log = j.value("revision_log", std::vector<std::string>{});
    return p;
}

Json feedback_to_json(const FeedbackEstimate& f) {
    Json j;
    j["action_pattern"] = f.action_pattern;
    j["expected_outcome_note"] = f.expected_outcome_note;
    j["support_count"] = f.support_count;
    return j;
}

FeedbackEstimate feedback_from_json(const Json& j) {
    return {j.at("action_pattern").get<std::string>(),
            j.at("expected_outcome_note").get<std::string>(),
            j.at("support_count").get<std::uint64_t>()};
}

// Placeholders are {word} markers with word = [A-Za-z0-9_]+.
std::vector<std::string> scan_placeholders(const std::string& text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{') continue;
        std::size_t j = i + 1;
        while (j < text.size()
               && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
            ++j;
        if (j > i + 1 && j < text.size() && text[j] == '}') {
            out.push_back(text.substr(i + 1, j - i - 1));
            i = j;
        }
    }
    return out;
}

} // namespace

Json skill_payload(const SkillTemplate& skill) {
    SkillTemplate copy = skill;
    copy.revision_log.clear();
    return skill_to_json(copy);
}

Json composite_payload(const CompositeAction& composite) {
    CompositeAction copy = composite;
    copy.revision_log.clear();
    return composite_to_json(copy);
}

Json revision_to_json(const Revision& r) {
    Json j;
    j["revision_id"] = r.revision_id;
    j["target_kind"] = to_string(r.target_kind);
    j["target"] = r.target;
    j["edit_kind"] = to_string(r.edit_kind);
    j["payload"] = r.payload;
    Json prov = Json::array();
    for (const auto& [task, step] : r.provenance) prov.push_back(Json::array({task, step}));
    j["provenance"] = prov;
    j["committed"] = r.committed;
    return j;
}

Revision revision_from_json(const Json& j) {
    Revision r;
    r.revision_id = j.at("revision_id").get<std::string>();
    r.target_kind = target_kind_from_string(j.at("target_kind").get<std::string>());
    r.target = j.at("target").get<std::string>();
    r.edit_kind = edit_kind_from_string(j.at("edit_kind").get<std::string>());
    r.payload = j.at("payload");
    for (const auto& p : j.at("provenance"))
        r.provenance.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::size_t>());
    r.committed = j.at("committed").get<bool>();
    return r;
}

// --- store ---

void CognitionStore::seed_tool(ToolProfile profile) {
    if (version_ != 0) throw Error("cannot seed after commits");
    if (profile.name.empty() || profile.description.empty())
        throw Error("tool profile needs a name and description");
    if (tools_.count(profile.name)) throw Error("duplicate tool seed: " + profile.name);
    std::string name = profile.name;
    tools_.emplace(std::move(name), std::move(profile));
}

void CognitionStore::seed_peer(PeerProfile profile) {
    if (version_ != 0) throw Error("cannot seed after commits");
    if (peers_.count(profile.peer_id)) throw Error("duplicate peer seed: " + profile.peer_id);
    std::string id = profile.peer_id;
    peers_.emplace(std::move(id), std::move(profile));
}

void CognitionStore::seed_skill(SkillTemplate skill) {
    if (version_ != 0) throw Error("cannot seed after commits");
    if (skills_.count(skill.skill_id)) throw Error("duplicate skill seed: " + skill.skill_id);
    std::string id = skill.skill_id;
    skills_.emplace(std::move(id), std::move(skill));
}

void CognitionStore::seed_feedback(FeedbackEstimate estimate) {
    if (version_ != 0) throw Error("cannot seed after commits");
    if (estimate.support_count < 1) throw Error("feedback support_count must be >= 1");
    feedback_.push_back(std::move(estimate));
}

const ToolProfile* CognitionStore::find_tool(const std::string& name) const {
    auto it = tools_.find(name);
    return it == tools_.end() ? nullptr : &it->second;
}
const SkillTemplate* CognitionStore::find_skill(const std::string& id) const {
    auto it = skills_.find(id);
    return it == skills_.end() ? nullptr : &it->second;
}
const CompositeAction* CognitionStore::find_composite(const std::string& id) const {
    auto it = composites_.find(id);
    return it == composites_.end() ? nullptr : &it->second;
}
const PeerProfile* CognitionStore::find_peer(const std::string& id) const {
    auto it = peers_.find(id);
    return it == peers_.end() ? nullptr : &it->second;
}

namespace {

bool payload_empty(const Json& payload) {
    if (payload.is_null()) return true;
    if (payload.is_string()) return payload.get<std::string>().empty();
    if (payload.is_object() || payload.is_array()) return payload.empty();
    return false;
}

bool contains_case_folded(const std::vector<std::string>& lines, const std::string& text) {
    std::string folded = fold_case(text);
    return std::any_of(lines.begin(), lines.end(),
                       [&](const std::string& line) { return fold_case(line) == folded; });
}

} // namespace

ValidationResult CognitionStore::validate_revision(const Revision& revision) const {
    if (payload_empty(revision.payload)) return ValidationResult::rejected("empty payload");
    if (revision.provenance.empty()) return ValidationResult::rejected("missing provenance");

    // Exact duplicate of an already-committed revision (same target, kind,
    // payload, and provenance) is rejected; this is what makes a repeated
    // evolution cycle over a frozen corpus a no-op.
    for (const Revision& committed : log_) {
        if (committed.target_kind == revision.target_kind && committed.target == revision.target
            && committed.edit_kind == revision.edit_kind && committed.payload == revision.payload
            && committed.provenance == revision.provenance)
            return ValidationResult::rejected("duplicate revision");
    }

    const bool creates_target =
        revision.edit_kind == EditKind::AddSkill || revision.edit_kind == EditKind::AddComposite;
    if (creates_target) {
        if (revision.edit_kind == EditKind::AddSkill && skills_.count(revision.target))
            return ValidationResult::rejected("duplicate id: skill " + revision.target);
        if (revision.edit_kind == EditKind::AddComposite && composites_.count(revision.target))
            return ValidationResult::rejected("duplicate id: composite " + revision.target);
    } else {
        bool exists = false;
        switch (revision.target_kind) {
        case TargetKind::Tool: exists = tools_.count(revision.target) > 0; break;
        case TargetKind::Skill: exists = skills_.count(revision.target) > 0; break;
        case TargetKind::Composite: exists = composites_.count(revision.target) > 0; break;
        case TargetKind::Peer: exists = peers_.count(revision.target) > 0; break;
        }
        if (!exists) return ValidationResult::rejected("unknown target: " + revision.target);
    }

    try {
        switch (revision.edit_kind) {
        case EditKind::AmendDescription: {
            if (revision.target_kind != TargetKind::Tool && revision.target_kind != TargetKind::Composite)
                return ValidationResult::rejected("amend_description targets tools or composites");
            if (revision.payload.at("text").get<std::string>().empty())
                return ValidationResult::rejected("empty payload");
            break;
        }
        case EditKind::AddPrecondition: {
            std::string line = revision.payload.get<std::string>();
            const std::vector<std::string>* existing = nullptr;
            if (revision.target_kind == TargetKind::Tool)
                existing = &tools_.at(revision.target).preconditions;
            else if (revision.target_kind == TargetKind::Composite)
                existing = &composites_.at(revision.target).preconditions;
            else
                return ValidationResult::rejected("add_precondition targets tools or composites");
            if (contains_case_folded(*existing, line))
                return ValidationResult::rejected("duplicate precondition");
            break;
        }
        case EditKind::AddFailurePattern: {
            if (revision.target_kind != TargetKind::Tool)
                return ValidationResult::rejected("add_failure_pattern targets tools");
            std::string line = revision.payload.get<std::string>();
            if (contains_case_folded(tools_.at(revision.target).failure_patterns, line))
                return ValidationResult::rejected("duplicate failure pattern");
            break;
        }
        case EditKind::AddExample: {
            if (revision.target_kind != TargetKind::Tool)
                return ValidationResult::rejected("add_example targets tools");
            UsageExample example{params_from_json(revision.payload.at("parameters")),
                                 revision.payload.at("outcome_summary").get<std::string>()};
            const auto& existing = tools_.at(revision.target).usage_examples;
            if (std::find(existing.begin(), existing.end(), example) != existing.end())
                return ValidationResult::rejected("duplicate example");
            break;
        }
        case EditKind::AdjustReliability: {
            if (revision.target_kind != TargetKind::Tool && revision.target_kind != TargetKind::Peer)
                return ValidationResult::rejected("adjust_reliability targets tools or peers");
            if (revision.payload.at("tag").get<std::string>().empty())
                return ValidationResult::rejected("empty domain tag");
            revision.payload.at("success").get<bool>();
            break;
        }
        case EditKind::AddSkill: {
            SkillTemplate skill = skill_from_json(revision.payload);
            if (skill.skill_id != revision.target)
                return ValidationResult::rejected("skill id does not match target");
            bool empty_body = skill.body.kind == SkillBody::Kind::PromptTemplate
                                  ? skill.body.prompt_template.empty()
                                  : skill.body.steps.empty();
            if (empty_body) return ValidationResult::rejected("empty skill body");
            std::vector<std::string> placeholders;
            if (skill.body.kind == SkillBody::Kind::PromptTemplate) {
                placeholders = scan_placeholders(skill.body.prompt_template);
            } else {
                for (const auto& step : skill.body.steps)
                    for (const auto& [param, binding] : step.bindings)
                        if (binding.kind == Binding::Kind::Literal)
                            for (auto& ph : scan_placeholders(binding.literal))
                                placeholders.push_back(ph);
            }
            for (const auto& ph : placeholders)
                if (std::find(skill.parameters.begin(), skill.parameters.end(), ph)
                    == skill.parameters.end())
                    return ValidationResult::rejected("undeclared placeholder {" + ph + "}");
            break;
        }
        case EditKind::AddComposite: {
            CompositeAction composite = composite_from_json(revision.payload);
            if (composite.composite_id != revision.target)
                return ValidationResult::rejected("composite id does not match target");
            if (composite.steps.empty()) return ValidationResult::rejected("composite has no steps");
            for (std::size_t i = 0; i < composite.steps.size(); ++i) {
                const BoundStep& step = composite.steps[i];
                switch (step.kind.variant) {
                case ActionVariant::EmicToolCall:
                    if (!tools_.count(step.kind.target))
                        return ValidationResult::rejected("dangling reference: tool "
                                                          + step.kind.target);
                    break;
                case ActionVariant::EticAsk:
                case ActionVariant::EticDelegate:
                    if (!peers_.count(step.kind.target))
                        return ValidationResult::rejected("dangling reference: peer "
                                                          + step.kind.target);
                    break;
                case ActionVariant::EmicGenerate:
                    break;
                default:
                    return ValidationResult::rejected("composite steps must be atomic actions");
                }
                for (const auto& [param, binding] : step.bindings) {
                    (void)param;
                    if (binding.kind == Binding::Kind::StepOutput && binding.step >= i)
                        return ValidationResult::rejected("non-forward parameter flow at step "
                                                          + std::to_string(i));
                }
            }
            break;
        }
        case EditKind::AmendPeerExpertise: {
            if (revision.target_kind != TargetKind::Peer)
                return ValidationResult::rejected("amend_peer_expertise targets peers");
            if (revision.payload.at("tag").get<std::string>().empty()
                || revision.payload.at("text").get<std::string>().empty())
                return ValidationResult::rejected("empty payload");
            break;
        }
        }
    } catch (const Json::exception& e) {
        return ValidationResult::rejected(std::string("malformed payload: ") + e.what());
    }
    return ValidationResult::ok();
}

void CognitionStore::freeze_seed_if_needed() {
    if (seed_frozen_) return;
    seed_tools_ = tools_;
    seed_skills_ = skills_;
    seed_composites_ = composites_;
    seed_peers_ = peers_;
    seed_feedback_ = feedback_;
    seed_frozen_ = true;
}

std::uint64_t CognitionStore::commit_revision(Revision revision) {
    ValidationResult result = validate_revision(revision);
    if (!result.accepted) throw NotValidated(result.reason);
    freeze_seed_if_needed();
    ++version_;
    revision.revision_id = "r" + std::to_string(version_);
    revision.committed = true;
    apply_revision(revision);
    log_.push_back(std::move(revision));
    return version_;
}

void CognitionStore::apply_revision(const Revision& revision) {
    switch (revision.edit_kind) {
    case EditKind::AmendDescription: {
        std::string text = revision.payload.at("text").get<std::string>();
        if (revision.target_kind == TargetKind::Tool)
            tools_.at(revision.target).description = text;
        else
            composites_.at(revision.target).goal = text;
        break;
    }
    case EditKind::AddPrecondition: {
        std::string line = revision.payload.get<std::string>();
        if (revision.target_kind == TargetKind::Tool)
            tools_.at(revision.target).preconditions.push_back(line);
        else
            composites_.at(revision.target).preconditions.push_back(line);
        break;
    }
    case EditKind::AddFailurePattern:
        tools_.at(revision.target).failure_patterns.push_back(revision.payload.get<std::string>());
        break;
    case EditKind::AddExample:
        tools_.at(revision.target)
            .usage_examples.push_back({params_from_json(revision.payload.at("parameters")),
                                       revision.payload.at("outcome_summary").get<std::string>()});
        break;
    case EditKind::AdjustReliability: {
        std::string tag = revision.payload.at("tag").get<std::string>();
        bool success = revision.payload.at("success").get<bool>();
        ReliabilityStat& stat = revision.target_kind == TargetKind::Tool
                                    ? tools_.at(revision.target).reliability[tag]
                                    : peers_.at(revision.target).reliability[tag];
        stat.attempts += 1;
        if (success) stat.successes += 1;
        break;
    }
    case EditKind::AddSkill: {
        SkillTemplate skill = skill_from_json(revision.payload);
        skill.revision_log.clear();
        skills_.emplace(skill.skill_id, std::move(skill));
        break;
    }
    case EditKind::AddComposite: {
        CompositeAction composite = composite_from_json(revision.payload);
        composite.revision_log.clear();
        composites_.emplace(composite.composite_id, std::move(composite));
        break;
    }
    case EditKind::AmendPeerExpertise: {
        PeerProfile& peer = peers_.at(revision.target);
        peer.expertise[revision.payload.at("tag").get<std::string>()] =
            revision.payload.at("text").get<std::string>();
        break;
    }
    }

    // Every committed edit is recorded on its target's revision log.
    std::vector<std::string>* target_log = nullptr;
    switch (revision.edit_kind == EditKind::AddSkill      ? TargetKind::Skill
            : revision.edit_kind == EditKind::AddComposite ? TargetKind::Composite
                                                            : revision.target_kind) {
    case TargetKind::Tool: target_log = &tools_.at(revision.target).revision_log; break;
    case TargetKind::Skill: target_log = &skills_.at(revision.target).revision_log; break;
    case TargetKind::Composite: target_log = &composites_.at(revision.target).revision_log; break;
    case TargetKind::Peer: target_log = &peers_.at(revision.target).revision_log; break;
    }
    target_log->push_back(revision.revision_id);
}

CognitionStore CognitionStore::seed_copy() const {
    CognitionStore seed;
    if (seed_frozen_) {
        seed.tools_ = seed_tools_;
        seed.skills_ = seed_skills_;
        seed.composites_ = seed_composites_;
        seed.peers_ = seed_peers_;
        seed.feedback_ = seed_feedback_;
    } else {
        seed.tools_ = tools_;
        seed.skills_ = skills_;
        seed.composites_ = composites_;
        seed.peers_ = peers_;
        seed.feedback_ = feedback_;
    }
    return seed;
}

CognitionStore CognitionStore::replay(const CognitionStore& seed,
                                      const std::vector<Revision>& revisions) {
    CognitionStore store = seed.seed_copy();
    for (const Revision& r : revisions) {
        Revision proposal = r;
        proposal.revision_id.clear();
        proposal.committed = false;
        store.commit_revision(std::move(proposal));
    }
    return store;
}

Json CognitionStore::to_json() const {
    Json j;
    j["version"] = version_;
    Json tools = Json::object();
    for (const auto& [name, tool] : tools_) tools[name] = tool_to_json(tool);
    j["tools"] = tools;
    Json skills = Json::object();
    for (const auto& [id, skill] : skills_) skills[id] = skill_to_json(skill);
    j["skills"] = skills;
    Json composites = Json::object();
    for (const auto& [id, composite] : composites_) composites[id] = composite_to_json(composite);
    j["composites"] = composites;
    Json peers = Json::object();
    for (const auto& [id, peer] : peers_) peers[id] = peer_to_json(peer);
    j["peers"] = peers;
    Json feedback = Json::array();
    for (const auto& f : feedback_) feedback.push_back(feedback_to_json(f));
    j["feedback"] = feedback;
    return j;
}

// --- rendering ---

namespace {

constexpr std::size_t kTopFailurePatterns = 3;

void render_reliability_line(std::ostringstream& out,
                             const std::map<std::string, ReliabilityStat>& reliability,
                             const std::set<std::string>& domain_tags) {
    out << "reliability:";
    std::vector<std::string> tags;
    if (!domain_tags.empty())
        tags.assign(domain_tags.begin(), domain_tags.end());
    else
        for (const auto& [tag, stat] : reliability) tags.push_back(tag);
    if (tags.empty()) {
        out << " no observations";
        return;
    }
    bool first = true;
    for (const auto& tag : tags) {
        ReliabilityStat stat;
        if (auto it = reliability.find(tag); it != reliability.end()) stat = it->second;
        out << (first ? " " : "; ") << stat.successes << "/" << stat.attempts << " on tag " << tag
            << " (est " << render_estimate(stat) << ")";
        first = false;
    }
}

void render_lines(std::ostringstream& out, const std::string& label,
                  const std::vector<std::string>& lines) {
    out << label << ":";
    if (lines.empty()) {
        out << " (none)";
        return;
    }
    bool first = true;
    for (const auto& line : lines) {
        out << (first ? " " : "; ") << line;
        first = false;
    }
}

} // namespace

std::string render_knowledge_block(const CognitionStore& store, const std::string& name,
                                   const std::set<std::string>& domain_tags) {
    std::ostringstream out;
    if (const ToolProfile* tool = store.find_tool(name)) {
        out << tool->name << ": " << tool->description << "\n";
        render_lines(out, "preconditions", tool->preconditions);
        out << "\n";
        std::vector<std::string> top_failures;
        std::size_t start = tool->failure_patterns.size() > kTopFailurePatterns
                                ? tool->failure_patterns.size() - kTopFailurePatterns
                                : 0;
        for (std::size_t i = start; i < tool->failure_patterns.size(); ++i)
            top_failures.push_back(tool->failure_patterns[i]);
        render_lines(out, "failures", top_failures);
        out << "\n";
        render_reliability_line(out, tool->reliability, domain_tags);
        return out.str();
    }
    if (const SkillTemplate* skill = store.find_skill(name)) {
        out << skill->skill_id << ": " << skill->intent << "\n";
        render_lines(out, "triggers", skill->trigger_conditions);
        out << "\n";
        if (skill->body.kind == SkillBody::Kind::PromptTemplate)
            out << "body: prompt template";
        else
            out << "body: " << skill->body.steps.size() << "-step procedure";
        if (!skill->parameters.empty()) {
            out << "\n";
            render_lines(out, "parameters", skill->parameters);
        }
        return out.str();
    }
    if (const CompositeAction* composite = store.find_composite(name)) {
        out << composite->composite_id << ": " << composite->goal << "\n";
        render_lines(out, "preconditions", composite->preconditions);
        out << "\n";
        out << "steps:";
        for (const auto& step : composite->steps) out << " " << step.kind.name();
        out << "\n";
        out << "expected: " << composite->expected_output_pattern;
        return out.str();
    }
    if (const PeerProfile* peer = store.find_peer(name)) {
        out << peer->peer_id << ":";
        if (peer->expertise.empty()) {
            out << " (no expertise recorded)";
        } else {
            bool first = true;
            for (const auto& [tag, text] : peer->expertise) {
                out << (first ? " " : "; ") << tag << ": " << text;
                first = false;
            }
        }
        out << "\n";
        render_lines(out, "notes", peer->response_pattern_notes);
        out << "\n";
        render_reliability_line(out, peer->reliability, domain_tags);
        return out.str();
    }
    throw UnknownAction(name);
}

std::vector<std::string> query_action_knowledge(const CognitionStore& store,
                                                const std::vector<std::string>& names,
                                                const std::set<std::string>& domain_tags) {
    std::vector<std::string> blocks;
    blocks.reserve(names.size());
    for (const auto& name : names) blocks.push_back(render_knowledge_block(store, name, domain_tags));
    return blocks;
}

Revision reliability_update(const CognitionStore& store, TargetKind target_kind,
                            const std::string& target, const std::string& domain_tag,
                            const Outcome& outcome,
                            std::vector<std::pair<std::string, std::size_t>> provenance,
                            bool peer_fulfilled) {
    bool exists = target_kind == TargetKind::Tool ? store.find_tool(target) != nullptr
                                                  : store.find_peer(target) != nullptr;
    if (!exists) throw UnknownAction(target);
    bool success = outcome.status == OutcomeStatus::Success
                || (outcome.status == OutcomeStatus::PeerResponse && peer_fulfilled);
    Revision r;
    r.target_kind = target_kind;
    r.target = target;
    r.edit_kind = EditKind::AdjustReliability;
    r.payload = Json::object({{"tag", domain_tag}, {"success", success}});
    r.provenance = std::move(provenance);
    return r;
}

// --- snapshot io ---

std::string serialize_store(const CognitionStore& store) {
    std::ostringstream out;
    Json header;
    header["format_version"] = kLogFormatVersion;
    header["kind"] = "cognition_store";
    header["version"] = store.version();
    out << header.dump() << '\n';

    Json seed_line;
    seed_line["type"] = "seed";
    seed_line["store"] = store.seed_copy().to_json();
    out << seed_line.dump() << '\n';

    for (const Revision& r : store.revision_log()) {
        Json line;
        line["type"] = "revision";
        line["revision"] = revision_to_json(r);
        out << line.dump() << '\n';
    }
    return out.str();
}

CognitionStore store_from_seed_json(const Json& seed) {
    CognitionStore store;
    if (seed.contains("tools"))
        for (auto it = seed["tools"].begin(); it != seed["tools"].end(); ++it)
            store.seed_tool(tool_from_json(it.value()));
    if (seed.contains("skills"))
        for (auto it = seed["skills"].begin(); it != seed["skills"].end(); ++it)
            store.seed_skill(skill_from_json(it.value()));
    if (seed.contains("peers"))
        for (auto it = seed["peers"].begin(); it != seed["peers"].end(); ++it)
            store.seed_peer(peer_from_json(it.value()));
    if (seed.contains("feedback"))
        for (const auto& f : seed["feedback"]) store.seed_feedback(feedback_from_json(f));
    return store;
}

Json store_state_to_json(const CognitionStore& store) {
    return store.to_json();
}

CognitionStore deserialize_store(const std::string& stream) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : stream) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) lines.push_back(current);
    if (lines.size() < 2) throw MalformedLine(1, "store snapshot needs header and seed lines");

    Json header;
    try {
        header = Json::parse(lines[0]);
    } catch (const Json::exception& e) {
        throw MalformedLine(1, e.what());
    }
    int version = header.value("format_version", -1);
    if (version != kLogFormatVersion) throw FormatVersionMismatch(kLogFormatVersion, version);
    std::uint64_t declared_version = header.at("version").get<std::uint64_t>();

    Json seed_line;
    try {
        seed_line = Json::parse(lines[1]);
        if (seed_line.at("type") != "seed") throw Error("expected seed line");
    } catch (const std::exception& e) {
        throw MalformedLine(2, e.what());
    }
    CognitionStore store = store_from_seed_json(seed_line.at("store"));

    for (std::size_t i = 2; i < lines.size(); ++i) {
        try {
            Json line = Json::parse(lines[i]);
            if (line.at("type") != "revision") throw Error("expected revision line");
            Revision r = revision_from_json(line.at("revision"));
            r.revision_id.clear();
            r.committed = false;
            store.commit_revision(std::move(r));
        } catch (const MalformedLine&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedLine(i + 1, e.what());
        }
    }
    if (store.version() != declared_version)
        throw MalformedLine(1, "declared version " + std::to_string(declared_version)
                                   + " does not match replayed version "
                                   + std::to_string(store.version()));
    return store;
}

} // namespace evoagent::cognition
