// SPDX-License-Identifier: Apache-2.0
#include "evoagent/decision.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>

#include "evoagent/errors.hpp"

namespace evoagent::decision {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

/// Counts all usage through an inner backend into a Usage sink.
class MeteredBackend : public backend::CompletionBackend {
public:
    MeteredBackend(backend::CompletionBackend* inner, Usage* usage)
        : inner_(inner), usage_(usage) {}

    backend::Completion complete(const backend::CompletionRequest& request) override {
        backend::Completion c = inner_->complete(request);
        if (usage_) {
            usage_->prompt_tokens += c.prompt_tokens;
            usage_->completion_tokens += c.completion_tokens;
        }
        return c;
    }

private:
    backend::CompletionBackend* inner_;
    Usage* usage_;
};

} // namespace

std::vector<ActionDescriptor> build_action_space(const cognition::CognitionStore& store,
                                                 const world::World& world,
                                                 const std::set<std::string>& domain_tags) {
    std::vector<ActionDescriptor> space;
    std::uint64_t version = store.version();

    ActionDescriptor generate;
    generate.kind = ActionKind::generate();
    generate.name = "generate";
    generate.rendered_knowledge = "generate: self-driven generation with the language model";
    generate.parameter_schema = {{"prompt", "what to generate", false}};
    generate.store_version = version;
    space.push_back(std::move(generate));

    for (const auto& [name, tool] : world.tools()) {
        ActionDescriptor d;
        d.kind = ActionKind::tool(name);
        d.name = name;
        d.rendered_knowledge = cognition::render_knowledge_block(store, name, domain_tags);
        for (const auto& p : tool.parameter_schema)
            d.parameter_schema.push_back({p.name, p.description, p.required});
        d.store_version = version;
        space.push_back(std::move(d));
    }

    for (const auto& [id, skill] : store.skills()) {
        ActionDescriptor d;
        d.kind = ActionKind::skill(id);
        d.name = id;
        d.rendered_knowledge = cognition::render_knowledge_block(store, id, domain_tags);
        for (const auto& p : skill.parameters) d.parameter_schema.push_back({p, "skill parameter", true});
        d.store_version = version;
        space.push_back(std::move(d));
    }

    for (const auto& [id, composite] : store.composites()) {
        (void)composite;
        ActionDescriptor d;
        d.kind = ActionKind::composite(id);
        d.name = id;
        d.rendered_knowledge = cognition::render_knowledge_block(store, id, domain_tags);
        d.store_version = version;
        space.push_back(std::move(d));
    }

    for (const auto& [peer_id, peer] : world.peers()) {
        (void)peer;
        std::string block = cognition::render_knowledge_block(store, peer_id, domain_tags);
        ActionDescriptor ask;
        ask.kind = ActionKind::ask(peer_id);
        ask.name = ask.kind.name();
        ask.rendered_knowledge = block;
        ask.parameter_schema = {{"question", "the question to ask this peer", true}};
        ask.store_version = version;
        space.push_back(std::move(ask));
    }
    for (const auto& [peer_id, peer] : world.peers()) {
        (void)peer;
        ActionDescriptor del;
        del.kind = ActionKind::delegate(peer_id);
        del.name = del.kind.name();
        del.rendered_knowledge = cognition::render_knowledge_block(store, peer_id, domain_tags);
        del.parameter_schema = {{"task", "the sub-task to hand over", true}};
        del.store_version = version;
        space.push_back(std::move(del));
    }

    ActionDescriptor final_answer;
    final_answer.kind = ActionKind::final_answer();
    final_answer.name = "final_answer";
    final_answer.rendered_knowledge = "final_answer: terminates the task with the final answer";
    final_answer.parameter_schema = {{"answer", "the final answer text", true}};
    final_answer.store_version = version;
    space.push_back(std::move(final_answer));

    return space;
}

std::string render_select_prompt(const TaskSpec& task, const memory::WorkingMemory& wm,
                                 const std::vector<ActionDescriptor>& space) {
    std::ostringstream out;
    out << "# task\n" << task.instruction << "\n\n";

    out << "# history\n";
    if (wm.entries.empty()) {
        out << "no prior steps\n";
    } else {
        for (const auto& entry : wm.entries)
            out << "[" << entry.label << "] " << entry.text << "\n";
    }
    out << "\n# actions\n";
    for (const auto& d : space) {
        out << "- " << d.name << "\n";
        std::istringstream knowledge(d.rendered_knowledge);
        std::string line;
        while (std::getline(knowledge, line)) out << "  " << line << "\n";
        out << "  params:";
        if (d.parameter_schema.empty()) {
            out << " (none)";
        } else {
            bool first = true;
            for (const auto& p : d.parameter_schema) {
                out << (first ? " " : "; ") << p.name << " (" << p.description
                    << (p.required ? ", required" : "") << ")";
                first = false;
            }
        }
        out << "\n";
    }
    out << "\n# respond exactly in this format\n";
    out << "ACTION: <name>; PARAMS: <name=value; ...>; INTENTION: <one line>\n";
    return out.str();
}

Selection parse_selection(const std::string& raw_output,
                          const std::vector<ActionDescriptor>& space) {
    auto action_pos = raw_output.find("ACTION:");
    if (action_pos == std::string::npos) throw ParseError("missing ACTION field");
    auto params_pos = raw_output.find("PARAMS:", action_pos);
    if (params_pos == std::string::npos) throw ParseError("missing PARAMS field");
    auto intention_pos = raw_output.find("INTENTION:", params_pos);
    if (intention_pos == std::string::npos) throw ParseError("missing INTENTION field");

    std::string name = trim(raw_output.substr(action_pos + 7, params_pos - action_pos - 7));
    while (!name.empty() && (name.back() == ';')) name = trim(name.substr(0, name.size() - 1));
    if (name.empty()) throw ParseError("empty action name");
    if (name.find_first_of(" \t\n") != std::string::npos)
        throw ParseError("action name must be a single token");

    std::string params_text =
        trim(raw_output.substr(params_pos + 7, intention_pos - params_pos - 7));
    while (!params_text.empty() && params_text.back() == ';')
        params_text = trim(params_text.substr(0, params_text.size() - 1));

    Params parameters;
    if (!params_text.empty() && params_text != "none" && params_text != "(none)") {
        std::istringstream in(params_text);
        std::string piece;
        while (std::getline(in, piece, ';')) {
            piece = trim(piece);
            if (piece.empty()) continue;
            auto eq = piece.find('=');
            if (eq == std::string::npos)
                throw ParseError("parameter '" + piece + "' is not name=value");
            std::string key = trim(piece.substr(0, eq));
            std::string value = trim(piece.substr(eq + 1));
            if (key.empty()) throw ParseError("empty parameter name");
            if (find_param(parameters, key)) throw ParseError("duplicate parameter '" + key + "'");
            parameters.emplace_back(std::move(key), std::move(value));
        }
    }

    std::string rest = raw_output.substr(intention_pos + 10);
    auto newline = rest.find('\n');
    std::string intention = trim(newline == std::string::npos ? rest : rest.substr(0, newline));
    if (intention.empty()) throw ParseError("empty intention");

    const ActionDescriptor* chosen = nullptr;
    std::size_t chosen_index = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (space[i].name == name) {
            chosen = &space[i];
            chosen_index = i;
            break;
        }
    }
    if (!chosen) throw UnknownActionName(name);

    for (const auto& p : chosen->parameter_schema)
        if (p.required && !find_param(parameters, p.name))
            throw MissingRequiredParam(name, p.name);

    Selection selection;
    selection.chosen_index = chosen_index;
    selection.kind = chosen->kind;
    selection.parameters = std::move(parameters);
    selection.intention = std::move(intention);
    return selection;
}

namespace {

std::string fill_placeholders(const std::string& text, const Params& params) {
    std::string out = text;
    for (const auto& [name, value] : params) {
        std::string marker = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    return out;
}

Outcome run_generation(const std::string& prompt, AgentComponents& components,
                       const RunConfig& config) {
    backend::CompletionRequest request;
    request.call_site = backend::CallSite::Generate;
    request.messages = {{"system", "Continue the task."}, {"user", prompt}};
    request.max_tokens = config.max_generation_tokens;
    request.temperature = config.temperature;
    try {
        return Outcome::success(components.backend->complete(request).text);
    } catch (const Error& e) {
        return Outcome::tool_error("generation failed", e.what());
    }
}

Outcome execute_bound_steps(const std::vector<cognition::BoundStep>& steps,
                            const Params& invocation_params, AgentComponents& components,
                            const RunConfig& config) {
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const cognition::BoundStep& step = steps[i];
        Params params;
        for (const auto& [name, binding] : step.bindings) {
            if (binding.kind == cognition::Binding::Kind::StepOutput) {
                if (binding.step >= outputs.size())
                    return Outcome::tool_error(
                        "sub-step " + std::to_string(i) + " failed",
                        "output[" + std::to_string(binding.step) + "] is not available");
                params.emplace_back(name, outputs[binding.step]);
            } else {
                params.emplace_back(name, fill_placeholders(binding.literal, invocation_params));
            }
        }

        Outcome outcome;
        switch (step.kind.variant) {
        case ActionVariant::EmicToolCall:
            try {
                outcome = components.world->invoke_tool(step.kind.target, params);
            } catch (const Error& e) {
                outcome = Outcome::tool_error("tool call failed", e.what());
            }
            break;
        case ActionVariant::EmicGenerate: {
            const std::string* prompt = find_param(params, "prompt");
            outcome = run_generation(prompt ? *prompt : "continue", components, config);
            break;
        }
        case ActionVariant::EticAsk:
        case ActionVariant::EticDelegate: {
            const std::string* payload = find_param(params, "question");
            if (!payload) payload = find_param(params, "task");
            try {
                outcome = components.world->route_etic(
                    step.kind.variant == ActionVariant::EticDelegate, step.kind.target,
                    payload ? *payload : "", components.delegation_depth);
            } catch (const Error& e) {
                outcome = Outcome::tool_error("etic routing failed", e.what());
            }
            break;
        }
        default:
            return Outcome::tool_error("sub-step " + std::to_string(i) + " failed",
                                       "unsupported sub-action " + to_string(step.kind.variant));
        }

        if (is_error_status(outcome.status)) {
            std::string detail = outcome.error_detail ? *outcome.error_detail : outcome.payload;
            return Outcome::tool_error("sub-step " + std::to_string(i) + " (" + step.kind.name()
                                           + ") failed",
                                       detail);
        }
        outputs.push_back(outcome.payload);
    }
    return Outcome::success(outputs.empty() ? "" : outputs.back());
}

} // namespace

Outcome execute(const Selection& selection, AgentComponents& components, const RunConfig& config) {
    switch (selection.kind.variant) {
    case ActionVariant::FinalAnswer: {
        const std::string* answer = find_param(selection.parameters, "answer");
        return Outcome::success(answer ? *answer : "");
    }
    case ActionVariant::EmicGenerate: {
        const std::string* prompt = find_param(selection.parameters, "prompt");
        return run_generation(prompt ? *prompt : "continue the task", components, config);
    }
    case ActionVariant::EmicToolCall:
        try {
            return components.world->invoke_tool(selection.kind.target, selection.parameters);
        } catch (const Error& e) {
            return Outcome::tool_error("tool call failed", e.what());
        }
    case ActionVariant::EmicSkillInvoke: {
        const cognition::SkillTemplate* skill = components.store->find_skill(selection.kind.target);
        if (!skill) return Outcome::tool_error("skill invoke failed",
                                               "unknown skill " + selection.kind.target);
        if (skill->body.kind == cognition::SkillBody::Kind::PromptTemplate) {
            std::string prompt = fill_placeholders(skill->body.prompt_template, selection.parameters);
            return run_generation(prompt, components, config);
        }
        return execute_bound_steps(skill->body.steps, selection.parameters, components, config);
    }
    case ActionVariant::EmicCompositeInvoke: {
        const cognition::CompositeAction* composite =
            components.store->find_composite(selection.kind.target);
        if (!composite) return Outcome::tool_error("composite invoke failed",
                                                   "unknown composite " + selection.kind.target);
        return execute_bound_steps(composite->steps, selection.parameters, components, config);
    }
    case ActionVariant::EticAsk:
    case ActionVariant::EticDelegate: {
        const std::string* payload = find_param(selection.parameters, "question");
        if (!payload) payload = find_param(selection.parameters, "task");
        try {
            return components.world->route_etic(
                selection.kind.variant == ActionVariant::EticDelegate, selection.kind.target,
                payload ? *payload : "", components.delegation_depth);
        } catch (const Error& e) {
            return Outcome::tool_error("etic routing failed", e.what());
        }
    }
    }
    return Outcome::tool_error("execution failed", "unhandled action variant");
}

namespace {

std::string render_decision(const memory::SelectorDecision& decision) {
    if (decision.per_step.empty() && !decision.fold_directive) return "(none)";
    std::ostringstream out;
    bool first = true;
    for (const auto& [index, rep] : decision.per_step) {
        out << (first ? "" : ",") << index << ":" << memory::to_string(rep);
        first = false;
    }
    if (decision.fold_directive)
        out << (first ? "" : ",") << "fold:" << decision.fold_directive->first << "-"
            << decision.fold_directive->second;
    return out.str();
}

void auto_fold_if_needed(memory::MemoryPool& pool, AgentComponents& components,
                         backend::CompletionBackend* fold_backend) {
    std::vector<std::size_t> unfolded = pool.unfolded_steps();
    if (unfolded.size() <= static_cast<std::size_t>(components.fold_threshold)) return;

    // Oldest contiguous run of un-folded steps, clipped to half the count.
    std::size_t run_len = 1;
    while (run_len < unfolded.size() && unfolded[run_len] == unfolded[run_len - 1] + 1) ++run_len;
    std::size_t target = std::max<std::size_t>(2, unfolded.size() / 2);
    std::size_t fold_len = std::min(run_len, target);
    if (fold_len < 2) return;
    try {
        memory::mem_fold(pool, unfolded[0], unfolded[0] + fold_len - 1, fold_backend);
    } catch (const Error&) {
        // an unfoldable range is not a step failure
    }
}

} // namespace

Trajectory run_seu_loop(const TaskSpec& task, const RunConfig& config,
                        AgentComponents& components) {
    Trajectory trajectory;
    trajectory.task = task;
    trajectory.config_snapshot = config;

    MeteredBackend metered(components.backend, components.usage);
    backend::CompletionBackend* llm = &metered;
    memory::MemoryPool& pool = *components.pool;

    std::uint64_t tick = 0;
    bool finished = false;

    for (int step = 0; step < config.max_steps; ++step) {
        std::uint64_t start_tick = tick++;

        // SELECT: assemble memory, offer the space, ask, parse (one repair).
        memory::SelectorDecision decision;
        memory::WorkingMemory wm;
        if (pool.step_count() > 0) {
            if (components.emo_enabled) {
                decision = memory::select_representations(pool, task.instruction, llm);
                wm = memory::assemble_working_memory(pool, decision, config.memory_budget);
                if (wm.degraded) ++trajectory.budget_overflow_count;
            } else {
                wm = memory::assemble_raw_concatenation(pool);
            }
        }

        std::vector<ActionDescriptor> space =
            build_action_space(*components.store, *components.world, task.domain_tags);
        std::string prompt = render_select_prompt(task, wm, space);

        backend::CompletionRequest select_request;
        select_request.call_site = backend::CallSite::Select;
        select_request.messages = {{"system", "You choose the agent's next action."},
                                   {"user", prompt}};
        select_request.max_tokens = config.max_generation_tokens;
        select_request.temperature = config.temperature;

        std::optional<Selection> selection;
        Outcome failure_outcome;
        std::string raw_text;
        try {
            raw_text = llm->complete(select_request).text;
            try {
                selection = parse_selection(raw_text, space);
            } catch (const ParseError& first_error) {
                backend::CompletionRequest repair = select_request;
                repair.messages.push_back({"assistant", raw_text});
                repair.messages.push_back(
                    {"user", std::string("Your selection could not be parsed: ") + first_error.what()
                                 + " Respond exactly in the format: ACTION: <name>; "
                                   "PARAMS: <name=value; ...>; INTENTION: <one line>"});
                raw_text = llm->complete(repair).text;
                try {
                    selection = parse_selection(raw_text, space);
                } catch (const ParseError& second_error) {
                    failure_outcome = Outcome::parse_error(
                        raw_text.empty() ? "(no output)" : raw_text, second_error.what());
                }
            }
        } catch (const Error& backend_error) {
            failure_outcome = Outcome::parse_error("(no output)",
                                                   std::string("selection backend unavailable: ")
                                                       + backend_error.what());
        }

        // EXECUTE
        ActionKind kind = selection ? selection->kind : ActionKind::generate();
        Params parameters = selection ? selection->parameters : Params{};
        std::string intention = selection ? selection->intention : "(unparsable selection)";
        if (components.trace)
            *components.trace << "SELECT step=" << step << " memory=" << render_decision(decision)
                              << " action=" << kind.name() << "\n";
        Outcome outcome = selection ? execute(*selection, components, config) : failure_outcome;
        std::uint64_t end_tick = tick++;
        if (components.trace)
            *components.trace << "EXECUTE step=" << step << " status="
                              << to_string(outcome.status) << " ticks=" << start_tick << "-"
                              << end_tick << "\n";

        // UPDATE: trajectory append, memory ingest, folds.
        ActionRecord record;
        record.step_index = static_cast<std::size_t>(step);
        record.intention = intention;
        record.kind = kind;
        record.parameters = parameters;
        record.outcome = outcome;
        record.start_tick = start_tick;
        record.end_tick = end_tick;
        append_record(trajectory, record);

        memory::ingest_step(pool,
                            memory::make_step_record(record.step_index, intention, kind,
                                                     parameters, outcome),
                            components.emo_enabled ? llm : nullptr);

        if (components.emo_enabled && decision.fold_directive) {
            try {
                memory::mem_fold(pool, decision.fold_directive->first,
                                 decision.fold_directive->second, llm);
            } catch (const Error&) {
                // invalid directives are absorbed, not faults
            }
        }
        if (components.emo_enabled)
            auto_fold_if_needed(pool, components, llm);

        if (components.trace)
            *components.trace << "UPDATE step=" << step << " pool=" << pool.step_count()
                              << " episodes=" << pool.episodes.size() << "\n";

        if (kind.variant == ActionVariant::FinalAnswer && outcome.status == OutcomeStatus::Success) {
            trajectory.final_answer = outcome.payload;
            if (task.embodied()) {
                const world::MiniEnv* env = components.world->mini_env();
                trajectory.final_status = env && env->goal_satisfied() ? FinalStatus::Solved
                                                                       : FinalStatus::Failed;
            } else {
                trajectory.final_status = FinalStatus::Solved;
            }
            finished = true;
            break;
        }
    }

    if (!finished) trajectory.final_status = FinalStatus::CapHit;
    return trajectory;
}

cognition::CognitionStore seed_store_from_world(const world::World& world) {
    cognition::CognitionStore store;
    for (const auto& [name, tool] : world.tools()) {
        cognition::ToolProfile profile;
        profile.name = name;
        profile.description = tool.description;
        store.seed_tool(std::move(profile));
    }
    for (const auto& [peer_id, peer] : world.peers()) {
        cognition::PeerProfile profile;
        profile.peer_id = peer_id;
        for (const auto& tag : peer.expertise_tags)
            profile.expertise[tag] = "declared expertise: " + tag;
        store.seed_peer(std::move(profile));
    }
    return store;
}

void install_delegate_runner(world::World& world, int delegation_cap) {
    world.set_delegate_runner([delegation_cap](world::World& host, const world::PeerSpec& peer,
                                               const std::string& payload,
                                               int current_depth) -> Outcome {
        if (current_depth + 1 > delegation_cap) throw DepthExceeded(delegation_cap);

        TaskSpec sub_task;
        sub_task.task_id = "delegated:" + peer.peer_id;
        sub_task.instruction = payload;
        for (const auto& tag : peer.expertise_tags) sub_task.domain_tags.insert(tag);

        cognition::CognitionStore store = seed_store_from_world(host);
        backend::ScriptedBackend nested_backend(peer.nested_scenario);
        memory::MemoryPool pool;

        AgentComponents nested;
        nested.store = &store;
        nested.world = &host;
        nested.backend = &nested_backend;
        nested.pool = &pool;
        nested.delegation_depth = current_depth + 1;
        nested.delegation_cap = delegation_cap;

        RunConfig config;
        config.max_steps = peer.nested_max_steps;

        Trajectory trajectory = run_seu_loop(sub_task, config, nested);
        if (trajectory.final_status == FinalStatus::Solved && trajectory.final_answer)
            return Outcome::peer_response(*trajectory.final_answer);
        return Outcome::cap_exceeded();
    });
}

} // namespace evoagent::decision
