// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evoagent/backend.hpp"
#include "evoagent/cognition.hpp"
#include "evoagent/memory.hpp"
#include "evoagent/types.hpp"
#include "evoagent/world.hpp"

namespace evoagent::decision {

struct ParamSpec {
    std::string name;
    std::string description;
    bool required = true;
};

/// One offered action: kind, canonical name, the knowledge block rendered
/// from the cognition version pinned for this step, and parameter schema.
struct ActionDescriptor {
    ActionKind kind;
    std::string name;
    std::string rendered_knowledge;
    std::vector<ParamSpec> parameter_schema;
    std::uint64_t store_version = 0;
};

struct Selection {
    std::size_t chosen_index = 0; // into the offered space
    ActionKind kind;
    Params parameters;
    std::string intention;
};

/// Token usage accumulated across every completion a loop makes.
struct Usage {
    TokenCount prompt_tokens;
    TokenCount completion_tokens;
};

/// Everything one agent's loop needs. The cognition store is pinned for
/// the whole run; evolution happens strictly between runs.
struct AgentComponents {
    const cognition::CognitionStore* store = nullptr;
    world::World* world = nullptr;
    backend::CompletionBackend* backend = nullptr;
    memory::MemoryPool* pool = nullptr;
    Usage* usage = nullptr;      // optional accounting sink
    std::ostream* trace = nullptr; // optional live trace: one line per phase
    bool emo_enabled = true;     // false = raw-concatenation ablation arm
    int fold_threshold = 12;     // auto-fold when un-folded steps exceed this
    int delegation_depth = 0;
    int delegation_cap = 2;
};

/// The unified action space: generate + final_answer always, one tool call
/// per registered tool, one invoke per skill and committed composite, ask
/// and delegate per peer. Ordered by kind, then name.
std::vector<ActionDescriptor> build_action_space(const cognition::CognitionStore& store,
                                                 const world::World& world,
                                                 const std::set<std::string>& domain_tags = {});

/// Fixed section order: task, history (working-memory entries with their
/// labels), actions with knowledge blocks, output grammar. Deterministic
/// bytes for identical inputs.
std::string render_select_prompt(const TaskSpec& task, const memory::WorkingMemory& wm,
                                 const std::vector<ActionDescriptor>& space);

/// Strict grammar:
///   ACTION: <name>; PARAMS: <name=value; ...>; INTENTION: <one line>
/// Throws ParseError (or its subtypes UnknownActionName /
/// MissingRequiredParam) on any malformed input; never crashes.
Selection parse_selection(const std::string& raw_output,
                          const std::vector<ActionDescriptor>& space);

/// Dispatches one selected action. Caller faults (unknown tool, schema
/// violations, depth caps) come back as error outcomes, not exceptions.
Outcome execute(const Selection& selection, AgentComponents& components, const RunConfig& config);

/// The repeating Select-Execute-Update cycle. Terminates on an executed
/// FinalAnswer or after config.max_steps steps (final_status = CapHit).
/// Selection parse failures get exactly one repair re-prompt; a second
/// failure is recorded as a ParseError step and the loop continues.
Trajectory run_seu_loop(const TaskSpec& task, const RunConfig& config,
                        AgentComponents& components);

/// Seeds a fresh cognition store from the world's tool and peer registries.
cognition::CognitionStore seed_store_from_world(const world::World& world);

/// Wires nested-agent delegation: Delegate runs the peer's own scripted
/// loop (fresh pool and store, shared world) and returns its final answer
/// as a PeerResponse; a nested cap-out returns CapExceeded. Throws
/// DepthExceeded past the cap.
void install_delegate_runner(world::World& world, int delegation_cap);

} // namespace evoagent::decision
