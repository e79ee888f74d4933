// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evoagent/backend.hpp"
#include "evoagent/minienv.hpp"
#include "evoagent/types.hpp"

namespace evoagent::world {

class World;

struct ToolParam {
    std::string name;
    std::string description;
    bool required = true;
};

using ToolHandler = std::function<Outcome(const Params&, World&)>;

struct ToolSpec {
    std::string name;
    std::string description; // seeds the tool's cognition profile
    std::vector<ToolParam> parameter_schema;
    ToolHandler handler;
    int timeout_ticks = 10;
    int duration_ticks = 1; // simulated cost; > timeout_ticks yields Timeout
};

/// Seeded Bernoulli failure source. The generator is pinned so an
/// independent replay can reproduce every draw:
///   state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
///   u      = (state' >> 11) / 2^53
/// A draw at probability p fails iff u < p. Per-task streams are derived
/// with derive_task_seed (splitmix64 of base_seed + task_index).
class FailureInjector {
public:
    explicit FailureInjector(std::uint64_t seed) : state_(seed) {}

    double next_uniform();

    /// One Bernoulli draw; appended to the draw log (true = failure).
    bool draw(double probability);

    const std::vector<bool>& draw_log() const { return draw_log_; }

    static std::uint64_t derive_task_seed(std::uint64_t base_seed, std::uint64_t task_index);

private:
    std::uint64_t state_;
    std::vector<bool> draw_log_;
};

/// A peer is either a scripted response table or a nested agent driven by
/// its own scripted scenario. Nested agents are run through the delegate
/// runner installed by the decision layer.
struct PeerSpec {
    std::string peer_id;
    std::vector<std::string> expertise_tags;
    std::map<std::string, std::string> table; // normalized question -> answer
    std::string default_answer = "unknown";
    bool nested = false;
    backend::ScriptedScenario nested_scenario;
    int nested_max_steps = 5;
};

using DelegateRunner = std::function<Outcome(World& world, const PeerSpec& peer,
                                             const std::string& payload, int current_depth)>;

class World {
public:
    void register_tool(ToolSpec tool);
    void set_failure_probability(const std::string& tool, double probability);
    void init_injector(std::uint64_t seed);
    FailureInjector* injector() { return injector_ ? &*injector_ : nullptr; }

    const std::map<std::string, ToolSpec>& tools() const { return tools_; }
    bool has_tool(const std::string& name) const { return tools_.count(name) > 0; }

    /// Draws from the injector first (one draw per invocation); an injected
    /// failure returns ToolError("injected failure") without running the
    /// handler. Throws UnknownTool / SchemaViolation for caller faults.
    Outcome invoke_tool(const std::string& name, const Params& parameters);

    void register_peer(PeerSpec peer);
    const std::map<std::string, PeerSpec>& peers() const { return peers_; }

    /// Ask returns the responder's text as a PeerResponse; Delegate runs the
    /// peer's own task loop through the delegate runner. Throws UnknownPeer;
    /// the runner may throw DepthExceeded.
    Outcome route_etic(bool is_delegate, const std::string& peer_id, const std::string& payload,
                       int current_depth = 0);

    void set_delegate_runner(DelegateRunner runner) { delegate_runner_ = std::move(runner); }

    void set_mini_env(MiniEnv env);
    MiniEnv* mini_env() { return env_ ? &*env_ : nullptr; }
    const MiniEnv* mini_env() const { return env_ ? &*env_ : nullptr; }

    /// Case-folded, whitespace-trimmed key used for peer table lookups.
    static std::string normalize_query(const std::string& text);

private:
    std::map<std::string, ToolSpec> tools_;
    std::map<std::string, double> failure_probability_;
    std::optional<FailureInjector> injector_;
    std::map<std::string, PeerSpec> peers_;
    std::optional<MiniEnv> env_;
    DelegateRunner delegate_runner_;
};

// Built-in deterministic tool handlers.
Outcome calculator_handler(const Params& params, World&);
ToolSpec make_calculator_tool();
ToolSpec make_lookup_tool(std::string name, std::string description,
                          std::map<std::string, std::string> table,
                          std::string miss_message = "no results");
ToolSpec make_extract_tool();
ToolSpec make_echo_tool();

/// go/look/take/put affordance tools operating on the world's mini env.
std::vector<ToolSpec> make_affordance_tools();

} // namespace evoagent::world
