// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>

#include "evoagent/types.hpp"

namespace evoagent::world {

/// Desk-scale text gridworld. Rooms form an undirected adjacency graph;
/// every object sits in exactly one room or is held by the agent.
struct MiniEnv {
    std::set<std::string> rooms;
    std::map<std::string, std::set<std::string>> connections;
    std::map<std::string, std::string> object_rooms; // object -> room
    std::set<std::string> held;
    std::string agent_location;
    struct Goal {
        std::string object;
        std::string room;
    } goal;

    bool goal_satisfied() const {
        auto it = object_rooms.find(goal.object);
        return it != object_rooms.end() && it->second == goal.room;
    }
};

enum class Affordance { Go, Look, Take, Put };

/// Deterministic transition. Invalid moves (unknown room, object not
/// present, not connected) are reported in the observation text and leave
/// the state unchanged; they are never faults.
std::string mini_env_step(MiniEnv& env, Affordance affordance, const Params& params);

} // namespace evoagent::world
