// SPDX-License-Identifier: Apache-2.0
#include "evoagent/minienv.hpp"

#include <sstream>

namespace evoagent::world {

namespace {

std::string param_or_empty(const Params& params, const std::string& name) {
    const std::string* v = find_param(params, name);
    return v ? *v : std::string{};
}

std::string with_goal_note(const MiniEnv& env, std::string text) {
    if (env.goal_satisfied()) text += " goal satisfied.";
    return text;
}

std::string describe(const MiniEnv& env) {
    std::ostringstream out;
    out << "you are in the " << env.agent_location << ".";
    std::set<std::string> here;
    for (const auto& [obj, room] : env.object_rooms)
        if (room == env.agent_location) here.insert(obj);
    out << " you see:";
    if (here.empty()) {
        out << " nothing";
    } else {
        for (const auto& obj : here) out << ' ' << obj;
    }
    out << ". exits:";
    auto conn = env.connections.find(env.agent_location);
    if (conn == env.connections.end() || conn->second.empty()) {
        out << " none";
    } else {
        for (const auto& room : conn->second) out << ' ' << room;
    }
    out << ".";
    if (!env.held.empty()) {
        out << " holding:";
        for (const auto& obj : env.held) out << ' ' << obj;
        out << ".";
    }
    return out.str();
}

} // namespace

std::string mini_env_step(MiniEnv& env, Affordance affordance, const Params& params) {
    switch (affordance) {
    case Affordance::Go: {
        std::string room = param_or_empty(params, "room");
        if (!env.rooms.count(room))
            return "invalid move: there is no room called '" + room + "'.";
        auto conn = env.connections.find(env.agent_location);
        if (conn == env.connections.end() || !conn->second.count(room))
            return "invalid move: " + room + " is not reachable from " + env.agent_location + ".";
        env.agent_location = room;
        return with_goal_note(env, "you move to the " + room + ".");
    }
    case Affordance::Look:
        return with_goal_note(env, describe(env));
    case Affordance::Take: {
        std::string object = param_or_empty(params, "object");
        auto it = env.object_rooms.find(object);
        if (it == env.object_rooms.end() || it->second != env.agent_location)
            return "invalid move: there is no " + object + " here.";
        env.object_rooms.erase(it);
        env.held.insert(object);
        return with_goal_note(env, "you take the " + object + ".");
    }
    case Affordance::Put: {
        std::string object = param_or_empty(params, "object");
        std::string room = param_or_empty(params, "room");
        if (!env.held.count(object))
            return "invalid move: you are not holding " + object + ".";
        if (!env.rooms.count(room))
            return "invalid move: there is no room called '" + room + "'.";
        if (room != env.agent_location)
            return "invalid move: you must be in " + room + " to put things there.";
        env.held.erase(object);
        env.object_rooms[object] = room;
        return with_goal_note(env, "you put the " + object + " in the " + room + ".");
    }
    }
    return "invalid move.";
}

} // namespace evoagent::world
