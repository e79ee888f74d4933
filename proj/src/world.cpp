// SPDX-License-Identifier: Apache-2.0
#include "evoagent/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "evoagent/errors.hpp"

namespace evoagent::world {

double FailureInjector::next_uniform() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state_ >> 11) * (1.0 / 9007199254740992.0);
}

bool FailureInjector::draw(double probability) {
    bool failed = next_uniform() < probability;
    draw_log_.push_back(failed);
    return failed;
}

std::uint64_t FailureInjector::derive_task_seed(std::uint64_t base_seed, std::uint64_t task_index) {
    // splitmix64 finalizer over base_seed + task_index
    std::uint64_t x = base_seed + task_index + 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void World::register_tool(ToolSpec tool) {
    if (tools_.count(tool.name)) throw Error("tool already registered: " + tool.name);
    std::string name = tool.name;
    tools_.emplace(std::move(name), std::move(tool));
}

void World::set_failure_probability(const std::string& tool, double probability) {
    failure_probability_[tool] = probability;
}

void World::init_injector(std::uint64_t seed) {
    injector_.emplace(seed);
}

Outcome World::invoke_tool(const std::string& name, const Params& parameters) {
    auto it = tools_.find(name);
    if (it == tools_.end()) throw UnknownTool(name);
    const ToolSpec& tool = it->second;

    for (const auto& schema_param : tool.parameter_schema) {
        if (schema_param.required && !find_param(parameters, schema_param.name))
            throw SchemaViolation(name, "missing required parameter '" + schema_param.name + "'");
    }
    for (const auto& [pname, value] : parameters) {
        (void)value;
        bool known = std::any_of(tool.parameter_schema.begin(), tool.parameter_schema.end(),
                                 [&](const ToolParam& p) { return p.name == pname; });
        if (!known) throw SchemaViolation(name, "unknown parameter '" + pname + "'");
    }

    if (injector_) {
        double p = 0.0;
        if (auto fp = failure_probability_.find(name); fp != failure_probability_.end())
            p = fp->second;
        if (injector_->draw(p))
            return Outcome::tool_error("tool call failed", "injected failure");
    }

    if (tool.duration_ticks > tool.timeout_ticks)
        return Outcome::timeout("tool call timed out",
                                "exceeded " + std::to_string(tool.timeout_ticks) + " ticks");

    try {
        return tool.handler(parameters, *this);
    } catch (const std::exception& e) {
        return Outcome::tool_error("tool call failed", e.what());
    }
}

void World::register_peer(PeerSpec peer) {
    if (peers_.count(peer.peer_id)) throw Error("peer already registered: " + peer.peer_id);
    std::string id = peer.peer_id;
    peers_.emplace(std::move(id), std::move(peer));
}

Outcome World::route_etic(bool is_delegate, const std::string& peer_id, const std::string& payload,
                          int current_depth) {
    auto it = peers_.find(peer_id);
    if (it == peers_.end()) throw UnknownPeer(peer_id);
    const PeerSpec& peer = it->second;

    if (peer.nested) {
        if (!delegate_runner_) throw Error("no delegate runner installed for nested peer " + peer_id);
        return delegate_runner_(*this, peer, payload, current_depth);
    }
    (void)is_delegate; // scripted peers answer asks and delegations the same way
    auto answer = peer.table.find(normalize_query(payload));
    if (answer == peer.table.end())
        return Outcome::peer_response(peer.default_answer);
    return Outcome::peer_response(answer->second);
}

void World::set_mini_env(MiniEnv env) {
    env_ = std::move(env);
}

std::string World::normalize_query(const std::string& text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    std::string out = text.substr(begin, end - begin);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// --- builtin tools ---

namespace {

// Recursive-descent evaluator over + - * / ( ) with unary minus.
class ExprParser {
public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    double parse() {
        double v = expression();
        skip_space();
        if (pos_ != text_.size()) throw Error("unexpected character at position " + std::to_string(pos_));
        return v;
    }

private:
    double expression() {
        double v = term();
        while (true) {
            skip_space();
            if (consume('+')) v += term();
            else if (consume('-')) v -= term();
            else return v;
        }
    }

    double term() {
        double v = factor();
        while (true) {
            skip_space();
            if (consume('*')) v *= factor();
            else if (consume('/')) {
                double d = factor();
                if (d == 0.0) throw Error("division by zero");
                v /= d;
            } else return v;
        }
    }

    double factor() {
        skip_space();
        if (consume('-')) return -factor();
        if (consume('(')) {
            double v = expression();
            skip_space();
            if (!consume(')')) throw Error("missing closing parenthesis");
            return v;
        }
        return number();
    }

    double number() {
        skip_space();
        std::size_t start = pos_;
        while (pos_ < text_.size()
               && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (start == pos_) throw Error("expected a number at position " + std::to_string(start));
        return std::stod(text_.substr(start, pos_ - start));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

std::string render_number(double v) {
    if (std::abs(v - std::round(v)) < 1e-9 && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(v)));
        return buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string required_param(const Params& params, const std::string& name) {
    const std::string* v = find_param(params, name);
    if (!v) throw Error("missing parameter " + name);
    return *v;
}

} // namespace

Outcome calculator_handler(const Params& params, World&) {
    std::string expr = required_param(params, "expr");
    try {
        return Outcome::success(render_number(ExprParser(expr).parse()));
    } catch (const std::exception& e) {
        return Outcome::tool_error("could not evaluate '" + expr + "'", e.what());
    }
}

ToolSpec make_calculator_tool() {
    ToolSpec t;
    t.name = "calculator";
    t.description = "evaluates arithmetic expressions with + - * / and parentheses";
    t.parameter_schema = {{"expr", "the expression to evaluate", true}};
    t.handler = calculator_handler;
    return t;
}

ToolSpec make_lookup_tool(std::string name, std::string description,
                          std::map<std::string, std::string> table, std::string miss_message) {
    ToolSpec t;
    t.name = std::move(name);
    t.description = std::move(description);
    t.parameter_schema = {{"query", "the lookup query", true}};
    t.handler = [table = std::move(table), miss = std::move(miss_message)](const Params& params,
                                                                           World&) -> Outcome {
        std::string query = World::normalize_query(required_param(params, "query"));
        auto it = table.find(query);
        if (it == table.end())
            return Outcome::tool_error(miss, "no entry for '" + query + "'");
        return Outcome::success(it->second);
    };
    return t;
}

ToolSpec make_extract_tool() {
    ToolSpec t;
    t.name = "extract";
    t.description = "extracts the value following 'key:' from the given text";
    t.parameter_schema = {{"text", "the text to scan", true}, {"key", "the field key", true}};
    t.handler = [](const Params& params, World&) -> Outcome {
        std::string text = required_param(params, "text");
        std::string key = required_param(params, "key") + ":";
        auto pos = text.find(key);
        if (pos == std::string::npos)
            return Outcome::tool_error("field not found", "no '" + key + "' in text");
        std::size_t start = pos + key.size();
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string value = text.substr(start, end - start);
        std::size_t b = value.find_first_not_of(" \t");
        std::size_t e = value.find_last_not_of(" \t");
        if (b == std::string::npos) return Outcome::tool_error("field empty", "'" + key + "' has no value");
        return Outcome::success(value.substr(b, e - b + 1));
    };
    return t;
}

ToolSpec make_echo_tool() {
    ToolSpec t;
    t.name = "echo";
    t.description = "returns its input text unchanged";
    t.parameter_schema = {{"text", "the text to return", true}};
    t.handler = [](const Params& params, World&) -> Outcome {
        return Outcome::success(required_param(params, "text"));
    };
    return t;
}

std::vector<ToolSpec> make_affordance_tools() {
    std::vector<ToolSpec> tools;

    auto env_or_error = [](World& w) -> MiniEnv* { return w.mini_env(); };

    ToolSpec go;
    go.name = "go";
    go.description = "moves to a connected room";
    go.parameter_schema = {{"room", "the room to move to", true}};
    go.handler = [env_or_error](const Params& params, World& w) -> Outcome {
        MiniEnv* env = env_or_error(w);
        if (!env) return Outcome::tool_error("no environment", "mini env not configured");
        return Outcome::success(mini_env_step(*env, Affordance::Go, params));
    };
    tools.push_back(go);

    ToolSpec look;
    look.name = "look";
    look.description = "describes the current room, visible objects, and exits";
    look.parameter_schema = {};
    look.handler = [env_or_error](const Params& params, World& w) -> Outcome {
        MiniEnv* env = env_or_error(w);
        if (!env) return Outcome::tool_error("no environment", "mini env not configured");
        return Outcome::success(mini_env_step(*env, Affordance::Look, params));
    };
    tools.push_back(look);

    ToolSpec take;
    take.name = "take";
    take.description = "picks up an object in the current room";
    take.parameter_schema = {{"object", "the object to take", true}};
    take.handler = [env_or_error](const Params& params, World& w) -> Outcome {
        MiniEnv* env = env_or_error(w);
        if (!env) return Outcome::tool_error("no environment", "mini env not configured");
        return Outcome::success(mini_env_step(*env, Affordance::Take, params));
    };
    tools.push_back(take);

    ToolSpec put;
    put.name = "put";
    put.description = "puts a held object down in the current room";
    put.parameter_schema = {{"object", "the object to put down", true},
                            {"room", "the room to put it in", true}};
    put.handler = [env_or_error](const Params& params, World& w) -> Outcome {
        MiniEnv* env = env_or_error(w);
        if (!env) return Outcome::tool_error("no environment", "mini env not configured");
        return Outcome::success(mini_env_step(*env, Affordance::Put, params));
    };
    tools.push_back(put);

    return tools;
}

} // namespace evoagent::world
