// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evoagent {

/// Base class for all runtime errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- trajectory / log errors ---

class IndexGap : public Error {
public:
    IndexGap(std::size_t expected, std::size_t got)
        : Error("step index gap: expected " + std::to_string(expected) + ", got "
                + std::to_string(got)),
          expected(expected), got(got) {}
    std::size_t expected;
    std::size_t got;
};

class FormatVersionMismatch : public Error {
public:
    FormatVersionMismatch(int expected, int got)
        : Error("log format version mismatch: expected " + std::to_string(expected)
                + ", got " + std::to_string(got)),
          expected(expected), got(got) {}
    int expected;
    int got;
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line_number, const std::string& detail)
        : Error("malformed line " + std::to_string(line_number) + ": " + detail),
          line_number(line_number), detail(detail) {}
    std::size_t line_number;
    std::string detail;
};

// --- cognition errors ---

class UnknownAction : public Error {
public:
    explicit UnknownAction(const std::string& name)
        : Error("unknown action: " + name), name(name) {}
    std::string name;
};

class NotValidated : public Error {
public:
    explicit NotValidated(const std::string& reason)
        : Error("revision not validated: " + reason), reason(reason) {}
    std::string reason;
};

// --- memory errors ---

class RangeTooShort : public Error {
public:
    RangeTooShort() : Error("fold range must cover at least 2 steps") {}
};

class RangeOverlap : public Error {
public:
    RangeOverlap() : Error("fold range overlaps an existing episode or pool bounds") {}
};

class BudgetTooSmall : public Error {
public:
    BudgetTooSmall(std::uint64_t needed, std::uint64_t budget)
        : Error("memory budget too small: newest entry needs "
                + std::to_string(needed) + " tokens, budget is "
                + std::to_string(budget)),
          needed(needed), budget(budget) {}
    std::uint64_t needed;
    std::uint64_t budget;
};

// --- selection parsing errors ---

class ParseError : public Error {
public:
    explicit ParseError(const std::string& detail)
        : Error("selection parse error: " + detail) {}
};

class UnknownActionName : public ParseError {
public:
    explicit UnknownActionName(const std::string& name)
        : ParseError("unknown action name '" + name + "'"), name(name) {}
    std::string name;
};

class MissingRequiredParam : public ParseError {
public:
    MissingRequiredParam(const std::string& action, const std::string& param)
        : ParseError("action '" + action + "' missing required parameter '" + param + "'"),
          action(action), param(param) {}
    std::string action;
    std::string param;
};

// --- backend errors ---

class ScenarioExhausted : public Error {
public:
    ScenarioExhausted(const std::string& call_site, std::size_t occurrence)
        : Error("scripted scenario exhausted at call site '" + call_site
                + "', occurrence " + std::to_string(occurrence)),
          call_site(call_site), occurrence(occurrence) {}
    std::string call_site;
    std::size_t occurrence;
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& detail)
        : Error("transport error: " + detail) {}
};

class ProviderError : public Error {
public:
    ProviderError(int status, const std::string& body)
        : Error("provider error " + std::to_string(status) + ": " + body),
          status(status), body(body) {}
    int status;
    std::string body;
};

// --- world errors ---

class UnknownTool : public Error {
public:
    explicit UnknownTool(const std::string& name)
        : Error("unknown tool: " + name), name(name) {}
    std::string name;
};

class SchemaViolation : public Error {
public:
    SchemaViolation(const std::string& tool, const std::string& detail)
        : Error("schema violation for tool '" + tool + "': " + detail),
          tool(tool), detail(detail) {}
    std::string tool;
    std::string detail;
};

class UnknownPeer : public Error {
public:
    explicit UnknownPeer(const std::string& peer_id)
        : Error("unknown peer: " + peer_id), peer_id(peer_id) {}
    std::string peer_id;
};

class DepthExceeded : public Error {
public:
    explicit DepthExceeded(int cap)
        : Error("delegation depth cap (" + std::to_string(cap) + ") exceeded"), cap(cap) {}
    int cap;
};

// --- evolution errors ---

class EpisodeNotSuccessful : public Error {
public:
    explicit EpisodeNotSuccessful(const std::string& episode_id)
        : Error("episode " + episode_id + " contains non-successful steps"),
          episode_id(episode_id) {}
    std::string episode_id;
};

// --- harness errors ---

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& key_path, const std::string& detail = "")
        : Error("config error at '" + key_path + "'"
                + (detail.empty() ? "" : ": " + detail)),
          key_path(key_path) {}
    std::string key_path;
};

class MissingReferencePath : public Error {
public:
    explicit MissingReferencePath(const std::string& task_id)
        : Error("task " + task_id + " has no reference path"), task_id(task_id) {}
    std::string task_id;
};

} // namespace evoagent
