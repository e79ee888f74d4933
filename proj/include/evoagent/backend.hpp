// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "evoagent/token.hpp"

namespace evoagent::backend {

/// Closed set of places the runtime issues completions from. Scripted
/// scenarios address responses by (call_site, occurrence), so every LLM
/// touchpoint has a stable name.
enum class CallSite { Select, Compress, Selector, Fold, Align, Distill, Generate };

std::string to_string(CallSite s);
CallSite call_site_from_string(const std::string& s);

struct Message {
    std::string role; // "system" | "user" | "assistant"
    std::string text;
};

struct CompletionRequest {
    CallSite call_site = CallSite::Generate;
    std::vector<Message> messages;
    int max_tokens = 1024;
    double temperature = 0.7;
    std::vector<std::string> stop;
};

struct Completion {
    std::string text;
    evoagent::TokenCount prompt_tokens;
    evoagent::TokenCount completion_tokens;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;
};

/// Deterministic response table: (call_site, occurrence) -> text, with an
/// optional per-site default and an optional global default.
struct ScriptedScenario {
    std::map<std::pair<CallSite, std::size_t>, std::string> entries;
    std::map<CallSite, std::string> site_defaults;
    std::optional<std::string> default_response;
};

/// Pure function of (scenario, call_site, occurrence). Occurrence counters
/// start at 0 per call site and are serialized internally, so concurrent
/// callers observe a single consistent numbering.
class ScriptedBackend : public CompletionBackend {
public:
    explicit ScriptedBackend(ScriptedScenario scenario);

    Completion complete(const CompletionRequest& request) override;

    /// Occurrence counter for one call site (used by tests).
    std::size_t occurrences(CallSite site) const;

private:
    ScriptedScenario scenario_;
    mutable std::mutex mutex_;
    std::map<CallSite, std::size_t> counters_;
};

struct HttpBackendConfig {
    std::string endpoint;     // e.g. "http://localhost:8080/v1/chat/completions"
    std::string api_key;      // sent as Bearer token when non-empty; never logged
    std::string model = "default";
    int max_attempts = 3;     // 1 initial try + retries on transport failure
    int backoff_initial_ms = 200;
    int backoff_max_ms = 2000;
};

/// OpenAI-compatible chat-completions client with capped exponential
/// backoff on transport failures. Provider errors (HTTP >= 400) are not
/// retried; the final error body is surfaced.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    Completion complete(const CompletionRequest& request) override;

    /// Request body shaping, exposed for golden-file tests.
    static std::string request_body(const CompletionRequest& request, const std::string& model);

private:
    HttpBackendConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
};

} // namespace evoagent::backend
