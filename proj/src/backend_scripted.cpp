// SPDX-License-Identifier: Apache-2.0
#include "evoagent/backend.hpp"

#include "evoagent/errors.hpp"

namespace evoagent::backend {

std::string to_string(CallSite s) {
    switch (s) {
    case CallSite::Select: return "select";
    case CallSite::Compress: return "compress";
    case CallSite::Selector: return "selector";
    case CallSite::Fold: return "fold";
    case CallSite::Align: return "align";
    case CallSite::Distill: return "distill";
    case CallSite::Generate: return "generate";
    }
    return "generate";
}

CallSite call_site_from_string(const std::string& s) {
    if (s == "select") return CallSite::Select;
    if (s == "compress") return CallSite::Compress;
    if (s == "selector") return CallSite::Selector;
    if (s == "fold") return CallSite::Fold;
    if (s == "align") return CallSite::Align;
    if (s == "distill") return CallSite::Distill;
    if (s == "generate") return CallSite::Generate;
    throw Error("unknown call site: " + s);
}

namespace {

TokenCount request_tokens(const CompletionRequest& request) {
    TokenCount total;
    for (const auto& m : request.messages) total += token_count(m.text);
    return total;
}

} // namespace

ScriptedBackend::ScriptedBackend(ScriptedScenario scenario) : scenario_(std::move(scenario)) {}

Completion ScriptedBackend::complete(const CompletionRequest& request) {
    std::size_t occurrence;
    {
        std::lock_guard lock(mutex_);
        occurrence = counters_[request.call_site]++;
    }
    const std::string* response = nullptr;
    auto it = scenario_.entries.find({request.call_site, occurrence});
    if (it != scenario_.entries.end()) {
        response = &it->second;
    } else if (auto sd = scenario_.site_defaults.find(request.call_site);
               sd != scenario_.site_defaults.end()) {
        response = &sd->second;
    } else if (scenario_.default_response) {
        response = &*scenario_.default_response;
    }
    if (!response)
        throw ScenarioExhausted(to_string(request.call_site), occurrence);
    return {*response, request_tokens(request), token_count(*response)};
}

std::size_t ScriptedBackend::occurrences(CallSite site) const {
    std::lock_guard lock(mutex_);
    auto it = counters_.find(site);
    return it == counters_.end() ? 0 : it->second;
}

} // namespace evoagent::backend
