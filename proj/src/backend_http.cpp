// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "evoagent/backend.hpp"
#include "evoagent/errors.hpp"

namespace evoagent::backend {

namespace {

using Json = nlohmann::ordered_json;

// Splits "http://host:port/path". Https is rejected: the offline artifact
// ships without TLS support and real deployments sit behind a local proxy.
void split_endpoint(const std::string& endpoint, std::string& host, int& port, std::string& path) {
    std::string rest = endpoint;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) != 0)
        throw Error("http backend endpoint must start with http://: " + endpoint);
    rest = rest.substr(scheme.size());
    auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    path = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
    auto colon = hostport.find(':');
    if (colon == std::string::npos) {
        host = hostport;
        port = 80;
    } else {
        host = hostport.substr(0, colon);
        try {
            port = std::stoi(hostport.substr(colon + 1));
        } catch (const std::exception&) {
            throw Error("http backend endpoint has a bad port: " + endpoint);
        }
    }
    if (host.empty()) throw Error("http backend endpoint has no host: " + endpoint);
}

} // namespace

std::string HttpBackend::request_body(const CompletionRequest& request, const std::string& model) {
    Json body;
    body["model"] = model;
    Json messages = Json::array();
    for (const auto& m : request.messages) {
        Json msg;
        msg["role"] = m.role;
        msg["content"] = m.text;
        messages.push_back(std::move(msg));
    }
    body["messages"] = std::move(messages);
    body["max_tokens"] = request.max_tokens;
    body["temperature"] = request.temperature;
    if (!request.stop.empty()) body["stop"] = request.stop;
    return body.dump();
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    split_endpoint(config_.endpoint, host_, port_, path_);
}

Completion HttpBackend::complete(const CompletionRequest& request) {
    const std::string body = request_body(request, config_.model);

    httplib::Headers headers;
    if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);

    int backoff_ms = config_.backoff_initial_ms;
    std::string last_transport_error;
    for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms = std::min(backoff_ms * 2, config_.backoff_max_ms);
        }
        httplib::Client client(host_, port_);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        auto result = client.Post(path_, headers, body, "application/json");
        if (!result) {
            last_transport_error = httplib::to_string(result.error());
            continue; // transient transport failure, retry
        }
        if (result->status >= 400)
            throw ProviderError(result->status, result->body);

        try {
            Json response = Json::parse(result->body);
            Completion completion;
            completion.text =
                response.at("choices").at(0).at("message").at("content").get<std::string>();
            if (response.contains("usage")) {
                const auto& usage = response["usage"];
                completion.prompt_tokens = {usage.value("prompt_tokens", std::uint64_t{0})};
                completion.completion_tokens = {usage.value("completion_tokens", std::uint64_t{0})};
            } else {
                for (const auto& m : request.messages)
                    completion.prompt_tokens += token_count(m.text);
                completion.completion_tokens = token_count(completion.text);
            }
            return completion;
        } catch (const Json::exception& e) {
            throw ProviderError(result->status, std::string("unparsable response: ") + e.what());
        }
    }
    throw TransportError(last_transport_error + " after "
                         + std::to_string(config_.max_attempts) + " attempts");
}

} // namespace evoagent::backend
