// SPDX-License-Identifier: Apache-2.0
#include "evoagent/memory.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "evoagent/errors.hpp"

namespace evoagent::memory {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string first_words(const std::string& text, std::size_t count) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string word;
    std::size_t n = 0;
    while (n < count && in >> word) {
        if (n > 0) out << ' ';
        out << word;
        ++n;
    }
    return out.str();
}

/// Drops trailing words (then bytes) until the text fits max_tokens.
/// token_count is non-increasing under suffix removal, so this terminates.
std::string truncate_to_tokens(std::string text, TokenCount max_tokens) {
    while (token_count(text) > max_tokens && !text.empty()) {
        std::size_t cut = text.find_last_of(" \t\n");
        if (cut == std::string::npos || cut == 0)
            text.pop_back();
        else
            text = trim(text.substr(0, cut));
    }
    if (text.empty()) text = ".";
    return text;
}

} // namespace

StepRecord make_step_record(std::size_t step_index, std::string rationale, ActionKind action,
                            Params parameters, Outcome outcome) {
    StepRecord r;
    r.step_index = step_index;
    r.selection_rationale = std::move(rationale);
    r.action = std::move(action);
    r.parameters = std::move(parameters);
    r.outcome = std::move(outcome);

    std::ostringstream text;
    text << "step " << r.step_index << "\n";
    text << "rationale: " << r.selection_rationale << "\n";
    text << "action: " << r.action.name() << " (" << to_string(r.action.variant) << ")\n";
    text << "params:";
    if (r.parameters.empty()) {
        text << " (none)";
    } else {
        bool first = true;
        for (const auto& [k, v] : r.parameters) {
            text << (first ? " " : "; ") << k << "=" << v;
            first = false;
        }
    }
    text << "\n";
    text << "outcome: " << to_string(r.outcome.status) << ": " << r.outcome.payload;
    if (r.outcome.error_detail) text << " | detail: " << *r.outcome.error_detail;
    r.raw_text = text.str();
    r.raw_tokens = token_count(r.raw_text);
    return r;
}

std::string to_string(OutcomeTag t) {
    switch (t) {
    case OutcomeTag::Ok: return "ok";
    case OutcomeTag::Err: return "err";
    case OutcomeTag::Peer: return "peer";
    }
    return "ok";
}

OutcomeTag outcome_tag_from_status(OutcomeStatus s) {
    if (s == OutcomeStatus::Success) return OutcomeTag::Ok;
    if (s == OutcomeStatus::PeerResponse) return OutcomeTag::Peer;
    return OutcomeTag::Err;
}

const StepRecord& MemoryPool::raw_record(std::size_t step_index) const {
    if (step_index >= steps.size())
        throw Error("no step " + std::to_string(step_index) + " in pool");
    return steps[step_index].record;
}

bool MemoryPool::is_folded(std::size_t step_index) const {
    return episode_covering(step_index) != nullptr;
}

std::vector<std::size_t> MemoryPool::unfolded_steps() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (!is_folded(i)) out.push_back(i);
    return out;
}

const Episode* MemoryPool::episode_covering(std::size_t step_index) const {
    for (const Episode& e : episodes)
        if (e.first_step <= step_index && step_index <= e.last_step) return &e;
    return nullptr;
}

std::string fallback_abstract(const StepRecord& record) {
    std::string text = record.action.name() + " "
                     + to_string(outcome_tag_from_status(record.outcome.status));
    std::string head = first_words(record.outcome.payload, 20);
    if (!head.empty()) text += " " + head;
    return text;
}

void ingest_step(MemoryPool& pool, StepRecord record, backend::CompletionBackend* compressor) {
    if (record.step_index != pool.steps.size())
        throw IndexGap(pool.steps.size(), record.step_index);

    StepSummary summary;
    summary.step_index = record.step_index;
    summary.outcome_tag = outcome_tag_from_status(record.outcome.status);

    std::string text;
    if (compressor) {
        try {
            backend::CompletionRequest request;
            request.call_site = backend::CallSite::Compress;
            request.messages = {
                {"system", "Compress step records into one short line."},
                {"user", "Summarize this step in one line:\n" + record.raw_text}};
            request.max_tokens = 128;
            request.temperature = 0.0;
            text = trim(compressor->complete(request).text);
        } catch (const Error&) {
            text.clear(); // compressor unavailable; fall back below
        }
    }
    if (text.empty() || token_count(text) > record.raw_tokens)
        text = fallback_abstract(record);
    if (token_count(text) > record.raw_tokens)
        text = truncate_to_tokens(text, record.raw_tokens);

    summary.summary_text = text;
    summary.summary_tokens = token_count(text);
    pool.steps.push_back({std::move(record), std::move(summary)});
}

SelectorDecision heuristic_fallback_decision(const MemoryPool& pool) {
    SelectorDecision decision;
    std::vector<std::size_t> unfolded = pool.unfolded_steps();
    std::size_t raw_from = unfolded.size() > 2 ? unfolded.size() - 2 : 0;
    for (std::size_t i = 0; i < unfolded.size(); ++i)
        decision.per_step[unfolded[i]] = i >= raw_from ? Rep::Raw : Rep::Summary;
    return decision;
}

std::string to_string(Rep r) {
    switch (r) {
    case Rep::Raw: return "Raw";
    case Rep::Summary: return "Summary";
    case Rep::Omit: return "Omit";
    }
    return "Summary";
}

std::optional<SelectorDecision> parse_selector_output(const MemoryPool& pool,
                                                      const std::string& text) {
    SelectorDecision decision;
    std::vector<std::size_t> unfolded = pool.unfolded_steps();
    std::set<std::size_t> expected(unfolded.begin(), unfolded.end());

    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos) return std::nullopt;
        std::string head = lower(trim(item.substr(0, colon)));
        std::string tail = lower(trim(item.substr(colon + 1)));
        if (head == "fold") {
            auto dash = tail.find('-');
            if (dash == std::string::npos || decision.fold_directive) return std::nullopt;
            try {
                std::size_t first = std::stoull(trim(tail.substr(0, dash)));
                std::size_t last = std::stoull(trim(tail.substr(dash + 1)));
                decision.fold_directive = {{first, last}};
            } catch (const std::exception&) {
                return std::nullopt;
            }
            continue;
        }
        std::size_t index;
        try {
            index = std::stoull(head);
        } catch (const std::exception&) {
            return std::nullopt;
        }
        Rep rep;
        if (tail == "raw") rep = Rep::Raw;
        else if (tail == "summary") rep = Rep::Summary;
        else if (tail == "omit") rep = Rep::Omit;
        else return std::nullopt;
        if (!expected.count(index) || decision.per_step.count(index)) return std::nullopt;
        decision.per_step[index] = rep;
    }

    if (decision.per_step.size() != expected.size()) return std::nullopt;

    if (decision.fold_directive) {
        auto [first, last] = *decision.fold_directive;
        if (last < first || last - first + 1 < 2) return std::nullopt;
        for (std::size_t i = first; i <= last; ++i)
            if (!expected.count(i)) return std::nullopt;
    }
    return decision;
}

SelectorDecision select_representations(const MemoryPool& pool, const std::string& task_context,
                                        backend::CompletionBackend* selector) {
    if (pool.steps.empty()) throw Error("selector needs a non-empty pool");
    if (!selector) return heuristic_fallback_decision(pool);

    std::ostringstream user;
    user << "task context:\n" << task_context << "\n";
    user << "step summaries:\n";
    for (std::size_t index : pool.unfolded_steps())
        user << index << ": " << pool.steps[index].summary.summary_text << "\n";
    if (!pool.episodes.empty()) {
        user << "episodes already folded:\n";
        for (const Episode& e : pool.episodes)
            user << e.episode_id << " covers steps " << e.first_step << "-" << e.last_step << "\n";
    }
    user << "For each listed step reply `<index>:Raw`, `<index>:Summary`, or `<index>:Omit`, "
            "comma-separated. Optionally add `fold:<first>-<last>` for a contiguous range.";

    backend::CompletionRequest request;
    request.call_site = backend::CallSite::Selector;
    request.messages = {{"system", "You manage the agent's working memory."}, {"user", user.str()}};
    request.max_tokens = 256;
    request.temperature = 0.0;

    try {
        std::string response = selector->complete(request).text;
        if (auto decision = parse_selector_output(pool, response)) return *decision;
    } catch (const Error&) {
        // selector unavailable; fall through to the heuristic
    }
    return heuristic_fallback_decision(pool);
}

namespace {

struct Slot {
    bool is_episode = false;
    std::size_t position = 0; // step index or episode first_step
    std::size_t end = 0;      // last covered step
    std::size_t source = 0;   // step index or episode array index
    Rep rep = Rep::Summary;   // step slots only
    bool dropped = false;
};

TokenCount slot_tokens(const MemoryPool& pool, const Slot& slot) {
    if (slot.is_episode) return pool.episodes[slot.source].episode_tokens;
    const auto& entry = pool.steps[slot.source];
    return slot.rep == Rep::Raw ? entry.record.raw_tokens : entry.summary.summary_tokens;
}

WorkingMemoryEntry slot_entry(const MemoryPool& pool, const Slot& slot) {
    WorkingMemoryEntry e;
    e.position = slot.position;
    if (slot.is_episode) {
        const Episode& ep = pool.episodes[slot.source];
        e.kind = WorkingMemoryEntry::Kind::EpisodeEntry;
        e.label = "episode " + ep.episode_id + " steps " + std::to_string(ep.first_step) + "-"
                + std::to_string(ep.last_step);
        e.text = ep.entry_text;
        e.tokens = ep.episode_tokens;
    } else {
        const auto& entry = pool.steps[slot.source];
        if (slot.rep == Rep::Raw) {
            e.kind = WorkingMemoryEntry::Kind::Raw;
            e.label = "step " + std::to_string(slot.position) + " raw";
            e.text = entry.record.raw_text;
            e.tokens = entry.record.raw_tokens;
        } else {
            e.kind = WorkingMemoryEntry::Kind::Summary;
            e.label = "step " + std::to_string(slot.position) + " summary";
            e.text = entry.summary.summary_text;
            e.tokens = entry.summary.summary_tokens;
        }
    }
    return e;
}

} // namespace

WorkingMemory assemble_working_memory(const MemoryPool& pool, const SelectorDecision& decision,
                                      TokenCount budget) {
    std::vector<std::size_t> unfolded = pool.unfolded_steps();
    if (decision.per_step.size() != unfolded.size())
        throw Error("decision does not cover the pool's un-folded steps");
    for (std::size_t index : unfolded)
        if (!decision.per_step.count(index))
            throw Error("decision misses step " + std::to_string(index));

    std::vector<Slot> slots;
    for (std::size_t i = 0; i < pool.episodes.size(); ++i)
        slots.push_back({true, pool.episodes[i].first_step, pool.episodes[i].last_step, i,
                         Rep::Summary, false});
    for (std::size_t index : unfolded) {
        Rep rep = decision.per_step.at(index);
        if (rep == Rep::Omit) continue;
        slots.push_back({false, index, index, index, rep, false});
    }
    std::sort(slots.begin(), slots.end(),
              [](const Slot& a, const Slot& b) { return a.position < b.position; });

    // The slot covering the pool's newest step is protected from dropping.
    std::size_t protected_slot = slots.size();
    if (!pool.steps.empty()) {
        std::size_t newest = pool.steps.size() - 1;
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (slots[i].position <= newest && newest <= slots[i].end) protected_slot = i;
    }

    if (protected_slot < slots.size()) {
        const Slot& p = slots[protected_slot];
        TokenCount cheapest = p.is_episode ? pool.episodes[p.source].episode_tokens
                                           : pool.steps[p.source].summary.summary_tokens;
        if (cheapest > budget) throw BudgetTooSmall(cheapest.value, budget.value);
    }

    auto total = [&]() {
        TokenCount t;
        for (const Slot& s : slots)
            if (!s.dropped) t += slot_tokens(pool, s);
        return t;
    };

    WorkingMemory wm;
    wm.budget = budget;

    if (total() > budget) {
        wm.degraded = true;
        // Phase 1: demote raws to summaries, oldest first.
        for (Slot& s : slots) {
            if (total() <= budget) break;
            if (!s.is_episode && s.rep == Rep::Raw) s.rep = Rep::Summary;
        }
        // Phase 2: drop step summaries, oldest first, never the newest step.
        for (std::size_t i = 0; i < slots.size() && total() > budget; ++i) {
            if (i == protected_slot || slots[i].is_episode) continue;
            slots[i].dropped = true;
        }
        // Phase 3: drop episodes, oldest first, never one covering the newest step.
        for (std::size_t i = 0; i < slots.size() && total() > budget; ++i) {
            if (i == protected_slot || !slots[i].is_episode) continue;
            slots[i].dropped = true;
        }
    }

    for (const Slot& s : slots) {
        if (s.dropped) continue;
        wm.entries.push_back(slot_entry(pool, s));
        wm.total_tokens += wm.entries.back().tokens;
    }
    return wm;
}

WorkingMemory assemble_raw_concatenation(const MemoryPool& pool) {
    WorkingMemory wm;
    wm.budget = {UINT64_MAX};
    for (std::size_t i = 0; i < pool.steps.size(); ++i) {
        WorkingMemoryEntry e;
        e.kind = WorkingMemoryEntry::Kind::Raw;
        e.position = i;
        e.label = "step " + std::to_string(i) + " raw";
        e.text = pool.steps[i].record.raw_text;
        e.tokens = pool.steps[i].record.raw_tokens;
        wm.total_tokens += e.tokens;
        wm.entries.push_back(std::move(e));
    }
    return wm;
}

namespace {

struct EpisodeBody {
    std::string goal;
    std::vector<std::string> key_actions;
    std::string resolution;
};

std::optional<EpisodeBody> parse_episode_body(const std::string& text) {
    EpisodeBody body;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.rfind("GOAL:", 0) == 0) {
            body.goal = trim(line.substr(5));
        } else if (line.rfind("KEY:", 0) == 0) {
            std::istringstream items(line.substr(4));
            std::string item;
            while (std::getline(items, item, ';')) {
                item = trim(item);
                if (!item.empty()) body.key_actions.push_back(item);
            }
        } else if (line.rfind("RESOLUTION:", 0) == 0) {
            body.resolution = trim(line.substr(11));
        }
    }
    if (body.goal.empty() || body.resolution.empty()) return std::nullopt;
    return body;
}

std::string render_episode_entry(std::size_t first, std::size_t last, const EpisodeBody& body) {
    std::ostringstream out;
    out << "steps " << first << "-" << last << ": " << body.goal;
    if (!body.key_actions.empty()) {
        out << " | key:";
        for (const auto& k : body.key_actions) out << ' ' << k << ';';
    }
    out << " | resolution: " << body.resolution;
    return out.str();
}

} // namespace

const Episode& mem_fold(MemoryPool& pool, std::size_t first, std::size_t last,
                        backend::CompletionBackend* summarizer) {
    if (last < first || last - first + 1 < 2) throw RangeTooShort();
    if (last >= pool.steps.size()) throw RangeOverlap();
    for (std::size_t i = first; i <= last; ++i)
        if (pool.is_folded(i)) throw RangeOverlap();

    TokenCount covered_summary_tokens;
    for (std::size_t i = first; i <= last; ++i)
        covered_summary_tokens += pool.steps[i].summary.summary_tokens;

    EpisodeBody body;
    bool have_body = false;
    if (summarizer) {
        std::ostringstream user;
        user << "Fold these step summaries into one episode. Reply with lines "
                "GOAL:, KEY: (semicolon-separated), RESOLUTION:.\n";
        for (std::size_t i = first; i <= last; ++i)
            user << i << ": " << pool.steps[i].summary.summary_text << "\n";
        backend::CompletionRequest request;
        request.call_site = backend::CallSite::Fold;
        request.messages = {{"system", "You compress multi-step history into episodes."},
                            {"user", user.str()}};
        request.max_tokens = 256;
        request.temperature = 0.0;
        try {
            if (auto parsed = parse_episode_body(summarizer->complete(request).text)) {
                body = *parsed;
                have_body = true;
            }
        } catch (const Error&) {
            // summarizer unavailable; deterministic fallback below
        }
    }
    if (!have_body) {
        std::ostringstream concat;
        for (std::size_t i = first; i <= last; ++i) {
            if (i > first) concat << ' ';
            concat << pool.steps[i].summary.summary_text;
        }
        body.goal = truncate_to_tokens(
            concat.str(), {std::max<std::uint64_t>(1, covered_summary_tokens.value / 2)});
        for (std::size_t i = first; i <= last; ++i)
            body.key_actions.push_back(pool.steps[i].record.action.name());
        body.resolution = to_string(pool.steps[last].summary.outcome_tag);
    }

    std::string entry = render_episode_entry(first, last, body);
    // Episodes must compress: strictly fewer tokens than the covered summaries.
    if (token_count(entry) >= covered_summary_tokens)
        entry = truncate_to_tokens(entry, {covered_summary_tokens.value - 1});

    Episode episode;
    episode.episode_id = "e" + std::to_string(pool.episodes.size());
    episode.first_step = first;
    episode.last_step = last;
    episode.goal = body.goal;
    episode.key_actions = body.key_actions;
    episode.resolution = body.resolution;
    episode.entry_text = entry;
    episode.episode_tokens = token_count(entry);
    pool.episodes.push_back(std::move(episode));
    pool.fold_log.push_back({first, last, pool.episodes.back().episode_id});
    return pool.episodes.back();
}

namespace {

std::set<std::string> word_set(const std::string& text) {
    std::set<std::string> words;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            words.insert(current);
            current.clear();
        }
    }
    if (!current.empty()) words.insert(current);
    return words;
}

} // namespace

std::vector<const Episode*> retrieve_episodes(const MemoryPool& pool, const std::string& query,
                                              std::size_t k) {
    if (k < 1) throw Error("k must be >= 1");
    std::set<std::string> query_words = word_set(query);

    std::vector<std::pair<std::size_t, const Episode*>> scored;
    for (const Episode& e : pool.episodes) {
        std::string haystack = e.goal;
        for (const auto& action : e.key_actions) haystack += " " + action;
        std::set<std::string> words = word_set(haystack);
        std::size_t overlap = 0;
        for (const auto& w : query_words) overlap += words.count(w);
        if (overlap > 0) scored.emplace_back(overlap, &e);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->last_step > b.second->last_step;
    });

    std::vector<const Episode*> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
    return out;
}

// --- snapshot io ---

namespace {

Json step_record_to_json(const StepRecord& r) {
    Json j;
    j["step_index"] = r.step_index;
    j["rationale"] = r.selection_rationale;
    j["kind"] = action_kind_to_json(r.action);
    Json params = Json::array();
    for (const auto& [k, v] : r.parameters) params.push_back(Json::array({k, v}));
    j["parameters"] = params;
    j["outcome"] = outcome_to_json(r.outcome);
    j["raw_text"] = r.raw_text;
    j["raw_tokens"] = r.raw_tokens.value;
    return j;
}

StepRecord step_record_from_json(const Json& j) {
    StepRecord r;
    r.step_index = j.at("step_index").get<std::size_t>();
    r.selection_rationale = j.at("rationale").get<std::string>();
    r.action = action_kind_from_json(j.at("kind"));
    for (const auto& pair : j.at("parameters"))
        r.parameters.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    r.outcome = outcome_from_json(j.at("outcome"));
    r.raw_text = j.at("raw_text").get<std::string>();
    r.raw_tokens = {j.at("raw_tokens").get<std::uint64_t>()};
    return r;
}

OutcomeTag outcome_tag_from_string(const std::string& s) {
    if (s == "ok") return OutcomeTag::Ok;
    if (s == "err") return OutcomeTag::Err;
    if (s == "peer") return OutcomeTag::Peer;
    throw Error("unknown outcome tag: " + s);
}

} // namespace

std::string serialize_pool(const MemoryPool& pool) {
    std::ostringstream out;
    Json header;
    header["format_version"] = kLogFormatVersion;
    header["kind"] = "memory_pool";
    out << header.dump() << '\n';
    for (const auto& entry : pool.steps) {
        Json line;
        line["type"] = "step";
        line["record"] = step_record_to_json(entry.record);
        Json summary;
        summary["step_index"] = entry.summary.step_index;
        summary["text"] = entry.summary.summary_text;
        summary["outcome_tag"] = to_string(entry.summary.outcome_tag);
        summary["tokens"] = entry.summary.summary_tokens.value;
        line["summary"] = summary;
        out << line.dump() << '\n';
    }
    for (const Episode& e : pool.episodes) {
        Json line;
        line["type"] = "episode";
        line["episode_id"] = e.episode_id;
        line["first_step"] = e.first_step;
        line["last_step"] = e.last_step;
        line["goal"] = e.goal;
        line["key_actions"] = e.key_actions;
        line["resolution"] = e.resolution;
        line["entry_text"] = e.entry_text;
        line["tokens"] = e.episode_tokens.value;
        out << line.dump() << '\n';
    }
    for (const FoldOp& f : pool.fold_log) {
        Json line;
        line["type"] = "fold";
        line["first"] = f.first;
        line["last"] = f.last;
        line["episode_id"] = f.episode_id;
        out << line.dump() << '\n';
    }
    return out.str();
}

MemoryPool deserialize_pool(const std::string& stream) {
    MemoryPool pool;
    std::istringstream in(stream);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& e) {
            throw MalformedLine(line_number, e.what());
        }
        try {
            if (line_number == 1) {
                int version = j.value("format_version", -1);
                if (version != kLogFormatVersion)
                    throw FormatVersionMismatch(kLogFormatVersion, version);
                continue;
            }
            std::string type = j.at("type").get<std::string>();
            if (type == "step") {
                StepSummary summary;
                summary.step_index = j.at("summary").at("step_index").get<std::size_t>();
                summary.summary_text = j.at("summary").at("text").get<std::string>();
                summary.outcome_tag =
                    outcome_tag_from_string(j.at("summary").at("outcome_tag").get<std::string>());
                summary.summary_tokens = {j.at("summary").at("tokens").get<std::uint64_t>()};
                pool.steps.push_back({step_record_from_json(j.at("record")), std::move(summary)});
            } else if (type == "episode") {
                Episode e;
                e.episode_id = j.at("episode_id").get<std::string>();
                e.first_step = j.at("first_step").get<std::size_t>();
                e.last_step = j.at("last_step").get<std::size_t>();
                e.goal = j.at("goal").get<std::string>();
                e.key_actions = j.at("key_actions").get<std::vector<std::string>>();
                e.resolution = j.at("resolution").get<std::string>();
                e.entry_text = j.at("entry_text").get<std::string>();
                e.episode_tokens = {j.at("tokens").get<std::uint64_t>()};
                pool.episodes.push_back(std::move(e));
            } else if (type == "fold") {
                pool.fold_log.push_back({j.at("first").get<std::size_t>(),
                                         j.at("last").get<std::size_t>(),
                                         j.at("episode_id").get<std::string>()});
            } else {
                throw Error("unknown pool line type: " + type);
            }
        } catch (const FormatVersionMismatch&) {
            throw;
        } catch (const std::exception& e) {
            throw MalformedLine(line_number, e.what());
        }
    }
    return pool;
}

} // namespace evoagent::memory
