// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "evoagent/evolution.hpp"
#include "evoagent/errors.hpp"

#include "miner_oracle.hpp"

using namespace evoagent;
using namespace evoagent::evolution;

namespace {

ActionRecord step(std::size_t index, ActionKind kind, Params params, Outcome outcome,
                  const std::string& intention = "do the step") {
    ActionRecord r;
    r.step_index = index;
    r.intention = intention;
    r.kind = std::move(kind);
    r.parameters = std::move(params);
    r.outcome = std::move(outcome);
    r.start_tick = 2 * index;
    r.end_tick = 2 * index + 1;
    return r;
}

Trajectory trajectory_of(const std::string& task_id, std::vector<ActionRecord> records,
                         std::set<std::string> tags = {"qa"}) {
    Trajectory t;
    t.task.task_id = task_id;
    t.task.instruction = "instruction for " + task_id;
    t.task.domain_tags = std::move(tags);
    t.records = std::move(records);
    t.final_status = FinalStatus::Solved;
    return t;
}

backend::ScriptedBackend fulfilled_analyzer() {
    backend::ScriptedScenario scenario;
    scenario.site_defaults[backend::CallSite::Align] = "Fulfilled: looks right";
    return backend::ScriptedBackend(scenario);
}

// The brute-force enumerator lives in miner_oracle.hpp and is shared with
// the acceptance suite.

void check_miner_matches_oracle(const std::vector<Trajectory>& corpus, const VerdictMap& verdicts,
                                std::size_t min_support, double min_success, std::size_t max_len) {
    auto mined = mine_composites(corpus, verdicts, min_support, min_success, max_len);
    auto expected = miner_oracle::oracle_mine(corpus, verdicts, min_support, min_success, max_len);
    std::string mismatch = miner_oracle::compare_with_oracle(mined, expected);
    CHECK_MESSAGE(mismatch.empty(), mismatch);
}

// Randomized corpus generator for the oracle-equivalence suite. Small
// action alphabet so repeats are common; payload reuse injected at random.
std::vector<Trajectory> random_corpus(std::mt19937_64& rng) {
    std::vector<Trajectory> corpus;
    std::size_t n_traj = 1 + rng() % 20;
    for (std::size_t t = 0; t < n_traj; ++t) {
        std::vector<ActionRecord> records;
        std::size_t n_steps = 1 + rng() % 8;
        for (std::size_t i = 0; i < n_steps; ++i) {
            ActionKind kind;
            switch (rng() % 5) {
            case 0: kind = ActionKind::tool("alpha"); break;
            case 1: kind = ActionKind::tool("beta"); break;
            case 2: kind = ActionKind::tool("gamma"); break;
            case 3: kind = ActionKind::generate(); break;
            default: kind = ActionKind::ask("peer"); break;
            }
            Params params;
            std::size_t n_params = rng() % 3;
            for (std::size_t p = 0; p < n_params; ++p) {
                std::string value;
                if (!records.empty() && rng() % 3 == 0)
                    value = records[rng() % records.size()].outcome.payload; // payload reuse
                else if (rng() % 2)
                    value = "shared";
                else
                    value = "v" + std::to_string(rng() % 4);
                params.emplace_back("p" + std::to_string(p), value);
            }
            Outcome outcome = rng() % 5 == 0 ? Outcome::tool_error("bad", "boom")
                                             : Outcome::success("out" + std::to_string(rng() % 5));
            records.push_back(step(i, kind, params, outcome));
        }
        corpus.push_back(trajectory_of("task_" + std::to_string(100 + t), std::move(records)));
    }
    return corpus;
}

VerdictMap random_verdicts(const std::vector<Trajectory>& corpus, std::mt19937_64& rng) {
    VerdictMap verdicts;
    for (const Trajectory& t : corpus)
        for (const ActionRecord& r : t.records) {
            Verdict v;
            if (is_error_status(r.outcome.status))
                v = Verdict::Violated; // floor rule
            else
                v = rng() % 3 == 0 ? Verdict::Partial
                                   : (rng() % 2 ? Verdict::Fulfilled : Verdict::Violated);
            verdicts[{t.task.task_id, r.step_index}] = {t.task.task_id, r.step_index, v, "r"};
        }
    return verdicts;
}

} // namespace

TEST_CASE("alignment floor rules") {
    TaskSpec task;
    task.task_id = "t";
    task.instruction = "do it";

    ActionRecord failing = step(0, ActionKind::tool("alpha"), {}, Outcome::tool_error("x", "boom"));
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    AlignmentVerdict v = align(task, failing, &analyzer);
    CHECK(v.verdict == Verdict::Violated);

    // gold-answer match dominates
    task.expected_answer = "42";
    ActionRecord final_ok = step(1, ActionKind::final_answer(), {}, Outcome::success("42"));
    CHECK(align(task, final_ok, &analyzer).verdict == Verdict::Fulfilled);
    ActionRecord final_bad = step(1, ActionKind::final_answer(), {}, Outcome::success("41"));
    CHECK(align(task, final_bad, &analyzer).verdict == Verdict::Violated);
}

TEST_CASE("scripted analyzer verdicts are parsed; outages are indeterminate") {
    TaskSpec task;
    task.task_id = "t";
    task.instruction = "do it";
    ActionRecord ok = step(0, ActionKind::tool("alpha"), {}, Outcome::success("found it"));

    backend::ScriptedScenario s1;
    s1.site_defaults[backend::CallSite::Align] = "Fulfilled: payload contains the birth year";
    backend::ScriptedBackend a1(s1);
    AlignmentVerdict v1 = align(task, ok, &a1);
    CHECK(v1.verdict == Verdict::Fulfilled);
    CHECK(v1.rationale == "payload contains the birth year");

    backend::ScriptedScenario s2;
    s2.site_defaults[backend::CallSite::Align] = "Partial: incomplete";
    backend::ScriptedBackend a2(s2);
    CHECK(align(task, ok, &a2).verdict == Verdict::Partial);

    backend::ScriptedScenario s3;
    s3.site_defaults[backend::CallSite::Align] = "no idea what this is";
    backend::ScriptedBackend a3(s3);
    CHECK(align(task, ok, &a3).verdict == Verdict::Indeterminate);

    backend::ScriptedBackend dead{backend::ScriptedScenario{}};
    CHECK(align(task, ok, &dead).verdict == Verdict::Indeterminate);
}

TEST_CASE("no error-status record is ever fulfilled") {
    std::mt19937_64 rng(404);
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    for (int i = 0; i < 200; ++i) {
        auto corpus = random_corpus(rng);
        for (const Trajectory& t : corpus)
            for (const ActionRecord& r : t.records) {
                AlignmentVerdict v = align(t.task, r, &analyzer);
                if (is_error_status(r.outcome.status)) CHECK(v.verdict == Verdict::Violated);
            }
    }
}

TEST_CASE("repeated failures with a shared detail prefix become one pattern") {
    std::vector<ActionRecord> records;
    for (std::size_t i = 0; i < 5; ++i)
        records.push_back(step(i, ActionKind::tool("apitool"), {{"q", "x"}},
                               Outcome::tool_error("failed", "missing api key for host " +
                                                                 std::to_string(i))));
    records.push_back(step(5, ActionKind::final_answer(), {{"answer", "x"}}, Outcome::success("x")));
    std::vector<Trajectory> corpus = {trajectory_of("t1", records)};
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    VerdictMap verdicts = align_corpus(corpus, &analyzer);

    EvolutionConfig config;
    auto proposals = propose_revisions(corpus, verdicts, config);
    int failure_patterns = 0;
    for (const auto& r : proposals) {
        if (r.edit_kind != cognition::EditKind::AddFailurePattern) continue;
        ++failure_patterns;
        CHECK(r.target == "apitool");
        CHECK(r.payload.get<std::string>() == "missing api key");
        CHECK(r.provenance.size() == 5);
    }
    CHECK(failure_patterns == 1);
}

TEST_CASE("peer expertise amendments fire when the estimate crosses the threshold") {
    std::vector<Trajectory> corpus;
    for (int t = 0; t < 4; ++t) {
        std::vector<ActionRecord> records;
        for (std::size_t i = 0; i < 3; ++i)
            records.push_back(step(i, ActionKind::ask("mathbot"), {{"question", "q"}},
                                   Outcome::peer_response("a correct answer")));
        corpus.push_back(trajectory_of("t" + std::to_string(t), records, {"math"}));
    }
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    VerdictMap verdicts = align_corpus(corpus, &analyzer);
    EvolutionConfig config;
    auto proposals = propose_revisions(corpus, verdicts, config);

    bool amended = false;
    for (const auto& r : proposals) {
        if (r.edit_kind != cognition::EditKind::AmendPeerExpertise) continue;
        amended = true;
        CHECK(r.target == "mathbot");
        CHECK(r.payload.at("tag") == "math");
        CHECK(r.payload.at("text").get<std::string>().find("reliable") != std::string::npos);
    }
    CHECK(amended); // 12 fulfilled asks: (12+1)/(12+2) = 0.93 >= 0.8
}

TEST_CASE("an empty corpus proposes nothing") {
    EvolutionConfig config;
    CHECK(propose_revisions({}, {}, config).empty());
}

TEST_CASE("the worked mining example: search then extract across five trajectories") {
    std::vector<Trajectory> corpus;
    for (int t = 0; t < 5; ++t) {
        std::string payload = "doc for case " + std::to_string(t);
        std::vector<ActionRecord> records;
        records.push_back(step(0, ActionKind::tool("search"), {{"query", "case query"}},
                               Outcome::success(payload)));
        records.push_back(step(1, ActionKind::tool("extract"),
                               {{"text", payload}, {"key", "answer"}},
                               Outcome::success("value " + std::to_string(t))));
        corpus.push_back(trajectory_of("t" + std::to_string(t), records));
    }
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    VerdictMap verdicts = align_corpus(corpus, &analyzer);

    auto mined = mine_composites(corpus, verdicts, 3, 0.8, 4);
    REQUIRE(mined.size() == 1);
    CHECK(mined[0].support == 5);
    CHECK(mined[0].success_rate == doctest::Approx(1.0));
    CHECK(mined[0].pattern == std::vector<std::string>{"search", "extract"});
    const auto& extract_bindings = mined[0].candidate.steps[1].bindings;
    bool output0 = false;
    for (const auto& [param, binding] : extract_bindings)
        if (param == "text" && binding.kind == cognition::Binding::Kind::StepOutput
            && binding.step == 0)
            output0 = true;
    CHECK(output0);

    // raising the support threshold over the corpus size empties the result
    CHECK(mine_composites(corpus, verdicts, 6, 0.8, 4).empty());

    // and so does a corpus with no repeated pairs
    std::vector<Trajectory> unique_corpus = {
        trajectory_of("u1", {step(0, ActionKind::tool("alpha"), {}, Outcome::success("a")),
                             step(1, ActionKind::tool("beta"), {}, Outcome::success("b"))}),
        trajectory_of("u2", {step(0, ActionKind::tool("gamma"), {}, Outcome::success("c")),
                             step(1, ActionKind::tool("alpha"), {}, Outcome::success("d"))})};
    VerdictMap unique_verdicts = align_corpus(unique_corpus, &analyzer);
    CHECK(mine_composites(unique_corpus, unique_verdicts, 2, 0.5, 4).empty());

    check_miner_matches_oracle(corpus, verdicts, 3, 0.8, 4);
}

TEST_CASE("mining preconditions are enforced") {
    CHECK_THROWS_AS(mine_composites({}, {}, 1, 0.5, 4), Error);  // min_support >= 2
    CHECK_THROWS_AS(mine_composites({}, {}, 2, 0.5, 1), Error);  // max_len in [2, 6]
    CHECK_THROWS_AS(mine_composites({}, {}, 2, 0.5, 7), Error);
    CHECK(mine_composites({}, {}, 2, 0.5, 4).empty());
}

TEST_CASE("miner equals the brute-force oracle on randomized corpora") {
    std::mt19937_64 rng(987654);
    for (int trial = 0; trial < 150; ++trial) {
        auto corpus = random_corpus(rng);
        auto verdicts = random_verdicts(corpus, rng);
        std::size_t min_support = 2 + rng() % 3;
        double min_success = (rng() % 2) ? 0.5 : 0.75;
        std::size_t max_len = 2 + rng() % 4;
        check_miner_matches_oracle(corpus, verdicts, min_support, min_success, max_len);
    }
}

TEST_CASE("mined provenance steps exist in the corpus") {
    std::mt19937_64 rng(13579);
    for (int trial = 0; trial < 50; ++trial) {
        auto corpus = random_corpus(rng);
        auto verdicts = random_verdicts(corpus, rng);
        for (const auto& mined : mine_composites(corpus, verdicts, 2, 0.5, 4)) {
            for (const auto& [task_id, start] : mined.provenance) {
                const Trajectory* t = nullptr;
                for (const auto& candidate : corpus)
                    if (candidate.task.task_id == task_id) t = &candidate;
                REQUIRE(t != nullptr);
                CHECK(start + mined.pattern.size() <= t->records.size());
            }
        }
    }
}

TEST_CASE("skill distillation lifts instruction substrings to placeholders") {
    TaskSpec task;
    task.task_id = "t1";
    task.instruction = "find the birth year of alan turing";
    std::vector<ActionRecord> records = {
        step(0, ActionKind::tool("search"), {{"query", "alan turing"}},
             Outcome::success("answer: 1912")),
        step(1, ActionKind::tool("extract"), {{"text", "answer: 1912"}, {"key", "answer"}},
             Outcome::success("1912")),
        step(2, ActionKind::final_answer(), {{"answer", "1912"}}, Outcome::success("1912")),
    };
    VerdictMap verdicts;
    for (std::size_t i = 0; i < 3; ++i)
        verdicts[{"t1", i}] = {"t1", i, Verdict::Fulfilled, "ok"};

    memory::Episode episode;
    episode.episode_id = "e0";
    episode.first_step = 0;
    episode.last_step = 2;
    episode.goal = "look up a birth year";
    episode.key_actions = {"search", "extract"};
    episode.resolution = "found";

    backend::ScriptedBackend dead{backend::ScriptedScenario{}};
    cognition::SkillTemplate skill = distill_skill(episode, task, records, verdicts, &dead);
    CHECK(skill.intent == "look up a birth year");
    CHECK(skill.trigger_conditions == episode.key_actions); // analyzer fallback
    REQUIRE(skill.body.steps.size() == 3);
    CHECK(skill.parameters == std::vector<std::string>{"subject"});
    // "alan turing" appears verbatim in the instruction -> {subject}
    CHECK(skill.body.steps[0].bindings[0].second.literal == "{subject}");
    // "answer: 1912" does not appear in the instruction -> literal kept
    CHECK(skill.body.steps[1].bindings[0].second.literal == "answer: 1912");

    // a violated step blocks distillation
    verdicts[{"t1", 1}] = {"t1", 1, Verdict::Violated, "bad"};
    CHECK_THROWS_AS(distill_skill(episode, task, records, verdicts, &dead), EpisodeNotSuccessful);
}

TEST_CASE("scripted trigger conditions are used when parsable") {
    TaskSpec task;
    task.task_id = "t1";
    task.instruction = "inspect the logs";
    std::vector<ActionRecord> records = {
        step(0, ActionKind::tool("search"), {{"query", "logs"}}, Outcome::success("ok")),
        step(1, ActionKind::tool("search"), {{"query", "more logs"}}, Outcome::success("ok")),
    };
    VerdictMap verdicts;
    verdicts[{"t1", 0}] = {"t1", 0, Verdict::Fulfilled, "ok"};
    verdicts[{"t1", 1}] = {"t1", 1, Verdict::Partial, "meh"};

    memory::Episode episode;
    episode.episode_id = "e1";
    episode.first_step = 0;
    episode.last_step = 1;
    episode.goal = "scan the logs";
    episode.key_actions = {"search"};
    episode.resolution = "scanned";

    backend::ScriptedScenario scenario;
    scenario.site_defaults[backend::CallSite::Distill] =
        "a log file needs scanning\nthe question names a log";
    backend::ScriptedBackend analyzer(scenario);
    cognition::SkillTemplate skill = distill_skill(episode, task, records, verdicts, &analyzer);
    REQUIRE(skill.trigger_conditions.size() == 2);
    CHECK(skill.trigger_conditions[0] == "a log file needs scanning");
}

TEST_CASE("the evolution cycle commits once and is idempotent on a frozen corpus") {
    // corpus: one unstable tool failing half the time, one stable tool
    std::vector<Trajectory> corpus;
    for (int t = 0; t < 8; ++t) {
        bool fails = t % 2 == 0;
        std::vector<ActionRecord> records;
        records.push_back(step(0, ActionKind::tool("flaky"), {{"query", "q"}},
                               fails ? Outcome::tool_error("failed", "injected failure")
                                     : Outcome::success("ok")));
        records.push_back(step(1, ActionKind::tool("steady"), {{"query", "q"}},
                               Outcome::success("ok")));
        corpus.push_back(trajectory_of("t" + std::to_string(t), records));
    }

    cognition::CognitionStore store;
    cognition::ToolProfile flaky;
    flaky.name = "flaky";
    flaky.description = "a lookup";
    store.seed_tool(flaky);
    cognition::ToolProfile steady;
    steady.name = "steady";
    steady.description = "a lookup";
    store.seed_tool(steady);

    EvolutionConfig config;
    config.min_support = 3;
    backend::ScriptedBackend analyzer1 = fulfilled_analyzer();
    EvolutionReport first = evolution_cycle(corpus, store, config, &analyzer1);
    CHECK(first.committed > 0);
    CHECK(first.store_version_after > first.store_version_before);

    // reliability: flaky 4/8 fulfilled -> (4+1)/(8+2) = 0.5; steady 8/8 -> 0.9
    const auto& flaky_stat = store.tools().at("flaky").reliability.at("qa");
    const auto& steady_stat = store.tools().at("steady").reliability.at("qa");
    CHECK(cognition::smoothed_estimate(flaky_stat)
          < cognition::smoothed_estimate(steady_stat));

    backend::ScriptedBackend analyzer2 = fulfilled_analyzer();
    EvolutionReport second = evolution_cycle(corpus, store, config, &analyzer2);
    CHECK(second.committed == 0);
    CHECK(second.store_version_after == second.store_version_before);

    // provenance completeness over all committed revisions
    for (const auto& revision : store.revision_log()) {
        for (const auto& [task_id, step_index] : revision.provenance) {
            const Trajectory* t = nullptr;
            for (const auto& candidate : corpus)
                if (candidate.task.task_id == task_id) t = &candidate;
            REQUIRE(t != nullptr);
            CHECK(step_index < t->records.size() + 2); // window starts are step indices too
        }
    }
}

TEST_CASE("an empty corpus commits nothing") {
    cognition::CognitionStore store;
    cognition::ToolProfile tool;
    tool.name = "alpha";
    tool.description = "a tool";
    store.seed_tool(tool);
    EvolutionConfig config;
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    EvolutionReport report = evolution_cycle({}, store, config, &analyzer);
    CHECK(report.committed == 0);
    CHECK(store.version() == 0);
}

TEST_CASE("frequent budget overflows lower the suggested fold threshold") {
    std::vector<Trajectory> corpus;
    for (int t = 0; t < 4; ++t) {
        Trajectory traj = trajectory_of(
            "t" + std::to_string(t),
            {step(0, ActionKind::generate(), {}, Outcome::success("fine"))});
        traj.budget_overflow_count = t < 3 ? 2 : 0; // 3 of 4 overflowed
        corpus.push_back(traj);
    }
    cognition::CognitionStore store;
    EvolutionConfig config;
    config.fold_threshold = 12;
    backend::ScriptedBackend analyzer = fulfilled_analyzer();
    EvolutionReport report = evolution_cycle(corpus, store, config, &analyzer);
    CHECK(report.budget_overflow_frequency == doctest::Approx(0.75));
    CHECK(report.suggested_fold_threshold == 8);
}
