// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "evoagent/cognition.hpp"
#include "evoagent/errors.hpp"

using namespace evoagent;
using namespace evoagent::cognition;

namespace {

CognitionStore seeded_store() {
    CognitionStore store;
    ToolProfile search;
    search.name = "web_search";
    search.description = "searches the web for factual queries";
    store.seed_tool(search);
    ToolProfile extract;
    extract.name = "extract";
    extract.description = "pulls a field out of a text";
    store.seed_tool(extract);
    PeerProfile peer;
    peer.peer_id = "math_peer";
    peer.expertise["math"] = "declared expertise: math";
    store.seed_peer(peer);
    return store;
}

Revision text_revision(TargetKind kind, const std::string& target, EditKind edit,
                       const std::string& payload, std::size_t step = 0) {
    Revision r;
    r.target_kind = kind;
    r.target = target;
    r.edit_kind = edit;
    r.payload = payload;
    r.provenance = {{"task", step}};
    return r;
}

} // namespace

TEST_CASE("laplace smoothing matches the hand-computed values") {
    CHECK(smoothed_estimate({0, 0}) == doctest::Approx(0.5));
    CHECK(smoothed_estimate({1, 1}) == doctest::Approx(2.0 / 3.0)); // (1+1)/(1+2)
    CHECK(smoothed_estimate({0, 1}) == doctest::Approx(1.0 / 3.0));
    CHECK(render_estimate({1, 1}) == "0.667");
    CHECK(render_estimate({0, 1}) == "0.333");
}

TEST_CASE("reliability estimate equals the brute-force counter on random streams") {
    std::mt19937_64 rng(424242);
    for (int trial = 0; trial < 200; ++trial) {
        CognitionStore store = seeded_store();
        std::uint64_t successes = 0, attempts = 0;
        std::size_t n = rng() % 40;
        for (std::size_t i = 0; i < n; ++i) {
            bool ok = rng() % 2 == 0;
            Outcome outcome = ok ? Outcome::success("fine") : Outcome::tool_error("bad", "detail");
            Revision r = reliability_update(store, TargetKind::Tool, "web_search", "qa", outcome,
                                            {{"task", i}});
            store.commit_revision(std::move(r));
            attempts += 1;
            if (ok) successes += 1;
        }
        ReliabilityStat stat;
        if (auto it = store.tools().at("web_search").reliability.find("qa");
            it != store.tools().at("web_search").reliability.end())
            stat = it->second;
        CHECK(stat.attempts == attempts);
        CHECK(stat.successes == successes);
        double estimate = smoothed_estimate(stat);
        CHECK(estimate == doctest::Approx((successes + 1.0) / (attempts + 2.0)));
        CHECK(estimate > 0.0);
        CHECK(estimate < 1.0);
    }
}

TEST_CASE("reliability_update proposals carry the outcome judgment") {
    CognitionStore store = seeded_store();
    Revision ok = reliability_update(store, TargetKind::Tool, "web_search", "qa",
                                     Outcome::success("x"), {{"t", 0}});
    CHECK(ok.payload.at("success").get<bool>());
    Revision err = reliability_update(store, TargetKind::Tool, "web_search", "qa",
                                      Outcome::tool_error("x", "d"), {{"t", 1}});
    CHECK_FALSE(err.payload.at("success").get<bool>());
    Revision peer_ok = reliability_update(store, TargetKind::Peer, "math_peer", "math",
                                          Outcome::peer_response("7"), {{"t", 2}}, true);
    CHECK(peer_ok.payload.at("success").get<bool>());
    Revision peer_unjudged = reliability_update(store, TargetKind::Peer, "math_peer", "math",
                                                Outcome::peer_response("7"), {{"t", 3}}, false);
    CHECK_FALSE(peer_unjudged.payload.at("success").get<bool>());
    CHECK_THROWS_AS(reliability_update(store, TargetKind::Tool, "missing", "qa",
                                       Outcome::success("x"), {{"t", 0}}),
                    UnknownAction);
}

TEST_CASE("query renders the seed description verbatim before any revisions") {
    CognitionStore store = seeded_store();
    std::vector<std::string> blocks = query_action_knowledge(store, {"web_search"}, {"qa"});
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].find("searches the web for factual queries") != std::string::npos);
    CHECK(blocks[0].find("preconditions: (none)") != std::string::npos);
    CHECK(blocks[0].find("0/0 on tag qa (est 0.500)") != std::string::npos);
}

TEST_CASE("committed revisions are visible in rendered blocks") {
    CognitionStore store = seeded_store();
    store.commit_revision(text_revision(TargetKind::Tool, "web_search", EditKind::AddPrecondition,
                                        "the query must name a concrete entity"));
    std::string block = render_knowledge_block(store, "web_search", {});
    CHECK(block.find("the query must name a concrete entity") != std::string::npos);
}

TEST_CASE("query of an unknown action raises") {
    CognitionStore store = seeded_store();
    CHECK_THROWS_AS(query_action_knowledge(store, {"nonexistent"}, {}), UnknownAction);
}

TEST_CASE("rendering is deterministic at a pinned version") {
    CognitionStore store = seeded_store();
    store.commit_revision(text_revision(TargetKind::Tool, "web_search",
                                        EditKind::AddFailurePattern, "rate limited"));
    std::string a = render_knowledge_block(store, "web_search", {"qa"});
    std::string b = render_knowledge_block(store, "web_search", {"qa"});
    CHECK(a == b);
}

TEST_CASE("top-K failure patterns keeps the most recent three") {
    CognitionStore store = seeded_store();
    for (int i = 0; i < 5; ++i)
        store.commit_revision(text_revision(TargetKind::Tool, "web_search",
                                            EditKind::AddFailurePattern,
                                            "pattern " + std::to_string(i), i));
    std::string block = render_knowledge_block(store, "web_search", {});
    CHECK(block.find("pattern 0") == std::string::npos);
    CHECK(block.find("pattern 1") == std::string::npos);
    CHECK(block.find("pattern 2") != std::string::npos);
    CHECK(block.find("pattern 4") != std::string::npos);
}

TEST_CASE("validation rejects duplicates, dangling references, and empty payloads") {
    CognitionStore store = seeded_store();

    store.commit_revision(text_revision(TargetKind::Tool, "web_search", EditKind::AddPrecondition,
                                        "Needs A Query"));
    // case-folded duplicate
    Revision dup = text_revision(TargetKind::Tool, "web_search", EditKind::AddPrecondition,
                                 "needs a query", 9);
    ValidationResult dup_result = store.validate_revision(dup);
    CHECK_FALSE(dup_result.accepted);
    CHECK(dup_result.reason.find("duplicate precondition") != std::string::npos);

    Revision empty = text_revision(TargetKind::Tool, "web_search", EditKind::AddPrecondition, "");
    CHECK_FALSE(store.validate_revision(empty).accepted);

    Revision unknown = text_revision(TargetKind::Tool, "nope", EditKind::AddFailurePattern, "x");
    CHECK(store.validate_revision(unknown).reason.find("unknown target") != std::string::npos);

    Revision no_provenance = text_revision(TargetKind::Tool, "web_search",
                                           EditKind::AddFailurePattern, "x");
    no_provenance.provenance.clear();
    CHECK(store.validate_revision(no_provenance).reason.find("provenance") != std::string::npos);

    // composite with a backward output reference
    CompositeAction bad;
    bad.composite_id = "bad_flow";
    bad.goal = "tries to read the future";
    BoundStep step0;
    step0.kind = ActionKind::tool("web_search");
    step0.bindings.emplace_back("query", Binding::output(1));
    bad.steps = {step0};
    Revision bad_rev;
    bad_rev.target_kind = TargetKind::Composite;
    bad_rev.target = "bad_flow";
    bad_rev.edit_kind = EditKind::AddComposite;
    bad_rev.payload = composite_payload(bad);
    bad_rev.provenance = {{"task", 0}};
    CHECK(store.validate_revision(bad_rev).reason.find("non-forward") != std::string::npos);

    // composite referencing a tool that does not exist
    CompositeAction dangling;
    dangling.composite_id = "dangling";
    dangling.goal = "calls a ghost";
    BoundStep ghost;
    ghost.kind = ActionKind::tool("ghost_tool");
    dangling.steps = {ghost};
    Revision dangling_rev;
    dangling_rev.target_kind = TargetKind::Composite;
    dangling_rev.target = "dangling";
    dangling_rev.edit_kind = EditKind::AddComposite;
    dangling_rev.payload = composite_payload(dangling);
    dangling_rev.provenance = {{"task", 0}};
    CHECK(store.validate_revision(dangling_rev).reason.find("dangling") != std::string::npos);

    // well-formed description amendment
    Revision amend;
    amend.target_kind = TargetKind::Tool;
    amend.target = "web_search";
    amend.edit_kind = EditKind::AmendDescription;
    amend.payload = Json::object({{"text", "searches the web; best for factual lookups"},
                                  {"prior", "searches the web for factual queries"}});
    amend.provenance = {{"task", 1}};
    CHECK(store.validate_revision(amend).accepted);
}

TEST_CASE("commit increments the version by exactly one and stamps ids") {
    CognitionStore store = seeded_store();
    for (int i = 0; i < 7; ++i)
        store.commit_revision(text_revision(TargetKind::Tool, "web_search",
                                            EditKind::AddFailurePattern,
                                            "pattern " + std::to_string(i), i));
    CHECK(store.version() == 7);
    std::uint64_t v = store.commit_revision(text_revision(TargetKind::Tool, "extract",
                                                          EditKind::AddPrecondition,
                                                          "text must contain the key"));
    CHECK(v == 8);
    CHECK(store.revision_log().back().revision_id == "r8");
    CHECK(store.revision_log().back().committed);
}

TEST_CASE("committing a rejected revision throws NotValidated") {
    CognitionStore store = seeded_store();
    Revision bad = text_revision(TargetKind::Tool, "missing", EditKind::AddPrecondition, "x");
    CHECK_THROWS_AS(store.commit_revision(bad), NotValidated);
    CHECK(store.version() == 0);
}

TEST_CASE("replay law: fold(seed, log) reproduces the live store byte for byte") {
    std::mt19937_64 rng(777);
    for (int trial = 0; trial < 60; ++trial) {
        CognitionStore store = seeded_store();
        std::size_t edits = rng() % 12;
        for (std::size_t i = 0; i < edits; ++i) {
            Revision r;
            switch (rng() % 4) {
            case 0:
                r = text_revision(TargetKind::Tool, rng() % 2 ? "web_search" : "extract",
                                  EditKind::AddPrecondition,
                                  "precondition " + std::to_string(rng() % 1000), i);
                break;
            case 1:
                r = text_revision(TargetKind::Tool, "web_search", EditKind::AddFailurePattern,
                                  "failure " + std::to_string(rng() % 1000), i);
                break;
            case 2:
                r = reliability_update(store, TargetKind::Tool, "web_search", "qa",
                                       rng() % 2 ? Outcome::success("y")
                                                 : Outcome::tool_error("n", "d"),
                                       {{"task", i}});
                break;
            default:
                r.target_kind = TargetKind::Peer;
                r.target = "math_peer";
                r.edit_kind = EditKind::AmendPeerExpertise;
                r.payload = Json::object(
                    {{"tag", "math"}, {"text", "estimate " + std::to_string(rng() % 100)}});
                r.provenance = {{"task", i}};
                break;
            }
            if (store.validate_revision(r).accepted) store.commit_revision(std::move(r));
        }
        CognitionStore replayed = CognitionStore::replay(store.seed_copy(), store.revision_log());
        CHECK(replayed.to_json().dump() == store.to_json().dump());
        CHECK(serialize_store(replayed) == serialize_store(store));
    }
}

TEST_CASE("snapshot round trip preserves version and bytes") {
    CognitionStore store = seeded_store();
    store.seed_feedback({"search then extract", "usually yields a short factual value", 4});
    store.commit_revision(text_revision(TargetKind::Tool, "web_search",
                                        EditKind::AddFailurePattern, "quota exceeded"));
    std::string snapshot = serialize_store(store);
    CognitionStore back = deserialize_store(snapshot);
    CHECK(back.version() == store.version());
    CHECK(serialize_store(back) == snapshot);
    REQUIRE(back.feedback().size() == 1);
    CHECK(back.feedback()[0].action_pattern == "search then extract");
    CHECK(back.feedback()[0].support_count == 4);
}

TEST_CASE("feedback estimates need at least one supporting observation") {
    CognitionStore store;
    CHECK_THROWS_AS(store.seed_feedback({"pattern", "note", 0}), Error);
}

TEST_CASE("snapshot with a tampered version is rejected") {
    CognitionStore store = seeded_store();
    store.commit_revision(text_revision(TargetKind::Tool, "web_search",
                                        EditKind::AddFailurePattern, "quota exceeded"));
    std::string snapshot = serialize_store(store);
    auto pos = snapshot.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    snapshot.replace(pos, 11, "\"version\":7");
    CHECK_THROWS_AS(deserialize_store(snapshot), MalformedLine);
}

TEST_CASE("adding a skill validates placeholders and ids") {
    CognitionStore store = seeded_store();
    SkillTemplate skill;
    skill.skill_id = "lookup_subject";
    skill.intent = "look up a subject and report";
    skill.trigger_conditions = {"a fact about a named entity is needed"};
    skill.body.kind = SkillBody::Kind::PromptTemplate;
    skill.body.prompt_template = "find information about {subject}";
    skill.parameters = {"subject"};
    Revision add;
    add.target_kind = TargetKind::Skill;
    add.target = "lookup_subject";
    add.edit_kind = EditKind::AddSkill;
    add.payload = skill_payload(skill);
    add.provenance = {{"task", 0}};
    CHECK(store.validate_revision(add).accepted);
    store.commit_revision(add);
    CHECK(store.find_skill("lookup_subject") != nullptr);

    // duplicate id
    Revision again = add;
    CHECK(store.validate_revision(again).reason.find("duplicate") != std::string::npos);

    // undeclared placeholder
    SkillTemplate bad = skill;
    bad.skill_id = "bad_skill";
    bad.body.prompt_template = "find {subject} in {year}";
    Revision bad_add;
    bad_add.target_kind = TargetKind::Skill;
    bad_add.target = "bad_skill";
    bad_add.edit_kind = EditKind::AddSkill;
    bad_add.payload = skill_payload(bad);
    bad_add.provenance = {{"task", 0}};
    CHECK(store.validate_revision(bad_add).reason.find("undeclared placeholder")
          != std::string::npos);
}

TEST_CASE("exact duplicate of a committed revision is rejected") {
    CognitionStore store = seeded_store();
    Revision r = text_revision(TargetKind::Tool, "web_search", EditKind::AddExample, "", 4);
    r.payload = Json::object({{"parameters", Json::array({Json::array({"query", "turing"})})},
                              {"outcome_summary", "born 1912"}});
    store.commit_revision(r);
    Revision same = r;
    same.revision_id.clear();
    same.committed = false;
    CHECK(store.validate_revision(same).reason.find("duplicate") != std::string::npos);
}

TEST_CASE("composite acyclicity holds for every committed composite") {
    CognitionStore store = seeded_store();
    CompositeAction good;
    good.composite_id = "search_then_extract";
    good.goal = "search and pull the answer field";
    BoundStep s0;
    s0.kind = ActionKind::tool("web_search");
    s0.bindings.emplace_back("query", Binding::lit("alan turing"));
    BoundStep s1;
    s1.kind = ActionKind::tool("extract");
    s1.bindings.emplace_back("text", Binding::output(0));
    s1.bindings.emplace_back("key", Binding::lit("answer"));
    good.steps = {s0, s1};
    Revision add;
    add.target_kind = TargetKind::Composite;
    add.target = good.composite_id;
    add.edit_kind = EditKind::AddComposite;
    add.payload = composite_payload(good);
    add.provenance = {{"task", 0}};
    store.commit_revision(add);

    for (const auto& [id, composite] : store.composites()) {
        (void)id;
        for (std::size_t i = 0; i < composite.steps.size(); ++i)
            for (const auto& [param, binding] : composite.steps[i].bindings) {
                (void)param;
                if (binding.kind == Binding::Kind::StepOutput) CHECK(binding.step < i);
            }
    }
}
