#include "doctest.h"

#include "tv/fixture_backends.hpp"
#include "tv/prompts.hpp"

using namespace tv;

namespace {

json rule(json j) { return j; }

}  // namespace

TEST_CASE("fixture generator echoes its script and is deterministic") {
    FixtureGenerator gen(json::array(
        {rule({{"prompt_contains", "capital of France"},
               {"response", "Paris is the capital of France."}})}));
    GeneratorRequest req;
    req.stage = "generate_init";
    req.user_prompt = "What is the capital of France?";
    CHECK(gen.generate(req).text == "Paris is the capital of France.");
    CHECK(gen.generate(req).text == "Paris is the capital of France.");
}

TEST_CASE("schema retry: malformed twice then valid succeeds with attempt=3") {
    FixtureGenerator gen(json::array({
        rule({{"stage", "score_intrinsic"}, {"response", "not json"}, {"uses", 2}}),
        rule({{"stage", "score_intrinsic"}, {"response", json{{"confidence", 90}}}}),
    }));
    GeneratorRequest req;
    req.stage = "score_intrinsic";
    req.user_prompt = "score this claim";
    req.output_schema = prompts::claim_confidence_schema();
    req.max_retries = 2;
    const auto resp = gen.generate(req);
    CHECK(resp.attempt == 3);
    CHECK(resp.structured->at("confidence") == 90);
}

TEST_CASE("schema failure after max retries") {
    FixtureGenerator gen(json::array(
        {rule({{"stage", "score_intrinsic"}, {"response", "still not json"}})}));
    GeneratorRequest req;
    req.stage = "score_intrinsic";
    req.user_prompt = "score this claim";
    req.output_schema = prompts::claim_confidence_schema();
    req.max_retries = 2;
    try {
        gen.generate(req);
        FAIL("expected BackendException");
    } catch (const BackendException& e) {
        CHECK(e.error.kind == BackendErrorKind::schema_invalid_after_retries);
    }
}

TEST_CASE("retry prompt carries the validation error back to the model") {
    // Second rule only matches once the rejection text is appended.
    FixtureGenerator gen(json::array({
        rule({{"stage", "detect_domain"},
              {"prompt_contains", "rejected"},
              {"response", json{{"label", "general"}}}}),
        rule({{"stage", "detect_domain"}, {"response", json{{"label", "bogus"}}}, {"uses", 1}}),
    }));
    GeneratorRequest req;
    req.stage = "detect_domain";
    req.user_prompt = "classify this";
    req.output_schema = prompts::domain_label_schema({"medical", "general"});
    const auto resp = gen.generate(req);
    CHECK(resp.structured->at("label") == "general");
    CHECK(resp.attempt == 2);
}

TEST_CASE("fixture search filters by world, allowlist, and query match") {
    json worlds = {
        {"trusted",
         {{"documents",
           json::array({{{"doc_id", "t1"},
                         {"url", "https://www.nih.gov/amoxicillin"},
                         {"content", "dosage guidance"}},
                        {{"doc_id", "t2"},
                         {"url", "https://random.example.com/page"},
                         {"content", "unrelated"}}})}}},
        {"general",
         {{"documents", json::array({{{"doc_id", "g1"},
                                      {"url", "https://en.wikipedia.org/x"},
                                      {"content", "general doc"},
                                      {"matches", "world cup"}}})}}},
    };
    FixtureSearch search(worlds);

    auto trusted = search.search({"amoxicillin dose", {"nih.gov"}, 5});
    REQUIRE(trusted.size() == 1);
    CHECK(trusted[0].doc_id == "t1");

    CHECK(search.search({"who won the world cup", {}, 5}).size() == 1);
    CHECK(search.search({"unrelated question", {}, 5}).empty());  // valid empty result
}

TEST_CASE("search dedups by url and caps at max_results") {
    json docs = json::array();
    for (int i = 0; i < 8; ++i)
        docs.push_back({{"doc_id", "d" + std::to_string(i)},
                        {"url", i < 2 ? "https://a.example/same" : "https://a.example/" + std::to_string(i)},
                        {"content", "text"}});
    FixtureSearch search(json{{"general", json{{"documents", docs}}}});
    const auto r = search.search({"anything", {}, 5});
    CHECK(r.size() == 5);
    int same = 0;
    for (const auto& d : r)
        if (*d.url == "https://a.example/same") ++same;
    CHECK(same == 1);
}

TEST_CASE("search quota failure fires at the scripted call number") {
    FixtureSearch search(json{{"general",
                           {{"documents", json::array()}, {"fail_at_call", 2}}}});
    CHECK(search.search({"q", {}, 5}).empty());
    try {
        search.search({"q", {}, 5});
        FAIL("expected quota failure");
    } catch (const BackendException& e) {
        CHECK(e.error.kind == BackendErrorKind::quota_exhausted);
        CHECK_FALSE(e.error.retryable);
    }
}

TEST_CASE("host allowlist matching is suffix-per-label") {
    CHECK(FixtureSearch::host_allowed(std::string("https://www.nih.gov/a"), {"nih.gov"}));
    CHECK(FixtureSearch::host_allowed(std::string("https://nih.gov/a"), {"nih.gov"}));
    CHECK(FixtureSearch::host_allowed(std::string("https://x.law.cornell.edu/"), {"*.law.cornell.edu"}));
    CHECK_FALSE(FixtureSearch::host_allowed(std::string("https://notnih.gov/a"), {"nih.gov"}));
    CHECK_FALSE(FixtureSearch::host_allowed(std::nullopt, {"nih.gov"}));
}

TEST_CASE("fixture judge: identical answers tie; rules decide otherwise") {
    FixtureJudge judge(json::array({
        rule({{"answer_a_contains", "fabricated"}, {"verdict", "b_wins"}}),
        rule({{"winner_contains", "Paris"}, {"verdict", "unused"}}),
    }));
    CHECK(judge.judge_compare("q", "same answer", "same answer", {}) == JudgeVerdict::tie);
    CHECK(judge.judge_compare("q", "a fabricated fact", "the truth", {}) == JudgeVerdict::b_wins);
    CHECK(judge.judge_compare("q", "Paris is it", "something else", {}) == JudgeVerdict::a_wins);
    CHECK(judge.judge_compare("q", "something else", "Paris is it", {}) == JudgeVerdict::b_wins);
}

TEST_CASE("judge scripted equal quality on double refusal") {
    FixtureJudge judge(json::array({rule({{"question_contains", "unanswerable"},
                                          {"verdict", "tie"}})}));
    CHECK(judge.judge_compare("an unanswerable question", "I cannot verify this.",
                              "I don't know.", {}) == JudgeVerdict::tie);
}
