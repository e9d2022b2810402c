#pragma once

// The hand-walked expectations for the shipped conformance fixtures: for
// each scripted scenario, the exact stage sequence the control flow must
// produce, the terminal kind, and the tier state. Derived by walking the
// escalation loop by hand against each fixture script.

#include <optional>
#include <string>
#include <vector>

#include "tv/core.hpp"

namespace tv::testing {

struct ConformanceScenario {
    std::string name;
    std::string fixture_path;
    std::string question;
    std::optional<OutcomeKind> expected_kind;  // nullopt = RunInvalid
    TierState expected_tier_state;
    std::vector<TraceStage> expected_stages;
};

inline std::vector<ConformanceScenario> conformance_scenarios() {
    using S = TraceStage;
    const std::string dir = "assets/fixtures/conformance/";
    return {
        {"early_exit", dir + "01_early_exit.json", "What is the capital of France?",
         OutcomeKind::intrinsic_answer, {false, false},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::early_exit}},

        {"trusted_verified", dir + "02_trusted_verified.json",
         "What is the recommended adult dose of amoxicillin?",
         OutcomeKind::verified_rag_answer, {true, false},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain, S::search_trusted, S::grade_documents, S::regenerate,
          S::extract_claims, S::score_retrieved}},

        {"general_verified_after_trusted_empty",
         dir + "03_general_verified_after_trusted_empty.json",
         "When did Voyager 1 enter interstellar space?",
         OutcomeKind::verified_rag_answer, {true, true},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain, S::search_trusted, S::grade_documents, S::search_general,
          S::grade_documents, S::regenerate, S::extract_claims, S::score_retrieved}},

        {"general_verified_after_trusted_failure",
         dir + "04_general_verified_after_trusted_failure.json",
         "How many moons does Neptune have?",
         OutcomeKind::verified_rag_answer, {true, true},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain, S::search_trusted, S::grade_documents, S::regenerate,
          S::extract_claims, S::score_retrieved, S::search_general, S::grade_documents,
          S::regenerate, S::extract_claims, S::score_retrieved}},

        {"apology_double_grading_empty", dir + "05_apology_double_grading_empty.json",
         "What is the airspeed velocity of an unladen swallow?",
         OutcomeKind::apology, {true, true},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain, S::search_trusted, S::grade_documents, S::search_general,
          S::grade_documents, S::apology}},

        {"apology_double_verification_failure",
         dir + "06_apology_double_verification_failure.json",
         "Who was the first person to walk on Mars?",
         OutcomeKind::apology, {true, true},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain, S::search_trusted, S::grade_documents, S::regenerate,
          S::extract_claims, S::score_retrieved, S::search_general, S::grade_documents,
          S::regenerate, S::extract_claims, S::score_retrieved, S::apology}},

        {"run_invalid_quota", dir + "07_run_invalid_quota.json",
         "What was the latest fusion breakthrough?",
         std::nullopt, {true, false},
         {S::generate_init, S::extract_claims, S::check_constraints, S::score_intrinsic,
          S::detect_domain}},
    };
}

}  // namespace tv::testing
