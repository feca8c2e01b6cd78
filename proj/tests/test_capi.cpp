#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <string>

#include "varjet/varjet.h"

using nlohmann::json;

namespace {

struct Session {
    vj_session* s = nullptr;
    ~Session() { vj_session_destroy(s); }
};

struct Out {
    char* p = nullptr;
    ~Out() { vj_string_free(p); }
    std::string str() const { return p ? std::string(p) : std::string(); }
};

const char* kDixonConfig = R"({
  "builtin": "dixon",
  "params": {"alpha": 3.0},
  "order": 2,
  "rtol": 1e-12,
  "atol": 1e-14,
  "time_samples": 6
})";

}  // namespace

TEST_CASE("session lifecycle and jets") {
    Session session;
    REQUIRE(vj_session_create(kDixonConfig, &session.s) == VJ_OK);
    Out bundle;
    REQUIRE(vj_run_jets(session.s, &bundle.p) == VJ_OK);
    json b = json::parse(bundle.str());
    CHECK(b["schema"] == "varjet-bundle/1");
    CHECK(b["jets"].size() == 1);
    CHECK(b["jets"][0]["orders"].size() == 2);
    CHECK(b["system"]["name"] == "dixon");
    CHECK(b["admissibility"][0]["admissible"].get<bool>());
    CHECK(b["conjecture"]["t0_identities_pass"].get<bool>());
}

TEST_CASE("determinism: identical config gives identical bundles") {
    Session s1, s2;
    REQUIRE(vj_session_create(kDixonConfig, &s1.s) == VJ_OK);
    REQUIRE(vj_session_create(kDixonConfig, &s2.s) == VJ_OK);
    Out b1, b2;
    REQUIRE(vj_run_jets(s1.s, &b1.p) == VJ_OK);
    REQUIRE(vj_run_jets(s2.s, &b2.p) == VJ_OK);
    CHECK(b1.str() == b2.str());
}

TEST_CASE("verify accepts a fresh bundle and flags corruption") {
    Session session;
    REQUIRE(vj_session_create(kDixonConfig, &session.s) == VJ_OK);
    Out bundle;
    REQUIRE(vj_run_jets(session.s, &bundle.p) == VJ_OK);

    Out report;
    CHECK(vj_run_verify(session.s, bundle.p, &report.p) == VJ_OK);
    json rep = json::parse(report.str());
    CHECK(rep["pass"].get<bool>());

    // flip one coefficient
    json corrupted = json::parse(bundle.str());
    auto& cell = corrupted["jets"][0]["orders"][1]["samples"][3][1];
    cell = cell.get<double>() + 1e-3;
    Out report2;
    CHECK(vj_run_verify(session.s, corrupted.dump().c_str(), &report2.p) == VJ_ERR_RUNTIME);
    json rep2 = json::parse(report2.str());
    CHECK(!rep2["pass"].get<bool>());
    CHECK(rep2["coefficients_match"]["order"].get<int>() == 2);
    CHECK(rep2["coefficients_match"]["time_index"].get<int>() == 3);
    CHECK(rep2["coefficients_match"]["coefficient_index"].get<int>() == 1);
}

TEST_CASE("conjecture run") {
    Session session;
    const char* config = R"({"builtin": "sir_gamma0", "order": 4, "time_samples": 5})";
    REQUIRE(vj_session_create(config, &session.s) == VJ_OK);
    Out report;
    REQUIRE(vj_run_conjecture(session.s, &report.p) == VJ_OK);
    json rep = json::parse(report.str());
    CHECK(rep["t0_identities_pass"].get<bool>());
    CHECK(rep["ukk_residual"].size() == 4);
    CHECK(rep["away_residuals"].size() == rep["away_times"].size());
}

TEST_CASE("configuration errors") {
    Session session;
    CHECK(vj_session_create("{\"builtin\": \"dixon\", \"order\": 0}", &session.s) == VJ_OK);
    // order validated at run time (prepare), not at session creation
    Out out;
    CHECK(vj_run_jets(session.s, &out.p) == VJ_ERR_CONFIG);
    CHECK(std::string(vj_session_error(session.s)).find("order") != std::string::npos);

    vj_session* bad = nullptr;
    CHECK(vj_session_create("not json", &bad) == VJ_ERR_CONFIG);
    CHECK(std::string(vj_session_error(bad)).find("JSON") != std::string::npos);
    vj_session_destroy(bad);
}

TEST_CASE("pivot failure maps to the integration exit code") {
    Session session;
    const char* config = R"({
      "dim": 2, "vars": ["x", "y"], "field": ["y", "-1"],
      "initial": [0.0, 1.0], "span": 2.0, "pivot": 1, "order": 1
    })";
    REQUIRE(vj_session_create(config, &session.s) == VJ_OK);
    Out out;
    CHECK(vj_run_jets(session.s, &out.p) == VJ_ERR_INTEGRATION);
}

TEST_CASE("config building from text and overrides") {
    Out config;
    const char* text = "builtin = dixon\nparam.alpha = 4\norder = 2\n";
    REQUIRE(vj_config_build(text, nullptr, "{\"order\": 3}", &config.p) == VJ_OK);
    json c = json::parse(config.str());
    CHECK(c["builtin"] == "dixon");
    CHECK(c["params"]["alpha"] == 4.0);
    CHECK(c["order"] == 3);

    Out bad;
    CHECK(vj_config_build("nonsense without equals\n", nullptr, nullptr, &bad.p) == VJ_ERR_CONFIG);
    CHECK(std::string(vj_last_error()).size() > 0);
}

TEST_CASE("builtins listing") {
    Out out;
    REQUIRE(vj_list_builtins(&out.p) == VJ_OK);
    json list = json::parse(out.str());
    REQUIRE(list.size() == 4);
    bool found = false;
    for (const auto& b : list) found = found || b["name"] == "vanderpol";
    CHECK(found);
    CHECK(std::string(vj_version()) == "1.0.0");
}
