#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>

#include "doctest.h"
#include "hydra/config.hpp"
#include "hydra/runner.hpp"

using hydra::config::ConfigError;
using hydra::config::Tree;
using namespace hydra::runner;

namespace {

const char* kMinimalScenario = R"(
sim.n_frames = 3
sim.objects.vehicle = 6
sim.objects.pedestrian = 4
sim.objects.truck = 2

agent.ego.kind = ego
agent.helper.kind = homogeneous
agent.helper.decode.jitter_sigma = 0.05
agent.bad.kind = het_latent
)";

Tree minimal_tree() {
    Tree t = default_tree();
    t.merge(Tree::parse_string(kMinimalScenario, "mem.cfg"));
    return t;
}

bool reports_equal(const hydra::eval::ApReport& a, const hydra::eval::ApReport& b) {
    for (int c = 0; c < hydra::eval::kNumClasses; ++c) {
        for (int t = 0; t < 3; ++t) {
            if (a.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] !=
                b.ap[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)]) {
                return false;
            }
        }
    }
    for (int t = 0; t < 3; ++t) {
        if (a.total[static_cast<std::size_t>(t)] != b.total[static_cast<std::size_t>(t)]) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("parser handles comments, blanks, and reports line numbers") {
    const Tree t = Tree::parse_string("# header\n\n a.b = 1 # trailing\n c.d = two words \n",
                                      "x.cfg");
    CHECK(t.get_string("a.b", "") == "1");
    CHECK(t.get_string("c.d", "") == "two words");

    CHECK_THROWS_WITH_AS(Tree::parse_string("a.b = 1\nnot a pair\n", "x.cfg"),
                         doctest::Contains("x.cfg:2"), ConfigError);
    CHECK_THROWS_WITH_AS(Tree::parse_string("a = 1\na = 2\n", "x.cfg"),
                         doctest::Contains("duplicate"), ConfigError);
    CHECK_THROWS_WITH_AS(Tree::parse_string("= 3\n", "x.cfg"), doctest::Contains("empty key"),
                         ConfigError);
}

TEST_CASE("typed getters fail with key and location") {
    const Tree t = Tree::parse_string("a.num = 1.5x\nb.int = 7\nc.flag = maybe\n", "y.cfg");
    CHECK_THROWS_WITH_AS(t.get_double("a.num", 0.0), doctest::Contains("y.cfg:1"), ConfigError);
    CHECK(t.get_int("b.int", 0) == 7);
    CHECK_THROWS_WITH_AS(t.get_bool("c.flag", false), doctest::Contains("c.flag"), ConfigError);
}

TEST_CASE("three-layer precedence: default < file < set") {
    Tree t = default_tree();
    CHECK(t.get_double("classifier.tau", -1) == 0.2);  // built-in

    t.merge(Tree::parse_string("classifier.tau = 0.3\n", "f.cfg"));
    CHECK(t.get_double("classifier.tau", -1) == 0.3);  // file wins

    t.set("classifier.tau", "0.4");
    CHECK(t.get_double("classifier.tau", -1) == 0.4);  // override wins
}

TEST_CASE("echo round-trips verbatim") {
    const Tree t = minimal_tree();
    const Tree again = Tree::parse_string(t.echo(), "echo");
    CHECK(again.echo() == t.echo());
}

TEST_CASE("build_run_config validates structure") {
    CHECK_NOTHROW(build_run_config(minimal_tree()));

    SUBCASE("no ego") {
        Tree t = default_tree();
        t.merge(Tree::parse_string("agent.a.kind = homogeneous\n", "m.cfg"));
        CHECK_THROWS_WITH_AS(build_run_config(t), doctest::Contains("exactly one"), ConfigError);
    }
    SUBCASE("two egos") {
        Tree t = minimal_tree();
        t.set("agent.zz.kind", "ego");
        CHECK_THROWS_WITH_AS(build_run_config(t), doctest::Contains("exactly one"), ConfigError);
    }
    SUBCASE("unknown key is rejected with its location") {
        Tree t = minimal_tree();
        t.merge(Tree::parse_string("pgo.max_itters = 50\n", "typo.cfg"));
        CHECK_THROWS_WITH_AS(build_run_config(t), doctest::Contains("typo.cfg:1"), ConfigError);
    }
    SUBCASE("range violations carry the key") {
        Tree t = minimal_tree();
        t.set("classifier.tau", "1.5");
        CHECK_THROWS_WITH_AS(build_run_config(t), doctest::Contains("classifier.tau"),
                             ConfigError);
    }
    SUBCASE("bad method name") {
        Tree t = minimal_tree();
        t.set("run.method", "fancy");
        CHECK_THROWS_WITH_AS(build_run_config(t), doctest::Contains("unknown method"),
                             ConfigError);
    }
    SUBCASE("absurd object density") {
        Tree t = minimal_tree();
        t.set("sim.objects.vehicle", "100000");
        CHECK_THROWS_AS(build_run_config(t), ConfigError);
    }
}

TEST_CASE("kind-based decode defaults with explicit overrides") {
    const RunConfig cfg = build_run_config(minimal_tree());
    REQUIRE(cfg.scenario.agents.size() == 3);
    // Agents are ordered by id: bad, ego, helper.
    CHECK(cfg.scenario.agents[0].agent_id == "bad");
    CHECK(cfg.scenario.agents[0].decode.mode == hydra::sim::DecodeModel::Mode::Degraded);
    CHECK(cfg.scenario.agents[0].decode.drop_prob == 0.4);
    CHECK(cfg.scenario.agents[2].agent_id == "helper");
    CHECK(cfg.scenario.agents[2].decode.mode == hydra::sim::DecodeModel::Mode::Faithful);
    CHECK(cfg.scenario.agents[2].decode.jitter_sigma == 0.05);
}

TEST_CASE("aux_clones replicates non-ego agents deterministically") {
    Tree t = minimal_tree();
    t.set("sim.aux_clones", "2");
    const RunConfig cfg = build_run_config(t);
    CHECK(cfg.scenario.agents.size() == 3 + 2 * 2);
    int egos = 0;
    for (const auto& a : cfg.scenario.agents) egos += a.kind == hydra::sim::AgentKind::Ego;
    CHECK(egos == 1);
    CHECK(cfg.scenario.agents[3].agent_id == "bad#1");
    CHECK(cfg.scenario.agents.back().agent_id == "helper#2");
}

TEST_CASE("hydra with a zero iteration budget equals hydra_no_pgo") {
    Tree a = minimal_tree();
    a.set("run.method", "hydra");
    a.set("pgo.max_iters", "0");
    a.set("sim.pose_noise_sigma", "0.4");
    Tree b = minimal_tree();
    b.set("run.method", "hydra_no_pgo");
    b.set("sim.pose_noise_sigma", "0.4");

    const RunResult ra = run_method(build_run_config(a));
    const RunResult rb = run_method(build_run_config(b));
    CHECK(!ra.pgo_enabled);
    CHECK(!rb.pgo_enabled);
    CHECK(reports_equal(ra.report, rb.report));
}

TEST_CASE("frame workers do not change the result") {
    Tree t = minimal_tree();
    t.set("sim.n_frames", "6");
    t.set("run.method", "hydra");
    const RunResult serial = run_method(build_run_config(t));
    t.set("run.jobs", "4");
    const RunResult parallel = run_method(build_run_config(t));
    CHECK(reports_equal(serial.report, parallel.report));
    REQUIRE(serial.frame_verdicts.size() == parallel.frame_verdicts.size());
    for (std::size_t f = 0; f < serial.frame_verdicts.size(); ++f) {
        for (std::size_t v = 0; v < serial.frame_verdicts[f].size(); ++v) {
            CHECK(serial.frame_verdicts[f][v].s_domain ==
                  parallel.frame_verdicts[f][v].s_domain);
        }
    }
}

TEST_CASE("in-memory replay from the echo reproduces the run") {
    Tree t = minimal_tree();
    t.set("run.method", "hydra");
    t.set("sim.seed", "99");
    const RunResult first = run_method(build_run_config(t));

    Tree replay = default_tree();
    replay.merge(Tree::parse_string(t.echo(), "manifest.echo"));
    const RunResult second = run_method(build_run_config(replay));
    CHECK(reports_equal(first.report, second.report));
}

TEST_CASE("run results carry diagnostics") {
    Tree t = minimal_tree();
    t.set("run.method", "hydra");
    t.set("sim.pose_noise_sigma", "0.4");
    t.set("sim.n_frames", "8");
    const RunResult res = run_method(build_run_config(t));
    CHECK(res.frames == 8);
    CHECK(res.pgo_enabled);
    CHECK(res.scores_by_kind.count("homogeneous") == 1);
    CHECK(res.scores_by_kind.count("het_latent") == 1);
    CHECK(res.scores_by_kind.at("homogeneous").count == 8);
    CHECK(res.scores_by_kind.at("homogeneous").mean >
          res.scores_by_kind.at("het_latent").mean);
    CHECK(res.mean_pose_error_before > 0.0);

    // Non-pgo methods never report pose correction.
    t.set("run.method", "late_only");
    const RunResult late = run_method(build_run_config(t));
    CHECK(!late.pgo_enabled);
    CHECK(late.mean_pose_error_before == 0.0);
}
