#include <doctest.h>

#include <set>

#include "advrl/instances.hpp"
#include "advrl/rng.hpp"
#include "advrl/serialization.hpp"
#include "helpers.hpp"

using namespace advrl;

namespace {

TabularMdp chain(double row_mass = 1.0, double reward = 0.5) {
    Eigen::MatrixXd t(2, 2);
    t << 0.0, row_mass,
         0.0, 1.0;
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(2, 1, reward);
    return TabularMdp(2, 1, 2, t, Eigen::Vector2d(1.0, 0.0), {r, r});
}

}  // namespace

TEST_SUITE("mdp_core") {

TEST_CASE("validate_mdp reports the row and deficit of a short transition row") {
    const auto report = validate_mdp(chain(0.9));
    REQUIRE(report.size() == 1);
    CHECK(report[0].location == "transition[0][0]");
    CHECK(report[0].message.find("s=0, a=0") != std::string::npos);
    CHECK(report[0].message.find("deficit 0.1") != std::string::npos);
}

TEST_CASE("validate_mdp accepts a valid chain") { CHECK(validate_mdp(chain()).empty()); }

TEST_CASE("validate_mdp flags rewards outside the unit interval") {
    const auto report = validate_mdp(chain(1.0, 1.5));
    REQUIRE(report.size() == 4);
    CHECK(report[0].message.find("reward out of [0,1] at (0,0,0)") == 0);
}

TEST_CASE("perturbation sets are canonical and checked") {
    PerturbationSet b(3, {{2, 0}, {1}, {2, 1, 0}}, true);
    CHECK(std::vector<int>(b.allowed(0).begin(), b.allowed(0).end()) == std::vector<int>{0, 2});
    CHECK(std::vector<int>(b.allowed(2).begin(), b.allowed(2).end()) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(PerturbationSet(2, {{0}, {}}, false), ValidationError);
    CHECK_THROWS_AS(PerturbationSet(2, {{0, 0}, {1}}, false), ValidationError);
    CHECK_THROWS_AS(PerturbationSet(2, {{0, 2}, {1}}, false), ValidationError);
    CHECK_THROWS_AS(PerturbationSet(2, {{1}, {1}}, true), ValidationError);
    CHECK_NOTHROW(PerturbationSet(2, {{1}, {1}}, false));
}

TEST_CASE("thm2 one-step has the four named pure attackers in canonical order") {
    const auto in = gen_thm2(1);
    const auto all = enumerate_pure_attackers(in.mdp, in.perturbation, 100);
    REQUIRE(all.size() == 4);
    CHECK(all[testing::kConst1] == PureAttacker::constant(1, 2, 0));
    CHECK(all[testing::kGood] == PureAttacker::identity(1, 2));
    CHECK(all[testing::kBad] == PureAttacker(1, 2, {1, 0}));
    CHECK(all[testing::kConst2] == PureAttacker::constant(1, 2, 1));
}

TEST_CASE("identity-only perturbations give exactly one attacker") {
    for (int h = 1; h <= 4; ++h) {
        const auto in = gen_random(testing::random_spec(3, 2, h, 1, 11));
        const auto all = enumerate_pure_attackers(in.mdp, in.perturbation);
        REQUIRE(all.size() == 1);
        CHECK(all[0] == PureAttacker::identity(h, 3));
    }
}

TEST_CASE("prop1 at H=2 has 64 pure attackers") {
    const auto in = gen_prop1(2);
    CHECK(count_pure_attackers(in.mdp, in.perturbation) == 64);
    CHECK(enumerate_pure_attackers(in.mdp, in.perturbation).size() == 64);
}

TEST_CASE("enumeration cap is enforced") {
    const auto in = gen_prop1(2);
    CHECK_THROWS_AS(enumerate_pure_attackers(in.mdp, in.perturbation, 63), CapExceeded);
    try {
        enumerate_pure_attackers(in.mdp, in.perturbation, 10);
    } catch (const CapExceeded& e) {
        CHECK(e.count() == 64);
        CHECK(e.cap() == 10);
    }
}

TEST_CASE("property: enumeration is a canonical bijection respecting B") {
    CounterRng rng(5, Stream::generator);
    for (int trial = 0; trial < 30; ++trial) {
        const int S = 2 + static_cast<int>(rng.next() % 3);
        const int H = 1 + static_cast<int>(rng.next() % 2);
        std::vector<std::vector<int>> allowed(static_cast<std::size_t>(S));
        std::size_t expected = 1;
        for (int s = 0; s < S; ++s) {
            for (int o = 0; o < S; ++o) {
                if (o == s || rng.uniform() < 0.4) allowed[static_cast<std::size_t>(s)].push_back(o);
            }
        }
        PerturbationSet b(S, allowed, true);
        for (int h = 0; h < H; ++h) {
            for (int s = 0; s < S; ++s) expected *= b.allowed(s).size();
        }
        const auto in = gen_random(testing::random_spec(S, 2, H, 1, trial));
        const auto first = enumerate_pure_attackers(in.mdp, b);
        const auto second = enumerate_pure_attackers(in.mdp, b);
        REQUIRE(first.size() == expected);
        CHECK(first == second);
        CHECK(std::set<PureAttacker>(first.begin(), first.end()).size() == expected);
        CHECK(std::is_sorted(first.begin(), first.end()));
        for (std::size_t j = 0; j < first.size(); ++j) {
            CHECK(first[j].respects(b));
            CHECK(canonical_attacker_id(first[j], b) == j);
        }
    }
}

TEST_CASE("mixed attacker invariants") {
    const auto id = PureAttacker::identity(1, 2);
    const auto c = PureAttacker::constant(1, 2, 0);
    CHECK_NOTHROW(MixedAttacker({id, c}, Eigen::Vector2d(0.25, 0.75)));
    CHECK_THROWS_AS(MixedAttacker({id, c}, Eigen::Vector2d(0.25, 0.7)), ValidationError);
    CHECK_THROWS_AS(MixedAttacker({id, id}, Eigen::Vector2d(0.5, 0.5)), ValidationError);
    CHECK_THROWS_AS(MixedAttacker({id, c}, Eigen::Vector2d(-0.5, 1.5)), ValidationError);
}

TEST_CASE("average_attackers merges equal members") {
    const auto id = PureAttacker::identity(1, 2);
    const auto c = PureAttacker::constant(1, 2, 0);
    std::vector<MixedAttacker> xs{MixedAttacker::pure(id), MixedAttacker({id, c}, Eigen::Vector2d(0.5, 0.5))};
    std::vector<double> mass{1.0, 1.0};
    const auto avg = average_attackers(xs, mass);
    REQUIRE(avg.size() == 2);
    for (std::size_t m = 0; m < avg.size(); ++m) {
        CHECK(avg.weight(m) == doctest::Approx(avg.member(m) == id ? 0.75 : 0.25));
    }
}

TEST_CASE("observation histories") {
    ObservationHistory h({1, 0, 2});
    CHECK(h.step() == 2);
    CHECK(h.observation(1) == 2);
    CHECK(h.action(0) == 0);
    CHECK(h.valid_for(3, 2, 2));
    CHECK_FALSE(h.valid_for(3, 2, 1));
    CHECK_FALSE(h.valid_for(2, 2, 2));
    CHECK(h.extended(1, 0).entries() == std::vector<int>{1, 0, 2, 1, 0});
    CHECK_THROWS_AS(ObservationHistory({1, 0}), ValidationError);
}

TEST_CASE("victim policy lookups never fall back silently") {
    VictimPolicy p(PolicyKind::deterministic, 2, 2, 2);
    p.set_action(ObservationHistory({0}), 1);
    CHECK(p.decision(ObservationHistory({0}))(1) == 1.0);
    CHECK_THROWS_AS(p.decision(ObservationHistory({1})), MissingHistory);
    CHECK_THROWS_AS(p.decision(ObservationHistory({0, 1, 0})), MissingHistory);
    CHECK_THROWS_AS(p.set_action(ObservationHistory({0, 1, 0, 0, 0}), 0), ValidationError);

    VictimPolicy q(PolicyKind::stochastic, 2, 2, 1);
    CHECK_THROWS_AS(q.set_distribution(ObservationHistory({0}), Eigen::Vector2d(0.5, 0.6)), ValidationError);
    q.set_distribution(ObservationHistory({0}), Eigen::Vector2d(0.25, 0.75));
    CHECK(q.decision(ObservationHistory({0}))(1) == 0.75);
}

TEST_CASE("policy class ids are dense in insertion order") {
    const auto in = gen_thm2(1);
    auto ps = testing::thm2_policies(in);
    PolicyClass c;
    for (int i = 0; i < 4; ++i) CHECK(c.add(ps[static_cast<std::size_t>(i)], {i + 1, i}) == i);
    const std::vector<int> ids{2, 0};
    const auto sub = c.subset(ids);
    REQUIRE(sub.size() == 2);
    CHECK(sub[0] == ps[2]);
    CHECK(sub.provenance(1).iteration == 1);
}

TEST_CASE("meta policy is a simplex vector") {
    CHECK(MetaPolicy::uniform(4).weights().sum() == doctest::Approx(1.0));
    CHECK_THROWS_AS(MetaPolicy(Eigen::Vector2d(0.6, 0.6)), ValidationError);
}

TEST_CASE("property: serialization round-trips instances and policy classes") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto in = gen_random(testing::random_spec(3, 2, 2, 2, seed, 0.3));
        const auto text = instance_to_json(in).dump();
        const auto back = instance_from_json(Json::parse(text));
        CHECK(back.mdp == in.mdp);
        CHECK(back.perturbation == in.perturbation);
        CHECK(instance_to_json(back).dump() == text);

        const auto br = best_response(in.mdp, in.perturbation, MixedAttacker::pure(PureAttacker::identity(2, 3)));
        PolicyClass c;
        c.add(br.policy, {1, 7});
        VictimPolicy sto(PolicyKind::stochastic, 3, 2, 1);
        sto.set_distribution(ObservationHistory({2}), Eigen::Vector2d(0.125, 0.875));
        c.add(sto);
        const auto c2 = class_from_json(Json::parse(class_to_json(c).dump()));
        REQUIRE(c2.size() == 2);
        CHECK(c2[0] == c[0]);
        CHECK(c2[1] == c[1]);
        CHECK(c2.provenance(0).attacker_id == 7);
        CHECK(c2.provenance(1).iteration == -1);
    }
}

TEST_CASE("instance loader rejects the first violation with a path") {
    auto doc = instance_to_json(gen_thm2(1));
    auto bad = doc;
    bad["transition"][1][0] = {0.5, 0.4};
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("$.transition[1][0]"), ValidationError);
    bad = doc;
    bad["reward"][0][1][1] = 1.5;
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("$.reward[0][1][1]"), ValidationError);
    bad = doc;
    bad["transition"][0][0] = {{0.5, 0.5}, {0.5, 0.5}};
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("time-dependent"), ValidationError);
    bad = doc;
    bad.erase("initial_dist");
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("initial_dist"), ValidationError);
    bad = doc;
    bad["perturbation"]["allowed"][0] = Json::array({1});
    CHECK_THROWS_WITH_AS(instance_from_json(bad), doctest::Contains("$.perturbation"), ValidationError);
}

}
