#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "micns/errors.hpp"
#include "micns/fuzzy.hpp"
#include "micns/rng.hpp"

using namespace micns;
using namespace micns::fuzzy;

TEST_CASE("truth values reject anything outside the unit interval") {
    CHECK(TruthValue(0.0).value() == 0.0);
    CHECK(TruthValue(1.0).value() == 1.0);
    CHECK_THROWS_AS(TruthValue(-0.001), ValueError);
    CHECK_THROWS_AS(TruthValue(1.001), ValueError);
    CHECK_THROWS_AS(TruthValue(std::nan("")), ValueError);
}

TEST_CASE("godel connectives are min/max and negation is 1 - x") {
    CHECK(fuzzy_and(0.3, 0.8) == 0.3);
    CHECK(fuzzy_or(0.3, 0.8) == 0.8);
    CHECK(fuzzy_neg(0.3) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("product semantics uses t-norm a*b and co-norm a+b-ab") {
    CHECK(fuzzy_and(0.3, 0.8, Semantics::product) == doctest::Approx(0.24).epsilon(1e-15));
    CHECK(fuzzy_or(0.3, 0.8, Semantics::product) == doctest::Approx(0.86).epsilon(1e-15));
}

TEST_CASE("de morgan holds under both semantics") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform();
        double b = rng.uniform();
        for (Semantics s : {Semantics::godel, Semantics::product}) {
            double lhs = fuzzy_neg(fuzzy_and(a, b, s));
            double rhs = fuzzy_or(fuzzy_neg(a), fuzzy_neg(b), s);
            CHECK(std::fabs(lhs - rhs) < 1e-12);
        }
    }
}

TEST_CASE("conjunction and disjunction are monotone in both arguments") {
    Rng rng(32);
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform();
        double b = rng.uniform();
        double a2 = a + (1.0 - a) * rng.uniform();  // a2 >= a
        for (Semantics s : {Semantics::godel, Semantics::product}) {
            CHECK(fuzzy_and(a2, b, s) >= fuzzy_and(a, b, s));
            CHECK(fuzzy_or(a2, b, s) >= fuzzy_or(a, b, s));
        }
    }
}

TEST_CASE("booleanize includes its boundary") {
    CHECK(booleanize(0.5));
    CHECK(booleanize(0.500000001));
    CHECK_FALSE(booleanize(0.499999999));
    CHECK(booleanize(0.65, 0.65));
    CHECK_FALSE(booleanize(0.6499999, 0.65));
}

TEST_CASE("rule evaluation is the conjunction of literal degrees") {
    ConjunctiveRule rule{1, {{0, true}, {1, false}}, 0};
    // min(0.9, 1-0.2) = 0.8 under godel; 0.9*0.8 = 0.72 under product.
    CHECK(eval_rule(rule, {0.9, 0.2}) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(eval_rule(rule, {0.9, 0.2}, Semantics::product) ==
          doctest::Approx(0.72).epsilon(1e-15));

    ConjunctiveRule empty{0, {}, 0};
    CHECK(eval_rule(empty, {0.1, 0.1}) == 1.0);

    CHECK_THROWS_AS(eval_rule(rule, {0.9}), ValueError);
    CHECK_THROWS_AS(eval_rule(rule, {0.9, 1.5}), ValueError);
}

TEST_CASE("rules with a repeated concept are rejected during normalization") {
    ConjunctiveRule bad{0, {{2, true}, {2, false}}, 0};
    CHECK_THROWS_AS(bad.normalized(), ValueError);
}

TEST_CASE("rule error rate on the worked example is 0.25 +/- 0.25") {
    ErrorRate r = rule_error_rate({1, 0, 1, 0}, {1, 1, 1, 0});
    CHECK(r.mean == doctest::Approx(0.25).epsilon(1e-15));
    // Sample std of {0,1,0,0} is 0.5; se = 0.5 / sqrt(4).
    CHECK(r.se == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(r.n == 4);
}

TEST_CASE("identical prediction vectors give a zero error rate") {
    ErrorRate r = rule_error_rate({1, 1, 0, 1, 0}, {1, 1, 0, 1, 0});
    CHECK(r.mean == 0.0);
    CHECK(r.se == 0.0);
}

TEST_CASE("rule error rate rejects mismatched and empty inputs") {
    CHECK_THROWS_AS(rule_error_rate({1, 0}, {1}), ValueError);
    CHECK_THROWS_AS(rule_error_rate({}, {}), ValueError);
}

TEST_CASE("format_rule renders connectives, names and the vacuous rule") {
    ConjunctiveRule rule{1, {{0, true}, {4, false}}, 0};
    CHECK(format_rule(rule) == "y_1 ⇐ c_0 ∧ ¬c_4");

    std::vector<std::string> names{"Peripheral ground-glass opacities", "", "", "",
                                   "Absence of lobar consolidation"};
    CHECK(format_rule(rule, names) ==
          "y_1 ⇐ Peripheral ground-glass opacities ∧ "
          "¬Absence of lobar consolidation");

    ConjunctiveRule empty{2, {}, 0};
    CHECK(format_rule(empty) == "y_2 ⇐ ⊤");

    // Literal order in the text follows concept index, not insertion order.
    ConjunctiveRule swapped{1, {{4, false}, {0, true}}, 0};
    CHECK(format_rule(swapped) == format_rule(rule));
}

TEST_CASE("rule sets expose their top rule and serialize to json") {
    RuleSet rs;
    rs.per_class.resize(2);
    rs.per_class[1] = {ConjunctiveRule{1, {{0, true}}, 17},
                       ConjunctiveRule{1, {{1, false}}, 3}};
    rs.fidelity = {0.05, 0.01, 100};

    CHECK(rs.top_rule(1).support == 17);
    CHECK_THROWS_AS(rs.top_rule(0), ValueError);

    auto j = rule_set_to_json(rs, {"A", "B"});
    CHECK(j["classes"][1]["rules"][0]["support"] == 17);
    CHECK(j["classes"][1]["rules"][0]["literals"][0]["name"] == "A");
    CHECK(j["error_rate"]["mean"] == 0.05);
}
