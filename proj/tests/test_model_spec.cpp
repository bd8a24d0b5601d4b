#include <doctest.h>

#include <stdexcept>

#include "closedpop/model_spec.hpp"

using namespace closedpop;

TEST_CASE("multi-state specs parse flags, states, and canonical names") {
    const ModelSpec mh2 = parse_model_spec("Mh^2");
    CHECK(mh2.multi_state);
    CHECK(mh2.R == 2);
    CHECK(mh2.state);
    CHECK_FALSE(mh2.time);
    CHECK_FALSE(mh2.behaviour);
    CHECK(mh2.name() == "Mh^2");

    const ModelSpec m0_3 = parse_model_spec("M0^3");
    CHECK(m0_3.multi_state);
    CHECK(m0_3.R == 3);
    CHECK_FALSE(m0_3.state);
    CHECK(m0_3.name() == "M0^3");

    const ModelSpec mth2 = parse_model_spec("Mth^2");
    CHECK(mth2.time);
    CHECK(mth2.state);
    CHECK_FALSE(mth2.behaviour);

    const ModelSpec mtbh2 = parse_model_spec("Mtbh^2");
    CHECK(mtbh2.time);
    CHECK(mtbh2.behaviour);
    CHECK(mtbh2.state);
    CHECK(mtbh2.name() == "Mtbh^2");

    const ModelSpec mb1 = parse_model_spec("Mb^1");
    CHECK(mb1.multi_state);
    CHECK(mb1.R == 1);
}

TEST_CASE("single-state specs parse variants and mixture arity") {
    CHECK(parse_model_spec("M0").variant == SsVariant::M0);
    CHECK_FALSE(parse_model_spec("M0").multi_state);
    CHECK(parse_model_spec("Mt").variant == SsVariant::Mt);
    CHECK(parse_model_spec("Mb").variant == SsVariant::Mb);

    const ModelSpec mh2 = parse_model_spec("Mh2");
    CHECK(mh2.variant == SsVariant::MhFinite);
    CHECK(mh2.mixture_k == 2);
    CHECK(mh2.name() == "Mh(2)");

    CHECK(parse_model_spec("Mh3").mixture_k == 3);
    CHECK(parse_model_spec("Mhbe").variant == SsVariant::MhBeta);
    CHECK(parse_model_spec("Mhbe").name() == "Mh(be)");
    CHECK(parse_model_spec("Mhb-be").variant == SsVariant::MhPointBeta);
    CHECK(parse_model_spec("Mhb-be").name() == "Mh(b-be)");
}

TEST_CASE("malformed specs are rejected") {
    CHECK_THROWS_AS(parse_model_spec("Mx"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("M"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mh^0"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mh^"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mh2^2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mtb"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mht^2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_model_spec("Mh0"), std::invalid_argument);
}

TEST_CASE("degenerate one-component mixture parses (it collapses to M0)") {
    const ModelSpec spec = parse_model_spec("Mh1");
    CHECK(spec.variant == SsVariant::MhFinite);
    CHECK(spec.mixture_k == 1);
}
