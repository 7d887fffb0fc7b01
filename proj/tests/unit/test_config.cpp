#include "mcmcnet/config.hpp"
#include "mcmcnet/error.hpp"

#include "doctest.h"

#include <sstream>

using namespace mcmcnet;

namespace {

RunConfig parse(const std::string& text) {
    std::stringstream s(text);
    return parse_config(s);
}

std::string dump(const RunConfig& c) {
    std::stringstream s;
    write_config(s, c);
    return s.str();
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("defaults validate for every problem") {
    for (ProblemKind k : {ProblemKind::eit, ProblemKind::dot, ProblemKind::qpat}) {
        RunConfig c = default_config(k);
        CHECK_NOTHROW(validate(c));
        CHECK(c.problem.kind == k);
        apply_full_scale(c);
        CHECK_NOTHROW(validate(c));
        CHECK(c.datagen_count >= default_config(k).datagen_count);
    }
}

TEST_CASE("write then parse reproduces the configuration") {
    RunConfig c = default_config(ProblemKind::qpat);
    c.seed = 77;
    c.train.lr = 0.00123;
    c.phantom.circles = {{{0.1, -0.2}, 0.3, 0.5}};
    c.hellinger.checkpoints = {1, 4, 9};
    const std::string text = dump(c);
    CHECK(dump(parse(text)) == text);
}

TEST_CASE("problem section selects the defaults") {
    const RunConfig c = parse("[run]\nproblem = dot\n[mcmc]\nburn_in = 17\n");
    CHECK(c.problem.kind == ProblemKind::dot);
    CHECK(c.mcmc.burn_in == 17);
    CHECK(c.mcmc.samples == default_config(ProblemKind::dot).mcmc.samples);
}

TEST_CASE("unknown keys and bad values name the key") {
    try {
        parse("[mcmc]\nburnin = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "mcmc.burnin");
    }
    try {
        parse("[train]\nlr = fast\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "train.lr");
    }
    try {
        parse("[mcmc]\ndelta = 0.7\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "mcmc.delta");
    }
    try {
        parse("[hellinger]\ncheckpoints = 5, 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "hellinger.checkpoints");
    }
}

TEST_CASE("manifest section is ignored") {
    const RunConfig c = parse("[manifest]\ncommand = train\nversion = 1.0.0\n[run]\nseed = 4\n");
    CHECK(c.seed == 4);
}

TEST_CASE("missing config file is a config error") {
    CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), Error);
}

}
