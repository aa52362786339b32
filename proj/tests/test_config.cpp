#include <gtest/gtest.h>

#include "dkql/dkql.hpp"

using namespace dkql;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(Config, ParsesCommentsAndLists) {
    const auto c = parse_config(
        "# desk run\n"
        "simulator = sim2\n"
        "learner=dkrr   # distributed\n"
        "case = N+J\n"
        "n_train = 400\n"
        "m = 1, 5,10\n"
        "lambda = 0.5, 0.25\n"
        "sigma = auto\n"
        "fixed = 0.2, 1.0\n"
        "\n"
        "seed = 18446744073709551615\n");
    EXPECT_EQ(c.simulator, SimKind::sim2);
    EXPECT_EQ(c.learner, Learner::dkrr);
    EXPECT_EQ(c.fcase, FeatureCase::NJ);
    EXPECT_EQ(c.n_train, 400u);
    EXPECT_EQ(c.m, (std::vector<std::size_t>{1, 5, 10}));
    EXPECT_EQ(c.lambda, (std::vector<double>{0.5, 0.25}));
    EXPECT_TRUE(c.sigma.empty());
    EXPECT_EQ(c.sigma_lo, 0.01);
    EXPECT_EQ(c.sigma_hi, 10.0);
    EXPECT_EQ(c.fixed, (std::vector<std::string>{"0.2", "1.0"}));
    EXPECT_EQ(c.seed, 18446744073709551615ULL);
    EXPECT_EQ(c.n_eval, 1000u);
}

TEST(Config, EmptyTextGivesDefaults) {
    EXPECT_EQ(parse_config(""), default_config(SimKind::sim1));
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("n_train = 10\nbogus = 1\n"), 2);
    EXPECT_EQ(error_line("seed = 1\n\nseed = 2\n"), 3);
    EXPECT_EQ(error_line("n_train = 10\nn_eval =\n"), 2);
    EXPECT_EQ(error_line("n_train = ten\n"), 1);
    EXPECT_EQ(error_line("n_train = -5\n"), 1);
    EXPECT_EQ(error_line("just words\n"), 1);
    EXPECT_EQ(error_line("simulator = sim3\n"), 1);
    EXPECT_EQ(error_line("learner = svm\n"), 1);
    EXPECT_EQ(error_line("simulator = sim2\n# x\ncase = SS\n"), 3);
    EXPECT_EQ(error_line("n_train = 10\nm = 1, 20\n"), 2);
    EXPECT_EQ(error_line("lambda = 0.1, -1\n"), 1);
    EXPECT_EQ(error_line("sigma_lo = 2\nsigma_hi = 1\n"), 2);
    EXPECT_EQ(error_line("fixed = AAA, ABX\n"), 1);
    EXPECT_EQ(error_line("simulator = sim2\nfixed = 1.5\n"), 2);
    EXPECT_EQ(error_line("repeats = 0\n"), 1);
    EXPECT_EQ(error_line("threads = 0\n"), 1);
}

TEST(Config, ErrorMessageMentionsLine) {
    try {
        parse_config("\n\nwhat = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("what"), std::string::npos);
    }
}

TEST(Config, LearnerNames) {
    for (auto l : {Learner::ls, Learner::krr, Learner::dkrr, Learner::skrr, Learner::fixed})
        EXPECT_EQ(parse_learner(to_string(l)), l);
    EXPECT_TRUE(is_kernel_learner(Learner::skrr));
    EXPECT_FALSE(is_kernel_learner(Learner::ls));
}

TEST(Config, FingerprintTracksContent) {
    ExperimentConfig a = default_config(SimKind::sim1), b = a;
    EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
    EXPECT_EQ(config_fingerprint(a).size(), 16u);
    b.seed = 2;
    EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
}

TEST(ConfigInvariant, EmitParseRoundTrip) {
    EXPECT_EQ(parse_config(emit_config(default_config(SimKind::sim1))), default_config(SimKind::sim1));
    EXPECT_EQ(parse_config(emit_config(default_config(SimKind::sim2))), default_config(SimKind::sim2));
    SplitMix64 rng(1);
    for (int rep = 0; rep < 200; ++rep) {
        ExperimentConfig c = default_config(rng.bernoulli(0.5) ? SimKind::sim1 : SimKind::sim2);
        c.learner = static_cast<Learner>(rng.below(5));
        c.fcase = c.simulator == SimKind::sim2 ? (rng.bernoulli(0.5) ? FeatureCase::MJ : FeatureCase::NJ)
                                               : static_cast<FeatureCase>(rng.below(4));
        c.n_train = 100 + rng.below(5000);
        c.n_eval = 1 + rng.below(3000);
        c.m.clear();
        for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) c.m.push_back(1 + rng.below(100));
        c.lambda.clear();
        for (std::size_t k = 0, n = rng.below(4); k < n; ++k) c.lambda.push_back(rng.uniform_open() * 10);
        c.sigma.clear();
        for (std::size_t k = 0, n = rng.below(4); k < n; ++k) c.sigma.push_back(rng.uniform_open());
        c.sigma_lo = rng.uniform(0.001, 0.1);
        c.sigma_hi = c.sigma_lo * rng.uniform(1.5, 1000.0);
        c.sigma_count = 2 + rng.below(30);
        c.repeats = 1 + rng.below(50);
        c.seed = rng();
        c.out = "runs/r" + std::to_string(rep);
        c.fixed.clear();
        if (rng.bernoulli(0.5)) {
            if (c.simulator == SimKind::sim1)
                c.fixed = {"AAA", "BAB"};
            else
                c.fixed = {"0.3", "0.75"};
        }
        c.threads = unsigned(1 + rng.below(8));
        const std::string text = emit_config(c);
        EXPECT_EQ(parse_config(text), c) << text;
        EXPECT_EQ(emit_config(parse_config(text)), text);
    }
}

TEST(Config, LoadMissingFileIsIoError) {
    EXPECT_THROW(load_config("/nonexistent/dkql.cfg"), IoError);
}
