#include <gtest/gtest.h>

#include "deepglo/config.hpp"
#include "test_support.hpp"

namespace deepglo {
namespace {

TEST(Config, DefaultsFollowTheReferenceSettings) {
  const RunConfig c;
  EXPECT_EQ(c.local.kernel_size, 7);
  EXPECT_EQ(c.local.channels, (std::vector<Index>{32, 32, 32, 32, 32, 1}));
  EXPECT_EQ(c.global.lambda_t, 0.2);
  EXPECT_EQ(c.global.alpha, 0.2);
  EXPECT_EQ(c.global.rank, 64);
  EXPECT_EQ(c.train.patience, 7);
  EXPECT_EQ(c.train.max_epochs, 300);
  EXPECT_EQ(c.combiner, Combiner::covariate);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeyRejectedWithItsName) {
  RunConfig c;
  try {
    set_config_value(c, "train.epochs", "3");
    FAIL() << "no exception";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.epochs"), std::string::npos);
  }
}

TEST(Config, BadValuesNameKeyAndLine) {
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "train.max_epochs", "ten"), ConfigError);
  EXPECT_THROW(set_config_value(c, "train.learning_rate", "1e-3x"), ConfigError);
  EXPECT_THROW(set_config_value(c, "tcn.residual", "maybe"), ConfigError);
  EXPECT_THROW(set_config_value(c, "deepglo.combiner", "sum"), ConfigError);
  try {
    apply_config_text(c, "seed = 1\n\ntrain.optimizer = rmsprop\n", "run.cfg");
    FAIL() << "no exception";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("run.cfg:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("train.optimizer"), std::string::npos) << msg;
  }
  EXPECT_THROW(apply_config_text(c, "just words\n"), ConfigError);
}

TEST(Config, TextParsingHandlesCommentsAndLists) {
  RunConfig c;
  apply_config_text(c,
                    "# comment\n"
                    "seed = 42   # trailing\n"
                    "tcn.channels = [16, 16, 1]\n"
                    "mf.rolling_objective = alpha_hybrid\n"
                    "normalize = per-series\n");
  EXPECT_TRUE(c.seed_set);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.local.channels, (std::vector<Index>{16, 16, 1}));
  EXPECT_EQ(c.global.rolling_objective, RollingObjective::alpha_hybrid);
  EXPECT_EQ(c.normalize, NormalizationMode::per_series_whiten);
}

TEST(Config, ResolvedEchoRoundTrips) {
  RunConfig c;
  apply_config_text(c,
                    "seed = 7\ntrain.learning_rate = 0.1\nmf.lambda_t = 0.30000000000000004\n"
                    "covariates.time_start = 2014-01-01 00:00\neval.t0 = 100\n");
  const std::string first = render_config(c);
  RunConfig back;
  apply_config_text(back, first);
  EXPECT_EQ(render_config(back), first);
  EXPECT_EQ(back.global.lambda_t, 0.30000000000000004);
  EXPECT_EQ(back.train.learning_rate, 0.1);
  // Every key is echoed exactly once.
  for (const ConfigKey& k : config_keys()) {
    const std::string needle = "\n" + k.name + " = ";
    EXPECT_NE(("\n" + first).find(needle), std::string::npos) << k.name;
  }
}

TEST(Config, ValidateCatchesCrossFieldProblems) {
  RunConfig c;
  c.local.channels = {8, 2};
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.train.patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.dln_window = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, FileLoading) {
  test::TempDir dir;
  const auto p = dir.write("run.cfg", "train.max_epochs = 12\n");
  RunConfig c;
  apply_config_file(c, p);
  EXPECT_EQ(c.train.max_epochs, 12);
  EXPECT_THROW(apply_config_file(c, dir.path() / "absent.cfg"), ConfigError);
}

}  // namespace
}  // namespace deepglo
