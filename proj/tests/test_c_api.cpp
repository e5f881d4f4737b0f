// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "deepglo/deepglo.h"

namespace {

const std::string kData = std::string(DEEPGLO_TEST_DATA) + "/small_series.csv";
const std::string kConfig = std::string(DEEPGLO_TEST_DATA) + "/small.cfg";

class Scratch {
 public:
  Scratch() {
    path_ = std::filesystem::temp_directory_path() / ("deepglo_capi_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct Config {
  deepglo_config* ptr = nullptr;
  Config() { EXPECT_EQ(deepglo_config_create(&ptr), DEEPGLO_OK); }
  ~Config() { deepglo_config_destroy(ptr); }
};

std::string get(const deepglo_config* c, const char* key) {
  size_t need = 0;
  EXPECT_EQ(deepglo_config_get(c, key, nullptr, 0, &need), DEEPGLO_ERR_INVALID_ARGUMENT);
  std::string s(need, '\0');
  EXPECT_EQ(deepglo_config_get(c, key, s.data(), s.size(), &need), DEEPGLO_OK);
  s.resize(need - 1);
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(deepglo_version(), "1.0.0");
  EXPECT_STREQ(deepglo_status_name(DEEPGLO_ERR_DIVERGED), "training diverged");
  EXPECT_STREQ(deepglo_last_error(), "");
}

TEST(CApi, ConfigSetGetAndErrors) {
  Config c;
  EXPECT_EQ(deepglo_config_has_seed(c.ptr), 0);
  EXPECT_EQ(deepglo_config_set(c.ptr, "seed", "17"), DEEPGLO_OK);
  EXPECT_EQ(deepglo_config_has_seed(c.ptr), 1);
  EXPECT_EQ(get(c.ptr, "seed"), "17");
  EXPECT_EQ(get(c.ptr, "tcn.channels"), "32,32,32,32,32,1");
  EXPECT_EQ(deepglo_config_set(c.ptr, "no.such.key", "1"), DEEPGLO_ERR_CONFIG);
  EXPECT_NE(std::string(deepglo_last_error()).find("no.such.key"), std::string::npos);
  EXPECT_EQ(deepglo_config_set(c.ptr, nullptr, "1"), DEEPGLO_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(deepglo_config_create(nullptr), DEEPGLO_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(deepglo_config_apply_text(c.ptr, "train.max_epochs = 3\nmf.rank = 5\n"), DEEPGLO_OK);
  EXPECT_EQ(get(c.ptr, "mf.rank"), "5");
  EXPECT_EQ(deepglo_config_validate(c.ptr), DEEPGLO_OK);
  EXPECT_EQ(deepglo_config_set(c.ptr, "train.patience", "0"), DEEPGLO_OK);
  EXPECT_EQ(deepglo_config_validate(c.ptr), DEEPGLO_ERR_CONFIG);
}

TEST(CApi, RenderRoundTrips) {
  Config a;
  ASSERT_EQ(deepglo_config_load(a.ptr, kConfig.c_str()), DEEPGLO_OK);
  size_t need = 0;
  deepglo_config_render(a.ptr, nullptr, 0, &need);
  std::string text(need, '\0');
  ASSERT_EQ(deepglo_config_render(a.ptr, text.data(), text.size(), &need), DEEPGLO_OK);
  Config b;
  ASSERT_EQ(deepglo_config_apply_text(b.ptr, text.c_str()), DEEPGLO_OK);
  std::string again(need, '\0');
  ASSERT_EQ(deepglo_config_render(b.ptr, again.data(), again.size(), &need), DEEPGLO_OK);
  EXPECT_EQ(text, again);
}

TEST(CApi, KeyListing) {
  const size_t n = deepglo_config_key_count();
  ASSERT_GT(n, 20u);
  bool saw_seed = false;
  for (size_t i = 0; i < n; ++i) {
    ASSERT_NE(deepglo_config_key_name(i), nullptr);
    EXPECT_GT(std::string(deepglo_config_key_help(i)).size(), 0u);
    saw_seed |= std::string(deepglo_config_key_name(i)) == "seed";
  }
  EXPECT_TRUE(saw_seed);
  EXPECT_EQ(deepglo_config_key_name(n), nullptr);
}

TEST(CApi, MetricsMatchHandValues) {
  const double obs[] = {1, 2, 3, 4};
  const double pred[] = {2, 2, 3, 4};
  deepglo_metrics m{};
  ASSERT_EQ(deepglo_compute_metrics(obs, pred, 2, 2, &m), DEEPGLO_OK);
  EXPECT_DOUBLE_EQ(m.wape, 0.1);
  EXPECT_DOUBLE_EQ(m.mae, 0.25);
  EXPECT_DOUBLE_EQ(m.rmse, 0.5);
  const double zeros[] = {0, 0};
  ASSERT_EQ(deepglo_compute_metrics(zeros, zeros, 1, 2, &m), DEEPGLO_OK);
  EXPECT_TRUE(std::isnan(m.wape));
  EXPECT_EQ(deepglo_compute_metrics(obs, pred, 0, 2, &m), DEEPGLO_ERR_INVALID_ARGUMENT);
}

TEST(CApi, TrainLoadPredict) {
  Scratch dir;
  Config c;
  ASSERT_EQ(deepglo_config_load(c.ptr, kConfig.c_str()), DEEPGLO_OK);
  ASSERT_EQ(deepglo_config_set(c.ptr, "seed", "3"), DEEPGLO_OK);
  const std::string ckpt = dir / "g.json";
  ASSERT_EQ(deepglo_train(c.ptr, "global", kData.c_str(), ckpt.c_str(), nullptr, nullptr), DEEPGLO_OK)
      << deepglo_last_error();
  deepglo_model* m = nullptr;
  ASSERT_EQ(deepglo_model_load(ckpt.c_str(), &m), DEEPGLO_OK);
  EXPECT_STREQ(deepglo_model_kind(m), "global");
  size_t n = 0;
  ASSERT_EQ(deepglo_model_series(m, &n), DEEPGLO_OK);
  ASSERT_EQ(n, 6u);
  std::vector<double> history(6 * 120, 1.0);
  std::vector<double> out(6 * 4, NAN);
  ASSERT_EQ(deepglo_model_predict(m, history.data(), 6, 120, 4, out.data()), DEEPGLO_OK) << deepglo_last_error();
  for (double v : out) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(deepglo_model_predict(m, history.data(), 5, 120, 4, out.data()), DEEPGLO_ERR_DATA);
  deepglo_model_destroy(m);

  const std::string basis = dir / "basis.csv";
  EXPECT_EQ(deepglo_emit_basis(ckpt.c_str(), basis.c_str()), DEEPGLO_OK);
  EXPECT_EQ(deepglo_train(c.ptr, "quantum", kData.c_str(), ckpt.c_str(), nullptr, nullptr), DEEPGLO_ERR_CONFIG);
}

TEST(CApi, OracleEvaluationScoresZero) {
  Scratch dir;
  Config c;
  ASSERT_EQ(deepglo_config_load(c.ptr, kConfig.c_str()), DEEPGLO_OK);
  const std::string ckpt = dir / "oracle.json";
  const std::string report = dir / "report.json";
  ASSERT_EQ(deepglo_train(c.ptr, "oracle", kData.c_str(), ckpt.c_str(), nullptr, nullptr), DEEPGLO_OK);
  ASSERT_EQ(deepglo_evaluate(c.ptr, ckpt.c_str(), kData.c_str(), report.c_str(), nullptr), DEEPGLO_OK)
      << deepglo_last_error();
  const std::string text = slurp(report);
  EXPECT_NE(text.find("\"oracle\""), std::string::npos);
  EXPECT_NE(text.find("\"naive_training_mean\""), std::string::npos);
  EXPECT_EQ(slurp(ckpt), slurp(std::string(DEEPGLO_TEST_DATA) + "/oracle_checkpoint.json"));
}

TEST(CApi, MissingFilesAreDataErrors) {
  Config c;
  EXPECT_EQ(deepglo_train(c.ptr, "local", "/nonexistent/y.csv", "/tmp/x.json", nullptr, nullptr), DEEPGLO_ERR_DATA);
  EXPECT_NE(std::string(deepglo_last_error()).find("/nonexistent/y.csv"), std::string::npos);
  deepglo_model* m = nullptr;
  EXPECT_EQ(deepglo_model_load("/nonexistent/m.json", &m), DEEPGLO_ERR_DATA);
  EXPECT_EQ(m, nullptr);
}

}  // namespace
