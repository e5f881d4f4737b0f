#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "deepglo/data.hpp"
#include "deepglo/dln.hpp"
#include "deepglo/hybrid.hpp"
#include "deepglo/tcn.hpp"
#include "deepglo/tcn_mf.hpp"

namespace deepglo {

enum class ModelKind { local, global, deepglo, dln, oracle };
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

/// How the original covariates Z were built, so they can be rebuilt over any
/// horizon: optional time features plus per-series static features.
struct CovariateSpec {
  std::string time_start;  // empty = no time features
  long long time_step_seconds = 3600;
  Matrix static_features;  // [n × s]; s = 0 for none

  Index channels() const;
  bool empty() const { return channels() == 0; }
};

/// Z over columns [0, length) for n series.
CovariateTensor build_covariates(const CovariateSpec& spec, Index n, Index length);

/// Trained model plus what is needed to use it on new data. Exactly one of
/// the model members is set, matching kind.
struct Checkpoint {
  ModelKind kind = ModelKind::local;
  std::uint64_t seed = 0;
  Index train_len = 0;
  NormalizationState normalization;
  CovariateSpec covariates;
  TcnMfConfig mf;  // rolling-update settings of global and deepglo models

  std::optional<TcnNetwork> local;
  std::optional<FactorModel> global;
  std::optional<DeepGloModel> deepglo;
  std::optional<DlnNetwork> dln;
  std::optional<Matrix> oracle;

  /// Basis rows X of global and deepglo checkpoints; ConfigError otherwise.
  const Matrix& basis() const;
};

/// JSON text; every double survives a round trip bit for bit.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws DataError on malformed or inconsistent input.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_network(const TcnNetwork& net);
TcnNetwork parse_network(const std::string& text);

}  // namespace deepglo
