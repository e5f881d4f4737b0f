#include "deepglo/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace deepglo {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<Index>(data.size()) != rows * cols) {
    throw DataError("matrix entry has " + std::to_string(data.size()) + " values for shape " + std::to_string(rows) +
                    "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  Vector v(static_cast<Index>(data.size()));
  std::copy(data.begin(), data.end(), v.data());
  return v;
}

json network_to_json(const TcnNetwork& net) {
  const TcnConfig& c = net.config();
  const auto p = net.parameters();
  return {{"config",
           {{"kernel_size", c.kernel_size},
            {"channels", c.channels},
            {"input_channels", c.input_channels},
            {"series_channels", c.series_channels},
            {"use_residual", c.use_residual}}},
          {"seed", net.seed()},
          {"parameters", std::vector<double>(p.begin(), p.end())}};
}

TcnNetwork network_from_json(const json& j) {
  const json& jc = j.at("config");
  TcnConfig c;
  c.kernel_size = jc.at("kernel_size").get<Index>();
  c.channels = jc.at("channels").get<std::vector<Index>>();
  c.input_channels = jc.at("input_channels").get<Index>();
  c.series_channels = jc.at("series_channels").get<Index>();
  c.use_residual = jc.at("use_residual").get<bool>();
  TcnNetwork net;
  try {
    net = TcnNetwork(c);
  } catch (const ConfigError& e) {
    throw DataError(std::string("network config: ") + e.what());
  }
  const auto params = j.at("parameters").get<std::vector<double>>();
  if (static_cast<Index>(params.size()) != net.parameter_count()) {
    throw DataError("network has " + std::to_string(params.size()) + " parameters, config needs " +
                    std::to_string(net.parameter_count()));
  }
  std::copy(params.begin(), params.end(), net.parameters().begin());
  net.set_seed(j.at("seed").get<std::uint64_t>());
  return net;
}

json mf_config_to_json(const TcnMfConfig& c) {
  return {{"rank", c.rank},
          {"lambda_t", c.lambda_t},
          {"iters_init", c.iters_init},
          {"iters_train", c.iters_train},
          {"iters_alt", c.iters_alt},
          {"factor_lr", c.factor_lr},
          {"factor_optimizer", to_string(c.factor_optimizer)},
          {"factor_batch_rows", c.factor_batch_rows},
          {"factor_batch_cols", c.factor_batch_cols},
          {"alpha", c.alpha},
          {"rolling_objective", to_string(c.rolling_objective)},
          {"rolling_max_iters", c.rolling_max_iters},
          {"reg_start", to_string(c.reg_start)},
          {"tx_kernel_size", c.tx.kernel_size},
          {"tx_channels", c.tx.channels},
          {"tx_loss", to_string(c.tx_loss)}};
}

TcnMfConfig mf_config_from_json(const json& j) {
  TcnMfConfig c;
  c.rank = j.at("rank").get<Index>();
  c.lambda_t = j.at("lambda_t").get<double>();
  c.iters_init = j.at("iters_init").get<int>();
  c.iters_train = j.at("iters_train").get<int>();
  c.iters_alt = j.at("iters_alt").get<int>();
  c.factor_lr = j.at("factor_lr").get<double>();
  c.factor_optimizer = parse_optimizer(j.at("factor_optimizer").get<std::string>());
  c.factor_batch_rows = j.at("factor_batch_rows").get<Index>();
  c.factor_batch_cols = j.at("factor_batch_cols").get<Index>();
  c.alpha = j.at("alpha").get<double>();
  c.rolling_objective = parse_rolling_objective(j.at("rolling_objective").get<std::string>());
  c.rolling_max_iters = j.at("rolling_max_iters").get<int>();
  c.reg_start = parse_reg_start(j.at("reg_start").get<std::string>());
  c.tx.kernel_size = j.at("tx_kernel_size").get<Index>();
  c.tx.channels = j.at("tx_channels").get<std::vector<Index>>();
  c.tx_loss = parse_loss(j.at("tx_loss").get<std::string>());
  return c;
}

json factor_to_json(const FactorModel& m) {
  return {{"f", matrix_to_json(m.f)},
          {"x", matrix_to_json(m.x)},
          {"tx", network_to_json(m.tx)},
          {"lambda_t", m.lambda_t},
          {"reg_start", to_string(m.reg_start)}};
}

FactorModel factor_from_json(const json& j) {
  FactorModel m;
  m.f = matrix_from_json(j.at("f"));
  m.x = matrix_from_json(j.at("x"));
  m.tx = network_from_json(j.at("tx"));
  m.lambda_t = j.at("lambda_t").get<double>();
  m.reg_start = parse_reg_start(j.at("reg_start").get<std::string>());
  if (m.f.cols() != m.x.rows()) throw DataError("factor shapes disagree: F has " + std::to_string(m.f.cols()) +
                                                " columns, X has " + std::to_string(m.x.rows()) + " rows");
  return m;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "local") return ModelKind::local;
  if (name == "global") return ModelKind::global;
  if (name == "deepglo") return ModelKind::deepglo;
  if (name == "dln") return ModelKind::dln;
  if (name == "oracle") return ModelKind::oracle;
  throw ConfigError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::local: return "local";
    case ModelKind::global: return "global";
    case ModelKind::deepglo: return "deepglo";
    case ModelKind::dln: return "dln";
    case ModelKind::oracle: return "oracle";
  }
  return "unknown";
}

Index CovariateSpec::channels() const {
  return (time_start.empty() ? 0 : kTimeFeatureCount) + static_features.cols();
}

CovariateTensor build_covariates(const CovariateSpec& spec, Index n, Index length) {
  CovariateTensor z(n, length);
  if (!spec.time_start.empty()) {
    z.append(make_time_covariates(length, parse_timestamp(spec.time_start),
                                  std::chrono::seconds(spec.time_step_seconds)));
  }
  if (spec.static_features.cols() > 0) {
    if (spec.static_features.rows() != n) {
      throw DataError("static covariates have " + std::to_string(spec.static_features.rows()) + " rows for " +
                      std::to_string(n) + " series");
    }
    z.append(replicate_static(spec.static_features, length));
  }
  return z;
}

const Matrix& Checkpoint::basis() const {
  if (global) return global->x;
  if (deepglo) return deepglo->global.x;
  throw ConfigError("checkpoint of kind '" + to_string(kind) + "' has no basis series");
}

std::string serialize_checkpoint(const Checkpoint& cp) {
  json j;
  j["format"] = "deepglo-checkpoint";
  j["version"] = kFormatVersion;
  j["kind"] = to_string(cp.kind);
  j["seed"] = cp.seed;
  j["train_len"] = cp.train_len;
  j["normalization"] = {{"mode", cp.normalization.mode == NormalizationMode::none ? "none" : "per-series"},
                        {"means", vector_to_json(cp.normalization.means)},
                        {"stds", vector_to_json(cp.normalization.stds)}};
  j["covariates"] = {{"time_start", cp.covariates.time_start},
                     {"time_step_seconds", cp.covariates.time_step_seconds},
                     {"static", matrix_to_json(cp.covariates.static_features)}};
  j["mf"] = mf_config_to_json(cp.mf);
  switch (cp.kind) {
    case ModelKind::local:
      if (!cp.local) throw Error("local checkpoint without a network");
      j["model"] = {{"network", network_to_json(*cp.local)}};
      break;
    case ModelKind::global:
      if (!cp.global) throw Error("global checkpoint without a factor model");
      j["model"] = {{"factors", factor_to_json(*cp.global)}};
      break;
    case ModelKind::deepglo: {
      if (!cp.deepglo) throw Error("deepglo checkpoint without a model");
      const DeepGloModel& m = *cp.deepglo;
      j["model"] = {{"factors", factor_to_json(m.global)},
                    {"hybrid", network_to_json(m.hybrid)},
                    {"combiner", to_string(m.combiner)}};
      if (m.attention) j["model"]["attention"] = network_to_json(*m.attention);
      break;
    }
    case ModelKind::dln:
      if (!cp.dln) throw Error("dln checkpoint without networks");
      j["model"] = {{"mean", network_to_json(cp.dln->mean_net)},
                    {"residual", network_to_json(cp.dln->residual_net)},
                    {"window", cp.dln->window}};
      break;
    case ModelKind::oracle:
      if (!cp.oracle) throw Error("oracle checkpoint without values");
      j["model"] = {{"values", matrix_to_json(*cp.oracle)}};
      break;
  }
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "deepglo-checkpoint") throw DataError("not a deepglo checkpoint");
    if (j.at("version").get<int>() != kFormatVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
    }
    Checkpoint cp;
    cp.kind = parse_model_kind(j.at("kind").get<std::string>());
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.train_len = j.at("train_len").get<Index>();
    const json& jn = j.at("normalization");
    cp.normalization.mode = jn.at("mode").get<std::string>() == "none" ? NormalizationMode::none
                                                                        : NormalizationMode::per_series_whiten;
    cp.normalization.means = vector_from_json(jn.at("means"));
    cp.normalization.stds = vector_from_json(jn.at("stds"));
    const json& jz = j.at("covariates");
    cp.covariates.time_start = jz.at("time_start").get<std::string>();
    cp.covariates.time_step_seconds = jz.at("time_step_seconds").get<long long>();
    cp.covariates.static_features = matrix_from_json(jz.at("static"));
    cp.mf = mf_config_from_json(j.at("mf"));
    const json& jm = j.at("model");
    switch (cp.kind) {
      case ModelKind::local: cp.local = network_from_json(jm.at("network")); break;
      case ModelKind::global: cp.global = factor_from_json(jm.at("factors")); break;
      case ModelKind::deepglo: {
        DeepGloModel m;
        m.global = factor_from_json(jm.at("factors"));
        m.hybrid = network_from_json(jm.at("hybrid"));
        m.combiner = parse_combiner(jm.at("combiner").get<std::string>());
        if (jm.contains("attention")) m.attention = network_from_json(jm.at("attention"));
        if (m.combiner == Combiner::attention && !m.attention) {
          throw DataError("attention combiner without an attention network");
        }
        cp.deepglo = std::move(m);
        break;
      }
      case ModelKind::dln: {
        DlnNetwork d;
        d.mean_net = network_from_json(jm.at("mean"));
        d.residual_net = network_from_json(jm.at("residual"));
        d.window = jm.at("window").get<Index>();
        cp.dln = std::move(d);
        break;
      }
      case ModelKind::oracle: cp.oracle = matrix_from_json(jm.at("values")); break;
    }
    return cp;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << text;
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_checkpoint(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_network(const TcnNetwork& net) { return network_to_json(net).dump(); }

TcnNetwork parse_network(const std::string& text) {
  try {
    return network_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed network: ") + e.what());
  }
}

}  // namespace deepglo
