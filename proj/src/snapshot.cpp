#include "reload/snapshot.hpp"

#include "reload/error.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace reload {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "reload-policy";

template <typename Derived>
json row_major(const Eigen::MatrixBase<Derived>& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

template <typename Matrix>
Matrix from_row_major(const json& values, Eigen::Index rows, Eigen::Index cols) {
  if (!values.is_array() || values.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorCode::IoFailure, "matrix payload has the wrong number of entries");
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[i++].get<typename Matrix::Scalar>();
  return m;
}

json network_to_json(const QNetworkd& net) {
  json layers = json::array();
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    layers.push_back({{"weights", row_major(net.weights[l])}, {"biases", row_major(net.biases[l])}});
  return {{"layer_sizes", net.layer_sizes()}, {"layers", layers}};
}

QNetworkd network_from_json(const json& j) {
  const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  QNetworkd net = QNetworkd::zeros(sizes);
  const json& layers = j.at("layers");
  if (layers.size() != net.weights.size()) throw Error(ErrorCode::IoFailure, "layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    net.weights[l] = from_row_major<Eigen::MatrixXd>(layers[l].at("weights"), net.weights[l].rows(),
                                                     net.weights[l].cols());
    net.biases[l] = from_row_major<Eigen::MatrixXd>(layers[l].at("biases"), net.biases[l].rows(), 1);
  }
  return net;
}

}  // namespace

std::string to_text(const PolicySnapshot& s) {
  // JSON has no NaN or infinity; refuse rather than write a file that cannot be loaded.
  const bool finite = s.is_tabular() ? s.q_table().values.allFinite() : s.network().all_finite();
  if (!finite) throw Error(ErrorCode::InvalidArgument, "policy contains non-finite values");
  json j;
  j["format"] = kFormatName;
  j["version"] = s.version;
  j["variant"] = s.is_tabular() ? "tabular" : "dqn";
  j["catalog"] = s.catalog.names();
  j["thresholds"] = {{"rt_low", s.thresholds.rt_low},
                     {"rt_high", s.thresholds.rt_high},
                     {"er_boundary", s.thresholds.er_boundary}};
  j["objective"] = {{"rt_threshold", s.objective.rt_threshold}, {"er_threshold", s.objective.er_threshold}};
  j["episodes"] = s.episodes;
  if (s.is_tabular()) {
    const QTable& q = s.q_table();
    j["q_table"] = {{"rows", q.values.rows()},
                    {"cols", q.values.cols()},
                    {"values", row_major(q.values)},
                    {"visits", row_major(q.visits)}};
  } else {
    j["network"] = network_to_json(s.network());
  }
  return j.dump(1);
}

PolicySnapshot snapshot_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("policy file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != kFormatName)
      throw Error(ErrorCode::IoFailure, "not a policy snapshot");
    const int version = j.at("version").get<int>();
    if (version != kPolicyFormatVersion)
      throw Error(ErrorCode::VersionMismatch, "policy format version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kPolicyFormatVersion));
    PolicySnapshot s;
    s.version = version;
    s.catalog = TransactionCatalog(j.at("catalog").get<std::vector<std::string>>());
    const json& th = j.at("thresholds");
    s.thresholds = {th.at("rt_low").get<double>(), th.at("rt_high").get<double>(),
                    th.at("er_boundary").get<double>()};
    const json& obj = j.at("objective");
    s.objective = {obj.at("rt_threshold").get<double>(), obj.at("er_threshold").get<double>()};
    s.episodes = j.at("episodes").get<std::size_t>();

    const std::string variant = j.at("variant").get<std::string>();
    if (variant == "tabular") {
      const json& q = j.at("q_table");
      const auto rows = q.at("rows").get<Eigen::Index>();
      const auto cols = q.at("cols").get<Eigen::Index>();
      QTable table;
      table.values = from_row_major<Eigen::MatrixXd>(q.at("values"), rows, cols);
      table.visits = from_row_major<decltype(table.visits)>(q.at("visits"), rows, cols);
      if (rows != static_cast<Eigen::Index>(SutState::kCount))
        throw Error(ErrorCode::IoFailure, "Q-table must have one row per SUT state");
      s.policy = std::move(table);
    } else if (variant == "dqn") {
      s.policy = network_from_json(j.at("network"));
    } else {
      throw Error(ErrorCode::IoFailure, "unknown policy variant '" + variant + "'");
    }
    const std::size_t actions = s.is_tabular() ? s.q_table().actions() : s.network().outputs();
    if (actions != s.catalog.size())
      throw Error(ErrorCode::CatalogMismatch, "policy action count does not match its catalog");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoFailure, std::string("malformed policy snapshot: ") + e.what());
  }
}

void save_policy(const PolicySnapshot& snapshot, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << to_text(snapshot) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

PolicySnapshot load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return snapshot_from_text(buf.str());
}

}  // namespace reload
