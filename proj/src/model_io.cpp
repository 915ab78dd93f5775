#include <fstream>

#include "lqres/model.hpp"

namespace lqres {

using nlohmann::json;

namespace {

json to_array(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_array(m.row(i).transpose()));
  return rows;
}

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::MalformedFile, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) malformed(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(where, std::string("missing field '") + key + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) malformed(where, "expected a number");
  return j.get<double>();
}

Eigen::Index integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) malformed(where, "expected an integer");
  return j.get<Eigen::Index>();
}

Eigen::VectorXd vector(const json& j, const std::string& where, Eigen::Index expected = -1) {
  if (!j.is_array()) malformed(where, "expected an array");
  if (expected >= 0 && static_cast<Eigen::Index>(j.size()) != expected)
    malformed(where, "expected " + std::to_string(expected) + " entries, found " +
                         std::to_string(j.size()));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) malformed(where, "expected a non-empty array of rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) =
        vector(j[i], where + "[" + std::to_string(i) + "]", cols).transpose();
  return m;
}

json component_to_json(const ComponentModel& c) {
  json j;
  j["gate"] = {{"decision", to_string(c.gate.kind)},
               {"rel_rms", c.gate.rel_rms},
               {"threshold", c.gate.threshold_used}};
  j["a_row"] = to_array(c.ops.a_row);
  j["q_row"] = to_array(c.ops.q_row);
  j["bias"] = c.ops.bias;
  j["has_bias"] = c.ops.has_bias;
  if (c.net) {
    j["net"] = {{"input_dim", c.net->input_dim()},
                {"width", c.net->width()},
                {"blocks", c.net->blocks()},
                {"params", to_array(c.net->flat())}};
  }
  return j;
}

ComponentModel component_from_json(const json& j, Eigen::Index n, Eigen::Index index,
                                   const std::string& where) {
  ComponentModel c;
  const json& gate = field(j, "gate", where);
  try {
    c.gate.kind = gate_kind_from_string(field(gate, "decision", where + ".gate").get<std::string>());
  } catch (const json::exception&) {
    malformed(where + ".gate.decision", "expected a string");
  }
  c.gate.rel_rms = number(field(gate, "rel_rms", where + ".gate"), where + ".gate.rel_rms");
  c.gate.threshold_used =
      number(field(gate, "threshold", where + ".gate"), where + ".gate.threshold");

  c.ops.component = index;
  c.ops.a_row = vector(field(j, "a_row", where), where + ".a_row", n);
  c.ops.q_row = vector(field(j, "q_row", where), where + ".q_row", num_quad_features(n));
  c.ops.bias = number(field(j, "bias", where), where + ".bias");
  if (const auto it = j.find("has_bias"); it != j.end()) {
    if (!it->is_boolean()) malformed(where + ".has_bias", "expected a boolean");
    c.ops.has_bias = it->get<bool>();
  }

  if (const auto it = j.find("net"); it != j.end() && !it->is_null()) {
    const std::string w = where + ".net";
    const auto input_dim = integer(field(*it, "input_dim", w), w + ".input_dim");
    const auto width = integer(field(*it, "width", w), w + ".width");
    const auto blocks = integer(field(*it, "blocks", w), w + ".blocks");
    if (input_dim != n) malformed(w + ".input_dim", "does not match n");
    if (width < 1 || blocks < 0) malformed(w, "invalid architecture");
    ResNetParams net(input_dim, width, blocks);
    net.flat() = vector(field(*it, "params", w), w + ".params", net.num_params());
    c.net = std::move(net);
  }
  if (c.net.has_value() != (c.gate.kind == GateKind::NeedsNetwork))
    malformed(where, "network presence contradicts the gate decision");
  return c;
}

}  // namespace

json model_to_json(const LQModel& model) {
  model.validate();
  json j;
  j["version"] = kModelSchemaVersion;
  j["kind"] = to_string(model.kind);
  j["n"] = model.n;
  j["variable_names"] = model.variable_names;
  json comps = json::array();
  for (const auto& c : model.components) comps.push_back(component_to_json(c));
  j["components"] = std::move(comps);
  if (model.standardization)
    j["standardization"] = {{"offset", to_array(model.standardization->offset)},
                            {"scale", to_array(model.standardization->scale)}};
  if (model.pod) {
    json pod = {{"rank", model.pod->rank},
                {"energy_captured", model.pod->energy_captured},
                {"singular_values", to_array(model.pod->singular_values)},
                {"v_matrix", to_rows(model.pod->v_matrix)}};
    if (model.pod->center) pod["center"] = to_array(*model.pod->center);
    j["pod_basis"] = std::move(pod);
  }
  j["provenance"] = model.provenance;
  return j;
}

LQModel model_from_json(const json& j) {
  const std::string root = "$";
  const json& version = field(j, "version", root);
  if (!version.is_number_integer() || version.get<int>() != kModelSchemaVersion)
    throw Error(ErrorCode::VersionMismatch, "model schema version " + version.dump() +
                                                ", expected " +
                                                std::to_string(kModelSchemaVersion));
  LQModel m;
  const json& kind = field(j, "kind", root);
  if (kind == "continuous") {
    m.kind = ModelKind::Continuous;
  } else if (kind == "discrete") {
    m.kind = ModelKind::Discrete;
  } else {
    malformed("$.kind", "must be 'continuous' or 'discrete'");
  }
  m.n = integer(field(j, "n", root), "$.n");
  if (m.n < 1) malformed("$.n", "must be >= 1");

  if (const auto it = j.find("variable_names"); it != j.end()) {
    if (!it->is_array()) malformed("$.variable_names", "expected an array");
    for (const auto& name : *it) {
      if (!name.is_string()) malformed("$.variable_names", "expected strings");
      m.variable_names.push_back(name.get<std::string>());
    }
    if (!m.variable_names.empty() && static_cast<Eigen::Index>(m.variable_names.size()) != m.n)
      malformed("$.variable_names", "length differs from n");
  }

  const json& comps = field(j, "components", root);
  if (!comps.is_array()) malformed("$.components", "expected an array");
  if (static_cast<Eigen::Index>(comps.size()) != m.n)
    malformed("$.components", "found " + std::to_string(comps.size()) +
                                  " components for n = " + std::to_string(m.n));
  for (std::size_t i = 0; i < comps.size(); ++i)
    m.components.push_back(component_from_json(comps[i], m.n, static_cast<Eigen::Index>(i),
                                               "$.components[" + std::to_string(i) + "]"));

  if (const auto it = j.find("standardization"); it != j.end() && !it->is_null()) {
    Standardization s;
    s.offset = vector(field(*it, "offset", "$.standardization"), "$.standardization.offset", m.n);
    s.scale = vector(field(*it, "scale", "$.standardization"), "$.standardization.scale", m.n);
    m.standardization = std::move(s);
  }
  if (const auto it = j.find("pod_basis"); it != j.end() && !it->is_null()) {
    const std::string w = "$.pod_basis";
    PODBasis pod;
    pod.rank = integer(field(*it, "rank", w), w + ".rank");
    pod.energy_captured = number(field(*it, "energy_captured", w), w + ".energy_captured");
    pod.singular_values = vector(field(*it, "singular_values", w), w + ".singular_values");
    pod.v_matrix = matrix(field(*it, "v_matrix", w), w + ".v_matrix");
    if (pod.v_matrix.cols() != pod.rank) malformed(w + ".v_matrix", "column count != rank");
    if (const auto c = it->find("center"); c != it->end())
      pod.center = vector(*c, w + ".center", pod.v_matrix.rows());
    m.pod = std::move(pod);
  }
  if (const auto it = j.find("provenance"); it != j.end()) m.provenance = *it;

  try {
    m.validate();
  } catch (const Error& e) {
    malformed("$", e.what());
  }
  return m;
}

void save_model(const LQModel& model, const std::filesystem::path& path) {
  const json j = model_to_json(model);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LQModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile,
                path.string() + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace lqres
