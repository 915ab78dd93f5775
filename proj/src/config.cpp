#include "lqres/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace lqres {

using nlohmann::json;

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Fhn: return "fhn";
    case SystemKind::Glycolysis: return "glycolysis";
    case SystemKind::Custom: return "custom";
  }
  return "custom";
}

std::vector<Interval> glycolysis_ic_ranges() {
  return {{0.15, 1.60}, {0.19, 2.16}, {0.04, 0.20}, {0.10, 0.35},
          {0.08, 0.30}, {0.14, 2.67}, {0.05, 0.10}};
}

RunConfig paper_config(SystemKind system) {
  RunConfig c;
  c.system = system;
  switch (system) {
    case SystemKind::Fhn:
      c.variable_names = {"v", "w"};
      c.data.ic_ranges = {{-1.0, 1.0}, {-1.0, 1.0}};
      c.data.count = 10;
      c.data.t_span = {0.0, 200.0};
      c.data.num_points = 5000;
      c.test.t_span = {0.0, 200.0};
      c.test.num_points = 5000;
      c.architecture = {10, 2};
      c.hyper.epochs = 500;
      c.hyper.learning_rate = 5e-4;
      c.output_dir = "out/fhn";
      break;
    case SystemKind::Glycolysis:
      c.variable_names = {"S1", "S2", "S3", "S4", "S5", "S6", "S7"};
      c.data.ic_ranges = glycolysis_ic_ranges();
      c.data.count = 30;
      c.data.t_span = {0.0, 10.0};
      c.data.num_points = 4000;
      c.test.t_span = {0.0, 10.0};
      c.test.num_points = 4000;
      c.architecture = {35, 5};
      c.hyper.epochs = 2000;
      c.hyper.learning_rate = 1e-3;
      c.output_dir = "out/glycolysis";
      break;
    case SystemKind::Custom:
      c.output_dir = "out/custom";
      break;
  }
  c.hyper.batch_size = 512;
  c.hyper.weight_decay = 1e-4;
  return c;
}

RunConfig desk_config(SystemKind system) {
  RunConfig c = paper_config(system);
  switch (system) {
    case SystemKind::Fhn:
      c.hyper.epochs = 150;
      c.test.t_span = {0.0, 100.0};
      c.test.num_points = 2500;
      c.output_dir = "out/fhn-desk";
      break;
    case SystemKind::Glycolysis:
      c.data.count = 10;
      c.data.num_points = 2000;
      c.test.t_span = {0.0, 10.0};
      c.test.num_points = 2000;
      c.test.horizons = {5.0, 10.0};
      c.hyper.epochs = 300;
      // Stencil error at h = 0.005 lifts the exactly linear-quadratic
      // species to rel_rms ~ 4e-3.
      c.gate_threshold = 1e-2;
      c.standardize = true;
      c.output_dir = "out/glycolysis-desk";
      break;
    case SystemKind::Custom:
      break;
  }
  return c;
}

Eigen::Index RunConfig::state_dim() const {
  switch (system) {
    case SystemKind::Fhn: return 2;
    case SystemKind::Glycolysis: return 7;
    case SystemKind::Custom:
      return static_cast<Eigen::Index>(variable_names.size());
  }
  return 0;
}

Architecture RunConfig::architecture_for(Eigen::Index component) const {
  const auto it = architecture_overrides.find(component);
  return it == architecture_overrides.end() ? architecture : it->second;
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seeds = {seed, seed + 1, seed + 2, seed + 3, seed + 4};
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (system != SystemKind::Custom) {
    if (static_cast<Eigen::Index>(data.ic_ranges.size()) != state_dim())
      fail("data.ic_ranges must have " + std::to_string(state_dim()) + " entries");
    for (std::size_t i = 0; i < data.ic_ranges.size(); ++i)
      if (data.ic_ranges[i].lo > data.ic_ranges[i].hi)
        fail("data.ic_ranges[" + std::to_string(i) + "] has lo > hi");
    if (data.count < 1) fail("data.count must be >= 1");
    if (data.num_points < 2) fail("data.num_points must be >= 2");
    if (!(data.t_span.t1 > data.t_span.t0)) fail("data.t_span must satisfy t1 > t0");
    if (test.count < 1) fail("test.count must be >= 1");
    if (test.num_points < 2) fail("test.num_points must be >= 2");
    if (!(test.t_span.t1 > test.t_span.t0)) fail("test.t_span must satisfy t1 > t0");
    if (seeds.test == seeds.data) fail("seeds.test must differ from seeds.data");
  } else {
    if (data.files.empty()) fail("data.files must list at least one trajectory CSV");
  }
  if (model_kind == ModelKind::Continuous && system != SystemKind::Custom && data.num_points < 5)
    fail("data.num_points must be >= 5 for stencil derivatives");
  if (!variable_names.empty() && system != SystemKind::Custom &&
      static_cast<Eigen::Index>(variable_names.size()) != state_dim())
    fail("variable_names must have " + std::to_string(state_dim()) + " entries");
  if (!(gate_threshold > 0.0)) fail("gate_threshold must be > 0");
  if (architecture.width < 1) fail("architecture.width must be >= 1");
  if (architecture.blocks < 0) fail("architecture.blocks must be >= 0");
  for (const auto& [k, a] : architecture_overrides)
    if (a.width < 1 || a.blocks < 0)
      fail("architecture.overrides." + std::to_string(k) + " is invalid");
  for (double h : test.horizons)
    if (!(h > test.t_span.t0)) fail("test.horizons entries must exceed test.t_span[0]");
  if (pod) {
    if (pod->truncation.rank && *pod->truncation.rank < 1) fail("pod.rank must be >= 1");
    if (!pod->truncation.rank &&
        !(pod->truncation.energy > 0.0 && pod->truncation.energy <= 1.0))
      fail("pod.energy must lie in (0, 1]");
  }
  if (system == SystemKind::Fhn && !(fhn.tau > 0.0)) fail("params.tau must be > 0");
  try {
    if (system == SystemKind::Glycolysis) lqres::validate(gly);
  } catch (const Error& e) {
    fail(std::string("params: ") + e.what());
  }
  try {
    hyper.validate();
  } catch (const Error& e) {
    fail(std::string("train: ") + e.what());
  }
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown field " + where + "." + key);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

void read_count(const json& obj, const char* key, std::size_t& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw ConfigError(where + "." + key + " must be a non-negative integer");
  out = it->get<std::size_t>();
}

void read_span(const json& obj, const char* key, TimeSpan& out, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
    throw ConfigError(where + "." + key + " must be [t0, t1]");
  out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

void read_paths(const json& obj, const char* key, std::vector<std::filesystem::path>& out,
                const std::filesystem::path& base, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_array()) throw ConfigError(where + "." + key + " must be an array of paths");
  out.clear();
  for (const auto& p : *it) {
    if (!p.is_string()) throw ConfigError(where + "." + key + " must contain strings");
    std::filesystem::path path = p.get<std::string>();
    out.push_back(path.is_relative() && !base.empty() ? base / path : path);
  }
}

Architecture read_arch(const json& j, Architecture base, const std::string& where) {
  check_keys(j, {"width", "blocks", "overrides"}, where);
  read(j, "width", base.width, where);
  read(j, "blocks", base.blocks, where);
  return base;
}

SystemKind system_from(const json& j) {
  if (!j.is_string()) throw ConfigError("system must be a string");
  const auto s = j.get<std::string>();
  if (s == "fhn") return SystemKind::Fhn;
  if (s == "glycolysis") return SystemKind::Glycolysis;
  if (s == "custom") return SystemKind::Custom;
  throw ConfigError("system must be one of fhn, glycolysis, custom; got '" + s + "'");
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"system", "params", "variable_names", "data", "test", "model_kind",
              "gate_threshold", "include_bias", "standardize", "pod", "architecture", "train",
              "seeds", "output_dir"},
             "config");
  if (!j.contains("system")) throw ConfigError("missing field system");
  RunConfig c = paper_config(system_from(j["system"]));

  if (const auto it = j.find("params"); it != j.end()) {
    const std::string w = "params";
    if (c.system == SystemKind::Fhn) {
      check_keys(*it, {"a", "b", "tau", "i_ext"}, w);
      read(*it, "a", c.fhn.a, w);
      read(*it, "b", c.fhn.b, w);
      read(*it, "tau", c.fhn.tau, w);
      read(*it, "i_ext", c.fhn.i_ext, w);
    } else if (c.system == SystemKind::Glycolysis) {
      check_keys(*it, {"j0", "k1", "k2", "k3", "k4", "k5", "k6", "K1", "q", "N_tot", "A_tot",
                       "kappa", "psi"},
                 w);
      auto& g = c.gly;
      read(*it, "j0", g.j0, w);
      read(*it, "k1", g.k1, w);
      read(*it, "k2", g.k2, w);
      read(*it, "k3", g.k3, w);
      read(*it, "k4", g.k4, w);
      read(*it, "k5", g.k5, w);
      read(*it, "k6", g.k6, w);
      read(*it, "K1", g.K1, w);
      read(*it, "q", g.q, w);
      read(*it, "N_tot", g.N_tot, w);
      read(*it, "A_tot", g.A_tot, w);
      read(*it, "kappa", g.kappa, w);
      read(*it, "psi", g.psi, w);
    } else if (!it->empty()) {
      throw ConfigError("params: custom systems take no parameters");
    }
  }
  read(j, "variable_names", c.variable_names, "config");

  if (const auto it = j.find("data"); it != j.end()) {
    const std::string w = "data";
    check_keys(*it, {"ic_ranges", "count", "t_span", "num_points", "files"}, w);
    if (const auto r = it->find("ic_ranges"); r != it->end()) {
      if (!r->is_array()) throw ConfigError("data.ic_ranges must be an array of [lo, hi]");
      c.data.ic_ranges.clear();
      for (const auto& pair : *r) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
          throw ConfigError("data.ic_ranges entries must be [lo, hi]");
        c.data.ic_ranges.push_back({pair[0].get<double>(), pair[1].get<double>()});
      }
    }
    read_count(*it, "count", c.data.count, w);
    read_span(*it, "t_span", c.data.t_span, w);
    read_count(*it, "num_points", c.data.num_points, w);
    read_paths(*it, "files", c.data.files, base_dir, w);
  }
  if (const auto it = j.find("test"); it != j.end()) {
    const std::string w = "test";
    check_keys(*it, {"count", "t_span", "num_points", "horizons", "files"}, w);
    read_count(*it, "count", c.test.count, w);
    read_span(*it, "t_span", c.test.t_span, w);
    read_count(*it, "num_points", c.test.num_points, w);
    read(*it, "horizons", c.test.horizons, w);
    read_paths(*it, "files", c.test.files, base_dir, w);
  }
  if (const auto it = j.find("model_kind"); it != j.end()) {
    if (*it == "continuous") {
      c.model_kind = ModelKind::Continuous;
    } else if (*it == "discrete") {
      c.model_kind = ModelKind::Discrete;
    } else {
      throw ConfigError("model_kind must be 'continuous' or 'discrete'");
    }
  }
  read(j, "gate_threshold", c.gate_threshold, "config");
  read(j, "include_bias", c.include_bias, "config");
  read(j, "standardize", c.standardize, "config");
  if (const auto it = j.find("pod"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"rank", "energy", "center"}, "pod");
    PodSettings pod;
    if (it->contains("rank")) {
      Eigen::Index r = 0;
      read(*it, "rank", r, "pod");
      pod.truncation = PodTruncation::fixed_rank(r);
    } else {
      double eta = 0.9999;
      read(*it, "energy", eta, "pod");
      pod.truncation = PodTruncation::energy_fraction(eta);
    }
    read(*it, "center", pod.center, "pod");
    c.pod = pod;
  }
  if (const auto it = j.find("architecture"); it != j.end()) {
    c.architecture = read_arch(*it, c.architecture, "architecture");
    if (const auto o = it->find("overrides"); o != it->end()) {
      if (!o->is_object()) throw ConfigError("architecture.overrides must be an object");
      for (const auto& [key, value] : o->items()) {
        Eigen::Index comp = -1;
        try {
          std::size_t used = 0;
          comp = std::stol(key, &used);
          if (used != key.size()) comp = -1;
        } catch (const std::exception&) {
        }
        if (comp < 0) throw ConfigError("architecture.overrides keys must be component indices");
        c.architecture_overrides[comp] =
            read_arch(value, c.architecture, "architecture.overrides." + key);
      }
    }
  }
  if (const auto it = j.find("train"); it != j.end()) {
    const std::string w = "train";
    check_keys(*it, {"epochs", "learning_rate", "batch_size", "weight_decay", "beta1", "beta2",
                     "epsilon"},
               w);
    read(*it, "epochs", c.hyper.epochs, w);
    read(*it, "learning_rate", c.hyper.learning_rate, w);
    read(*it, "batch_size", c.hyper.batch_size, w);
    read(*it, "weight_decay", c.hyper.weight_decay, w);
    read(*it, "beta1", c.hyper.beta1, w);
    read(*it, "beta2", c.hyper.beta2, w);
    read(*it, "epsilon", c.hyper.epsilon, w);
  }
  if (const auto it = j.find("seeds"); it != j.end()) {
    const std::string w = "seeds";
    check_keys(*it, {"data", "split", "init", "shuffle", "test"}, w);
    read(*it, "data", c.seeds.data, w);
    read(*it, "split", c.seeds.split, w);
    read(*it, "init", c.seeds.init, w);
    read(*it, "shuffle", c.seeds.shuffle, w);
    read(*it, "test", c.seeds.test, w);
  }
  if (const auto it = j.find("output_dir"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("output_dir must be a string");
    c.output_dir = it->get<std::string>();
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + " at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  json j;
  j["system"] = to_string(c.system);
  if (c.system == SystemKind::Fhn) {
    j["params"] = {{"a", c.fhn.a}, {"b", c.fhn.b}, {"tau", c.fhn.tau}, {"i_ext", c.fhn.i_ext}};
  } else if (c.system == SystemKind::Glycolysis) {
    const auto& g = c.gly;
    j["params"] = {{"j0", g.j0}, {"k1", g.k1},       {"k2", g.k2},       {"k3", g.k3},
                   {"k4", g.k4}, {"k5", g.k5},       {"k6", g.k6},       {"K1", g.K1},
                   {"q", g.q},   {"N_tot", g.N_tot}, {"A_tot", g.A_tot}, {"kappa", g.kappa},
                   {"psi", g.psi}};
  }
  j["variable_names"] = c.variable_names;
  json ranges = json::array();
  for (const auto& r : c.data.ic_ranges) ranges.push_back({r.lo, r.hi});
  auto paths = [](const std::vector<std::filesystem::path>& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back(p.generic_string());
    return a;
  };
  j["data"] = {{"ic_ranges", ranges},
               {"count", c.data.count},
               {"t_span", {c.data.t_span.t0, c.data.t_span.t1}},
               {"num_points", c.data.num_points}};
  if (!c.data.files.empty()) j["data"]["files"] = paths(c.data.files);
  j["test"] = {{"count", c.test.count},
               {"t_span", {c.test.t_span.t0, c.test.t_span.t1}},
               {"num_points", c.test.num_points},
               {"horizons", c.test.horizons}};
  if (!c.test.files.empty()) j["test"]["files"] = paths(c.test.files);
  j["model_kind"] = to_string(c.model_kind);
  j["gate_threshold"] = c.gate_threshold;
  j["include_bias"] = c.include_bias;
  j["standardize"] = c.standardize;
  if (c.pod) {
    json pod = {{"center", c.pod->center}};
    if (c.pod->truncation.rank)
      pod["rank"] = *c.pod->truncation.rank;
    else
      pod["energy"] = c.pod->truncation.energy;
    j["pod"] = pod;
  } else {
    j["pod"] = nullptr;
  }
  json arch = {{"width", c.architecture.width}, {"blocks", c.architecture.blocks}};
  if (!c.architecture_overrides.empty()) {
    json o = json::object();
    for (const auto& [k, a] : c.architecture_overrides)
      o[std::to_string(k)] = {{"width", a.width}, {"blocks", a.blocks}};
    arch["overrides"] = o;
  }
  j["architecture"] = arch;
  j["train"] = {{"epochs", c.hyper.epochs},         {"learning_rate", c.hyper.learning_rate},
                {"batch_size", c.hyper.batch_size}, {"weight_decay", c.hyper.weight_decay},
                {"beta1", c.hyper.beta1},           {"beta2", c.hyper.beta2},
                {"epsilon", c.hyper.epsilon}};
  j["seeds"] = {{"data", c.seeds.data},
                {"split", c.seeds.split},
                {"init", c.seeds.init},
                {"shuffle", c.seeds.shuffle},
                {"test", c.seeds.test}};
  j["output_dir"] = c.output_dir.generic_string();
  return j;
}

}  // namespace lqres
