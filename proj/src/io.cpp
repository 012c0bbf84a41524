#include "twophoton/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "twophoton/hash.hpp"

#ifndef TWOPHOTON_VERSION
#define TWOPHOTON_VERSION "0.0.0"
#endif

namespace twophoton::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return TWOPHOTON_VERSION; }

namespace {

template <typename T>
const char* type_name() {
  if constexpr (std::is_same_v<T, bool>) return "a boolean";
  if constexpr (std::is_integral_v<T>) return "an integer";
  if constexpr (std::is_floating_point_v<T>) return "a number";
  return "a string";
}

// Strips the "field: " prefix ConfigError puts in front of its message.
std::string bare_message(const ConfigError& e) {
  const std::string what = e.what();
  const std::string prefix = e.field() + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path,
                         const std::string& what) const {
    std::string where;
    if (node.IsDefined() && node.Mark().line >= 0) {
      where = " (" + source_ + " line " + std::to_string(node.Mark().line + 1) + ")";
    }
    throw ConfigError(path, what + where);
  }

  void check_keys(const YAML::Node& map, const std::string& path,
                  std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, path, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(kv.first, join(path, key), "unknown key");
    }
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, std::string("expected ") + type_name<T>());
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, path, std::string("expected ") + type_name<T>() + ", got '" + node.Scalar() + "'");
    }
  }

  template <typename T>
  void optional(const YAML::Node& map, const char* key, const std::string& path, T& out) const {
    const YAML::Node n = map[key];
    if (n) out = scalar<T>(n, join(path, key));
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string source_;
};

lattice::Region parse_region(const Reader& r, const YAML::Node& n, const std::string& path) {
  const auto s = r.scalar<std::string>(n, path);
  if (s == "left_clean") return lattice::Region::LeftClean;
  if (s == "disordered") return lattice::Region::Disordered;
  if (s == "right_clean") return lattice::Region::RightClean;
  r.fail(n, path, "expected left_clean, disordered or right_clean");
}

const char* region_name(lattice::Region region) {
  switch (region) {
    case lattice::Region::LeftClean: return "left_clean";
    case lattice::Region::Disordered: return "disordered";
    default: return "right_clean";
  }
}

void parse_model(const Reader& r, const YAML::Node& node, RunConfig& cfg) {
  r.check_keys(node, "model",
               {"type", "nx", "ny", "kappa1", "t2", "phase", "beta", "kappa", "flux",
                "input_edge_length", "disordered_length"});
  std::string type = "haldane";
  r.optional(node, "type", "model", type);
  auto reject = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (node[k]) r.fail(node[k], "model." + std::string(k), "not a parameter of model type " + type);
    }
  };
  if (type == "haldane") {
    reject({"kappa", "flux"});
    lattice::HaldaneSpec s;
    r.optional(node, "nx", "model", s.nx);
    r.optional(node, "ny", "model", s.ny);
    r.optional(node, "kappa1", "model", s.kappa1);
    r.optional(node, "t2", "model", s.t2);
    r.optional(node, "phase", "model", s.phase);
    r.optional(node, "beta", "model", s.beta);
    r.optional(node, "input_edge_length", "model", s.input_edge_length);
    r.optional(node, "disordered_length", "model", s.disordered_length);
    try {
      lattice::validate(s);
    } catch (const ConfigError& e) {
      r.fail(node[e.field()], "model." + e.field(), bare_message(e));
    }
    cfg.model = s;
  } else if (type == "qhe") {
    reject({"kappa1", "t2", "phase", "beta"});
    lattice::QheSpec s;
    r.optional(node, "nx", "model", s.nx);
    r.optional(node, "ny", "model", s.ny);
    r.optional(node, "kappa", "model", s.kappa);
    r.optional(node, "flux", "model", s.flux);
    r.optional(node, "input_edge_length", "model", s.input_edge_length);
    r.optional(node, "disordered_length", "model", s.disordered_length);
    try {
      lattice::validate(s);
    } catch (const ConfigError& e) {
      r.fail(node[e.field()], "model." + e.field(), bare_message(e));
    }
    cfg.model = s;
  } else {
    r.fail(node["type"], "model.type", "expected haldane or qhe");
  }
}

int input_edge_length(const lattice::ModelSpec& m) {
  return std::visit([](const auto& s) { return s.input_edge_length; }, m);
}

Index edge_capacity(const lattice::ModelSpec& m) {
  if (const auto* h = std::get_if<lattice::HaldaneSpec>(&m)) return h->ny;
  return std::get<lattice::QheSpec>(m).nx;
}

void parse_recipes(const Reader& r, const YAML::Node& node, RunConfig& cfg) {
  const int me = input_edge_length(cfg.model);
  if (node.IsScalar()) {
    if (node.Scalar() != "standard") r.fail(node, "recipes", "expected a list or 'standard'");
    cfg.recipes = campaign::standard_recipes(cfg.model, me);
    return;
  }
  if (!node.IsSequence()) r.fail(node, "recipes", "expected a list or 'standard'");
  const auto presets = campaign::standard_recipes(cfg.model, me);
  for (std::size_t i = 0; i < node.size(); ++i) {
    const YAML::Node item = node[i];
    const std::string path = "recipes[" + std::to_string(i) + "]";
    r.check_keys(item, path,
                 {"name", "preset", "sigma_c", "sigma_a", "x0", "phase", "envelope", "input_edge_length"});
    campaign::NamedRecipe recipe;
    if (item["preset"]) {
      const auto p = r.scalar<std::string>(item["preset"], path + ".preset");
      bool found = false;
      for (const auto& pr : presets) {
        if (pr.name == p) {
          recipe = pr;
          found = true;
        }
      }
      if (!found) r.fail(item["preset"], path + ".preset", "unknown preset '" + p + "'");
    } else {
      if (!item["sigma_c"]) r.fail(item, path + ".sigma_c", "required without a preset");
      if (!item["sigma_a"]) r.fail(item, path + ".sigma_a", "required without a preset");
      recipe.recipe = campaign::recipe_for(cfg.model, 1.0, 1.0, me);
      recipe.name = "recipe" + std::to_string(i);
    }
    r.optional(item, "name", path, recipe.name);
    r.optional(item, "sigma_c", path, recipe.recipe.sigma_c);
    r.optional(item, "sigma_a", path, recipe.recipe.sigma_a);
    r.optional(item, "input_edge_length", path, recipe.recipe.input_edge_length);
    if (item["x0"]) recipe.recipe.x0 = r.scalar<double>(item["x0"], path + ".x0");
    if (item["phase"]) {
      const auto s = r.scalar<std::string>(item["phase"], path + ".phase");
      if (s == "alternating") recipe.recipe.phase = biphoton::PhaseConvention::Alternating;
      else if (s == "quarter") recipe.recipe.phase = biphoton::PhaseConvention::Quarter;
      else r.fail(item["phase"], path + ".phase", "expected alternating or quarter");
    }
    if (item["envelope"]) {
      const auto s = r.scalar<std::string>(item["envelope"], path + ".envelope");
      if (s == "half_sum") recipe.recipe.envelope = biphoton::Envelope::HalfSum;
      else if (s == "full_sum") recipe.recipe.envelope = biphoton::Envelope::FullSum;
      else r.fail(item["envelope"], path + ".envelope", "expected half_sum or full_sum");
    }
    if (recipe.name.empty() || recipe.name.find_first_of(",\n\"") != std::string::npos) {
      r.fail(item, path + ".name", "must be non-empty without commas, quotes or newlines");
    }
    try {
      recipe.recipe.validate(edge_capacity(cfg.model));
    } catch (const ConfigError& e) {
      r.fail(item[e.field()] ? item[e.field()] : item, path + "." + e.field(), bare_message(e));
    }
    cfg.recipes.push_back(std::move(recipe));
  }
}

void require(const Reader& r, const YAML::Node& map, const char* key, const std::string& path,
             bool ok, const std::string& what) {
  if (!ok) r.fail(map[key] ? map[key] : map, Reader::join(path, key), what);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", source + " line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  r.check_keys(root, "",
               {"model", "disorder", "recipes", "propagate", "ensemble", "window", "scan",
                "size_study", "classify", "verify", "workers"});

  if (root["model"]) parse_model(r, root["model"], cfg);

  if (const YAML::Node d = root["disorder"]) {
    r.check_keys(d, "disorder", {"sigma", "region", "seed"});
    cfg.disorder_enabled = true;
    r.optional(d, "sigma", "disorder", cfg.disorder.sigma);
    r.optional(d, "seed", "disorder", cfg.disorder.seed);
    if (d["region"]) cfg.disorder.region = parse_region(r, d["region"], "disorder.region");
    require(r, d, "sigma", "disorder",
                    std::isfinite(cfg.disorder.sigma) && cfg.disorder.sigma >= 0.0,
                    "must be finite and non-negative");
  }

  if (root["recipes"]) parse_recipes(r, root["recipes"], cfg);

  if (const YAML::Node p = root["propagate"]) {
    r.check_keys(p, "propagate", {"z", "snapshot_dz", "project", "allow_unprojected", "sweep_reference", "sweep"});
    auto& s = cfg.propagate;
    r.optional(p, "z", "propagate", s.z);
    r.optional(p, "snapshot_dz", "propagate", s.snapshot_dz);
    r.optional(p, "project", "propagate", s.project);
    r.optional(p, "allow_unprojected", "propagate", s.allow_unprojected);
    require(r, p, "project", "propagate", s.project || s.allow_unprojected,
            "false requires allow_unprojected: true");
    r.optional(p, "sweep_reference", "propagate", s.sweep_reference);
    require(r, p, "z", "propagate", std::isfinite(s.z) && s.z >= 0.0, "must be finite and >= 0");
    require(r, p, "snapshot_dz", "propagate", std::isfinite(s.snapshot_dz) && s.snapshot_dz >= 0.0,
                    "must be finite and >= 0");
    if (const YAML::Node w = p["sweep"]) {
      r.check_keys(w, "propagate.sweep", {"z_min", "z_max", "dz"});
      r.optional(w, "z_min", "propagate.sweep", s.sweep.z_min);
      r.optional(w, "z_max", "propagate.sweep", s.sweep.z_max);
      r.optional(w, "dz", "propagate.sweep", s.sweep.dz);
      require(r, w, "dz", "propagate.sweep", s.sweep.dz > 0.0, "must be positive");
      require(r, w, "z_max", "propagate.sweep", s.sweep.z_max >= s.sweep.z_min,
                      "must be >= z_min");
    }
  }

  if (const YAML::Node e = root["ensemble"]) {
    r.check_keys(e, "ensemble", {"instances", "base_seed", "max_failure_fraction"});
    r.optional(e, "instances", "ensemble", cfg.instances);
    r.optional(e, "base_seed", "ensemble", cfg.base_seed);
    r.optional(e, "max_failure_fraction", "ensemble", cfg.max_failure_fraction);
    require(r, e, "instances", "ensemble", cfg.instances >= 1, "must be >= 1");
    require(r, e, "max_failure_fraction", "ensemble",
                    cfg.max_failure_fraction >= 0.0 && cfg.max_failure_fraction <= 1.0,
                    "must lie in [0, 1]");
  }

  if (const YAML::Node w = root["window"]) {
    r.check_keys(w, "window", {"threshold"});
    r.optional(w, "threshold", "window", cfg.window_threshold);
    require(r, w, "threshold", "window",
                    cfg.window_threshold > 0.0 && cfg.window_threshold <= 1.0, "must lie in (0, 1]");
  }

  cfg.scan_grid.input_edge_length = input_edge_length(cfg.model);
  if (const YAML::Node s = root["scan"]) {
    r.check_keys(s, "scan", {"sigma_min", "sigma_max", "points", "instances", "x0"});
    r.optional(s, "sigma_min", "scan", cfg.scan_grid.sigma_min);
    r.optional(s, "sigma_max", "scan", cfg.scan_grid.sigma_max);
    r.optional(s, "points", "scan", cfg.scan_grid.points);
    r.optional(s, "instances", "scan", cfg.scan_instances);
    if (s["x0"]) cfg.scan_grid.x0 = r.scalar<double>(s["x0"], "scan.x0");
    require(r, s, "sigma_min", "scan", cfg.scan_grid.sigma_min > 0.0, "must be positive");
    require(r, s, "sigma_max", "scan", cfg.scan_grid.sigma_max >= cfg.scan_grid.sigma_min,
                    "must be >= sigma_min");
    require(r, s, "points", "scan", cfg.scan_grid.points >= 1, "must be >= 1");
    require(r, s, "instances", "scan", cfg.scan_instances >= 1, "must be >= 1");
  }

  if (const YAML::Node s = root["size_study"]) {
    r.check_keys(s, "size_study", {"sizes", "scale_distance"});
    r.optional(s, "scale_distance", "size_study", cfg.scale_distance);
    if (const YAML::Node list = s["sizes"]) {
      if (!list.IsSequence() || list.size() == 0) r.fail(list, "size_study.sizes", "expected a non-empty list");
      cfg.sizes.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "size_study.sizes[" + std::to_string(i) + "]";
        if (!list[i].IsSequence() || list[i].size() != 2) r.fail(list[i], path, "expected [nx, ny]");
        const int nx = r.scalar<int>(list[i][0], path);
        const int ny = r.scalar<int>(list[i][1], path);
        if (nx < 1 || ny < 1) r.fail(list[i], path, "dimensions must be >= 1");
        cfg.sizes.emplace_back(nx, ny);
      }
    }
  }

  if (const YAML::Node c = root["classify"]) {
    r.check_keys(c, "classify",
                 {"gap_margin", "boundary_depth", "min_edge_weight", "min_circulation",
                  "transport_circulation"});
    r.optional(c, "gap_margin", "classify", cfg.classify.gap_margin);
    r.optional(c, "boundary_depth", "classify", cfg.classify.boundary_depth);
    r.optional(c, "min_edge_weight", "classify", cfg.classify.min_edge_weight);
    r.optional(c, "min_circulation", "classify", cfg.classify.min_circulation);
    r.optional(c, "transport_circulation", "classify", cfg.classify.transport_circulation);
    require(r, c, "transport_circulation", "classify",
                 cfg.classify.transport_circulation == 1 || cfg.classify.transport_circulation == -1,
                 "must be 1 or -1");
    require(r, c, "boundary_depth", "classify", cfg.classify.boundary_depth >= 0, "must be >= 0");
  }

  if (const YAML::Node v = root["verify"]) {
    r.check_keys(v, "verify",
                 {"conserving_cases", "generic_cases", "evolution_states", "distances", "seed",
                  "min_denominator"});
    auto& o = cfg.verify;
    r.optional(v, "conserving_cases", "verify", o.conserving_cases);
    r.optional(v, "generic_cases", "verify", o.generic_cases);
    r.optional(v, "evolution_states", "verify", o.evolution_states);
    r.optional(v, "seed", "verify", o.seed);
    r.optional(v, "min_denominator", "verify", o.min_denominator);
    if (const YAML::Node list = v["distances"]) {
      if (!list.IsSequence()) r.fail(list, "verify.distances", "expected a list of numbers");
      o.distances.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        o.distances.push_back(r.scalar<double>(list[i], "verify.distances[" + std::to_string(i) + "]"));
      }
    }
    require(r, v, "conserving_cases", "verify", o.conserving_cases >= 0, "must be >= 0");
    require(r, v, "generic_cases", "verify", o.generic_cases >= 0, "must be >= 0");
    require(r, v, "evolution_states", "verify", o.evolution_states >= 0, "must be >= 0");
    require(r, v, "min_denominator", "verify", o.min_denominator > 0.0, "must be positive");
  }

  if (root["workers"]) {
    cfg.workers = r.scalar<int>(root["workers"], "workers");
    if (cfg.workers < 0) r.fail(root["workers"], "workers", "must be >= 0");
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_yaml(const RunConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  if (const auto* h = std::get_if<lattice::HaldaneSpec>(&cfg.model)) {
    out << YAML::Key << "type" << YAML::Value << "haldane";
    out << YAML::Key << "nx" << YAML::Value << h->nx << YAML::Key << "ny" << YAML::Value << h->ny;
    out << YAML::Key << "kappa1" << YAML::Value << h->kappa1 << YAML::Key << "t2" << YAML::Value << h->t2;
    out << YAML::Key << "phase" << YAML::Value << h->phase << YAML::Key << "beta" << YAML::Value << h->beta;
    out << YAML::Key << "input_edge_length" << YAML::Value << h->input_edge_length;
    out << YAML::Key << "disordered_length" << YAML::Value << h->disordered_length;
  } else {
    const auto& q = std::get<lattice::QheSpec>(cfg.model);
    out << YAML::Key << "type" << YAML::Value << "qhe";
    out << YAML::Key << "nx" << YAML::Value << q.nx << YAML::Key << "ny" << YAML::Value << q.ny;
    out << YAML::Key << "kappa" << YAML::Value << q.kappa << YAML::Key << "flux" << YAML::Value << q.flux;
    out << YAML::Key << "input_edge_length" << YAML::Value << q.input_edge_length;
    out << YAML::Key << "disordered_length" << YAML::Value << q.disordered_length;
  }
  out << YAML::EndMap;
  if (cfg.disorder_enabled) {
    out << YAML::Key << "disorder" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "sigma" << YAML::Value << cfg.disorder.sigma;
    out << YAML::Key << "region" << YAML::Value << region_name(cfg.disorder.region);
    out << YAML::Key << "seed" << YAML::Value << cfg.disorder.seed;
    out << YAML::EndMap;
  }
  if (!cfg.recipes.empty()) {
    out << YAML::Key << "recipes" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : cfg.recipes) {
      out << YAML::BeginMap;
      out << YAML::Key << "name" << YAML::Value << r.name;
      out << YAML::Key << "sigma_c" << YAML::Value << r.recipe.sigma_c;
      out << YAML::Key << "sigma_a" << YAML::Value << r.recipe.sigma_a;
      out << YAML::Key << "input_edge_length" << YAML::Value << r.recipe.input_edge_length;
      if (r.recipe.x0) out << YAML::Key << "x0" << YAML::Value << *r.recipe.x0;
      out << YAML::Key << "phase" << YAML::Value
          << (r.recipe.phase == biphoton::PhaseConvention::Alternating ? "alternating" : "quarter");
      out << YAML::Key << "envelope" << YAML::Value
          << (r.recipe.envelope == biphoton::Envelope::HalfSum ? "half_sum" : "full_sum");
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  const auto& p = cfg.propagate;
  out << YAML::Key << "propagate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "z" << YAML::Value << p.z << YAML::Key << "snapshot_dz" << YAML::Value << p.snapshot_dz;
  out << YAML::Key << "project" << YAML::Value << p.project;
  out << YAML::Key << "allow_unprojected" << YAML::Value << p.allow_unprojected;
  out << YAML::Key << "sweep_reference" << YAML::Value << p.sweep_reference;
  out << YAML::Key << "sweep" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "z_min" << YAML::Value << p.sweep.z_min << YAML::Key << "z_max" << YAML::Value
      << p.sweep.z_max << YAML::Key << "dz" << YAML::Value << p.sweep.dz;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::Key << "ensemble" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "instances" << YAML::Value << cfg.instances;
  out << YAML::Key << "base_seed" << YAML::Value << cfg.base_seed;
  out << YAML::Key << "max_failure_fraction" << YAML::Value << cfg.max_failure_fraction;
  out << YAML::EndMap;
  out << YAML::Key << "window" << YAML::Value << YAML::BeginMap << YAML::Key << "threshold"
      << YAML::Value << cfg.window_threshold << YAML::EndMap;
  out << YAML::Key << "scan" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sigma_min" << YAML::Value << cfg.scan_grid.sigma_min;
  out << YAML::Key << "sigma_max" << YAML::Value << cfg.scan_grid.sigma_max;
  out << YAML::Key << "points" << YAML::Value << cfg.scan_grid.points;
  out << YAML::Key << "instances" << YAML::Value << cfg.scan_instances;
  if (cfg.scan_grid.x0) out << YAML::Key << "x0" << YAML::Value << *cfg.scan_grid.x0;
  out << YAML::EndMap;
  out << YAML::Key << "size_study" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "sizes" << YAML::Value << YAML::BeginSeq;
  for (const auto& [nx, ny] : cfg.sizes) out << YAML::Flow << YAML::BeginSeq << nx << ny << YAML::EndSeq;
  out << YAML::EndSeq;
  out << YAML::Key << "scale_distance" << YAML::Value << cfg.scale_distance;
  out << YAML::EndMap;
  const auto& c = cfg.classify;
  out << YAML::Key << "classify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gap_margin" << YAML::Value << c.gap_margin;
  out << YAML::Key << "boundary_depth" << YAML::Value << c.boundary_depth;
  out << YAML::Key << "min_edge_weight" << YAML::Value << c.min_edge_weight;
  out << YAML::Key << "min_circulation" << YAML::Value << c.min_circulation;
  out << YAML::Key << "transport_circulation" << YAML::Value << c.transport_circulation;
  out << YAML::EndMap;
  const auto& v = cfg.verify;
  out << YAML::Key << "verify" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "conserving_cases" << YAML::Value << v.conserving_cases;
  out << YAML::Key << "generic_cases" << YAML::Value << v.generic_cases;
  out << YAML::Key << "evolution_states" << YAML::Value << v.evolution_states;
  out << YAML::Key << "distances" << YAML::Value << YAML::Flow << v.distances;
  out << YAML::Key << "seed" << YAML::Value << v.seed;
  out << YAML::Key << "min_denominator" << YAML::Value << v.min_denominator;
  out << YAML::EndMap;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_matrix_csv(std::ostream& out, const RealMatrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_vector_csv(std::ostream& out, const std::string& header, const RealVector& v) {
  out << "index," << header << '\n';
  for (Index i = 0; i < v.size(); ++i) out << i << ',' << format_double(v(i)) << '\n';
}

namespace {

static_assert(std::endian::native == std::endian::little, "array dumps assume a little-endian host");

void write_raw(const fs::path& path, const double* data, std::size_t count, const json& sidecar) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  }
  json meta = sidecar;
  meta["sha256"] = sha256_file(path);
  std::ofstream side(path.string() + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace

void write_array(const fs::path& path, const RealMatrix& m, const json& meta) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_raw(path, rm.data(), static_cast<std::size_t>(rm.size()),
            {{"shape", {m.rows(), m.cols()}}, {"dtype", "float64"}, {"order", "row-major"},
             {"endianness", "little"}, {"meta", meta}});
}

void write_array(const fs::path& path, const Matrix& m, const json& meta) {
  const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_raw(path, reinterpret_cast<const double*>(rm.data()), static_cast<std::size_t>(2 * rm.size()),
            {{"shape", {m.rows(), m.cols()}}, {"dtype", "complex128"}, {"order", "row-major"},
             {"endianness", "little"}, {"meta", meta}});
}

RealMatrix read_real_array(const fs::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw ConfigError("array", "missing sidecar for " + path.string());
  const json meta = json::parse(side);
  if (meta.at("dtype") != "float64") throw ConfigError("array", "not a float64 array");
  const Index rows = meta.at("shape").at(0).get<Index>();
  const Index cols = meta.at("shape").at(1).get<Index>();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!in) throw ConfigError("array", "truncated array file " + path.string());
  return rm;
}

json to_json(const oracle::VerifyReport& report) {
  json lattices = json::array();
  for (const auto& l : report.lattices) {
    lattices.push_back({{"name", l.name},
                        {"sites", l.sites},
                        {"conserving_cases", l.conserving_cases},
                        {"generic_cases", l.generic_cases},
                        {"evolution_cases", l.evolution_cases},
                        {"excluded_terms", l.excluded_terms},
                        {"max_conserving_closed", l.max_conserving_closed},
                        {"max_conserving_sum", l.max_conserving_sum},
                        {"max_generic_difference", l.max_generic_difference},
                        {"max_evolution_difference", l.max_evolution_difference},
                        {"max_additivity_defect", l.max_additivity_defect}});
  }
  return {{"conserving_cases", report.conserving_cases},
          {"generic_cases", report.generic_cases},
          {"evolution_cases", report.evolution_cases},
          {"excluded_terms", report.excluded_terms},
          {"max_conserving", report.max_conserving},
          {"max_generic_difference", report.max_generic_difference},
          {"max_evolution_difference", report.max_evolution_difference},
          {"max_additivity_defect", report.max_additivity_defect},
          {"lattices", lattices}};
}

Manifest::Manifest(fs::path out_dir, std::string command, const RunConfig& cfg)
    : dir_(std::move(out_dir)),
      command_(std::move(command)),
      config_yaml_(to_yaml(cfg)),
      start_(std::chrono::steady_clock::now()) {
  fs::create_directories(dir_);
}

void Manifest::add_lattice_hash(const std::string& name, const std::string& digest) {
  hashes_[name] = digest;
}

void Manifest::record(const fs::path& file) {
  const fs::path rel = file.is_absolute() ? fs::relative(file, dir_) : file;
  files_.emplace_back(rel.generic_string(), sha256_file(dir_ / rel));
}

void Manifest::write() {
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json files = json::array();
  for (const auto& [path, digest] : files_) files.push_back({{"path", path}, {"sha256", digest}});
  const json doc = {{"command", command_},
                    {"version", version()},
                    {"config", config_yaml_},
                    {"config_sha256", sha256_hex(config_yaml_)},
                    {"seeds", seeds_},
                    {"lattice_hashes", hashes_},
                    {"results", extra_},
                    {"files", files},
                    {"finished_at", stamp},
                    {"wall_clock_seconds", elapsed}};
  const fs::path tmp = dir_ / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("out", "cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
  }
  fs::rename(tmp, dir_ / "manifest.json");
}

}  // namespace twophoton::io
