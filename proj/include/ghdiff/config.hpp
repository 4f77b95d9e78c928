#ifndef GHDIFF_CONFIG_HPP
#define GHDIFF_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ghdiff/engine.hpp"
#include "ghdiff/errors.hpp"
#include "ghdiff/graph.hpp"
#include "ghdiff/kvdoc.hpp"

namespace ghdiff {

inline PerturbationScheme parse_scheme(const std::string& token) {
  const std::string t = KvDoc::trim(token);
  if (t == "none") return PerturbationScheme::none();
  const auto open = t.find('(');
  if (open != std::string::npos && t.back() == ')') {
    const std::string name = t.substr(0, open);
    const std::string arg = t.substr(open + 1, t.size() - open - 2);
    if (name == "iid") {
      return PerturbationScheme::iid(KvDoc::parse_double(arg, "schemes"));
    }
    if (name == "graph_homomorphic") {
      return PerturbationScheme::graph_homomorphic(
          KvDoc::parse_double(arg, "schemes"));
    }
  }
  throw ConfigParseError(
      "field 'schemes': unknown scheme '" + t +
      "' (expected none, iid(sigma_p2) or graph_homomorphic(b_v))");
}

struct TopologySpec {
  enum class Kind { kPath, kRing, kComplete, kStar, kErdos, kFile };

  Kind kind = Kind::kErdos;
  double edge_prob = 0.3;
  std::filesystem::path file;

  static TopologySpec parse(const std::string& token,
                            const std::filesystem::path& base_dir) {
    const std::string t = KvDoc::trim(token);
    TopologySpec spec;
    if (t == "path") {
      spec.kind = Kind::kPath;
    } else if (t == "ring") {
      spec.kind = Kind::kRing;
    } else if (t == "complete") {
      spec.kind = Kind::kComplete;
    } else if (t == "star") {
      spec.kind = Kind::kStar;
    } else if (t.rfind("erdos(", 0) == 0 && t.back() == ')') {
      spec.kind = Kind::kErdos;
      spec.edge_prob = KvDoc::parse_double(t.substr(6, t.size() - 7), "topology");
      if (spec.edge_prob <= 0 || spec.edge_prob > 1) {
        throw ConfigParseError("field 'topology': erdos edge probability must lie in (0,1]");
      }
    } else if (t.rfind("file(", 0) == 0 && t.back() == ')') {
      spec.kind = Kind::kFile;
      spec.file = base_dir / KvDoc::trim(t.substr(5, t.size() - 6));
    } else {
      throw ConfigParseError("field 'topology': unknown value '" + t + "'");
    }
    return spec;
  }

  Topology build(int num_agents, std::uint64_t master_seed) const {
    switch (kind) {
      case Kind::kPath:
        return Topology::path(num_agents);
      case Kind::kRing:
        return Topology::ring(num_agents);
      case Kind::kComplete:
        return Topology::complete(num_agents);
      case Kind::kStar:
        return Topology::star(num_agents);
      case Kind::kErdos: {
        RngStream rng = make_stream(master_seed, StreamPurpose::kTopology, 0);
        return Topology::erdos_renyi_connected(num_agents, edge_prob, rng);
      }
      case Kind::kFile: {
        Topology t = Topology::load(file);
        if (num_agents > 0 && t.num_agents != num_agents) {
          throw ConfigParseError("field 'num_agents': " + std::to_string(num_agents) +
                                 " does not match topology file K=" +
                                 std::to_string(t.num_agents));
        }
        return t;
      }
    }
    throw ConfigParseError("field 'topology': unhandled kind");
  }
};

// One structured key-value document drives a whole experiment; field names
// match the simulator's parameter names one for one.
struct ExperimentConfig {
  double mu = 0.1;
  long long iterations = 100;
  std::uint64_t master_seed = 1;
  LossModel loss;
  bool smoothness_auto = true;
  DataSpec data;
  int num_agents = 0;
  TopologySpec topology;
  double self_blend = 0.05;  // theta; 0 disables blending
  Vec init;
  int replicas = 1;
  std::vector<PerturbationScheme> schemes;
  std::string output_dir = "out";
  bool emit_svg = true;
  double j_floor = 0.0;

  static ExperimentConfig parse(const std::string& text,
                                const std::filesystem::path& base_dir) {
    const KvDoc doc = KvDoc::parse(text);
    static const std::set<std::string> known = {
        "mu",           "iterations",     "master_seed",
        "loss",         "rho",            "clip_bound",
        "smoothness",   "mean_plus",      "mean_minus",
        "sigma_h2",     "samples_per_agent_per_iter", "eval_set_size",
        "num_agents",   "topology",       "self_blend",
        "init",         "replicas",       "schemes",
        "output_dir",   "emit_svg",       "j_floor"};
    for (const std::string& key : doc.keys()) {
      if (known.count(key) == 0) {
        throw ConfigParseError("field '" + key + "': unknown field");
      }
    }

    ExperimentConfig cfg;
    cfg.mu = doc.get_double("mu");
    if (cfg.mu <= 0) throw ConfigParseError("field 'mu': must be positive");
    cfg.iterations = doc.get_int("iterations");
    if (cfg.iterations < 1) {
      throw ConfigParseError("field 'iterations': must be at least 1");
    }
    cfg.master_seed = static_cast<std::uint64_t>(doc.get_int("master_seed", 1));

    const std::string loss = doc.get_string("loss");
    if (loss == "least_squares") {
      cfg.loss.kind = LossKind::kLeastSquares;
    } else if (loss == "ridge_logistic") {
      cfg.loss.kind = LossKind::kRidgeLogistic;
    } else {
      throw ConfigParseError("field 'loss': expected least_squares or ridge_logistic");
    }
    cfg.loss.ridge = doc.get_double("rho", 0.0);
    if (cfg.loss.ridge < 0) throw ConfigParseError("field 'rho': must be nonnegative");
    if (cfg.loss.kind == LossKind::kLeastSquares && cfg.loss.ridge != 0.0) {
      throw ConfigParseError("field 'rho': only applies to ridge_logistic");
    }
    cfg.loss.clip_bound = doc.get_double("clip_bound", 10.0);
    if (cfg.loss.clip_bound <= 0) {
      throw ConfigParseError("field 'clip_bound': must be positive");
    }
    const std::string smoothness = doc.get_string("smoothness", "auto");
    if (smoothness == "auto") {
      cfg.smoothness_auto = true;
    } else {
      cfg.smoothness_auto = false;
      cfg.loss.smoothness = KvDoc::parse_double(smoothness, "smoothness");
      if (cfg.loss.smoothness <= 0) {
        throw ConfigParseError("field 'smoothness': must be positive or auto");
      }
    }

    const std::vector<double> plus = doc.get_double_list("mean_plus");
    const std::vector<double> minus = doc.get_double_list("mean_minus");
    if (plus.empty() || plus.size() != minus.size()) {
      throw ConfigParseError(
          "field 'mean_plus': mean_plus and mean_minus must be nonempty vectors of "
          "equal dimension");
    }
    cfg.data.mean_plus = Eigen::Map<const Vec>(plus.data(), plus.size());
    cfg.data.mean_minus = Eigen::Map<const Vec>(minus.data(), minus.size());
    cfg.data.sigma_h2 = doc.get_double("sigma_h2", 1.0);
    if (cfg.data.sigma_h2 <= 0) {
      throw ConfigParseError("field 'sigma_h2': must be positive");
    }
    cfg.data.samples_per_agent_per_iter =
        static_cast<int>(doc.get_int("samples_per_agent_per_iter", 1));
    if (cfg.data.samples_per_agent_per_iter < 1) {
      throw ConfigParseError("field 'samples_per_agent_per_iter': must be positive");
    }
    cfg.data.eval_set_size = static_cast<int>(doc.get_int("eval_set_size", 2000));
    if (cfg.data.eval_set_size < 1) {
      throw ConfigParseError("field 'eval_set_size': must be positive");
    }

    cfg.num_agents = static_cast<int>(doc.get_int("num_agents", 0));
    cfg.topology = TopologySpec::parse(doc.get_string("topology", "erdos(0.3)"),
                                       base_dir);
    if (cfg.topology.kind != TopologySpec::Kind::kFile && cfg.num_agents < 1) {
      throw ConfigParseError("field 'num_agents': required for generated topologies");
    }
    cfg.self_blend = doc.get_double("self_blend", 0.05);
    if (cfg.self_blend < 0 || cfg.self_blend >= 1) {
      throw ConfigParseError("field 'self_blend': must lie in [0,1)");
    }
    if (doc.has("init")) {
      const std::vector<double> init = doc.get_double_list("init");
      if (init.size() != plus.size()) {
        throw ConfigParseError("field 'init': dimension does not match mean_plus");
      }
      cfg.init = Eigen::Map<const Vec>(init.data(), init.size());
    }

    cfg.replicas = static_cast<int>(doc.get_int("replicas", 1));
    if (cfg.replicas < 1) throw ConfigParseError("field 'replicas': must be positive");
    cfg.schemes.clear();
    for (const std::string& token : doc.get_item_list("schemes")) {
      cfg.schemes.push_back(parse_scheme(token));
    }
    if (cfg.schemes.empty()) {
      throw ConfigParseError("field 'schemes': must list at least one scheme");
    }
    cfg.output_dir = doc.get_string("output_dir", "out");
    cfg.emit_svg = doc.get_bool("emit_svg", true);
    cfg.j_floor = doc.get_double("j_floor", 0.0);
    return cfg;
  }

  static ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.parent_path());
  }

  CombinationMatrix build_matrix() const {
    const Topology t = topology.build(num_agents, master_seed);
    CombinationMatrix a = metropolis_weights(t);
    if (self_blend > 0) a = blend_self_loops(a, self_blend);
    return a;
  }

  RunConfig to_run_config(const PerturbationScheme& scheme,
                          const CombinationMatrix& matrix,
                          std::uint64_t seed) const {
    RunConfig rc;
    rc.mu = mu;
    rc.iterations = iterations;
    rc.scheme = scheme;
    rc.master_seed = seed;
    rc.loss = loss;
    rc.data = data;
    rc.matrix = matrix;
    rc.init = init;
    return rc;
  }
};

}  // namespace ghdiff

#endif  // GHDIFF_CONFIG_HPP
