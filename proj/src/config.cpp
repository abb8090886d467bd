#include "bsl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bsl/errors.hpp"
#include "bsl/reconstruction.hpp"
#include "json.hpp"

namespace bsl {

using nlohmann::json;

namespace {

const json* child(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  const json* c = child(j, key);
  if (!c) throw ConfigError(path, "missing required key");
  return *c;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  const json* c = child(j, key);
  return c ? number(*c, path) : fallback;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

int integer_or(const json& j, const std::string& key, const std::string& path, int fallback) {
  const json* c = child(j, key);
  return c ? integer(*c, path) : fallback;
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

Vec vector_of(const json& j, int dim, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError(path, "expected an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int a = 0; a < dim; ++a) v[a] = number(j[static_cast<std::size_t>(a)], path + "[" + std::to_string(a) + "]");
  return v;
}

std::vector<Bump> bumps_of(const json& j, int dim, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected a list of bumps");
  std::vector<Bump> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Bump b;
    b.center = vector_of(require(j[i], "center", p + ".center"), dim, p + ".center");
    b.radius = number(require(j[i], "radius", p + ".radius"), p + ".radius");
    b.amplitude = number(require(j[i], "amplitude", p + ".amplitude"), p + ".amplitude");
    if (!(b.radius > 0.0)) throw ConfigError(p + ".radius", "must be positive");
    if (b.amplitude < 0.0) throw ConfigError(p + ".amplitude", "must be nonnegative");
    out.push_back(b);
  }
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json bumps_json(const std::vector<Bump>& bumps) {
  json a = json::array();
  for (const auto& b : bumps) a.push_back({{"center", vec_json(b.center)}, {"radius", b.radius}, {"amplitude", b.amplitude}});
  return a;
}

// Re-runs the model constructors so every cross-field check of the library applies at load.
template <class F>
void recheck(const std::string& path, F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<root>", "expected an object");
  ExperimentConfig c;

  const json& g = require(root, "grid", "grid");
  const int dim = integer(require(g, "dim", "grid.dim"), "grid.dim");
  if (dim != 2 && dim != 3) throw ConfigError("grid.dim", "must be 2 or 3");
  recheck("grid", [&] {
    c.grid = make_grid(dim, integer(require(g, "points_per_axis", "grid.points_per_axis"), "grid.points_per_axis"),
                       number(require(g, "box_half_width", "grid.box_half_width"), "grid.box_half_width"),
                       number(require(g, "domain_radius", "grid.domain_radius"), "grid.domain_radius"));
  });

  const json& m = require(root, "model", "model");
  const std::string kind = text(require(m, "kind", "model.kind"), "model.kind");
  if (kind == "bessel") {
    c.kind = ModelKind::BesselWhiteNoise;
    c.order_m = number(require(m, "m", "model.m"), "model.m");
    if (!(c.order_m > dim - 1 && c.order_m <= dim + 1))
      throw ConfigError("model.m", "must lie in (n-1, n+1] = (" + std::to_string(dim - 1) + ", " +
                                       std::to_string(dim + 1) + "]");
  } else if (kind == "fbm") {
    c.kind = ModelKind::FractionalBrownian;
    c.hurst = number(require(m, "hurst", "model.hurst"), "model.hurst");
    if (!(c.hurst > 0.0 && c.hurst < 1.0)) throw ConfigError("model.hurst", "must lie in (0, 1)");
    c.order_m = dim + 2 * c.hurst;
  } else {
    throw ConfigError("model.kind", "expected \"bessel\" or \"fbm\"");
  }
  c.epsilon = number(require(m, "epsilon", "model.epsilon"), "model.epsilon");
  if (c.epsilon < 0.0) throw ConfigError("model.epsilon", "must be nonnegative");
  c.corr_length = number_or(m, "corr_length", "model.corr_length", 1.0);
  if (!(c.corr_length > 0.0)) throw ConfigError("model.corr_length", "must be positive");
  c.anchor = child(m, "anchor") ? vector_of(m["anchor"], dim, "model.anchor") : Vec::Zero(dim);
  c.mu = bumps_of(require(m, "mu", "model.mu"), dim, "model.mu");
  c.q0 = child(m, "q0") ? bumps_of(m["q0"], dim, "model.q0") : std::vector<Bump>{};

  const json& bands = require(root, "bands", "bands");
  if (!bands.is_array() || bands.empty()) throw ConfigError("bands", "expected a nonempty list");
  const double diameter = 2.0 * c.grid.domain_radius;
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const std::string p = "bands[" + std::to_string(i) + "]";
    const double K = number(require(bands[i], "K", p + ".K"), p + ".K");
    const int nodes = integer_or(bands[i], "nodes", p + ".nodes", 0);
    BandRule rule = BandRule::Midpoint;
    if (const json* r = child(bands[i], "rule")) recheck(p + ".rule", [&] { rule = parse_band_rule(text(*r, p + ".rule")); });
    recheck(p, [&] { c.bands.push_back(make_band(K, diameter, nodes, rule)); });
  }

  const json& probes = require(root, "probes", "probes");
  if (const json* list = child(probes, "list")) {
    if (!list->is_array() || list->empty()) throw ConfigError("probes.list", "expected a nonempty list");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string p = "probes.list[" + std::to_string(i) + "]";
      Probe pr;
      pr.tau = number(require((*list)[i], "tau", p + ".tau"), p + ".tau");
      pr.theta = vector_of(require((*list)[i], "theta", p + ".theta"), dim, p + ".theta");
      if (pr.tau < 0.0) throw ConfigError(p + ".tau", "must be nonnegative");
      if (std::abs(pr.theta.norm() - 1.0) > 1e-9) throw ConfigError(p + ".theta", "must be a unit vector");
      c.probe_list.push_back(pr);
    }
  } else {
    c.xi_max = number(require(probes, "xi_max", "probes.xi_max"), "probes.xi_max");
    if (!(c.xi_max > 0.0)) throw ConfigError("probes.xi_max", "must be positive");
    c.n_angles = integer_or(probes, "n_angles", "probes.n_angles", 0);
    if (c.n_angles < 0) throw ConfigError("probes.n_angles", "must be nonnegative");
  }

  if (const json* p = child(root, "order_policy"))
    recheck("order_policy", [&] { c.policy = parse_order_policy(text(*p, "order_policy")); });
  if (const json* s = child(root, "solver")) {
    c.solver.tol = number_or(*s, "tol", "solver.tol", c.solver.tol);
    c.solver.max_iter = integer_or(*s, "max_iter", "solver.max_iter", c.solver.max_iter);
    if (!(c.solver.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
    if (c.solver.max_iter < 1) throw ConfigError("solver.max_iter", "must be at least 1");
  }
  c.realizations = integer_or(root, "realizations", "realizations", 1);
  if (c.realizations < 1) throw ConfigError("realizations", "must be at least 1");
  const json& seed = require(root, "seed", "seed");
  if (!seed.is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
  c.seed = seed.get<std::uint64_t>();
  if (const json* o = child(root, "output_dir")) c.output_dir = text(*o, "output_dir");

  c.calibration_radius = c.grid.domain_radius / 2;
  if (const json* cal = child(root, "calibration")) {
    c.calibration_radius = number_or(*cal, "radius", "calibration.radius", c.calibration_radius);
    if (const json* t = child(*cal, "taus")) {
      if (!t->is_array() || t->empty()) throw ConfigError("calibration.taus", "expected a nonempty list");
      c.calibration_taus.clear();
      for (std::size_t i = 0; i < t->size(); ++i) c.calibration_taus.push_back(number((*t)[i], "calibration.taus"));
    }
  }
  if (!(c.calibration_radius > 0.0 && c.calibration_radius <= c.grid.domain_radius))
    throw ConfigError("calibration.radius", "must lie in (0, domain_radius]");

  ScalingConfig& r = c.regime;
  if (const json* reg = child(root, "regime")) {
    r.K0 = number_or(*reg, "K0", "regime.K0", r.K0);
    r.ell0 = number_or(*reg, "ell0", "regime.ell0", r.ell0);
    r.L0 = number_or(*reg, "L0", "regime.L0", r.L0);
    r.beta1 = number_or(*reg, "beta1", "regime.beta1", r.beta1);
    r.beta2 = number_or(*reg, "beta2", "regime.beta2", r.beta2);
    r.margin = number_or(*reg, "margin", "regime.margin", r.margin);
  }
  r.n = dim;
  r.m = c.order_m;
  r.ell = c.corr_length;
  r.eps = c.epsilon;
  r.L = diameter;
  r.K = 0.0;
  for (const auto& b : c.bands) r.K = std::max(r.K, b.K);
  recheck("regime", [&] { validate_scaling(r); });

  recheck("model", [&] { build_model(c); });
  recheck("calibration", [&] { build_calibration_model(c); });
  if (c.probe_list.empty()) recheck("probes", [&] { build_probes(c); });
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"dim", c.grid.dim},
               {"points_per_axis", c.grid.points_per_axis},
               {"box_half_width", c.grid.box_half_width},
               {"domain_radius", c.grid.domain_radius}};
  json m{{"epsilon", c.epsilon}, {"corr_length", c.corr_length}, {"anchor", vec_json(c.anchor)},
         {"mu", bumps_json(c.mu)}, {"q0", bumps_json(c.q0)}};
  if (c.kind == ModelKind::BesselWhiteNoise) {
    m["kind"] = "bessel";
    m["m"] = c.order_m;
  } else {
    m["kind"] = "fbm";
    m["hurst"] = c.hurst;
  }
  j["model"] = m;
  j["bands"] = json::array();
  for (const auto& b : c.bands) j["bands"].push_back({{"K", b.K}, {"nodes", b.num_nodes}, {"rule", to_string(b.rule)}});
  if (!c.probe_list.empty()) {
    json list = json::array();
    for (const auto& p : c.probe_list) list.push_back({{"tau", p.tau}, {"theta", vec_json(p.theta)}});
    j["probes"] = {{"list", list}};
  } else {
    j["probes"] = {{"xi_max", c.xi_max}, {"n_angles", c.n_angles}};
  }
  j["order_policy"] = to_string(c.policy);
  j["solver"] = {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}};
  j["realizations"] = c.realizations;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.string();
  j["calibration"] = {{"radius", c.calibration_radius}, {"taus", c.calibration_taus}};
  j["regime"] = {{"K0", c.regime.K0},       {"ell0", c.regime.ell0},   {"L0", c.regime.L0},
                 {"beta1", c.regime.beta1}, {"beta2", c.regime.beta2}, {"margin", c.regime.margin}};
  return j.dump(2);
}

ExperimentConfig default_config() {
  return parse_config(R"({
    "grid": {"dim": 2, "points_per_axis": 256, "box_half_width": 2.0, "domain_radius": 0.9},
    "model": {"kind": "bessel", "m": 2.5, "epsilon": 0.001, "corr_length": 1.0,
              "mu": [{"center": [0.1, 0.0], "radius": 0.6, "amplitude": 1.0}]},
    "bands": [{"K": 40}],
    "probes": {"xi_max": 16},
    "order_policy": "full",
    "seed": 20261016,
    "output_dir": "out"
  })");
}

LocalStrength build_strength(const ExperimentConfig& c) { return make_local_strength(c.grid, c.mu); }

RandomFieldModel build_model(const ExperimentConfig& c) {
  const ScalarField q0 = bump_sum(c.grid, c.q0);
  if (c.kind == ModelKind::FractionalBrownian)
    return make_fbm_model(c.grid, c.hurst, build_strength(c), q0, c.anchor, c.epsilon);
  return make_bessel_model(c.grid, c.order_m, build_strength(c), q0, c.epsilon, c.corr_length);
}

RandomFieldModel build_calibration_model(const ExperimentConfig& c) {
  auto ref = c;
  ref.mu = {{Vec::Zero(c.grid.dim), c.calibration_radius, 1.0}};
  ref.q0.clear();
  ref.epsilon = 1.0;
  return build_model(ref);
}

std::vector<Probe> build_probes(const ExperimentConfig& c) {
  if (!c.probe_list.empty()) return c.probe_list;
  const double dk = c.bands.front().node_spacing();
  const int n_tau = static_cast<int>(std::ceil(c.xi_max / 2 / dk - 1e-9));
  const double tau_max = n_tau * dk;
  int angles = c.n_angles > 0 ? c.n_angles : required_angles(2 * tau_max, c.grid.domain_radius);
  if (c.grid.dim == 2) return polar_probes(2, tau_max, n_tau, (angles + 1) / 2);
  angles += (4 - angles % 4) % 4;
  return polar_probes(3, tau_max, n_tau, angles);
}

}  // namespace bsl
