#include <cmath>
#include <fstream>
#include <set>

#include "kph/harness.hpp"

namespace kph::harness {

namespace {

const double kPi = 3.141592653589793;

json linear_system_spec() {
  return json{{"name", "linear_ph"},
              {"J", {{0.0, 1.0}, {-1.0, 0.0}}},
              {"R", {{0.0, 0.0}, {0.0, 0.3}}},
              {"G", {{0.0}, {1.0}}},
              {"Q", {{1.0, 0.0}, {0.0, 1.0}}}};
}

json pendulum_system_spec() { return json{{"name", "pendulum"}, {"b", 0.3}}; }

json box_samples_spec(int count, int seed) {
  return json{{"kind", "monte_carlo"}, {"lo", {-1.0, -1.0}}, {"hi", {1.0, 1.0}},
              {"count", count},        {"seed", seed},       {"isotropize", true}};
}

json pendulum_grid_spec() {
  return json{{"kind", "grid"},
              {"lo", {-kPi, -2.0}},
              {"hi", {kPi, 2.0}},
              {"per_axis", {21, 21}}};
}

json defaults_linear_recovery() {
  return json{
      {"seed", 7},
      {"system", linear_system_spec()},
      {"dictionary", {{"name", "identity"}}},
      {"samples", box_samples_spec(200, 7)},
      {"trajectory",
       {{"x0", {0.8, -0.4}},
        {"t_end", 10.0},
        {"dt", 0.001},
        {"input", {{"kind", "sinusoid"}, {"amplitude", 0.5}, {"omega", 0.7}}}}},
      {"output_dir", "out/linear_recovery"},
      {"tolerances",
       {{"recovery_max_error", 1e-8},
        {"trajectory_rms", 1e-6},
        {"injectivity", 1e-6}}}};
}

json defaults_q_conjugate() {
  return json{{"seed", 11},
              {"system", linear_system_spec()},
              {"dictionary", {{"name", "q_scaled"}, {"Q", {{1.5, 0.5}, {0.5, 2.0}}}}},
              {"samples", box_samples_spec(300, 11)},
              {"output_dir", "out/q_conjugate"},
              {"tolerances",
               {{"conjugacy_max_error", 1e-8}, {"recovery_max_error", 1e-8}}}};
}

json defaults_pendulum_generator() {
  return json{{"seed", 3},
              {"system", pendulum_system_spec()},
              {"dictionary", {{"name", "pendulum"}}},
              {"samples", pendulum_grid_spec()},
              {"trajectory", {{"x0", {2.0, 0.0}}, {"t_end", 10.0}, {"dt", 0.001}}},
              {"output_dir", "out/pendulum_generator"},
              {"tolerances",
               {{"closed_form_max_error", 1e-12},
                {"energy_increase_slack", 1e-10},
                {"injectivity", 1e-6}}}};
}

json defaults_passivity_suite() {
  return json{
      {"seed", 5},
      {"system", pendulum_system_spec()},
      {"dictionary", {{"name", "pendulum"}}},
      {"samples", pendulum_grid_spec()},
      {"lifted",
       {{"x0", {1.2, 0.4}},
        {"t_end", 10.0},
        {"dt", 0.001},
        {"input", {{"kind", "sinusoid"}, {"amplitude", 0.5}, {"omega", 0.7}}}}},
      {"euler_sweep", {{"dts", {0.1, 0.01, 0.001, 0.0001, 0.00001}}, {"t_end", 1.0}}},
      {"random_psi_count", 1000},
      {"output_dir", "out/passivity_suite"},
      {"tolerances",
       {{"skew_quadratic", 1e-12},
        {"passivity_slack", 1e-6},
        {"storage_increase_slack", 1e-10},
        {"rate_fd_error", 1e-4}}}};
}

json defaults_damping_demo() {
  return json{{"seed", 13},
              {"system", linear_system_spec()},
              {"dictionary", {{"name", "identity"}}},
              {"samples", box_samples_spec(200, 13)},
              {"controller",
               {{"K_d", {{0.5}}}, {"x0", {1.0, 0.5}}, {"t_end", 50.0}, {"dt", 0.001}}},
              {"output_dir", "out/damping_demo"},
              {"tolerances",
               {{"decay_ratio", 1e-6},
                {"undamped_decay_ratio", 1e-2},
                {"storage_increase_slack", 1e-10},
                {"rate_fd_error", 1e-4},
                {"injectivity", 1e-6}}}};
}

json defaults_mpc_demo() {
  return json{{"seed", 17},
              {"system", linear_system_spec()},
              {"dictionary", {{"name", "identity"}}},
              {"samples", box_samples_spec(200, 17)},
              {"mpc",
               {{"psi_ref", {0.0, 0.0}},
                {"x0", {1.0, 0.5}},
                {"horizon", 1.0},
                {"dt", 0.05},
                {"n_steps", 200}}},
              {"output_dir", "out/mpc_demo"},
              {"tolerances",
               {{"terminal_slack", 1e-9},
                {"cost_increase", 1e-9},
                {"final_decay", 1e-5},
                {"injectivity", 1e-6}}}};
}

json defaults_structure_vs_unstructured() {
  return json{{"seed", 23},
              {"system", pendulum_system_spec()},
              {"dictionary", {{"name", "pendulum"}}},
              {"samples", pendulum_grid_spec()},
              {"validation",
               {{"kind", "monte_carlo"},
                {"lo", {-kPi, -2.0}},
                {"hi", {kPi, 2.0}},
                {"count", 500},
                {"seed", 23},
                {"isotropize", false}}},
              {"output_dir", "out/structure_vs_unstructured"},
              {"tolerances", json::object()}};
}

bool wholesale_node(const json& def) {
  return def.is_object() && (def.contains("name") || def.contains("kind"));
}

void merge_validated(json& base, const json& given, const std::string& path) {
  if (base.is_object() && !wholesale_node(base)) {
    if (!given.is_object()) {
      throw ConfigError("config key '" + path + "' must be an object");
    }
    for (const auto& [key, value] : given.items()) {
      if (!base.contains(key)) {
        throw ConfigError("unknown config key '" +
                          (path.empty() ? key : path + "." + key) + "'");
      }
      merge_validated(base[key], value, path.empty() ? key : path + "." + key);
    }
    return;
  }
  if (wholesale_node(base)) {
    if (!given.is_object())
      throw ConfigError("config key '" + path + "' must be an object");
    base = given;  // factory for this spec enforces its own key set
    return;
  }
  if (base.is_number() && !given.is_number())
    throw ConfigError("config key '" + path + "' must be a number");
  if (base.is_string() && !given.is_string())
    throw ConfigError("config key '" + path + "' must be a string");
  if (base.is_boolean() && !given.is_boolean())
    throw ConfigError("config key '" + path + "' must be a boolean");
  if (base.is_array() && !given.is_array())
    throw ConfigError("config key '" + path + "' must be an array");
  base = given;
}

void require_keys(const json& spec, const std::set<std::string>& allowed,
                  const std::string& what) {
  if (!spec.is_object()) throw ConfigError(what + " spec must be an object");
  for (const auto& [key, value] : spec.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + what + " spec");
  }
}

double number_at(const json& spec, const std::string& key, const std::string& what) {
  if (!spec.contains(key))
    throw ConfigError(what + " spec is missing '" + key + "'");
  if (!spec.at(key).is_number())
    throw ConfigError(what + " spec key '" + key + "' must be a number");
  return spec.at(key).get<double>();
}

void set_seeds(json& node, std::uint64_t seed) {
  if (node.is_object()) {
    for (auto& [key, value] : node.items()) {
      if (key == "seed" && value.is_number()) {
        value = seed;
      } else {
        set_seeds(value, seed);
      }
    }
  } else if (node.is_array()) {
    for (auto& value : node) set_seeds(value, seed);
  }
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"damping_demo",   "linear_recovery",    "mpc_demo",
          "passivity_suite", "pendulum_generator", "q_conjugate",
          "structure_vs_unstructured"};
}

json default_config(const std::string& scenario) {
  if (scenario == "linear_recovery") return defaults_linear_recovery();
  if (scenario == "q_conjugate") return defaults_q_conjugate();
  if (scenario == "pendulum_generator") return defaults_pendulum_generator();
  if (scenario == "passivity_suite") return defaults_passivity_suite();
  if (scenario == "damping_demo") return defaults_damping_demo();
  if (scenario == "mpc_demo") return defaults_mpc_demo();
  if (scenario == "structure_vs_unstructured")
    return defaults_structure_vs_unstructured();
  throw ConfigError("unknown scenario '" + scenario + "'");
}

RunConfig RunConfig::from_json(const json& overrides, const std::string& scenario) {
  RunConfig cfg;
  cfg.doc = default_config(scenario);
  if (!overrides.is_object())
    throw ConfigError("config document must be a JSON object");
  merge_validated(cfg.doc, overrides, "");
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path, const std::string& scenario) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc, scenario);
}

void RunConfig::set_seed(std::uint64_t seed) {
  doc["seed"] = seed;
  set_seeds(doc, seed);
}

Eigen::MatrixXd to_matrix(const json& j) {
  if (!j.is_array() || j.empty() || !j.at(0).is_array())
    throw ConfigError("matrix must be a nested array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.at(0).size());
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j.at(i);
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ConfigError("matrix rows have inconsistent lengths");
    for (int k = 0; k < cols; ++k) {
      if (!row.at(k).is_number()) throw ConfigError("matrix entries must be numbers");
      a(i, k) = row.at(k).get<double>();
    }
  }
  return a;
}

Eigen::VectorXd to_vector(const json& j) {
  if (!j.is_array()) throw ConfigError("vector must be an array of numbers");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) {
    if (!j.at(i).is_number()) throw ConfigError("vector entries must be numbers");
    v(i) = j.at(i).get<double>();
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

PHSystem make_system(const json& spec) {
  if (!spec.is_object() || !spec.contains("name"))
    throw ConfigError("system spec needs a 'name'");
  const std::string name = spec.at("name").get<std::string>();
  try {
    if (name == "pendulum") {
      require_keys(spec, {"name", "b"}, "system");
      return pendulum(number_at(spec, "b", "system"));
    }
    if (name == "linear_ph") {
      require_keys(spec, {"name", "J", "R", "G", "Q"}, "system");
      for (const char* key : {"J", "R", "G", "Q"})
        if (!spec.contains(key))
          throw ConfigError(std::string("system spec is missing '") + key + "'");
      return linear_ph(to_matrix(spec.at("J")), to_matrix(spec.at("R")),
                       to_matrix(spec.at("G")), to_matrix(spec.at("Q")))
          .as_system();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("system spec invalid: " + std::string(e.what()));
  }
  throw ConfigError("unknown system '" + name + "'");
}

std::shared_ptr<const Dictionary> make_dictionary(const json& spec, int n) {
  if (!spec.is_object() || !spec.contains("name"))
    throw ConfigError("dictionary spec needs a 'name'");
  const std::string name = spec.at("name").get<std::string>();
  try {
    if (name == "identity") {
      require_keys(spec, {"name"}, "dictionary");
      return std::make_shared<Dictionary>(identity_dictionary(n));
    }
    if (name == "pendulum") {
      require_keys(spec, {"name"}, "dictionary");
      if (n != 2) throw ConfigError("the pendulum dictionary needs a 2d state");
      return std::make_shared<Dictionary>(pendulum_dictionary());
    }
    if (name == "q_scaled") {
      require_keys(spec, {"name", "Q"}, "dictionary");
      if (!spec.contains("Q")) throw ConfigError("dictionary spec is missing 'Q'");
      const Eigen::MatrixXd Q = to_matrix(spec.at("Q"));
      if (Q.rows() != n) throw ConfigError("dictionary Q does not match the state size");
      return std::make_shared<Dictionary>(q_scaled_dictionary(Q));
    }
    if (name == "polynomial") {
      require_keys(spec, {"name", "degree", "include_constant"}, "dictionary");
      const int degree = static_cast<int>(number_at(spec, "degree", "dictionary"));
      const bool constant =
          spec.contains("include_constant") && spec.at("include_constant").get<bool>();
      return std::make_shared<Dictionary>(polynomial_dictionary(n, degree, constant));
    }
    if (name == "gaussian_rbf") {
      require_keys(spec, {"name", "centers", "width"}, "dictionary");
      if (!spec.contains("centers"))
        throw ConfigError("dictionary spec is missing 'centers'");
      const Eigen::MatrixXd rows = to_matrix(spec.at("centers"));
      if (rows.cols() != n)
        throw ConfigError("dictionary centers do not match the state size");
      std::vector<Eigen::VectorXd> centers;
      for (int i = 0; i < rows.rows(); ++i)
        centers.push_back(rows.row(i).transpose());
      return std::make_shared<Dictionary>(
          gaussian_rbf_dictionary(centers, number_at(spec, "width", "dictionary")));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("dictionary spec invalid: " + std::string(e.what()));
  }
  throw ConfigError("unknown dictionary '" + name + "'");
}

InputSignal make_input(const json& spec, int m) {
  if (!spec.is_object() || !spec.contains("kind"))
    throw ConfigError("input spec needs a 'kind'");
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "zero") {
    require_keys(spec, {"kind"}, "input");
    return zero_input(m);
  }
  if (kind == "constant") {
    require_keys(spec, {"kind", "value"}, "input");
    if (!spec.contains("value")) throw ConfigError("input spec is missing 'value'");
    const Eigen::VectorXd v = to_vector(spec.at("value"));
    if (v.size() != m) throw ConfigError("input value does not match the input size");
    return constant_input(v);
  }
  if (kind == "sinusoid") {
    require_keys(spec, {"kind", "amplitude", "omega"}, "input");
    const double amplitude = number_at(spec, "amplitude", "input");
    const double omega = number_at(spec, "omega", "input");
    return [amplitude, omega, m](double t) {
      return Eigen::VectorXd::Constant(m, amplitude * std::sin(omega * t));
    };
  }
  throw ConfigError("unknown input kind '" + kind + "'");
}

SampleSet generate_samples(const json& spec, const PHSystem* sys) {
  if (!spec.is_object() || !spec.contains("kind"))
    throw ConfigError("sample spec needs a 'kind'");
  const std::string kind = spec.at("kind").get<std::string>();
  const bool iso = spec.contains("isotropize") && spec.at("isotropize").get<bool>();

  auto finish = [iso](SampleSet s) { return iso ? isotropize(s) : s; };

  if (kind == "grid") {
    require_keys(spec, {"kind", "lo", "hi", "per_axis", "isotropize"}, "sample");
    const Eigen::VectorXd lo = to_vector(spec.at("lo"));
    const Eigen::VectorXd hi = to_vector(spec.at("hi"));
    std::vector<int> per_axis;
    for (const auto& c : spec.at("per_axis")) {
      if (!c.is_number()) throw ConfigError("per_axis entries must be numbers");
      per_axis.push_back(c.get<int>());
    }
    return finish(grid_samples(lo, hi, per_axis));
  }
  if (kind == "monte_carlo") {
    require_keys(spec, {"kind", "lo", "hi", "count", "seed", "isotropize"}, "sample");
    const Eigen::VectorXd lo = to_vector(spec.at("lo"));
    const Eigen::VectorXd hi = to_vector(spec.at("hi"));
    const int count = static_cast<int>(number_at(spec, "count", "sample"));
    if (!spec.contains("seed")) throw ConfigError("monte_carlo samples need a 'seed'");
    const auto seed = spec.at("seed").get<std::uint64_t>();
    return finish(monte_carlo_samples(lo, hi, count, seed));
  }
  if (kind == "trajectory") {
    require_keys(spec, {"kind", "x0", "t_end", "dt", "stride", "input", "isotropize"},
                 "sample");
    if (sys == nullptr)
      throw ConfigError("trajectory samples need a system to integrate");
    const Eigen::VectorXd x0 = to_vector(spec.at("x0"));
    const double t_end = number_at(spec, "t_end", "sample");
    const double dt = number_at(spec, "dt", "sample");
    const int stride = spec.contains("stride")
                           ? static_cast<int>(number_at(spec, "stride", "sample"))
                           : 1;
    const InputSignal u = spec.contains("input")
                              ? make_input(spec.at("input"), sys->m)
                              : zero_input(sys->m);
    return finish(trajectory_samples(simulate(*sys, x0, u, t_end, dt), stride));
  }
  throw ConfigError("unknown sample kind '" + kind + "'");
}

}  // namespace kph::harness
