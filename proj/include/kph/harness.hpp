#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "kph/control.hpp"

namespace kph::harness {

using json = nlohmann::json;

// Scenario configuration: the per-scenario default document defines the
// schema, overrides are validated against it recursively and unknown keys are
// rejected.  Objects carrying a "name" or "kind" discriminator are replaced
// wholesale and validated by their factory.
struct RunConfig {
  json doc;

  static RunConfig from_file(const std::string& path, const std::string& scenario);
  static RunConfig from_json(const json& overrides, const std::string& scenario);

  // Overrides every "seed" key in the document.
  void set_seed(std::uint64_t seed);
};

json default_config(const std::string& scenario);
std::vector<std::string> scenario_names();

struct Check {
  std::string name;
  bool passed = false;
  double tolerance = 0.0;
  double measured = 0.0;
  std::string detail;
};

struct Report {
  std::string scenario;
  bool passed = false;
  std::vector<Check> checks;
  json info = json::object();
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;

  json to_json() const;
};

// Sorted by scenario name; overall passed iff every report passed.
json merge_reports(std::vector<Report> reports);

// Runs one scenario.  ConfigError (unknown scenario, invalid specs) and
// IOError propagate; computational failures inside the scenario body are
// folded into a failed Report instead.
Report run_scenario(const std::string& name, const RunConfig& cfg);

// Builders from config fragments.  All reject unknown keys.
PHSystem make_system(const json& spec);
std::shared_ptr<const Dictionary> make_dictionary(const json& spec, int n);
InputSignal make_input(const json& spec, int m);
SampleSet generate_samples(const json& spec, const PHSystem* sys = nullptr);

// Matrix/vector <-> JSON (row-major nested arrays).
Eigen::MatrixXd to_matrix(const json& j);
Eigen::VectorXd to_vector(const json& j);
json matrix_to_json(const Eigen::MatrixXd& a);
json vector_to_json(const Eigen::VectorXd& v);

// CSV schema: header t,x1..xn,u1..um,y1..ym,H (psi1..psiN and Hlift for
// lifted runs), 17 significant digits, LF line endings.
void export_trajectory(const Trajectory& tr, const std::string& path);
void export_lifted_trajectory(const LiftedTrajectory& tr, const std::string& path);
Trajectory load_trajectory(const std::string& path);

// Generic table writer with the same number formatting; one column label per
// row of `columns`.
void write_table(const std::string& path, const std::vector<std::string>& columns,
                 const Eigen::MatrixXd& rows);

struct InjectivityReport {
  bool injective_on_samples = false;
  double worst_ratio = 0.0;  // min over pairs of |psi_i - psi_j| / |x_i - x_j|
  int worst_i = -1;
  int worst_j = -1;
  double min_jac_sv = 0.0;  // min over samples of the jac's smallest singular value
  bool jac_full_rank = false;
};

// Sample-based surrogate for injectivity of the dictionary map: separated
// points must stay separated in lifted space, and the jac should have full
// column rank at every sample.
InjectivityReport check_injectivity(const Dictionary& d, const SampleSet& s,
                                    double tol);

}  // namespace kph::harness
