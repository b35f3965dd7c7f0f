#include <algorithm>

#include "kph/harness.hpp"

namespace kph::harness {

json Report::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    checks_json.push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"tolerance", c.tolerance},
                           {"measured", c.measured},
                           {"detail", c.detail}});
  }
  return json{{"scenario", scenario}, {"passed", passed},
              {"checks", checks_json}, {"info", info},
              {"warnings", warnings},  {"artifacts", artifacts}};
}

json merge_reports(std::vector<Report> reports) {
  std::sort(reports.begin(), reports.end(),
            [](const Report& a, const Report& b) { return a.scenario < b.scenario; });
  json merged = json::array();
  bool all = true;
  for (const auto& r : reports) {
    merged.push_back(r.to_json());
    all = all && r.passed;
  }
  return json{{"passed", all}, {"reports", merged}};
}

}  // namespace kph::harness
