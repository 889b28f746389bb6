#include "cqn/scenarios.hpp"

#include <map>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace cqn {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_scenarios();
}

namespace {

const std::map<std::string, std::string>& table() {
  static const std::map<std::string, std::string> t = [] {
    std::map<std::string, std::string> out;
    for (const auto& [name, text] : detail::embedded_scenarios()) out.emplace(name, text);
    return out;
  }();
  return t;
}

}  // namespace

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> names;
  for (const auto& entry : table()) names.push_back(entry.first);
  return names;
}

const std::string& bundled_scenario_text(const std::string& name) {
  const auto it = table().find(name);
  if (it == table().end()) throw std::out_of_range("no bundled scenario named '" + name + "'");
  return it->second;
}

ExperimentConfig bundled_scenario(const std::string& name) { return parse_config(bundled_scenario_text(name)); }

}  // namespace cqn
