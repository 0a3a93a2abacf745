#include "defilab/caps.hpp"

#include <cstdlib>
#include <mutex>
#include <sstream>

#include "defilab/error.hpp"

namespace defilab {

namespace {

std::mutex g_caps_mutex;
bool g_caps_initialised = false;
Caps g_caps;

}  // namespace

Caps parse_caps(const std::string& spec, Caps base) {
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw SemanticError("DEFILAB_CAPS: expected key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    long long value = 0;
    try {
      value = std::stoll(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw SemanticError("DEFILAB_CAPS: bad value in '" + item + "'");
    }
    if (value <= 0) throw SemanticError("DEFILAB_CAPS: caps must be positive");
    if (key == "universe") base.universe = static_cast<int>(value);
    else if (key == "field") base.field_size = static_cast<int>(value);
    else if (key == "subsets") base.subset_enumeration = static_cast<int>(value);
    else if (key == "types") base.subset_types = static_cast<int>(value);
    else if (key == "stage") base.stage_extent = static_cast<int>(value);
    else if (key == "formula_nodes") base.formula_nodes = static_cast<std::size_t>(value);
    else throw SemanticError("DEFILAB_CAPS: unknown key '" + key + "'");
  }
  if (base.subset_enumeration > 62 || base.subset_types > 62 || base.stage_extent > 62)
    throw SemanticError("DEFILAB_CAPS: subset caps are limited to 62 elements");
  return base;
}

const Caps& caps() {
  std::lock_guard lock(g_caps_mutex);
  if (!g_caps_initialised) {
    if (const char* env = std::getenv("DEFILAB_CAPS")) g_caps = parse_caps(env);
    g_caps_initialised = true;
  }
  return g_caps;
}

void set_caps(const Caps& c) {
  std::lock_guard lock(g_caps_mutex);
  g_caps = c;
  g_caps_initialised = true;
}

}  // namespace defilab
