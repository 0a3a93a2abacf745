#pragma once

#include <cstddef>
#include <string>

namespace defilab {

/// Resource caps for the exponential parts of the library. Defaults are
/// desk-scale; the DEFILAB_CAPS environment variable ("key=value,...") raises
/// them. Keys: universe, field, subsets, types, stage, formula_nodes.
struct Caps {
  int universe = 24;               // advisory; generators and automorphism search warn above it
  int field_size = 512;            // p^d for gen_finite_field
  int subset_enumeration = 20;     // subset_solutions, UNBOUNDED subset classification
  int subset_types = 16;           // subset_type_map, finite-rank subset classification
  int stage_extent = 16;           // hierarchy step input extent
  std::size_t formula_nodes = 1'000'000;  // synthesized formula tree size
};

/// Process-wide caps, initialised from DEFILAB_CAPS on first use.
const Caps& caps();

/// Overrides the process-wide caps (tests and the CLI use this).
void set_caps(const Caps& c);

/// Parses a DEFILAB_CAPS value on top of `base`. Throws SemanticError on unknown keys.
Caps parse_caps(const std::string& spec, Caps base = {});

}  // namespace defilab
