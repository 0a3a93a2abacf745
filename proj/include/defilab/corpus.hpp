#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "defilab/hfset.hpp"
#include "defilab/structure.hpp"

namespace defilab {

/// Small named structures used by the test suites and the CLI: linear
/// orders, directed cycles, pure sets, an equivalence relation, small
/// fields and membership digraphs, restricted to at most max_size elements.
std::vector<Structure> small_corpus(int max_size = 6);

/// Every transitive set with exactly `size` elements, each ascending; the
/// list is sorted.
std::vector<std::vector<HFSet>> transitive_sets(int size);

/// Loop-free digraphs on n vertices (relation "E"), one per isomorphism class.
std::vector<Structure> all_digraphs(int n);

/// Resolves a structure source: a file path or one of `linord:n`,
/// `cycle:n`, `gf:p,d`, `hf:code`, `set:n`, `digraphs:n`, `corpus:n`.
/// Generator families may yield several structures.
std::vector<Structure> load_source(std::string_view spec);

/// load_source() that must yield exactly one structure.
Structure load_single(std::string_view spec);

}  // namespace defilab
