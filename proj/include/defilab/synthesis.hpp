#pragma once

#include <span>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/formula.hpp"
#include "defilab/structure.hpp"

namespace defilab {

/// Formula in x1..xm (m = tuple length) of quantifier rank <= k satisfied by
/// exactly the tuples sharing the rank-k type of `tuple` (parameters appear as
/// @i terms). Non-relational structures are relationalized first, so the
/// formula speaks about graph relations. The result is checked with the
/// evaluator before it is returned; throws SizeGuardExceeded when the
/// unshared tree exceeds caps().formula_nodes.
Formula hintikka(const ExpandedStructure& e, std::span<const int> tuple, int k, const std::vector<int>& params = {});

/// Formula in x1 whose solution set is the union of the given rank-k type
/// classes. Throws AnalysisError when the blocks are not unions of classes.
Formula build_union_definition(const ExpandedStructure& e, const std::vector<ElementSet>& blocks, int k,
                               const std::vector<int>& params = {});

}  // namespace defilab
