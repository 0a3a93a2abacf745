#pragma once

#include <optional>
#include <vector>

#include "defilab/element_set.hpp"
#include "defilab/structure.hpp"

namespace defilab {

/// perm[i] is the image of element i.
using Permutation = std::vector<int>;

/// The automorphisms of a structure fixing `params` pointwise, sorted
/// lexicographically (so the identity comes first).
struct PermutationSet {
  int universe = 0;
  std::vector<int> params;
  std::vector<Permutation> perms;

  std::size_t size() const { return perms.size(); }
  bool contains(const Permutation& p) const;
};

Permutation identity_permutation(int n);
Permutation compose(const Permutation& outer, const Permutation& inner);
Permutation inverse(const Permutation& p);
ElementSet apply(const Permutation& p, ElementSet s);

/// All automorphisms fixing `params`. Memoized per structure identity and
/// parameter set. Function symbols are handled through their graphs.
PermutationSet automorphisms(const Structure& s, const std::vector<int>& params = {});

/// Orbit partition, blocks ordered by least element.
Partition orbits(const PermutationSet& group);
Partition orbits_elements(const Structure& s, const std::vector<int>& params = {});

/// {p(a) : p in group}, deduplicated, ascending.
std::vector<ElementSet> orbit_of_subset(const PermutationSet& group, ElementSet a);
std::vector<ElementSet> orbit_of_subset(const Structure& s, const std::vector<int>& params, ElementSet a);

bool is_rigid(const Structure& s);

/// An isomorphism s -> t if one exists. Throws SemanticError when the
/// signatures differ.
std::optional<Permutation> iso_check(const Structure& s, const Structure& t);

}  // namespace defilab
