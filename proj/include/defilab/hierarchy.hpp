#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "defilab/definability.hpp"
#include "defilab/hfset.hpp"
#include "defilab/structure.hpp"

namespace defilab {

enum class StageOperator { Def, Imp };

struct StageMode {
  StageOperator op = StageOperator::Def;
  Budget budget;
};

std::string operator_name(StageOperator op);

/// A transitive set of hereditarily finite sets with its membership structure.
struct Stage {
  std::vector<HFSet> extent;  // ascending
  Structure structure;
  std::optional<StageMode> mode;  // empty for a start stage
  int index = 0;

  std::vector<std::uint64_t> codes() const;
};

/// Start stage TC({x}).
Stage start_stage(const HFSet& x);
/// Stage over an explicitly given transitive set.
Stage make_stage(std::vector<HFSet> transitive_set, int index = 0);

/// extent together with every subset of the extent that qualifies under the
/// mode (explicit for DEF, implicit for IMP). Throws CapExceeded when the
/// extent exceeds caps().stage_extent.
Stage step(const Stage& st, const StageMode& mode);

struct LevelComparison {
  int stage = 0;
  int level = 0;  // index m of the V_m compared against
  bool within = false;  // extent is a subset of V_m
  bool equal = false;
};

struct Iteration {
  std::vector<Stage> stages;
  std::vector<LevelComparison> levels;
  bool complete = true;
  std::string stopped;  // reason when a cap stopped the run
};

/// Successive steps from `start`. A cap hit mid-run ends the run with the
/// stages computed so far and complete == false.
Iteration iterate(const Stage& start, const StageMode& mode, int steps);

/// Index of the first stage whose extents differ, nullopt when none do
/// (over the common prefix).
std::optional<int> first_divergence(const Iteration& a, const Iteration& b);

/// Least m with every element of the set in V_m (nullopt above V_5).
std::optional<int> least_level(const std::vector<HFSet>& sets);

std::uint64_t hf_encode(const HFSet& x);
HFSet hf_decode(std::uint64_t code);

/// True iff the structure's single binary relation is extensional and acyclic.
bool check_extensional_wf(const Structure& s);

/// One line per element: "<code> <brace-notation>", ascending by code.
std::string dump_stage(const Stage& st);

}  // namespace defilab
