#pragma once

// Exact deadline-constrained minimum-energy request placement.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "drp/energy.hpp"

namespace drp {

enum class Objective { OverallEnergy, MarginalEnergy };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& text);

struct Optimal {
  Placement placement;
  PlacementEvaluation evaluation;
};

struct Infeasible {
  std::string reason;
};

struct SolveResult {
  std::variant<Optimal, Infeasible> outcome;
  double solver_time_ms = 0.0;
  std::uint64_t labels_explored = 0;

  bool feasible() const { return std::holds_alternative<Optimal>(outcome); }
  const Optimal& optimal() const { return std::get<Optimal>(outcome); }
  const Infeasible& infeasible() const { return std::get<Infeasible>(outcome); }
  /// Energy under the given metric; requires a feasible result.
  double energy(Objective objective) const;
};

struct SolverOptions {
  bool dominance_pruning = true;
};

/// Pareto-label dynamic programming over the layered instance graph
/// v_b | V_f1 | ... | V_f|F| | v_e. Labels carry (energy, latency); a label
/// is dropped when its latency exceeds the deadline or another label at the
/// same instance is at least as good in both. Ties resolve by lower latency,
/// then by the lexicographically smallest instance sequence.
SolveResult solve(const PlacementProblem& problem, Objective objective,
                  const SolverOptions& options = {});

inline constexpr std::uint64_t kDefaultEnumerationBound = 1'000'000;

/// Enumerates every instance combination. Throws EnumerationTooLarge when
/// the product of |V_f| exceeds `bound`.
SolveResult brute_force(const PlacementProblem& problem, Objective objective,
                        std::uint64_t bound = kDefaultEnumerationBound);

struct BothObjectives {
  SolveResult overall;
  SolveResult marginal;
  bool diverged = false;
};

BothObjectives solve_both(const PlacementProblem& problem, const SolverOptions& options = {});

}  // namespace drp
