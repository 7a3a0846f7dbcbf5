#pragma once

// Integer linear program of the request placement problem, built over
// function instances: nodes are the begin node, every deployed instance and
// the end node; x selects virtual links, y selects instances and o orders
// the selected links. Constraint families are c8..c20 (linear rows) and
// c21..c23 (variable domains).

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "drp/energy.hpp"
#include "drp/solver.hpp"

namespace drp {

struct IlpNode {
  enum class Kind { Begin, End, Instance };
  Kind kind = Kind::Instance;
  std::size_t device = 0;
  /// Function index for instance nodes.
  std::optional<std::size_t> function;
  std::string label;
};

enum class VarKind { X, Y, O };

struct Term {
  std::size_t var;
  double coef;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::string name;
  /// "c8" .. "c20".
  std::string family;
  std::vector<Term> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
  /// Integer coefficients and right-hand side; evaluated exactly.
  bool integral = true;
};

struct IlpOptions {
  /// Defaults to |F| + 2.
  std::optional<std::int64_t> beta;
};

class IlpModel {
 public:
  const std::vector<IlpNode>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t begin_node() const { return 0; }
  std::size_t end_node() const { return nodes_.size() - 1; }
  std::int64_t beta() const { return beta_; }
  double deadline_ms() const { return deadline_ms_; }
  Objective objective_kind() const { return objective_kind_; }

  std::size_t x(std::size_t from, std::size_t to) const { return from * nodes_.size() + to; }
  std::size_t o(std::size_t from, std::size_t to) const {
    return nodes_.size() * nodes_.size() + from * nodes_.size() + to;
  }
  /// Instance nodes only (1..|Φ|-2).
  std::size_t y(std::size_t node) const { return 2 * nodes_.size() * nodes_.size() + node - 1; }

  std::size_t variable_count() const { return 2 * nodes_.size() * nodes_.size() + nodes_.size() - 2; }
  std::size_t instance_count() const { return nodes_.size() - 2; }
  VarKind kind(std::size_t var) const;
  std::string variable_name(std::size_t var) const;
  std::optional<std::size_t> find_variable(const std::string& name) const;
  /// Upper bound: 1 for x and y, β for o, 0 when the element is saturated.
  std::int64_t upper_bound(std::size_t var) const { return upper_[var]; }

  const std::vector<Term>& objective() const { return objective_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }

  /// Node index of the instance (device, function); nullopt if not deployed.
  std::optional<std::size_t> find_instance(const FunctionInstance& instance) const;
  const FunctionInstance& instance(std::size_t node) const { return instance_ids_.at(node - 1); }

  double objective_value(const std::vector<std::int64_t>& values) const;

 private:
  friend IlpModel build_model(const PlacementProblem&, Objective, const IlpOptions&);

  std::vector<IlpNode> nodes_;
  std::vector<FunctionInstance> instance_ids_;
  std::int64_t beta_ = 0;
  double deadline_ms_ = 0.0;
  Objective objective_kind_ = Objective::OverallEnergy;
  std::vector<std::int64_t> upper_;
  std::vector<Term> objective_;
  std::vector<LinearConstraint> constraints_;
};

/// Values for every variable, indexed like IlpModel::variable_name.
struct Assignment {
  std::vector<std::int64_t> values;
};

IlpModel build_model(const PlacementProblem& problem, Objective objective,
                     const IlpOptions& options = {});

/// CPLEX LP text. Byte-identical for identical models.
std::string export_lp(const IlpModel& model);

Assignment encode_placement(const IlpModel& model, const Placement& placement);

/// Names of every violated constraint (e.g. "c11_2", "c21_3_4"); empty when
/// the assignment is feasible.
std::vector<std::string> validate_assignment(const IlpModel& model, const Assignment& assignment);

/// Family prefix of a constraint name ("c18_3_5" -> "c18").
std::string constraint_family(const std::string& name);

Placement decode_assignment(const IlpModel& model, const Assignment& assignment);

/// Reads "name value" lines (solution files of common MILP solvers); lines
/// starting with '#' are ignored, absent variables are 0.
Assignment read_solution(const IlpModel& model, std::istream& in);
void write_solution(const IlpModel& model, const Assignment& assignment, std::ostream& out);

}  // namespace drp
