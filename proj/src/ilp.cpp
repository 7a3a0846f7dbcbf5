#include "drp/ilp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "drp/errors.hpp"

namespace drp {

namespace {

class ExprBuilder {
 public:
  ExprBuilder& add(std::size_t var, double coef) {
    terms_[var] += coef;
    return *this;
  }
  std::vector<Term> terms() const {
    std::vector<Term> out;
    for (const auto& [var, coef] : terms_)
      if (coef != 0.0) out.push_back({var, coef});
    return out;
  }

 private:
  std::map<std::size_t, double> terms_;
};

}  // namespace

VarKind IlpModel::kind(std::size_t var) const {
  const std::size_t n2 = nodes_.size() * nodes_.size();
  if (var < n2) return VarKind::X;
  if (var < 2 * n2) return VarKind::O;
  return VarKind::Y;
}

std::string IlpModel::variable_name(std::size_t var) const {
  const std::size_t n = nodes_.size();
  switch (kind(var)) {
    case VarKind::X:
      return fmt::format("x_{}_{}", var / n, var % n);
    case VarKind::O:
      return fmt::format("o_{}_{}", (var - n * n) / n, (var - n * n) % n);
    case VarKind::Y:
      return fmt::format("y_{}", var - 2 * n * n + 1);
  }
  return {};
}

std::optional<std::size_t> IlpModel::find_variable(const std::string& name) const {
  const std::size_t n = nodes_.size();
  unsigned long a = 0, b = 0;
  char tail = 0;
  if (name.size() > 2 && name[1] == '_') {
    if (name[0] == 'y' && std::sscanf(name.c_str(), "y_%lu%c", &a, &tail) == 1) {
      if (a >= 1 && a + 1 < n) return y(a);
      return std::nullopt;
    }
    if ((name[0] == 'x' || name[0] == 'o') &&
        std::sscanf(name.c_str() + 2, "%lu_%lu%c", &a, &b, &tail) == 2 && a < n && b < n)
      return name[0] == 'x' ? x(a, b) : o(a, b);
  }
  return std::nullopt;
}

std::optional<std::size_t> IlpModel::find_instance(const FunctionInstance& instance) const {
  for (std::size_t i = 0; i < instance_ids_.size(); ++i)
    if (instance_ids_[i] == instance) return i + 1;
  return std::nullopt;
}

double IlpModel::objective_value(const std::vector<std::int64_t>& values) const {
  double total = 0.0;
  for (const auto& t : objective_) total += t.coef * static_cast<double>(values.at(t.var));
  return total;
}

IlpModel build_model(const PlacementProblem& problem, Objective objective,
                     const IlpOptions& options) {
  const auto& topo = problem.topology;
  const auto& service = problem.service;
  const auto resolved = ResolvedDeployment::resolve(topo, service, problem.deployment);

  IlpModel m;
  m.objective_kind_ = objective;
  m.deadline_ms_ = problem.deadline_ms();
  m.beta_ = options.beta.value_or(static_cast<std::int64_t>(service.size()) + 2);
  if (m.beta_ <= static_cast<std::int64_t>(service.size()) + 1)
    throw ConfigError("beta must exceed the number of chain links");

  const std::size_t begin_device = topo.device_index(problem.request.begin_device);
  const std::size_t end_device = topo.device_index(problem.request.end_device);
  m.nodes_.push_back({IlpNode::Kind::Begin, begin_device, std::nullopt,
                      "begin@" + topo.device(begin_device).id});
  for (const auto& inst : resolved.instances) {
    FunctionInstance id{topo.device(inst.device).id, service.functions()[inst.function].id};
    m.nodes_.push_back({IlpNode::Kind::Instance, inst.device, inst.function, to_string(id)});
    m.instance_ids_.push_back(std::move(id));
  }
  m.nodes_.push_back({IlpNode::Kind::End, end_device, std::nullopt,
                      "end@" + topo.device(end_device).id});

  const std::size_t n = m.nodes_.size();
  const std::size_t B = m.begin_node();
  const std::size_t E = m.end_node();
  const auto beta = static_cast<double>(m.beta_);
  auto is_instance = [&](std::size_t v) { return v != B && v != E; };

  m.upper_.assign(m.variable_count(), 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m.upper_[m.o(i, j)] = m.beta_;

  // Coefficients. A virtual link carries the dataflow entering its target.
  ExprBuilder obj;
  ExprBuilder latency;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == B) continue;
    const std::size_t stage = j == E ? service.size() : *m.nodes_[j].function;
    const auto& flow = service.dataflows()[stage];
    for (std::size_t i = 0; i < n; ++i) {
      const auto& path = topo.path(m.nodes_[i].device, m.nodes_[j].device).links;
      try {
        const auto seg = segment_cost(topo, problem.load, path, flow);
        obj.add(m.x(i, j), seg.energy_mj);
        latency.add(m.x(i, j), seg.latency_ms);
      } catch (const SaturatedLink&) {
        m.upper_[m.x(i, j)] = 0;
      }
    }
  }
  for (std::size_t v = 1; v + 1 < n; ++v) {
    const auto& dev = topo.device(m.nodes_[v].device);
    const auto& fn = service.functions()[*m.nodes_[v].function];
    const double u = problem.load.device_util[m.nodes_[v].device];
    try {
      const double lat = execution_time(dev, u, fn);
      const double energy = objective == Objective::OverallEnergy
                                ? instance_energy_overall(dev, u, fn, problem.policy)
                                : instance_energy_marginal(dev, u, fn, problem.policy);
      obj.add(m.y(v), energy);
      latency.add(m.y(v), lat);
    } catch (const SaturatedDevice&) {
      m.upper_[m.y(v)] = 0;
    }
  }
  m.objective_ = obj.terms();

  auto emit = [&](std::string name, std::string family, const ExprBuilder& expr, Sense sense,
                  double rhs, bool integral = true) {
    m.constraints_.push_back({std::move(name), std::move(family), expr.terms(), sense, rhs, integral});
  };
  auto in_x = [&](ExprBuilder& e, std::size_t v, double c) {
    for (std::size_t a = 0; a < n; ++a) e.add(m.x(a, v), c);
  };
  auto out_x = [&](ExprBuilder& e, std::size_t v, double c) {
    for (std::size_t a = 0; a < n; ++a) e.add(m.x(v, a), c);
  };
  auto in_o = [&](ExprBuilder& e, std::size_t v, double c) {
    for (std::size_t a = 0; a < n; ++a) e.add(m.o(a, v), c);
  };
  auto out_o = [&](ExprBuilder& e, std::size_t v, double c) {
    for (std::size_t a = 0; a < n; ++a) e.add(m.o(v, a), c);
  };

  // c8 flow conservation at instances; c9/c10 source and sink.
  for (std::size_t v = 0; v < n; ++v) {
    if (!is_instance(v)) continue;
    ExprBuilder e;
    in_x(e, v, 1.0);
    out_x(e, v, -1.0);
    emit(fmt::format("c8_{}", v), "c8", e, Sense::Equal, 0.0);
  }
  {
    ExprBuilder e;
    in_x(e, B, 1.0);
    out_x(e, B, -1.0);
    emit("c9", "c9", e, Sense::Equal, -1.0);
  }
  {
    ExprBuilder e;
    in_x(e, E, 1.0);
    out_x(e, E, -1.0);
    emit("c10", "c10", e, Sense::Equal, 1.0);
  }
  // c11 one instance per function.
  for (std::size_t f = 0; f < service.size(); ++f) {
    ExprBuilder e;
    for (std::size_t v = 1; v + 1 < n; ++v)
      if (*m.nodes_[v].function == f) e.add(m.y(v), 1.0);
    emit(fmt::format("c11_{}", f + 1), "c11", e, Sense::Equal, 1.0);
  }
  // c12 selected instances lie on the path.
  for (std::size_t v = 1; v + 1 < n; ++v) {
    ExprBuilder e;
    out_x(e, v, 1.0);
    e.add(m.y(v), -1.0);
    emit(fmt::format("c12_{}", v), "c12", e, Sense::Equal, 0.0);
  }
  // c13/c14 at most one incoming and one outgoing link.
  for (std::size_t v = 0; v < n; ++v) {
    ExprBuilder e;
    in_x(e, v, 1.0);
    emit(fmt::format("c13_{}", v), "c13", e, Sense::LessEqual, 1.0);
  }
  for (std::size_t v = 0; v < n; ++v) {
    ExprBuilder e;
    out_x(e, v, 1.0);
    emit(fmt::format("c14_{}", v), "c14", e, Sense::LessEqual, 1.0);
  }
  // c15 order variables vanish on unselected links.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      ExprBuilder e;
      e.add(m.o(i, j), 1.0).add(m.x(i, j), -beta);
      emit(fmt::format("c15_{}_{}", i, j), "c15", e, Sense::LessEqual, 0.0);
    }
  }
  // c16 order decreases by one along the path; c17 gives the first link β - 1.
  for (std::size_t v = 0; v < n; ++v) {
    if (!is_instance(v)) continue;
    ExprBuilder e;
    in_o(e, v, 1.0);
    out_o(e, v, -1.0);
    out_x(e, v, -1.0);
    emit(fmt::format("c16_{}", v), "c16", e, Sense::Equal, 0.0);
  }
  {
    ExprBuilder e;
    in_o(e, B, 1.0);
    out_o(e, B, -1.0);
    out_x(e, B, -1.0);
    emit("c17", "c17", e, Sense::Equal, -beta);
  }
  // c18 consecutive functions are visited in chain order.
  for (std::size_t phi = 1; phi + 1 < n; ++phi) {
    for (std::size_t psi = 1; psi + 1 < n; ++psi) {
      if (phi == psi || *m.nodes_[phi].function + 1 != *m.nodes_[psi].function) continue;
      ExprBuilder e;
      for (std::size_t a = 0; a < n; ++a) {
        if (a == E) continue;
        e.add(m.o(a, phi), 1.0);
        e.add(m.o(a, psi), -1.0);
        e.add(m.x(a, psi), -beta);
      }
      e.add(m.x(phi, psi), -1.0);
      e.add(m.y(phi), -beta);
      e.add(m.y(psi), beta);
      emit(fmt::format("c18_{}_{}", phi, psi), "c18", e, Sense::GreaterEqual, -beta);
    }
  }
  // c19 deadline.
  emit("c19", "c19", latency, Sense::LessEqual, m.deadline_ms_, false);
  // c20 no self loops.
  {
    ExprBuilder e;
    for (std::size_t v = 0; v < n; ++v) e.add(m.x(v, v), 1.0);
    emit("c20", "c20", e, Sense::Equal, 0.0);
  }
  return m;
}

namespace {

std::string format_terms(const IlpModel& m, const std::vector<Term>& terms) {
  std::string out;
  std::size_t on_line = 0;
  for (const auto& t : terms) {
    if (on_line == 8) {
      out += "\n  ";
      on_line = 0;
    }
    out += t.coef < 0 ? " - " : " + ";
    const double mag = std::abs(t.coef);
    if (mag != 1.0) out += fmt::format("{} ", mag);
    out += m.variable_name(t.var);
    ++on_line;
  }
  if (terms.empty()) out = " 0 " + m.variable_name(0);
  return out;
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::LessEqual:
      return "<=";
    case Sense::Equal:
      return "=";
    case Sense::GreaterEqual:
      return ">=";
  }
  return "=";
}

}  // namespace

std::string export_lp(const IlpModel& m) {
  std::string out;
  out += "\\ Request placement model\n";
  out += fmt::format("\\ objective: {} energy, beta = {}, deadline = {} ms\n",
                     to_string(m.objective_kind()), m.beta(), m.deadline_ms());
  for (std::size_t v = 0; v < m.node_count(); ++v)
    out += fmt::format("\\ node {}: {}\n", v, m.nodes()[v].label);
  out += "Minimize\n obj:" + format_terms(m, m.objective()) + "\n";
  out += "Subject To\n";
  for (const auto& c : m.constraints())
    out += fmt::format(" {}:{} {} {}\n", c.name, format_terms(m, c.terms), sense_text(c.sense), c.rhs);
  out += "Bounds\n";
  for (std::size_t var = 0; var < m.variable_count(); ++var) {
    if (m.kind(var) == VarKind::O)
      out += fmt::format(" 0 <= {} <= {}\n", m.variable_name(var), m.upper_bound(var));
    else if (m.upper_bound(var) == 0)
      out += fmt::format(" {} = 0\n", m.variable_name(var));
  }
  auto section = [&](const char* title, auto&& keep) {
    out += title;
    out += "\n";
    std::size_t on_line = 0;
    for (std::size_t var = 0; var < m.variable_count(); ++var) {
      if (!keep(m.kind(var))) continue;
      out += " ";
      out += m.variable_name(var);
      if (++on_line == 10) {
        out += "\n";
        on_line = 0;
      }
    }
    if (on_line != 0) out += "\n";
  };
  section("Binary", [](VarKind k) { return k != VarKind::O; });
  section("General", [](VarKind k) { return k == VarKind::O; });
  out += "End\n";
  return out;
}

Assignment encode_placement(const IlpModel& m, const Placement& placement) {
  std::size_t functions = 0;
  for (const auto& node : m.nodes())
    if (node.function) functions = std::max(functions, *node.function + 1);
  if (placement.chosen.size() != functions)
    throw InvalidPlacement(fmt::format("placement has {} instances for {} functions",
                                       placement.chosen.size(), functions));
  std::vector<std::size_t> route = {m.begin_node()};
  for (std::size_t i = 0; i < placement.chosen.size(); ++i) {
    auto node = m.find_instance(placement.chosen[i]);
    if (!node) throw InvalidPlacement(fmt::format("{} is not deployed", to_string(placement.chosen[i])));
    if (*m.nodes()[*node].function != i)
      throw InvalidPlacement(fmt::format("{} is out of chain order", to_string(placement.chosen[i])));
    route.push_back(*node);
  }
  route.push_back(m.end_node());

  Assignment a;
  a.values.assign(m.variable_count(), 0);
  for (std::size_t k = 0; k + 1 < route.size(); ++k) {
    a.values[m.x(route[k], route[k + 1])] = 1;
    a.values[m.o(route[k], route[k + 1])] = m.beta() - 1 - static_cast<std::int64_t>(k);
  }
  for (std::size_t k = 1; k + 1 < route.size(); ++k) a.values[m.y(route[k])] = 1;
  return a;
}

std::string constraint_family(const std::string& name) {
  return name.substr(0, name.find('_'));
}

std::vector<std::string> validate_assignment(const IlpModel& m, const Assignment& a) {
  if (a.values.size() != m.variable_count())
    throw ConfigError(fmt::format("assignment has {} values for {} variables", a.values.size(),
                                  m.variable_count()));
  std::vector<std::string> violated;
  const std::size_t n = m.node_count();
  // c21-c23 domains, including elements fixed to zero by saturation.
  for (std::size_t var = 0; var < m.variable_count(); ++var) {
    const std::int64_t v = a.values[var];
    if (v >= 0 && v <= m.upper_bound(var)) continue;
    switch (m.kind(var)) {
      case VarKind::X:
        violated.push_back(fmt::format("c21_{}_{}", var / n, var % n));
        break;
      case VarKind::Y:
        violated.push_back(fmt::format("c22_{}", var - 2 * n * n + 1));
        break;
      case VarKind::O:
        violated.push_back(fmt::format("c23_{}_{}", (var - n * n) / n, (var - n * n) % n));
        break;
    }
  }
  for (const auto& c : m.constraints()) {
    bool ok = true;
    if (c.integral) {
      std::int64_t lhs = 0;
      for (const auto& t : c.terms) lhs += std::llround(t.coef) * a.values[t.var];
      const auto rhs = std::llround(c.rhs);
      ok = c.sense == Sense::Equal ? lhs == rhs : c.sense == Sense::LessEqual ? lhs <= rhs : lhs >= rhs;
    } else {
      double lhs = 0.0;
      for (const auto& t : c.terms) lhs += t.coef * static_cast<double>(a.values[t.var]);
      const double tol = 1e-9 * std::max(1.0, std::abs(c.rhs));
      ok = c.sense == Sense::Equal       ? std::abs(lhs - c.rhs) <= tol
           : c.sense == Sense::LessEqual ? lhs <= c.rhs + tol
                                         : lhs >= c.rhs - tol;
    }
    if (!ok) violated.push_back(c.name);
  }
  return violated;
}

Placement decode_assignment(const IlpModel& m, const Assignment& a) {
  if (a.values.size() != m.variable_count())
    throw DecodeError("assignment size does not match the model");
  const std::size_t n = m.node_count();
  std::size_t functions = 0;
  for (const auto& node : m.nodes())
    if (node.function) functions = std::max(functions, *node.function + 1);

  struct Picked {
    std::int64_t incoming_order;
    std::size_t node;
  };
  std::vector<Picked> picked;
  std::vector<std::size_t> per_function(functions, 0);
  for (std::size_t v = 1; v + 1 < n; ++v) {
    if (a.values[m.y(v)] != 1) continue;
    std::int64_t incoming = 0;
    for (std::size_t u = 0; u < n; ++u) incoming += a.values[m.o(u, v)];
    picked.push_back({incoming, v});
    ++per_function[*m.nodes()[v].function];
  }
  for (std::size_t f = 0; f < functions; ++f)
    if (per_function[f] != 1)
      throw DecodeError(fmt::format("function {} has {} selected instances", f + 1, per_function[f]));
  std::stable_sort(picked.begin(), picked.end(),
                   [](const Picked& l, const Picked& r) { return l.incoming_order > r.incoming_order; });

  Placement p;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const auto& node = m.nodes()[picked[i].node];
    if (*node.function != i)
      throw DecodeError("selected instances are not visited in chain order");
    p.chosen.push_back(m.instance(picked[i].node));
  }
  return p;
}

Assignment read_solution(const IlpModel& m, std::istream& in) {
  Assignment a;
  a.values.assign(m.variable_count(), 0);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name;
    double value = 0.0;
    if (!(row >> name) || name[0] == '#') continue;
    if (!(row >> value)) throw ConfigError(fmt::format("malformed solution line '{}'", line));
    auto var = m.find_variable(name);
    if (!var) continue;  // objective lines, slack names
    const double rounded = std::round(value);
    if (std::abs(value - rounded) > 1e-6)
      throw ConfigError(fmt::format("variable {} has fractional value {}", name, value));
    a.values[*var] = static_cast<std::int64_t>(rounded);
  }
  return a;
}

void write_solution(const IlpModel& m, const Assignment& a, std::ostream& out) {
  out << "# Objective value = " << fmt::format("{}", m.objective_value(a.values)) << '\n';
  for (std::size_t var = 0; var < m.variable_count(); ++var)
    out << m.variable_name(var) << ' ' << a.values[var] << '\n';
}

}  // namespace drp
