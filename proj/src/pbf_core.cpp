#include "pbmrf/pbf_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "pbmrf/errors.hpp"

namespace pbmrf {

void check_table_arity(std::size_t arity, std::string_view context) {
  if (arity > kMaxTableVariables) {
    throw ResourceLimitExceeded(std::string(context) + ": dense table over " +
                                std::to_string(arity) + " variables exceeds the cap of " +
                                std::to_string(kMaxTableVariables));
  }
}

// ---------------------------------------------------------------------------
// InteractionSet

InteractionSet::InteractionSet(std::initializer_list<Index> indices)
    : InteractionSet(std::vector<Index>(indices)) {}

InteractionSet::InteractionSet(std::vector<Index> indices) : indices_(std::move(indices)) {
  for (std::size_t k = 1; k < indices_.size(); ++k) {
    if (indices_[k - 1] >= indices_[k]) {
      throw InvalidArgument("InteractionSet: indices must be strictly increasing");
    }
  }
}

InteractionSet InteractionSet::from_unsorted(std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  return InteractionSet(std::move(indices));
}

bool InteractionSet::contains(Index i) const noexcept {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

bool InteractionSet::is_subset_of(const InteractionSet& other) const noexcept {
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

bool InteractionSet::intersects(const InteractionSet& other) const noexcept {
  auto a = indices_.begin();
  auto b = other.indices_.begin();
  while (a != indices_.end() && b != other.indices_.end()) {
    if (*a == *b) return true;
    if (*a < *b) {
      ++a;
    } else {
      ++b;
    }
  }
  return false;
}

InteractionSet InteractionSet::with(Index i) const {
  InteractionSet out;
  out.indices_.reserve(indices_.size() + 1);
  auto pos = std::lower_bound(indices_.begin(), indices_.end(), i);
  out.indices_.assign(indices_.begin(), pos);
  if (pos == indices_.end() || *pos != i) out.indices_.push_back(i);
  out.indices_.insert(out.indices_.end(), pos, indices_.end());
  return out;
}

InteractionSet InteractionSet::without(Index i) const {
  InteractionSet out;
  out.indices_.reserve(indices_.size());
  for (Index k : indices_) {
    if (k != i) out.indices_.push_back(k);
  }
  return out;
}

InteractionSet InteractionSet::set_union(const InteractionSet& other) const {
  InteractionSet out;
  out.indices_.reserve(indices_.size() + other.indices_.size());
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                 std::back_inserter(out.indices_));
  return out;
}

InteractionSet InteractionSet::set_difference(const InteractionSet& other) const {
  InteractionSet out;
  std::set_difference(indices_.begin(), indices_.end(), other.indices_.begin(),
                      other.indices_.end(), std::back_inserter(out.indices_));
  return out;
}

bool InteractionSet::active_in(std::span<const std::uint8_t> x) const noexcept {
  for (Index k : indices_) {
    if (!x[k]) return false;
  }
  return true;
}

std::string InteractionSet::to_string() const {
  std::string s = "{";
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(indices_[k]);
  }
  return s + "}";
}

bool canonical_less(const InteractionSet& a, const InteractionSet& b) noexcept {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::size_t InteractionSetHash::operator()(const InteractionSet& s) const noexcept {
  // FNV-1a over the index words.
  std::uint64_t h = 1469598103934665603ULL;
  for (Index k : s) {
    h ^= k;
    h *= 1099511628211ULL;
  }
  h ^= s.size();
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// PseudoBooleanFunction

PseudoBooleanFunction::PseudoBooleanFunction(std::size_t num_variables) : n_(num_variables) {
  ensure(InteractionSet{});
}

PseudoBooleanFunction PseudoBooleanFunction::from_terms(std::size_t num_variables,
                                                        std::span<const Term> terms) {
  PseudoBooleanFunction f(num_variables);
  for (const auto& t : terms) f.add(t.set, t.beta);
  return f;
}

std::optional<PseudoBooleanFunction::NodeId> PseudoBooleanFunction::find(
    const InteractionSet& set) const {
  auto it = index_.find(set);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

PseudoBooleanFunction::NodeId PseudoBooleanFunction::ensure(const InteractionSet& set) {
  if (auto id = find(set)) return *id;
  if (!set.empty() && set.indices().back() >= n_) {
    throw InvalidArgument("PseudoBooleanFunction: interaction " + set.to_string() +
                          " mentions a variable outside 0.." + std::to_string(n_) + "-1");
  }
  std::vector<NodeId> parents;
  parents.reserve(set.size());
  for (Index k : set) parents.push_back(ensure(set.without(k)));

  NodeId id;
  if (!free_.empty()) {
    id = free_.back();
    free_.pop_back();
  } else {
    id = static_cast<NodeId>(nodes_.size());
    nodes_.emplace_back();
  }
  Node& node = nodes_[id];
  node.set = set;
  node.beta = 0.0;
  node.children.clear();
  node.live = true;
  index_.emplace(set, id);
  for (NodeId p : parents) nodes_[p].children.push_back(id);
  return id;
}

bool PseudoBooleanFunction::contains(const InteractionSet& set) const {
  return index_.contains(set);
}

double PseudoBooleanFunction::coefficient(const InteractionSet& set) const {
  auto id = find(set);
  return id ? nodes_[*id].beta : 0.0;
}

double PseudoBooleanFunction::constant() const { return coefficient(InteractionSet{}); }

void PseudoBooleanFunction::add(const InteractionSet& set, double beta) {
  nodes_[ensure(set)].beta += beta;
}

void PseudoBooleanFunction::scale(double factor) {
  for (auto& node : nodes_) {
    if (node.live) node.beta *= factor;
  }
}

double PseudoBooleanFunction::evaluate(std::span<const std::uint8_t> x) const {
  if (x.size() != n_) {
    throw InvalidArgument("evaluate: state has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(n_));
  }
  double value = 0.0;
  for (const auto& node : nodes_) {
    if (node.live && node.set.active_in(x)) value += node.beta;
  }
  return value;
}

std::vector<Term> PseudoBooleanFunction::terms() const {
  std::vector<Term> out;
  out.reserve(index_.size());
  for_each_term([&](const InteractionSet& s, double b) { out.push_back({s, b}); });
  std::sort(out.begin(), out.end(),
            [](const Term& a, const Term& b) { return canonical_less(a.set, b.set); });
  return out;
}

void PseudoBooleanFunction::collect_descendants(NodeId root, std::vector<NodeId>& out) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{root};
  seen[root] = 1;
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    for (NodeId c : nodes_[id].children) {
      if (!seen[c]) {
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }
}

std::vector<Term> PseudoBooleanFunction::extract(const InteractionSet& lambda,
                                                 SubsetFamily mode) const {
  std::vector<Term> out;
  switch (mode) {
    case SubsetFamily::containing: {
      auto root = find(lambda);
      if (!root) break;
      std::vector<NodeId> ids;
      collect_descendants(*root, ids);
      for (NodeId id : ids) out.push_back({nodes_[id].set, nodes_[id].beta});
      break;
    }
    case SubsetFamily::complement:
      for_each_term([&](const InteractionSet& s, double b) {
        if (!lambda.is_subset_of(s)) out.push_back({s, b});
      });
      break;
    case SubsetFamily::disjoint:
      for_each_term([&](const InteractionSet& s, double b) {
        if (!lambda.intersects(s)) out.push_back({s, b});
      });
      break;
  }
  std::sort(out.begin(), out.end(),
            [](const Term& a, const Term& b) { return canonical_less(a.set, b.set); });
  return out;
}

void PseudoBooleanFunction::erase_nodes(const std::vector<NodeId>& ids) {
  std::vector<char> doomed(nodes_.size(), 0);
  for (NodeId id : ids) doomed[id] = 1;
  for (NodeId id : ids) {
    Node& node = nodes_[id];
    for (Index k : node.set) {
      auto parent = find(node.set.without(k));
      if (!parent || doomed[*parent]) continue;
      auto& ch = nodes_[*parent].children;
      ch.erase(std::remove(ch.begin(), ch.end(), id), ch.end());
    }
  }
  for (NodeId id : ids) {
    Node& node = nodes_[id];
    index_.erase(node.set);
    node.live = false;
    node.beta = 0.0;
    node.children.clear();
    node.set = InteractionSet{};
    free_.push_back(id);
  }
  ensure(InteractionSet{});
}

std::vector<Term> PseudoBooleanFunction::remove_containing(const InteractionSet& lambda) {
  std::vector<Term> out;
  auto root = find(lambda);
  if (!root) return out;
  std::vector<NodeId> ids;
  collect_descendants(*root, ids);
  out.reserve(ids.size());
  for (NodeId id : ids) out.push_back({nodes_[id].set, nodes_[id].beta});
  erase_nodes(ids);
  std::sort(out.begin(), out.end(),
            [](const Term& a, const Term& b) { return canonical_less(a.set, b.set); });
  return out;
}

std::vector<Index> PseudoBooleanFunction::neighbours(Index i) const {
  std::vector<Index> out;
  auto id = find(InteractionSet{i});
  if (!id) return out;
  for (NodeId c : nodes_[*id].children) {
    const auto& s = nodes_[c].set;
    out.push_back(s[0] == i ? s[1] : s[0]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<InteractionSet> PseudoBooleanFunction::children(const InteractionSet& set) const {
  std::vector<InteractionSet> out;
  if (auto id = find(set)) {
    for (NodeId c : nodes_[*id].children) out.push_back(nodes_[c].set);
  }
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::size_t PseudoBooleanFunction::degree() const noexcept {
  std::size_t d = 0;
  for_each_term([&](const InteractionSet& s, double) { d = std::max(d, s.size()); });
  return d;
}

double PseudoBooleanFunction::prune(double tol, PruneCompensation compensation) {
  NodeId root = *find(InteractionSet{});
  std::vector<NodeId> work;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.live && id != root && node.children.empty() && std::abs(node.beta) < tol) {
      work.push_back(id);
    }
  }
  double added = 0.0;
  while (!work.empty()) {
    NodeId id = work.back();
    work.pop_back();
    Node& node = nodes_[id];
    if (!node.live || !node.children.empty() || std::abs(node.beta) >= tol) continue;
    if (compensation == PruneCompensation::upper) {
      added += std::max(0.0, node.beta);
    } else if (compensation == PruneCompensation::lower) {
      added += std::min(0.0, node.beta);
    }
    std::vector<NodeId> parents;
    for (Index k : node.set) {
      if (auto p = find(node.set.without(k))) parents.push_back(*p);
    }
    erase_nodes({id});
    for (NodeId p : parents) {
      if (p != root && nodes_[p].children.empty() && std::abs(nodes_[p].beta) < tol) {
        work.push_back(p);
      }
    }
  }
  if (added != 0.0) nodes_[root].beta += added;
  return added;
}

void PseudoBooleanFunction::check_invariants() const {
  std::size_t live = 0;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (!node.live) continue;
    ++live;
    auto it = index_.find(node.set);
    if (it == index_.end() || it->second != id) throw std::logic_error("index mismatch");
    for (Index k : node.set) {
      auto parent = find(node.set.without(k));
      if (!parent) throw std::logic_error("density violated at " + node.set.to_string());
      const auto& ch = nodes_[*parent].children;
      if (std::count(ch.begin(), ch.end(), id) != 1) {
        throw std::logic_error("missing DAG link to " + node.set.to_string());
      }
    }
    for (NodeId c : node.children) {
      const Node& child = nodes_[c];
      if (!child.live || child.set.size() != node.set.size() + 1 ||
          !node.set.is_subset_of(child.set)) {
        throw std::logic_error("bad DAG child under " + node.set.to_string());
      }
    }
  }
  if (live != index_.size()) throw std::logic_error("index size mismatch");
  if (!contains(InteractionSet{})) throw std::logic_error("missing root");
}

PseudoBooleanFunction add_scaled(const PseudoBooleanFunction& f, const PseudoBooleanFunction& g,
                                 double a, double b) {
  if (f.num_variables() != g.num_variables()) {
    throw InvalidArgument("add_scaled: dimension mismatch (" + std::to_string(f.num_variables()) +
                          " vs " + std::to_string(g.num_variables()) + ")");
  }
  PseudoBooleanFunction out = f;
  out.scale(a);
  g.for_each_term([&](const InteractionSet& s, double beta) { out.add(s, b * beta); });
  out.prune();
  return out;
}

// ---------------------------------------------------------------------------
// Dense tables

DenseLocalFunction::DenseLocalFunction(std::vector<Index> variables, std::vector<double> values)
    : variables_(std::move(variables)), values_(std::move(values)) {
  check_table_arity(variables_.size(), "DenseLocalFunction");
  if (values_.size() != (std::size_t{1} << variables_.size())) {
    throw InvalidArgument("DenseLocalFunction: expected " +
                          std::to_string(std::size_t{1} << variables_.size()) + " values, got " +
                          std::to_string(values_.size()));
  }
  auto sorted = variables_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("DenseLocalFunction: duplicate variable");
  }
}

std::size_t DenseLocalFunction::mask_of(std::span<const std::uint8_t> x) const {
  std::size_t mask = 0;
  for (std::size_t k = 0; k < variables_.size(); ++k) {
    if (x[variables_[k]]) mask |= std::size_t{1} << k;
  }
  return mask;
}

void mobius_transform(std::span<double> table) {
  const std::size_t size = table.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t idx = 0; idx < size; ++idx) {
      if (idx & bit) table[idx] -= table[idx ^ bit];
    }
  }
}

void zeta_transform(std::span<double> table) {
  const std::size_t size = table.size();
  for (std::size_t bit = 1; bit < size; bit <<= 1) {
    for (std::size_t idx = 0; idx < size; ++idx) {
      if (idx & bit) table[idx] += table[idx ^ bit];
    }
  }
}

void accumulate_interactions(PseudoBooleanFunction& f, std::span<const Index> vars,
                             std::span<const double> coeffs, const InteractionSet& monomial,
                             double scale) {
  std::vector<Index> members;
  members.reserve(vars.size() + monomial.size());
  for (std::size_t mask = 0; mask < coeffs.size(); ++mask) {
    if (coeffs[mask] == 0.0) continue;
    members.assign(monomial.begin(), monomial.end());
    for (std::size_t k = 0; k < vars.size(); ++k) {
      if (mask & (std::size_t{1} << k)) members.push_back(vars[k]);
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    f.add(InteractionSet(members), scale * coeffs[mask]);
  }
}

PseudoBooleanFunction interactions_from_values(const DenseLocalFunction& table,
                                               std::optional<std::size_t> num_variables) {
  std::size_t n = 0;
  for (Index v : table.variables()) n = std::max<std::size_t>(n, v + 1);
  if (num_variables) {
    if (*num_variables < n) {
      throw InvalidArgument("interactions_from_values: table mentions variable " +
                            std::to_string(n - 1) + " beyond n");
    }
    n = *num_variables;
  }
  std::vector<double> coeffs(table.values().begin(), table.values().end());
  mobius_transform(coeffs);
  PseudoBooleanFunction f(n);
  f.add(InteractionSet{}, 0.0);
  accumulate_interactions(f, table.variables(), coeffs);
  return f;
}

DenseLocalFunction values_from_interactions(const PseudoBooleanFunction& f,
                                            std::vector<Index> variables) {
  check_table_arity(variables.size(), "values_from_interactions");
  std::unordered_map<Index, std::size_t> position;
  for (std::size_t k = 0; k < variables.size(); ++k) position[variables[k]] = k;
  std::vector<double> table(std::size_t{1} << variables.size(), 0.0);
  f.for_each_term([&](const InteractionSet& s, double beta) {
    std::size_t mask = 0;
    for (Index v : s) {
      auto it = position.find(v);
      if (it == position.end()) {
        throw InvalidArgument("values_from_interactions: variable " + std::to_string(v) +
                              " is not listed");
      }
      mask |= std::size_t{1} << it->second;
    }
    table[mask] += beta;
  });
  zeta_transform(table);
  return DenseLocalFunction(std::move(variables), std::move(table));
}

// ---------------------------------------------------------------------------
// Serialisation

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string to_json(const PseudoBooleanFunction& f) {
  std::string out = "{\"n\": " + std::to_string(f.num_variables()) + ", \"terms\": [";
  bool first = true;
  for (const auto& t : f.terms()) {
    if (!first) out += ", ";
    first = false;
    out += "{\"set\": [";
    for (std::size_t k = 0; k < t.set.size(); ++k) {
      if (k) out += ", ";
      out += std::to_string(t.set[k]);
    }
    out += "], \"beta\": " + format_real(t.beta) + "}";
  }
  out += "]}";
  return out;
}

PseudoBooleanFunction pbf_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("pbf_from_json: ") + e.what());
  }
  if (!doc.contains("n") || !doc.contains("terms")) {
    throw InvalidArgument("pbf_from_json: expected fields \"n\" and \"terms\"");
  }
  PseudoBooleanFunction f(doc.at("n").get<std::size_t>());
  for (const auto& term : doc.at("terms")) {
    auto set = InteractionSet::from_unsorted(term.at("set").get<std::vector<Index>>());
    f.add(set, term.at("beta").get<double>());
  }
  return f;
}

}  // namespace pbmrf
