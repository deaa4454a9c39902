#include "qdag/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "qdag/error.hpp"
#include "qdag/rng.hpp"

namespace qdag {

void Adjacency::set(int h, int j, bool on) {
  if (h < 0 || j < 0 || h >= p_ || j >= p_) throw DimensionError("adjacency index out of range");
  if (h == j && on) throw InputError("self loops are not allowed");
  edges_[index(h, j)] = on ? 1 : 0;
}

std::size_t Adjacency::edge_count() const {
  return static_cast<std::size_t>(std::count(edges_.begin(), edges_.end(), std::uint8_t{1}));
}

std::vector<int> NodeOrdering::positions() const {
  std::vector<int> pos(order.size(), -1);
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = static_cast<int>(r);
  return pos;
}

NodeOrdering identity_ordering(int p) {
  NodeOrdering o;
  o.order.resize(p);
  std::iota(o.order.begin(), o.order.end(), 0);
  return o;
}

void validate_ordering(const NodeOrdering& ordering) {
  std::vector<char> seen(ordering.order.size(), 0);
  for (int v : ordering.order) {
    if (v < 0 || v >= ordering.p() || seen[v]) throw InputError("ordering is not a permutation");
    seen[v] = 1;
  }
}

namespace {

// Remaining-children counts drive the child-first peeling.
std::vector<int> kahn_peel(const Adjacency& adj, std::vector<int>* leftover) {
  const int p = adj.p();
  std::vector<int> children(p, 0);
  for (int h = 0; h < p; ++h)
    for (int j = 0; j < p; ++j)
      if (adj(h, j)) ++children[j];

  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < p; ++v)
    if (children[v] == 0) ready.push(v);

  std::vector<int> out;
  out.reserve(p);
  std::vector<char> done(p, 0);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    out.push_back(v);
    done[v] = 1;
    for (int j = 0; j < p; ++j) {
      if (adj(v, j) && --children[j] == 0) ready.push(j);
    }
  }
  if (leftover) {
    leftover->clear();
    for (int v = 0; v < p; ++v)
      if (!done[v]) leftover->push_back(v);
  }
  return out;
}

std::vector<int> find_cycle(const Adjacency& adj, const std::vector<int>& candidates) {
  // Every leftover node has a parent among the leftovers, so walking parents
  // must revisit a node.
  const int p = adj.p();
  std::vector<char> in_set(p, 0);
  for (int v : candidates) in_set[v] = 1;
  std::vector<int> visit_index(p, -1);
  std::vector<int> path;
  int v = candidates.front();
  while (visit_index[v] < 0) {
    visit_index[v] = static_cast<int>(path.size());
    path.push_back(v);
    int next = -1;
    for (int j = 0; j < p; ++j) {
      if (adj(v, j) && in_set[j]) {
        next = j;
        break;
      }
    }
    v = next;
  }
  return {path.begin() + visit_index[v], path.end()};
}

}  // namespace

bool is_acyclic(const Adjacency& adj) {
  std::vector<int> leftover;
  kahn_peel(adj, &leftover);
  return leftover.empty();
}

bool creates_cycle(const Adjacency& adj, int h, int j) {
  if (h == j) return true;
  if (adj(h, j)) return false;
  // Cycle iff h is an ancestor of j, i.e. j reaches h by following parent links.
  const int p = adj.p();
  std::vector<char> seen(p, 0);
  std::vector<int> stack{j};
  seen[j] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < p; ++u) {
      if (adj(v, u) && !seen[u]) {
        if (u == h) return true;
        seen[u] = 1;
        stack.push_back(u);
      }
    }
  }
  return false;
}

IndividualDagSet union_graph(std::span<const std::vector<double>> beta_values, int p,
                             const std::function<bool(double)>& is_edge) {
  IndividualDagSet out;
  out.n = static_cast<int>(beta_values.size());
  out.union_graph = Adjacency(p);
  out.per_individual.reserve(beta_values.size());
  for (const auto& b : beta_values) {
    if (b.size() != static_cast<std::size_t>(p) * p) throw DimensionError("beta matrix must be p x p");
    Adjacency a(p);
    for (int h = 0; h < p; ++h) {
      for (int j = 0; j < p; ++j) {
        if (h == j) continue;
        const double v = b[static_cast<std::size_t>(h) * p + j];
        if (!std::isfinite(v)) throw InputError("beta values must be finite");
        const bool on = is_edge ? is_edge(v) : v != 0.0;
        if (on) {
          a.set(h, j);
          out.union_graph.set(h, j);
        }
      }
    }
    out.per_individual.push_back(std::move(a));
  }
  return out;
}

NodeOrdering topological_order(const Adjacency& adj) {
  std::vector<int> leftover;
  NodeOrdering o;
  o.order = kahn_peel(adj, &leftover);
  if (!leftover.empty()) {
    std::vector<int> cycle = find_cycle(adj, leftover);
    std::ostringstream msg;
    msg << "graph has a directed cycle:";
    for (int v : cycle) msg << ' ' << v;
    throw CycleError(msg.str(), std::move(cycle));
  }
  return o;
}

double kendall_tau(const NodeOrdering& a, const NodeOrdering& b) {
  if (a.p() != b.p()) throw DimensionError("kendall_tau: orderings have different sizes");
  const int p = a.p();
  if (p < 2) return 1.0;
  const auto pa = a.positions();
  const auto pb = b.positions();
  long concordant = 0;
  long discordant = 0;
  for (int u = 0; u < p; ++u) {
    for (int v = u + 1; v < p; ++v) {
      const long s = static_cast<long>(pa[u] - pa[v]) * (pb[u] - pb[v]);
      if (s > 0) ++concordant;
      else if (s < 0) ++discordant;
    }
  }
  const double pairs = 0.5 * p * (p - 1);
  return static_cast<double>(concordant - discordant) / pairs;
}

NodeOrdering misspecify_order(const NodeOrdering& true_order, double target_tau, std::uint64_t seed,
                              double tol, int max_moves) {
  validate_ordering(true_order);
  if (!(target_tau > -1.0 && target_tau < 1.0)) {
    throw ConfigError("Kendall target must lie in (-1, 1)");
  }
  const int p = true_order.p();
  if (p < 2) throw SearchError("cannot misspecify an ordering of fewer than two nodes");

  // Work in true-rank space: perm[r] is the true rank of the node at position r.
  // Each adjacent swap changes the discordant-pair count by exactly one.
  const long pairs = static_cast<long>(p) * (p - 1) / 2;
  std::vector<int> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  long discordant = 0;
  auto tau_of = [&](long d) { return 1.0 - 2.0 * static_cast<double>(d) / pairs; };

  Rng rng(seed);
  int moves = 0;
  // Phase 1: climb toward the target.
  while (moves < max_moves && std::abs(tau_of(discordant) - target_tau) > tol) {
    const int i = rng.uniform_int(0, p - 2);
    const bool inverted = perm[i] > perm[i + 1];
    const long next = discordant + (inverted ? -1 : 1);
    ++moves;
    if (std::abs(tau_of(next) - target_tau) < std::abs(tau_of(discordant) - target_tau)) {
      std::swap(perm[i], perm[i + 1]);
      discordant = next;
    }
  }
  if (std::abs(tau_of(discordant) - target_tau) > tol) {
    throw SearchError("no permutation of " + std::to_string(p) +
                      " nodes reaches Kendall tau within tolerance of the target");
  }
  // Phase 2: wander inside the tolerance band to decorrelate from the path.
  const int wander = std::min(max_moves - moves, 10 * p * p);
  for (int m = 0; m < wander; ++m) {
    const int i = rng.uniform_int(0, p - 2);
    const bool inverted = perm[i] > perm[i + 1];
    const long next = discordant + (inverted ? -1 : 1);
    if (std::abs(tau_of(next) - target_tau) <= tol) {
      std::swap(perm[i], perm[i + 1]);
      discordant = next;
    }
  }

  NodeOrdering out;
  out.order.resize(p);
  for (int r = 0; r < p; ++r) out.order[r] = true_order.order[perm[r]];
  return out;
}

int ordering_violations(const Adjacency& adj, const NodeOrdering& ordering) {
  const auto pos = ordering.positions();
  int bad = 0;
  for (int h = 0; h < adj.p(); ++h)
    for (int j = 0; j < adj.p(); ++j)
      if (adj(h, j) && pos[h] > pos[j]) ++bad;
  return bad;
}

std::string adjacency_to_csv(const Adjacency& adj, const std::vector<std::string>& names) {
  if (static_cast<int>(names.size()) != adj.p()) throw DimensionError("one name per node required");
  std::ostringstream out;
  out << "node";
  for (const auto& nm : names) out << ',' << nm;
  out << '\n';
  for (int h = 0; h < adj.p(); ++h) {
    out << names[h];
    for (int j = 0; j < adj.p(); ++j) out << ',' << (adj(h, j) ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

Adjacency adjacency_from_csv(const std::string& text, std::vector<std::string>* names) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("adjacency CSV is empty");
  std::vector<std::string> header;
  {
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2) throw InputError("adjacency CSV header has no nodes");
  const int p = static_cast<int>(header.size()) - 1;
  Adjacency adj(p);
  int h = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (h >= p) throw InputError("adjacency CSV has too many rows");
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    for (int j = 0; j < p; ++j) {
      if (!std::getline(ls, cell, ',')) throw InputError("adjacency CSV row too short");
      if (cell == "1") adj.set(h, j);
      else if (cell != "0") throw InputError("adjacency CSV entries must be 0 or 1");
    }
    ++h;
  }
  if (h != p) throw InputError("adjacency CSV must have one row per node");
  if (names) names->assign(header.begin() + 1, header.end());
  return adj;
}

}  // namespace qdag
