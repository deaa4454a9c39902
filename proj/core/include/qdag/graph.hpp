#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qdag {

/// Directed graph on p nodes stored as a dense boolean matrix. Entry (h, j)
/// set means the edge Y_h <- Y_j: j is a parent of h. The diagonal is never set.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(int p) : p_(p), edges_(static_cast<std::size_t>(p) * p, 0) {}

  int p() const noexcept { return p_; }
  bool operator()(int h, int j) const { return edges_[index(h, j)] != 0; }
  void set(int h, int j, bool on = true);
  std::size_t edge_count() const;

  bool operator==(const Adjacency&) const = default;

 private:
  std::size_t index(int h, int j) const { return static_cast<std::size_t>(h) * p_ + j; }
  int p_ = 0;
  std::vector<std::uint8_t> edges_;
};

/// Per-individual graphs plus their union.
struct IndividualDagSet {
  int n = 0;
  std::vector<Adjacency> per_individual;
  Adjacency union_graph;
};

/// A permutation of 0..p-1. Under the child-before-parent convention an edge
/// h <- j is allowed only when h precedes j.
struct NodeOrdering {
  std::vector<int> order;

  int p() const { return static_cast<int>(order.size()); }
  /// position[node] = rank of node in `order`.
  std::vector<int> positions() const;
  bool operator==(const NodeOrdering&) const = default;
};

NodeOrdering identity_ordering(int p);
void validate_ordering(const NodeOrdering& ordering);

/// Kahn peeling; true iff no directed cycle.
bool is_acyclic(const Adjacency& adj);

/// Would adding h <- j to an acyclic graph create a cycle? (Path h ~> j
/// along parent->child arrows means j already descends from h.)
bool creates_cycle(const Adjacency& adj, int h, int j);

/// beta_values[i] is a p x p row-major matrix; entry (h,j) nonzero means edge.
IndividualDagSet union_graph(std::span<const std::vector<double>> beta_values, int p,
                             const std::function<bool(double)>& is_edge = {});

/// Child-before-parent order with smallest-index tie-breaking. Throws
/// CycleError carrying one cycle on cyclic input.
NodeOrdering topological_order(const Adjacency& adj);

/// Kendall rank correlation between two orderings of the same node set.
double kendall_tau(const NodeOrdering& a, const NodeOrdering& b);

/// Random permutation whose Kendall tau with `true_order` lies within `tol`
/// of `target_tau`, built by adjacent transpositions from the true order.
NodeOrdering misspecify_order(const NodeOrdering& true_order, double target_tau,
                              std::uint64_t seed, double tol = 0.02, int max_moves = 100000);

/// Number of edges of `adj` that violate `ordering` (child must precede parent).
int ordering_violations(const Adjacency& adj, const NodeOrdering& ordering);

/// CSV with a header of node names and one 0/1 row per child node.
std::string adjacency_to_csv(const Adjacency& adj, const std::vector<std::string>& names);
Adjacency adjacency_from_csv(const std::string& text, std::vector<std::string>* names = nullptr);

}  // namespace qdag
