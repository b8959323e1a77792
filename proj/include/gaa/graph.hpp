#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gaa/sparse.hpp"

namespace gaa {

using NodeIndex = std::uint32_t;
using IdPair = std::pair<std::string, std::string>;

// Undirected, unweighted, connected graph shared by every compound.
//
// Nodes are indexed in sorted external-id order. `col_norm_adjacency()` is
// the column-stochastic matrix with entries A[i][j] / deg(j).
class SharedGraph {
 public:
  std::size_t n_nodes() const { return node_ids_.size(); }
  std::size_t n_edges() const { return edges_.size(); }

  // Undirected edges as (i, j) with i < j, sorted.
  std::span<const std::pair<NodeIndex, NodeIndex>> edges() const { return edges_; }
  const CsrMatrix& adjacency() const { return adj_; }
  const CsrMatrix& col_norm_adjacency() const { return col_norm_; }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  std::size_t degree(NodeIndex i) const { return adj_.row_ptr()[i + 1] - adj_.row_ptr()[i]; }
  std::span<const NodeIndex> neighbors(NodeIndex i) const {
    return adj_.col_idx().subspan(adj_.row_ptr()[i], degree(i));
  }

  std::optional<NodeIndex> index_of(std::string_view id) const;

  // Hash over node ids and edges; identifies the topology.
  std::uint64_t content_hash() const { return hash_; }

  // Edge list in external ids, suitable for re-building the same graph.
  std::vector<IdPair> id_edges() const;

  friend SharedGraph build_graph(std::span<const IdPair> edge_list);

 private:
  std::vector<std::string> node_ids_;
  std::unordered_map<std::string, NodeIndex> index_;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges_;
  CsrMatrix adj_;
  CsrMatrix col_norm_;
  std::uint64_t hash_ = 0;
};

// Deduplicates, symmetrizes and drops self-loops, then keeps the largest
// connected component (ties go to the component holding the smallest id).
// Throws InputError on an empty edge list or one made only of self-loops.
SharedGraph build_graph(std::span<const IdPair> edge_list);

// y = Â x.
std::vector<double> spmv_colnorm(const SharedGraph& graph, std::span<const double> x);

// Node groups used for pooling (gene sets / pathways). Modules may overlap.
struct SupermoduleMap {
  std::vector<std::string> names;
  std::vector<std::vector<NodeIndex>> members;  // sorted, unique, non-empty
  std::vector<NodeIndex> unassigned;

  std::size_t n_modules() const { return names.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::uint64_t content_hash() const;
};

// Parses GMT text (name, description, members...). Members absent from the
// graph are dropped, then modules left empty are removed.
SupermoduleMap load_supermodules(std::string_view gmt_text, const SharedGraph& graph);

// Per-compound binary target vectors over the graph nodes.
struct CompoundSet {
  std::vector<std::string> ids;
  std::vector<std::vector<NodeIndex>> targets;  // sorted, unique
  std::optional<std::vector<int>> labels;       // 0/1, same length as ids

  std::size_t size() const { return ids.size(); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  // Throws InputError when an invariant is broken.
  void validate(std::size_t n_nodes) const;
  // Subset in the order given.
  CompoundSet select(std::span<const std::size_t> rows) const;
};

}  // namespace gaa
