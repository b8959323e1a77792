#include "gaa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gaa/errors.hpp"
#include "gaa/hash.hpp"

namespace gaa {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::optional<NodeIndex> SharedGraph::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<IdPair> SharedGraph::id_edges() const {
  std::vector<IdPair> out;
  out.reserve(edges_.size());
  for (const auto& [i, j] : edges_) out.emplace_back(node_ids_[i], node_ids_[j]);
  return out;
}

SharedGraph build_graph(std::span<const IdPair> edge_list) {
  if (edge_list.empty()) throw InputError("build_graph: empty edge list");

  std::vector<std::string> ids;
  ids.reserve(edge_list.size() * 2);
  for (const auto& [a, b] : edge_list) {
    if (a == b) continue;
    ids.push_back(a);
    ids.push_back(b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw InputError("build_graph: edge list contains only self-loops");

  std::unordered_map<std::string, NodeIndex> all_index;
  for (std::size_t i = 0; i < ids.size(); ++i) all_index.emplace(ids[i], static_cast<NodeIndex>(i));

  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  pairs.reserve(edge_list.size());
  for (const auto& [a, b] : edge_list) {
    if (a == b) continue;
    NodeIndex i = all_index.at(a), j = all_index.at(b);
    if (i > j) std::swap(i, j);
    pairs.emplace_back(i, j);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  // Union-find for connected components.
  std::vector<NodeIndex> parent(ids.size());
  std::iota(parent.begin(), parent.end(), NodeIndex{0});
  auto find = [&](NodeIndex x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [i, j] : pairs) {
    const auto ri = find(i), rj = find(j);
    if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
  }
  // Roots are the smallest index of their component, so scanning in index
  // order and keeping the first strict maximum resolves ties by smallest id.
  std::vector<std::size_t> comp_size(ids.size(), 0);
  for (NodeIndex i = 0; i < ids.size(); ++i) ++comp_size[find(i)];
  NodeIndex best = 0;
  for (NodeIndex i = 0; i < ids.size(); ++i)
    if (comp_size[i] > comp_size[best]) best = i;

  std::vector<NodeIndex> remap(ids.size(), static_cast<NodeIndex>(-1));
  SharedGraph g;
  for (NodeIndex i = 0; i < ids.size(); ++i) {
    if (find(i) != best) continue;
    remap[i] = static_cast<NodeIndex>(g.node_ids_.size());
    g.index_.emplace(ids[i], remap[i]);
    g.node_ids_.push_back(std::move(ids[i]));
  }
  for (const auto& [i, j] : pairs)
    if (remap[i] != static_cast<NodeIndex>(-1)) g.edges_.emplace_back(remap[i], remap[j]);

  const std::size_t n = g.node_ids_.size();
  std::vector<Triplet> t;
  t.reserve(g.edges_.size() * 2);
  for (const auto& [i, j] : g.edges_) {
    t.push_back({i, j, 1.0});
    t.push_back({j, i, 1.0});
  }
  g.adj_ = CsrMatrix::from_triplets(n, n, t);

  std::vector<double> deg(n);
  for (NodeIndex i = 0; i < n; ++i) {
    deg[i] = static_cast<double>(g.degree(i));
    if (deg[i] == 0.0) throw InputError("build_graph: zero-degree node after component extraction");
  }
  for (auto& e : t) e.value = 1.0 / deg[e.col];
  g.col_norm_ = CsrMatrix::from_triplets(n, n, std::move(t));

  ContentHasher h;
  h.u64(n);
  for (const auto& id : g.node_ids_) h.str(id);
  for (const auto& [i, j] : g.edges_) h.u64(i).u64(j);
  g.hash_ = h.digest();
  return g;
}

std::vector<double> spmv_colnorm(const SharedGraph& graph, std::span<const double> x) {
  if (x.size() != graph.n_nodes())
    throw InputError("spmv_colnorm: vector length " + std::to_string(x.size()) + " != n_nodes " +
                     std::to_string(graph.n_nodes()));
  std::vector<double> y(x.size());
  graph.col_norm_adjacency().multiply(x, y);
  return y;
}

std::optional<std::size_t> SupermoduleMap::index_of(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::uint64_t SupermoduleMap::content_hash() const {
  ContentHasher h;
  h.u64(names.size());
  for (std::size_t m = 0; m < names.size(); ++m) {
    h.str(names[m]).u64(members[m].size());
    for (auto i : members[m]) h.u64(i);
  }
  return h.digest();
}

SupermoduleMap load_supermodules(std::string_view gmt_text, const SharedGraph& graph) {
  SupermoduleMap map;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= gmt_text.size()) {
    auto end = gmt_text.find('\n', pos);
    if (end == std::string_view::npos) end = gmt_text.size();
    auto line = gmt_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() < 3)
      throw InputError("GMT line " + std::to_string(line_no) + ": expected at least 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    if (fields[0].empty()) throw InputError("GMT line " + std::to_string(line_no) + ": empty set name");
    if (!seen.emplace(fields[0]).second)
      throw InputError("GMT line " + std::to_string(line_no) + ": duplicate set name '" + std::string(fields[0]) +
                       "'");

    std::vector<NodeIndex> members;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      if (fields[f].empty()) continue;
      if (const auto idx = graph.index_of(fields[f])) members.push_back(*idx);
    }
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) continue;
    map.names.emplace_back(fields[0]);
    map.members.push_back(std::move(members));
  }

  if (map.names.empty()) throw InputError("GMT: no supermodule shares members with the graph");
  if (map.n_modules() >= graph.n_nodes())
    throw InputError("GMT: " + std::to_string(map.n_modules()) + " supermodules is not fewer than the " +
                     std::to_string(graph.n_nodes()) + " graph nodes");

  std::vector<bool> assigned(graph.n_nodes(), false);
  for (const auto& m : map.members)
    for (auto i : m) assigned[i] = true;
  for (NodeIndex i = 0; i < graph.n_nodes(); ++i)
    if (!assigned[i]) map.unassigned.push_back(i);
  return map;
}

std::optional<std::size_t> CompoundSet::index_of(std::string_view id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

void CompoundSet::validate(std::size_t n_nodes) const {
  if (targets.size() != ids.size()) throw InputError("compound set: targets/ids length mismatch");
  for (std::size_t c = 0; c < targets.size(); ++c) {
    const auto& t = targets[c];
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] >= n_nodes) throw InputError("compound " + ids[c] + ": target index out of range");
      if (k > 0 && t[k - 1] >= t[k]) throw InputError("compound " + ids[c] + ": targets not sorted/unique");
    }
  }
  if (labels) {
    if (labels->size() != ids.size()) throw InputError("compound set: labels/ids length mismatch");
    for (int y : *labels)
      if (y != 0 && y != 1) throw InputError("compound set: label outside {0, 1}");
  }
}

CompoundSet CompoundSet::select(std::span<const std::size_t> rows) const {
  CompoundSet out;
  if (labels) out.labels.emplace();
  for (auto r : rows) {
    out.ids.push_back(ids.at(r));
    out.targets.push_back(targets.at(r));
    if (labels) out.labels->push_back(labels->at(r));
  }
  return out;
}

}  // namespace gaa
