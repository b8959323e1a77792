#include "gaa/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "gaa/diffusion.hpp"
#include "gaa/errors.hpp"

namespace gaa::testkit {

namespace {

std::string padded(const char* prefix, std::size_t i, std::size_t n) {
  const int width = static_cast<int>(std::to_string(n > 0 ? n - 1 : 0).size());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_nodes < 10) throw InputError("synth: need at least 10 nodes");
  if (lattice_degree < 2 || lattice_degree % 2 != 0 || lattice_degree >= n_nodes)
    throw InputError("synth: lattice degree must be even, >= 2 and below n_nodes");
  if (!(rewire_prob >= 0.0 && rewire_prob <= 1.0)) throw InputError("synth: rewire_prob outside [0, 1]");
  if (n_modules == 0 || n_modules >= n_nodes) throw InputError("synth: need 0 < n_modules < n_nodes");
  if (module_size_min == 0 || module_size_min > module_size_max || module_size_max > n_nodes)
    throw InputError("synth: invalid module size range");
  if (n_compounds < 2) throw InputError("synth: need at least 2 compounds");
  if (!(target_density > 0.0 && target_density <= 1.0)) throw InputError("synth: target_density outside (0, 1]");
  if (!(positive_ratio > 0.0 && positive_ratio < 1.0)) throw InputError("synth: positive_ratio outside (0, 1)");
  const auto n_pos = static_cast<std::size_t>(std::llround(positive_ratio * static_cast<double>(n_compounds)));
  if (n_pos == 0 || n_pos == n_compounds) throw InputError("synth: positive_ratio leaves a class empty");
  if (!(signal_alpha > 0.0 && signal_alpha <= 1.0)) throw InputError("synth: signal_alpha outside (0, 1]");
  if (!(noise_rate >= 0.0 && noise_rate <= 0.5)) throw InputError("synth: noise_rate outside [0, 0.5]");
}

std::size_t SynthSpec::targets_per_compound() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(target_density * static_cast<double>(n_nodes))));
}

double module_mass(const SharedGraph& graph, std::span<const NodeIndex> targets, std::span<const NodeIndex> members,
                   double alpha) {
  std::vector<double> x0(graph.n_nodes(), 0.0);
  for (auto t : targets) x0.at(t) = 1.0;
  const auto x = rwr_steady_state(graph, x0, alpha, RwrOptions{1e-12, 100'000});
  double mass = 0.0;
  for (auto i : members) mass += x.at(i);
  return mass;
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_nodes;

  std::set<std::pair<std::size_t, std::size_t>> edges;
  auto key = [](std::size_t a, std::size_t b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  for (std::size_t i = 0; i < n; ++i) edges.insert(key(i, (i + 1) % n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any_node(0, n - 1);
  for (std::size_t hop = 2; hop <= spec.lattice_degree / 2; ++hop) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = (i + hop) % n;
      if (unit(rng) < spec.rewire_prob) {
        do {
          j = any_node(rng);
        } while (j == i || edges.count(key(i, j)));
      }
      edges.insert(key(i, j));
    }
  }
  std::vector<IdPair> id_edges;
  for (const auto& [a, b] : edges) id_edges.emplace_back(padded("G", a, n), padded("G", b, n));

  SynthDataset ds{build_graph(id_edges), {}, {}, 0, 0.0, {}};
  const auto& g = ds.graph;

  // Modules are arcs spread evenly around the ring; module 0 carries the signal.
  std::uniform_int_distribution<std::size_t> size_dist(spec.module_size_min, spec.module_size_max);
  const std::size_t spacing = n / spec.n_modules;
  const std::size_t shift = any_node(rng);
  std::string gmt;
  for (std::size_t m = 0; m < spec.n_modules; ++m) {
    const std::size_t size = size_dist(rng);
    gmt += padded("PW", m, spec.n_modules) + "\tsynthetic";
    for (std::size_t k = 0; k < size; ++k) gmt += "\t" + padded("G", (shift + m * spacing + k) % n, n);
    gmt += "\n";
  }
  ds.modules = load_supermodules(gmt, g);
  ds.signal_module = 0;

  // Targets stay more than module_exclusion_hops away from every module member.
  std::vector<std::size_t> dist(g.n_nodes(), std::numeric_limits<std::size_t>::max());
  std::vector<NodeIndex> frontier;
  for (const auto& members : ds.modules.members)
    for (auto i : members)
      if (dist[i] != 0) {
        dist[i] = 0;
        frontier.push_back(i);
      }
  for (std::size_t head = 0; head < frontier.size(); ++head)
    for (auto j : g.neighbors(frontier[head]))
      if (dist[j] == std::numeric_limits<std::size_t>::max()) {
        dist[j] = dist[frontier[head]] + 1;
        frontier.push_back(j);
      }
  std::vector<NodeIndex> pool;
  for (NodeIndex i = 0; i < g.n_nodes(); ++i)
    if (dist[i] > spec.module_exclusion_hops) pool.push_back(i);

  const std::size_t m_targets = spec.targets_per_compound();
  if (pool.size() < m_targets) throw InputError("synth: too few nodes left outside the module neighborhoods");
  ds.compounds.labels.emplace();
  for (std::size_t c = 0; c < spec.n_compounds; ++c) {
    // Partial Fisher-Yates for m distinct targets.
    for (std::size_t k = 0; k < m_targets; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    std::vector<NodeIndex> t(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m_targets));
    std::sort(t.begin(), t.end());
    ds.compounds.ids.push_back(padded("C", c, spec.n_compounds));
    ds.compounds.targets.push_back(std::move(t));
  }

  const auto& signal = ds.modules.members[ds.signal_module];
  for (const auto& t : ds.compounds.targets) ds.signal_mass.push_back(module_mass(g, t, signal, spec.signal_alpha));
  std::vector<double> sorted = ds.signal_mass;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto n_pos = static_cast<std::size_t>(std::llround(spec.positive_ratio * static_cast<double>(spec.n_compounds)));
  ds.threshold = 0.5 * (sorted[n_pos - 1] + sorted[n_pos]);

  for (std::size_t c = 0; c < spec.n_compounds; ++c) {
    int y = ds.signal_mass[c] > ds.threshold ? 1 : 0;
    if (spec.noise_rate > 0.0 && unit(rng) < spec.noise_rate) y = 1 - y;
    ds.compounds.labels->push_back(y);
  }
  ds.compounds.validate(g.n_nodes());
  return ds;
}

Tensor dense_reference_gat(const GatLayerParams& layer, const Tensor& h, const SharedGraph& graph, double leaky_slope,
                           double elu_alpha) {
  const std::size_t n = graph.n_nodes();
  if (n > kDenseGatMaxNodes) throw InputError("dense_reference_gat: graph larger than 50 nodes");
  if (h.rows() != n) throw InputError("dense_reference_gat: feature rows do not match graph");

  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    adj[i][i] = true;
    for (std::size_t j = 0; j < n; ++j) adj[i][j] = adj[i][j] || graph.adjacency().at(i, j) != 0.0;
  }

  std::size_t total = 0;
  for (const auto& w : layer.weight) total += w.rows();
  Tensor out(n, total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < layer.weight.size(); ++k) {
    const Tensor& w = layer.weight[k];
    const Tensor& a = layer.attention[k];
    const std::size_t f = w.rows();
    Tensor wh(n, f);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < f; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) acc += w(r, c) * h(i, c);
        wh(i, r) = acc;
      }
    // Full attention matrix; zero outside neighborhoods.
    Tensor att(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!adj[i][j]) continue;
        double e = 0.0;
        for (std::size_t r = 0; r < f; ++r) e += a[r] * wh(i, r) + a[f + r] * wh(j, r);
        e = e > 0.0 ? e : leaky_slope * e;
        att(i, j) = std::exp(e);
        denom += att(i, j);
      }
      for (std::size_t j = 0; j < n; ++j) att(i, j) /= denom;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < f; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += att(i, j) * wh(j, r);
        out(i, off + r) = acc > 0.0 ? acc : elu_alpha * (std::exp(acc) - 1.0);
      }
    off += f;
  }
  return out;
}

double brute_force_aupr(std::span<const double> scores, std::span<const int> labels) {
  std::vector<double> thresholds(scores.begin(), scores.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] < t) continue;
      predicted += 1.0;
      tp += labels[i] == 1 ? 1.0 : 0.0;
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

SharedGraph graph_from_indices(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<IdPair> ids;
  for (const auto& [a, b] : edges) ids.emplace_back(padded("n", a, n), padded("n", b, n));
  return build_graph(ids);
}

SharedGraph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed) {
  if (n < 2) throw InputError("random_connected_graph: need n >= 2");
  std::mt19937_64 rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    edges.emplace_back(parent(rng), i);
  }
  std::uniform_int_distribution<std::size_t> node(0, n - 1);
  for (std::size_t e = 0; e < extra_edges; ++e) {
    const auto a = node(rng), b = node(rng);
    if (a != b) edges.emplace_back(a, b);
  }
  return graph_from_indices(n, edges);
}

Tensor numeric_gradient(const std::function<double()>& f, Tensor& x, double h) {
  Tensor g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f();
    x[i] = orig - h;
    const double down = f();
    x[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace gaa::testkit
