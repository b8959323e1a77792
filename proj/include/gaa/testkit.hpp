#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gaa/graph.hpp"
#include "gaa/model.hpp"
#include "gaa/tensor.hpp"

// Synthetic datasets with a planted, diffusion-routed label rule, plus the
// brute-force oracles used by the test suites.
namespace gaa::testkit {

struct SynthSpec {
  std::size_t n_nodes = 200;
  // Ring lattice of this even degree; the non-adjacent lattice edges are
  // rewired with rewire_prob. The ring itself keeps the graph connected.
  std::size_t lattice_degree = 4;
  double rewire_prob = 0.05;
  // Modules are arcs of the ring, evenly spaced.
  std::size_t n_modules = 10;
  std::size_t module_size_min = 6;
  std::size_t module_size_max = 10;
  std::size_t n_compounds = 300;
  double target_density = 0.014;  // fraction of nodes targeted per compound
  double positive_ratio = 0.102;
  // Label = 1 iff the RWR mass (at signal_alpha) that a compound's targets
  // place on the signal module ranks in the top positive_ratio.
  double signal_alpha = 0.1;
  // Targets are never drawn within this many hops of any module, so the
  // label reaches the modules only by diffusion.
  std::size_t module_exclusion_hops = 2;
  double noise_rate = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
  std::size_t targets_per_compound() const;
};

struct SynthDataset {
  SharedGraph graph;
  SupermoduleMap modules;
  CompoundSet compounds;  // labeled
  std::size_t signal_module = 0;
  double threshold = 0.0;
  std::vector<double> signal_mass;  // per compound
};

SynthDataset generate(const SynthSpec& spec);

// RWR mass on `members` at alpha for a compound with the given targets.
double module_mass(const SharedGraph& graph, std::span<const NodeIndex> targets, std::span<const NodeIndex> members,
                   double alpha);

// GAT layer computed with an explicit N x N attention matrix over
// neighborhoods with self-loops. N <= 50.
Tensor dense_reference_gat(const GatLayerParams& layer, const Tensor& h, const SharedGraph& graph,
                           double leaky_slope = 0.2, double elu_alpha = 1.0);

inline constexpr std::size_t kDenseGatMaxNodes = 50;

// Average precision by scanning every distinct score as a threshold and
// recounting the confusion matrix from scratch. O(n^2).
double brute_force_aupr(std::span<const double> scores, std::span<const int> labels);

// Builds a graph over nodes named "n00".."nNN" from index pairs; ids are
// zero-padded so sorted-id order equals index order.
SharedGraph graph_from_indices(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

// Random connected graph: a random spanning tree plus extra_edges random edges.
SharedGraph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed);

// Central finite differences of a scalar function with respect to every
// entry of x (x is restored afterwards).
Tensor numeric_gradient(const std::function<double()>& f, Tensor& x, double h = 1e-4);

}  // namespace gaa::testkit
