#include "gaa/feature_cache.hpp"

#include <bit>
#include <cstring>
#include <iostream>
#include <json.hpp>

#include "gaa/errors.hpp"
#include "gaa/hash.hpp"
#include "gaa/io.hpp"

namespace gaa {

namespace {

using nlohmann::json;

std::uint64_t targets_hash(std::span<const NodeIndex> targets) {
  ContentHasher h;
  h.u64(targets.size());
  for (auto t : targets) h.u64(t);
  return h.digest();
}

json sidecar(const SharedGraph& graph, const std::string& compound_id, std::span<const NodeIndex> targets,
             const AlphaGrid& grid, const RwrOptions& opts) {
  return json{{"graph_hash", to_hex(graph.content_hash())},
              {"compound_id", compound_id},
              {"targets_hash", to_hex(targets_hash(targets))},
              {"grid", grid.alphas()},
              {"tol", opts.tol},
              {"max_iter", opts.max_iter},
              {"rows", graph.n_nodes()},
              {"cols", grid.size()}};
}

}  // namespace

std::filesystem::path FeatureCache::entry_path(const SharedGraph& graph, const std::string& compound_id,
                                               std::span<const NodeIndex> targets, const AlphaGrid& grid,
                                               const RwrOptions& opts) const {
  ContentHasher h;
  h.str(compound_id).u64(targets_hash(targets)).u64(grid.content_hash()).f64(opts.tol);
  return root_ / to_hex(graph.content_hash()) / (to_hex(h.digest()) + ".bin");
}

std::optional<AugmentedFeatures> FeatureCache::load(const SharedGraph& graph, const std::string& compound_id,
                                                    std::span<const NodeIndex> targets, const AlphaGrid& grid,
                                                    const RwrOptions& opts) const {
  const auto bin = entry_path(graph, compound_id, targets, grid, opts);
  auto side = bin;
  side.replace_extension(".json");
  if (!std::filesystem::exists(bin) || !std::filesystem::exists(side)) return std::nullopt;

  const auto expected = sidecar(graph, compound_id, targets, grid, opts);
  json found;
  try {
    found = json::parse(read_text_file(side));
  } catch (const json::exception& e) {
    throw InputError("feature cache: unreadable sidecar " + side.string() + ": " + e.what());
  }
  if (found != expected) throw InputError("feature cache: stale entry " + side.string() + " does not match inputs");

  const std::string raw = read_text_file(bin);
  const std::size_t n = graph.n_nodes() * grid.size();
  if (raw.size() != n * sizeof(double)) throw InputError("feature cache: truncated matrix " + bin.string());
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= std::uint64_t{static_cast<unsigned char>(raw[i * 8 + static_cast<std::size_t>(b)])} << (8 * b);
    data[i] = std::bit_cast<double>(bits);
  }
  return AugmentedFeatures{Tensor(graph.n_nodes(), grid.size(), std::move(data))};
}

void FeatureCache::store(const SharedGraph& graph, const std::string& compound_id,
                         std::span<const NodeIndex> targets, const AlphaGrid& grid, const RwrOptions& opts,
                         const AugmentedFeatures& features) const {
  const auto bin = entry_path(graph, compound_id, targets, grid, opts);
  auto side = bin;
  side.replace_extension(".json");
  std::string raw(features.matrix.size() * 8, '\0');
  for (std::size_t i = 0; i < features.matrix.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(features.matrix[i]);
    for (int b = 0; b < 8; ++b) raw[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>(bits >> (8 * b));
  }
  // Matrix first: a sidecar is only visible once its matrix is complete.
  write_file_atomic(bin, raw);
  write_file_atomic(side, sidecar(graph, compound_id, targets, grid, opts).dump(2) + "\n");
}

std::vector<AugmentedFeatures> augment_features_cached(const SharedGraph& graph, const CompoundSet& compounds,
                                                       const AlphaGrid& grid, const RwrOptions& opts,
                                                       const FeatureCache* cache, std::size_t* hits) {
  if (!cache) {
    if (hits) *hits = 0;
    return augment_features(graph, compounds, grid, opts);
  }
  std::vector<AugmentedFeatures> out(compounds.size());
  std::vector<std::size_t> missing;
  for (std::size_t c = 0; c < compounds.size(); ++c) {
    if (auto f = cache->load(graph, compounds.ids[c], compounds.targets[c], grid, opts))
      out[c] = std::move(*f);
    else
      missing.push_back(c);
  }
  if (hits) *hits = compounds.size() - missing.size();
  if (missing.empty()) return out;

  const auto todo = compounds.select(missing);
  auto fresh = augment_features(graph, todo, grid, opts);
  for (std::size_t k = 0; k < missing.size(); ++k) {
    cache->store(graph, todo.ids[k], todo.targets[k], grid, opts, fresh[k]);
    out[missing[k]] = std::move(fresh[k]);
  }
  return out;
}

}  // namespace gaa
