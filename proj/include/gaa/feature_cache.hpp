#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gaa/diffusion.hpp"

namespace gaa {

// On-disk cache of augmented features, one binary matrix plus a JSON
// sidecar per (graph, compound, grid). Entries live under
// <root>/<graph hash>/ and are written via temp file + rename, so readers
// never observe partial files.
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path root) : root_(std::move(root)) {}

  std::optional<AugmentedFeatures> load(const SharedGraph& graph, const std::string& compound_id,
                                        std::span<const NodeIndex> targets, const AlphaGrid& grid,
                                        const RwrOptions& opts) const;
  void store(const SharedGraph& graph, const std::string& compound_id, std::span<const NodeIndex> targets,
             const AlphaGrid& grid, const RwrOptions& opts, const AugmentedFeatures& features) const;

  std::filesystem::path entry_path(const SharedGraph& graph, const std::string& compound_id,
                                   std::span<const NodeIndex> targets, const AlphaGrid& grid,
                                   const RwrOptions& opts) const;

 private:
  std::filesystem::path root_;
};

// augment_features with read-through caching; `cache` may be null.
std::vector<AugmentedFeatures> augment_features_cached(const SharedGraph& graph, const CompoundSet& compounds,
                                                       const AlphaGrid& grid, const RwrOptions& opts,
                                                       const FeatureCache* cache, std::size_t* hits = nullptr);

}  // namespace gaa
