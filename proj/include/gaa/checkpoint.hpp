#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "gaa/baseline.hpp"
#include "gaa/diffusion.hpp"
#include "gaa/model.hpp"
#include "gaa/training.hpp"

namespace gaa {

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "GAA-CHECKPOINT";

enum class ModelKind { gaa, baseline };

// Everything needed to score new compounds: the model plus the inputs it is
// tied to (graph and supermodule hashes, diffusion grid, split settings).
struct Checkpoint {
  ModelKind kind = ModelKind::gaa;
  std::string graph_hash;
  std::string modules_hash;
  std::vector<double> alphas;  // grid for GAA, single alpha for baseline
  RwrOptions rwr;
  SplitSpec split;
  std::array<double, 2> class_weights{1.0, 1.0};
  std::size_t best_epoch = 0;
  nlohmann::ordered_json run_config;  // free-form echo of the training settings

  ModelConfig model;
  ModelParams params;
  LinearModel linear;
};

std::string serialize_checkpoint(const Checkpoint& ck);
// Validates the version, the input hashes (when non-empty) and, for GAA
// checkpoints, every tensor shape against the stored config and graph sizes.
Checkpoint parse_checkpoint(std::string_view text, std::size_t n_nodes, std::size_t n_modules,
                            std::string_view graph_hash = {}, std::string_view modules_hash = {});

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path, std::size_t n_nodes, std::size_t n_modules,
                           std::string_view graph_hash = {}, std::string_view modules_hash = {});

nlohmann::ordered_json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace gaa
