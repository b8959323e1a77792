#include "gaa/checkpoint.hpp"

#include <set>

#include "gaa/errors.hpp"
#include "gaa/io.hpp"

namespace gaa {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json tensor_json(const Tensor& t) {
  ordered_json j;
  j["shape"] = {t.rows(), t.cols()};
  j["data"] = std::vector<double>(t.data().begin(), t.data().end());
  return j;
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("checkpoint: missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: bad field '") + key + "': " + e.what());
  }
}

}  // namespace

ordered_json to_json(const ModelConfig& cfg) {
  ordered_json j;
  j["in_width"] = cfg.in_width;
  j["heads"] = cfg.heads;
  j["head_width"] = cfg.head_width;
  j["gat2_width"] = cfg.gat2_width;
  j["decoder_width"] = cfg.decoder_width;
  j["mlp_hidden"] = cfg.mlp_hidden;
  j["pool"] = to_string(cfg.pool);
  j["leaky_slope"] = cfg.leaky_slope;
  j["elu_alpha"] = cfg.elu_alpha;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.in_width = field<std::size_t>(j, "in_width");
  c.heads = field<std::size_t>(j, "heads");
  c.head_width = field<std::size_t>(j, "head_width");
  c.gat2_width = field<std::size_t>(j, "gat2_width");
  c.decoder_width = field<std::size_t>(j, "decoder_width");
  c.mlp_hidden = field<std::size_t>(j, "mlp_hidden");
  c.pool = parse_aggregator(field<std::string>(j, "pool"));
  c.leaky_slope = field<double>(j, "leaky_slope");
  c.elu_alpha = field<double>(j, "elu_alpha");
  c.validate();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  ordered_json j;
  j["version"] = kCheckpointVersion;
  j["kind"] = ck.kind == ModelKind::gaa ? "gaa" : "baseline";
  j["graph_hash"] = ck.graph_hash;
  j["modules_hash"] = ck.modules_hash;
  j["alphas"] = ck.alphas;
  j["rwr"] = {{"tol", ck.rwr.tol}, {"max_iter", ck.rwr.max_iter}};
  j["split"] = {{"train", ck.split.train}, {"val", ck.split.val}, {"test", ck.split.test}, {"seed", ck.split.seed}};
  j["class_weights"] = ck.class_weights;
  j["best_epoch"] = ck.best_epoch;
  j["run_config"] = ck.run_config;
  if (ck.kind == ModelKind::gaa) {
    j["model"] = to_json(ck.model);
    ordered_json params;
    visit_params(ck.params, [&](const std::string& name, const Tensor& t) { params[name] = tensor_json(t); });
    j["params"] = std::move(params);
  } else {
    j["linear"] = {{"w", ck.linear.w}, {"b", ck.linear.b}, {"l2", ck.linear.l2}};
  }
  return std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n" + j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text, std::size_t n_nodes, std::size_t n_modules,
                            std::string_view graph_hash, std::string_view modules_hash) {
  const auto nl = text.find('\n');
  const auto header = text.substr(0, nl);
  if (nl == std::string_view::npos || header.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw InputError("checkpoint: missing header");
  if (header != std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion))
    throw InputError("checkpoint: unsupported version '" + std::string(header) + "'");

  json j;
  try {
    j = json::parse(text.substr(nl + 1));
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: malformed body: ") + e.what());
  }
  if (field<int>(j, "version") != kCheckpointVersion) throw InputError("checkpoint: version mismatch");

  Checkpoint ck;
  const auto kind = field<std::string>(j, "kind");
  if (kind == "gaa")
    ck.kind = ModelKind::gaa;
  else if (kind == "baseline")
    ck.kind = ModelKind::baseline;
  else
    throw InputError("checkpoint: unknown model kind '" + kind + "'");
  ck.graph_hash = field<std::string>(j, "graph_hash");
  ck.modules_hash = field<std::string>(j, "modules_hash");
  if (!graph_hash.empty() && ck.graph_hash != graph_hash)
    throw InputError("checkpoint: trained on graph " + ck.graph_hash + " but the data graph is " +
                     std::string(graph_hash));
  if (!modules_hash.empty() && ck.modules_hash != modules_hash)
    throw InputError("checkpoint: trained on supermodules " + ck.modules_hash + " but the data has " +
                     std::string(modules_hash));
  ck.alphas = field<std::vector<double>>(j, "alphas");
  const auto& rwr = j.at("rwr");
  ck.rwr.tol = field<double>(rwr, "tol");
  ck.rwr.max_iter = field<std::size_t>(rwr, "max_iter");
  const auto& split = j.at("split");
  ck.split.train = field<double>(split, "train");
  ck.split.val = field<double>(split, "val");
  ck.split.test = field<double>(split, "test");
  ck.split.seed = field<std::uint64_t>(split, "seed");
  ck.class_weights = field<std::array<double, 2>>(j, "class_weights");
  ck.best_epoch = field<std::size_t>(j, "best_epoch");
  // Re-read in document order so the echo serializes back unchanged.
  ck.run_config = j.contains("run_config") ? ordered_json::parse(text.substr(nl + 1)).at("run_config")
                                           : ordered_json::object();

  if (ck.kind == ModelKind::gaa) {
    ck.model = model_config_from_json(j.at("model"));
    if (ck.model.in_width != ck.alphas.size())
      throw InputError("checkpoint: model input width does not match the alpha grid");
    ck.params = init_params(ck.model, n_nodes, n_modules, 0);
    const auto& params = j.at("params");
    std::set<std::string> expected;
    visit_params(ck.params, [&](const std::string& name, Tensor& t) {
      expected.insert(name);
      if (!params.contains(name)) throw InputError("checkpoint: missing parameter " + name);
      const auto shape = field<std::array<std::size_t, 2>>(params.at(name), "shape");
      if (shape[0] != t.rows() || shape[1] != t.cols())
        throw InputError("checkpoint: parameter " + name + " has shape " + std::to_string(shape[0]) + "x" +
                         std::to_string(shape[1]) + ", incompatible with graph/config (" + std::to_string(t.rows()) +
                         "x" + std::to_string(t.cols()) + ")");
      auto data = field<std::vector<double>>(params.at(name), "data");
      t = Tensor(shape[0], shape[1], std::move(data));
    });
    for (const auto& [name, _] : params.items())
      if (!expected.count(name)) throw InputError("checkpoint: unexpected parameter " + name);
  } else {
    const auto& lin = j.at("linear");
    ck.linear.w = field<std::vector<double>>(lin, "w");
    ck.linear.b = field<double>(lin, "b");
    ck.linear.l2 = field<double>(lin, "l2");
    if (ck.linear.w.size() != n_nodes) throw InputError("checkpoint: baseline weight length does not match graph");
    if (ck.alphas.size() != 1) throw InputError("checkpoint: baseline needs exactly one alpha");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::size_t n_nodes, std::size_t n_modules,
                           std::string_view graph_hash, std::string_view modules_hash) {
  return parse_checkpoint(read_text_file(path), n_nodes, n_modules, graph_hash, modules_hash);
}

}  // namespace gaa
