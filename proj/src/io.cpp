#include "gaa/io.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gaa/errors.hpp"

namespace gaa {

namespace {

// Calls fn(line_no, fields) for every non-blank, non-comment line.
template <class Fn>
void for_each_record(std::string_view text, std::string_view what, std::size_t n_fields, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    if (fields.size() != n_fields || std::any_of(fields.begin(), fields.end(), [](auto f) { return f.empty(); }))
      throw InputError(std::string(what) + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n_fields) + " non-empty tab-separated fields");
    fn(line_no, fields);
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<IdPair> parse_edge_tsv(std::string_view text) {
  std::vector<IdPair> edges;
  for_each_record(text, "edge list", 2, [&](std::size_t, const auto& f) {
    edges.emplace_back(std::string(f[0]), std::string(f[1]));
  });
  return edges;
}

CompoundSet parse_compound_tsv(std::string_view text, const SharedGraph& graph, CompoundParseStats* stats) {
  std::map<std::string, std::vector<NodeIndex>> by_id;
  CompoundParseStats local;
  for_each_record(text, "compound features", 2, [&](std::size_t, const auto& f) {
    auto& targets = by_id[std::string(f[0])];
    if (const auto idx = graph.index_of(f[1]))
      targets.push_back(*idx);
    else
      ++local.dropped_targets;
  });
  CompoundSet out;
  for (auto& [id, targets] : by_id) {
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    if (targets.empty()) ++local.empty_compounds;
    out.ids.push_back(id);
    out.targets.push_back(std::move(targets));
  }
  if (stats) *stats = local;
  return out;
}

std::map<std::string, int> parse_label_tsv(std::string_view text) {
  std::map<std::string, int> labels;
  for_each_record(text, "labels", 2, [&](std::size_t line_no, const auto& f) {
    int y;
    if (f[1] == "0")
      y = 0;
    else if (f[1] == "1")
      y = 1;
    else
      throw InputError("labels line " + std::to_string(line_no) + ": label must be 0 or 1");
    if (!labels.emplace(std::string(f[0]), y).second)
      throw InputError("labels line " + std::to_string(line_no) + ": duplicate compound '" + std::string(f[0]) + "'");
  });
  return labels;
}

void attach_labels(CompoundSet& compounds, const std::map<std::string, int>& labels, bool require_all) {
  for (const auto& [id, y] : labels)
    if (!compounds.index_of(id)) throw InputError("label given for unknown compound '" + id + "'");
  std::vector<int> out(compounds.size(), 0);
  for (std::size_t c = 0; c < compounds.size(); ++c) {
    const auto it = labels.find(compounds.ids[c]);
    if (it == labels.end()) {
      if (require_all) throw InputError("compound '" + compounds.ids[c] + "' has no label");
      continue;
    }
    out[c] = it->second;
  }
  compounds.labels = std::move(out);
}

std::string format_edge_tsv(const SharedGraph& graph) {
  std::string s;
  for (const auto& [a, b] : graph.id_edges()) s += a + '\t' + b + '\n';
  return s;
}

std::string format_compound_tsv(const CompoundSet& compounds, const SharedGraph& graph) {
  std::string s;
  for (std::size_t c = 0; c < compounds.size(); ++c)
    for (auto i : compounds.targets[c]) s += compounds.ids[c] + '\t' + graph.node_ids()[i] + '\n';
  return s;
}

std::string format_label_tsv(const CompoundSet& compounds) {
  if (!compounds.labels) throw InputError("format_label_tsv: compound set has no labels");
  std::string s;
  for (std::size_t c = 0; c < compounds.size(); ++c)
    s += compounds.ids[c] + '\t' + std::to_string((*compounds.labels)[c]) + '\n';
  return s;
}

std::string format_gmt(const SupermoduleMap& modules, const SharedGraph& graph) {
  std::string s;
  for (std::size_t m = 0; m < modules.n_modules(); ++m) {
    s += modules.names[m] + "\tna";
    for (auto i : modules.members[m]) s += '\t' + graph.node_ids()[i];
    s += '\n';
  }
  return s;
}

}  // namespace gaa
