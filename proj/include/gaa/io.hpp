#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gaa/graph.hpp"

namespace gaa {

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// `id_a<TAB>id_b` per line; blank and `#` lines skipped.
std::vector<IdPair> parse_edge_tsv(std::string_view text);

struct CompoundParseStats {
  std::size_t dropped_targets = 0;    // node ids not in the graph
  std::size_t empty_compounds = 0;    // no target left after dropping
};

// `compound_id<TAB>node_id` per line. Compounds are ordered by id.
CompoundSet parse_compound_tsv(std::string_view text, const SharedGraph& graph,
                               CompoundParseStats* stats = nullptr);

// `compound_id<TAB>{0|1}` per line.
std::map<std::string, int> parse_label_tsv(std::string_view text);

// Attaches labels. With `require_all`, every compound must have a label.
// Labels for compounds absent from the set are an error either way.
void attach_labels(CompoundSet& compounds, const std::map<std::string, int>& labels, bool require_all);

std::string format_edge_tsv(const SharedGraph& graph);
std::string format_compound_tsv(const CompoundSet& compounds, const SharedGraph& graph);
std::string format_label_tsv(const CompoundSet& compounds);
std::string format_gmt(const SupermoduleMap& modules, const SharedGraph& graph);

}  // namespace gaa
