#pragma once

#include <string>
#include <vector>

#include "gsamr/amr.hpp"

namespace gsamr {

// Penman interchange format. Parsing normalizes inverse roles ("-of") to
// forward edges; serialization reintroduces them where the spanning tree
// descends against edge direction. Variable references may appear before
// their definition.

// Throws DataError with line/column context on syntax errors, duplicate
// variable definitions and dangling variable references.
AmrGraph parse_penman(const std::string& text);

// Deterministic output: variables v0, v1, ... in node insertion order,
// reentrant nodes emitted once and referenced afterwards, one line per graph.
std::string serialize_penman(const AmrGraph& graph);

// Blank-line-separated blocks. parse_penman_file skips comment lines ('#').
std::vector<AmrGraph> parse_penman_blocks(const std::string& text);
std::string serialize_penman_blocks(const std::vector<AmrGraph>& graphs);

}  // namespace gsamr
