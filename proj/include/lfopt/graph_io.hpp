#pragma once

#include <iosfwd>
#include <string>

#include "lfopt/graph.hpp"

namespace lfopt {

// Textual graph format, one record per line, '#' starts a comment:
//   node <id> <op_kind> out=<N,C,H,W> [k=<h>x<w>] [s=<int>] [d=<int>] [w=<bytes>]
//   edge <i> <j>
//   input <id> <N,C,H,W>
//   output <id>
// Shapes carry no element size; `bytes_per_element` is applied to every tensor
// on load (the CLI always uses the default of 2).
CompGraph parse_graph(const std::string& text, int bytes_per_element = 2);
CompGraph load_graph(const std::string& path, int bytes_per_element = 2);

std::string serialize_graph(const CompGraph& g);
void save_graph(const CompGraph& g, const std::string& path);

} // namespace lfopt
