#pragma once

#include <iosfwd>
#include <string>

#include "fracdec/clique_index.hpp"
#include "fracdec/partite_graph.hpp"
#include "fracdec/weighting.hpp"

namespace fracdec {

// Graph file format (line oriented):
//   pg <r> <n>
//   <ci>:<oi> <cj>:<oj>     one line per edge, ci < cj
// The parser rejects intra-class edges, duplicate edges, out-of-range ids
// and unordered class pairs.

void write_graph(std::ostream& out, const PartiteGraph& g);
PartiteGraph read_graph(std::istream& in);

void write_graph_file(const std::string& path, const PartiteGraph& g);
PartiteGraph read_graph_file(const std::string& path);

// Weighting file format: one line per nonzero entry,
//   <c0>:<o0> <c1>:<o1> ... <cr-1>:<or-1> <num>/<den>
// Omitted cliques are zero. Tuples must name cliques of the host index.

void write_weighting(std::ostream& out, const CliqueWeighting<Rational>& w);
CliqueWeighting<Rational> read_weighting(std::istream& in, const CliqueIndex& idx);

void write_weighting_file(const std::string& path, const CliqueWeighting<Rational>& w);
CliqueWeighting<Rational> read_weighting_file(const std::string& path, const CliqueIndex& idx);

} // namespace fracdec
