#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biomark/matrix.hpp"
#include "biomark/rng.hpp"

namespace biomark {

/// Undirected gene-interaction graph. Edges are stored once with i < j,
/// sorted and unique; self-loops never appear in the stored list.
/// A completed graph is immutable and safe to share across threads.
struct GeneGraph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<std::vector<std::uint32_t>> neighbors; // sorted, no self
    std::vector<double> edge_strength;                 // empty or edges.size(), in [0,1]

    void build_neighbor_index();
    std::vector<std::size_t> degrees() const;
    void validate() const;
};

/// Preferential-attachment scale-free graph. Starts from a complete graph
/// on m_attach+1 nodes; every later node attaches m_attach edges to
/// distinct targets sampled with probability proportional to degree
/// (edge-endpoint urn). Edge count is
/// (m_attach+1)*m_attach/2 + (n - m_attach - 1)*m_attach.
GeneGraph barabasi_albert(std::size_t n, std::size_t m_attach, SeededRng rng);

/// Graph over feature columns of x (samples x features): edge (i,j) iff
/// |Pearson r| >= threshold, with edge_strength = |r|. Constant columns
/// join no edges (r treated as 0) and trigger a warning on stderr.
GeneGraph correlation_graph(const Matrix& x, double threshold);

/// Edge-list text format: header "#nodes=N", then one "i<TAB>j<TAB>strength"
/// line per edge. Extra "#"-prefixed lines are comments.
void write_edge_list(const GeneGraph& g, const std::string& path,
                     const std::string& provenance_comment = "");
GeneGraph read_edge_list(const std::string& path);

} // namespace biomark
