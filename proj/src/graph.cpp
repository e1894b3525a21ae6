#include "biomark/graph.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "biomark/errors.hpp"
#include "biomark/io.hpp"

namespace biomark {

void GeneGraph::build_neighbor_index() {
    neighbors.assign(n_nodes, {});
    for (const auto& [i, j] : edges) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
    }
    for (auto& adj : neighbors) std::sort(adj.begin(), adj.end());
}

std::vector<std::size_t> GeneGraph::degrees() const {
    std::vector<std::size_t> deg(n_nodes, 0);
    for (const auto& [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    return deg;
}

void GeneGraph::validate() const {
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [i, j] : edges) {
        if (i >= j) throw DataError("graph: edge not stored with i < j");
        if (j >= n_nodes) throw DataError("graph: node index out of range");
        if (!seen.insert({i, j}).second) throw DataError("graph: duplicate edge");
    }
    if (!edge_strength.empty() && edge_strength.size() != edges.size())
        throw DataError("graph: edge_strength length mismatch");
}

GeneGraph barabasi_albert(std::size_t n, std::size_t m_attach, SeededRng rng) {
    if (m_attach == 0 || m_attach >= n)
        throw ConfigError("barabasi_albert: require 1 <= m_attach < n, got m_attach=" +
                          std::to_string(m_attach) + ", n=" + std::to_string(n));

    GeneGraph g;
    g.n_nodes = n;

    // Urn of edge endpoints: each edge contributes both ends, so a uniform
    // draw is exactly degree-proportional.
    std::vector<std::uint32_t> urn;
    urn.reserve(2 * ((m_attach + 1) * m_attach / 2 + (n - m_attach - 1) * m_attach));

    const std::uint32_t seed_nodes = static_cast<std::uint32_t>(m_attach + 1);
    for (std::uint32_t i = 0; i < seed_nodes; ++i) {
        for (std::uint32_t j = i + 1; j < seed_nodes; ++j) {
            g.edges.emplace_back(i, j);
            urn.push_back(i);
            urn.push_back(j);
        }
    }

    std::vector<std::uint32_t> targets;
    for (std::uint32_t v = seed_nodes; v < n; ++v) {
        targets.clear();
        // sample m_attach distinct targets, degree-proportional
        while (targets.size() < m_attach) {
            std::uint32_t t = urn[rng.uniform_below(urn.size())];
            if (std::find(targets.begin(), targets.end(), t) == targets.end())
                targets.push_back(t);
        }
        for (std::uint32_t t : targets) {
            g.edges.emplace_back(std::min(v, t), std::max(v, t));
            urn.push_back(v);
            urn.push_back(t);
        }
    }

    std::sort(g.edges.begin(), g.edges.end());
    g.build_neighbor_index();
    return g;
}

GeneGraph correlation_graph(const Matrix& x, double threshold) {
    if (x.rows() < 3) throw DataError("correlation_graph: need at least 3 samples");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ConfigError("correlation_graph: threshold must be in (0,1)");

    const std::size_t n = x.rows(), p = x.cols();

    std::vector<double> mean(p, 0.0), sd(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) mean[j] += x.at(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const double d = x.at(i, j) - mean[j];
            sd[j] += d * d;
        }
    std::size_t n_constant = 0;
    for (std::size_t j = 0; j < p; ++j) {
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
        if (sd[j] == 0.0) ++n_constant;
    }
    if (n_constant > 0)
        std::cerr << "warning: correlation_graph: " << n_constant
                  << " constant feature column(s) join no edges\n";

    // centered, scaled copy so each pair is a plain dot product
    Matrix z(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            z.at(i, j) = sd[j] > 0.0 ? (x.at(i, j) - mean[j]) / sd[j] : 0.0;

    GeneGraph g;
    g.n_nodes = p;
    for (std::size_t a = 0; a < p; ++a) {
        if (sd[a] == 0.0) continue;
        for (std::size_t b = a + 1; b < p; ++b) {
            if (sd[b] == 0.0) continue;
            double r = 0.0;
            for (std::size_t i = 0; i < n; ++i) r += z.at(i, a) * z.at(i, b);
            r /= static_cast<double>(n);
            const double ar = std::min(std::abs(r), 1.0);
            if (ar >= threshold) {
                g.edges.emplace_back(static_cast<std::uint32_t>(a),
                                     static_cast<std::uint32_t>(b));
                g.edge_strength.push_back(ar);
            }
        }
    }
    g.build_neighbor_index();
    return g;
}

void write_edge_list(const GeneGraph& g, const std::string& path,
                     const std::string& provenance_comment) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "#nodes=" << g.n_nodes << "\n";
    if (!provenance_comment.empty()) out << "# " << provenance_comment << "\n";
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const double s = g.edge_strength.empty() ? 1.0 : g.edge_strength[e];
        out << g.edges[e].first << "\t" << g.edges[e].second << "\t" << fmt_double(s)
            << "\n";
    }
}

GeneGraph read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    GeneGraph g;
    bool have_nodes = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("#nodes=", 0) == 0) {
                g.n_nodes = std::stoull(line.substr(7));
                have_nodes = true;
            }
            continue;
        }
        std::istringstream ss(line);
        std::uint64_t i, j;
        double s;
        if (!(ss >> i >> j >> s))
            throw DataError("edge list parse error at " + path + ":" +
                            std::to_string(lineno));
        g.edges.emplace_back(static_cast<std::uint32_t>(std::min(i, j)),
                             static_cast<std::uint32_t>(std::max(i, j)));
        g.edge_strength.push_back(s);
    }
    if (!have_nodes) throw DataError("edge list missing #nodes= header: " + path);

    // restore canonical edge order before indexing; validate first so a bad
    // node index fails cleanly instead of corrupting the neighbor index
    std::vector<std::size_t> order(g.edges.size());
    for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.edges[a] < g.edges[b]; });
    GeneGraph sorted;
    sorted.n_nodes = g.n_nodes;
    sorted.edges.reserve(g.edges.size());
    sorted.edge_strength.reserve(g.edges.size());
    for (std::size_t e : order) {
        sorted.edges.push_back(g.edges[e]);
        sorted.edge_strength.push_back(g.edge_strength[e]);
    }
    sorted.validate();
    sorted.build_neighbor_index();
    return sorted;
}

} // namespace biomark
