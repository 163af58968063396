#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "poresens/format.hpp"
#include "poresens/geometry.hpp"

namespace poresens {

struct BoundaryEdge {
    int a = 0, b = 0;
    std::string tag;
};

/// Linear-triangle mesh of a plane-stress sheet. Immutable by convention
/// after construction; all mutation happens in the generators and loaders,
/// which end by calling validate().
struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<BoundaryEdge> boundary_edges;
    std::map<std::string, std::vector<int>> node_sets;
    std::map<std::string, std::vector<int>> element_sets;
    double thickness = 1.0;

    double element_area(int e) const {
        const auto& t = elements[e];
        return 0.5 * cross(nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]);
    }
    Vec2 element_centroid(int e) const {
        const auto& t = elements[e];
        return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
    }
    double total_area() const {
        double a = 0.0;
        for (size_t e = 0; e < elements.size(); ++e) a += element_area(int(e));
        return a;
    }
    void validate() const;
};

struct EulerCounts {
    int v = 0, e = 0, t = 0, holes = 0;
    int characteristic() const { return v - e + t; }
};

namespace detail {

inline uint64_t edge_key(int a, int b) {
    uint32_t lo = uint32_t(std::min(a, b)), hi = uint32_t(std::max(a, b));
    return (uint64_t(hi) << 32) | lo;
}

/// Walks the boundary-edge graph into closed loops; throws if any node has
/// degree != 2 within the graph.
inline std::vector<std::vector<int>> boundary_loops(const Mesh& m) {
    std::unordered_map<int, std::vector<int>> adj;
    for (const auto& be : m.boundary_edges) {
        adj[be.a].push_back(be.b);
        adj[be.b].push_back(be.a);
    }
    for (const auto& [n, nb] : adj)
        if (nb.size() != 2)
            throw Error("mesh: boundary edges do not form closed loops at node " + std::to_string(n));
    std::vector<std::vector<int>> loops;
    std::unordered_set<int> seen;
    for (const auto& [start, nb0] : adj) {
        if (seen.count(start)) continue;
        std::vector<int> loop;
        int prev = -1, cur = start;
        do {
            loop.push_back(cur);
            seen.insert(cur);
            const auto& nb = adj[cur];
            int nxt = (nb[0] == prev) ? nb[1] : nb[0];
            prev = cur;
            cur = nxt;
        } while (cur != start);
        loops.push_back(std::move(loop));
    }
    return loops;
}

}  // namespace detail

inline EulerCounts euler_counts(const Mesh& m) {
    EulerCounts c;
    c.v = int(m.nodes.size());
    c.t = int(m.elements.size());
    std::unordered_set<uint64_t> edges;
    for (const auto& t : m.elements)
        for (int i = 0; i < 3; ++i) edges.insert(detail::edge_key(t[i], t[(i + 1) % 3]));
    c.e = int(edges.size());
    c.holes = int(detail::boundary_loops(m).size()) - 1;
    return c;
}

inline double mesh_min_angle(const Mesh& m) {
    double worst = 180.0;
    for (const auto& t : m.elements) {
        for (int i = 0; i < 3; ++i) {
            Vec2 a = m.nodes[t[i]], b = m.nodes[t[(i + 1) % 3]], c = m.nodes[t[(i + 2) % 3]];
            double ang = std::acos(std::clamp(dot(normalized(b - a), normalized(c - a)), -1.0, 1.0));
            worst = std::min(worst, ang * 180.0 / M_PI);
        }
    }
    return worst;
}

inline void Mesh::validate() const {
    const int nv = int(nodes.size());
    if (nv == 0 || elements.empty()) throw Error("mesh: empty mesh");
    if (!(thickness > 0.0)) throw Error("mesh: thickness must be positive");
    for (size_t e = 0; e < elements.size(); ++e) {
        for (int v : elements[e])
            if (v < 0 || v >= nv)
                throw Error("mesh: element " + std::to_string(e) + " references node out of range");
        if (element_area(int(e)) <= 0.0)
            throw Error("mesh: negative element area at element " + std::to_string(e));
    }
    // Listed boundary edges must be exactly the element edges used once.
    std::unordered_map<uint64_t, int> use;
    for (const auto& t : elements)
        for (int i = 0; i < 3; ++i) use[detail::edge_key(t[i], t[(i + 1) % 3])]++;
    std::unordered_set<uint64_t> listed;
    for (size_t i = 0; i < boundary_edges.size(); ++i) {
        const auto& be = boundary_edges[i];
        if (be.a < 0 || be.a >= nv || be.b < 0 || be.b >= nv)
            throw Error("mesh: boundary edge " + std::to_string(i) + " references node out of range");
        uint64_t k = detail::edge_key(be.a, be.b);
        auto it = use.find(k);
        if (it == use.end() || it->second != 1)
            throw Error("mesh: boundary edge " + std::to_string(i) + " is not a boundary edge of the triangulation");
        if (!listed.insert(k).second)
            throw Error("mesh: boundary edge " + std::to_string(i) + " listed twice");
    }
    for (const auto& [k, n] : use)
        if (n == 1 && !listed.count(k))
            throw Error("mesh: triangulation boundary edge missing from boundary_edges list");
    for (const auto& [name, idx] : node_sets)
        for (int v : idx)
            if (v < 0 || v >= nv) throw Error("mesh: node set '" + name + "' index out of range");
    for (const auto& [name, idx] : element_sets)
        for (int e : idx)
            if (e < 0 || e >= int(elements.size()))
                throw Error("mesh: element set '" + name + "' index out of range");

    auto loops = detail::boundary_loops(*this);
    // The outer loop must enclose every other loop.
    int outer = -1;
    double best = -1.0;
    for (size_t i = 0; i < loops.size(); ++i) {
        Polygon p;
        for (int v : loops[i]) p.push_back(nodes[v]);
        double a = std::abs(polygon_area(p));
        if (a > best) {
            best = a;
            outer = int(i);
        }
    }
    Polygon outer_poly;
    for (int v : loops[outer]) outer_poly.push_back(nodes[v]);
    for (size_t i = 0; i < loops.size(); ++i) {
        if (int(i) == outer) continue;
        if (!point_in_polygon(nodes[loops[i][0]], outer_poly))
            throw Error("mesh: more than one outer boundary loop");
    }
    EulerCounts c = euler_counts(*this);
    if (c.characteristic() != 1 - c.holes)
        throw Error("mesh: Euler relation V-E+T = 1-H violated (" + std::to_string(c.v) + "-" +
                    std::to_string(c.e) + "+" + std::to_string(c.t) + " != 1-" + std::to_string(c.holes) + ")");
}

// ---------------------------------------------------------------------------
// Canonical JSON serialization: sorted keys, floats with 17 significant
// digits, 0-based indices.

inline std::string mesh_to_json(const Mesh& m) {
    std::ostringstream os;
    os << "{\"boundary_edges\":[";
    for (size_t i = 0; i < m.boundary_edges.size(); ++i) {
        const auto& be = m.boundary_edges[i];
        os << (i ? "," : "") << "{\"n\":[" << be.a << "," << be.b << "],\"tag\":\""
           << detail::json_escape(be.tag) << "\"}";
    }
    os << "],\"element_sets\":{";
    {
        size_t i = 0;
        for (const auto& [name, idx] : m.element_sets) {
            os << (i++ ? "," : "") << "\"" << detail::json_escape(name) << "\":[";
            for (size_t j = 0; j < idx.size(); ++j) os << (j ? "," : "") << idx[j];
            os << "]";
        }
    }
    os << "},\"elements\":[";
    for (size_t i = 0; i < m.elements.size(); ++i)
        os << (i ? "," : "") << "[" << m.elements[i][0] << "," << m.elements[i][1] << ","
           << m.elements[i][2] << "]";
    os << "],\"node_sets\":{";
    {
        size_t i = 0;
        for (const auto& [name, idx] : m.node_sets) {
            os << (i++ ? "," : "") << "\"" << detail::json_escape(name) << "\":[";
            for (size_t j = 0; j < idx.size(); ++j) os << (j ? "," : "") << idx[j];
            os << "]";
        }
    }
    os << "},\"nodes\":[";
    for (size_t i = 0; i < m.nodes.size(); ++i)
        os << (i ? "," : "") << "[" << detail::fmt_double(m.nodes[i].x) << ","
           << detail::fmt_double(m.nodes[i].y) << "]";
    os << "],\"thickness\":" << detail::fmt_double(m.thickness) << "}";
    return os.str();
}

inline void save_mesh(const Mesh& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("mesh: cannot open '" + path + "' for writing");
    f << mesh_to_json(m) << "\n";
}

inline Mesh mesh_from_json(const nlohmann::json& j) {
    Mesh m;
    try {
        for (const auto& n : j.at("nodes")) m.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
        for (const auto& e : j.at("elements"))
            m.elements.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
        for (const auto& b : j.at("boundary_edges"))
            m.boundary_edges.push_back({b.at("n").at(0).get<int>(), b.at("n").at(1).get<int>(),
                                        b.at("tag").get<std::string>()});
        if (j.contains("node_sets"))
            for (const auto& [k, v] : j.at("node_sets").items())
                m.node_sets[k] = v.get<std::vector<int>>();
        if (j.contains("element_sets"))
            for (const auto& [k, v] : j.at("element_sets").items())
                m.element_sets[k] = v.get<std::vector<int>>();
        if (j.contains("thickness")) m.thickness = j.at("thickness").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("mesh: parse error: ") + e.what());
    }
    m.validate();
    return m;
}

inline Mesh load_mesh(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("mesh: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("mesh: parse error in '") + path + "': " + e.what());
    }
    return mesh_from_json(j);
}

// ---------------------------------------------------------------------------

/// Structured right-triangle grid on [0,w] x [0,h], edge tags
/// left/right/top/bottom. Node coordinates are exact multiples of the pitch.
inline Mesh generate_rect_mesh(double width, double height, double target_h) {
    if (!(width > 0.0) || !(height > 0.0) || !(target_h > 0.0))
        throw Error("mesh: rectangle dimensions and edge length must be positive");
    if (target_h > std::min(width, height))
        throw Error("mesh: target edge length too large for domain");
    int nx = std::max(1, int(std::llround(std::ceil(width / target_h - 1e-9))));
    int ny = std::max(1, int(std::llround(std::ceil(height / target_h - 1e-9))));
    double dx = width / nx, dy = height / ny;
    Mesh m;
    m.nodes.resize(size_t(nx + 1) * size_t(ny + 1));
    auto id = [&](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.nodes[id(i, j)] = {i * dx, j * dy};
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            m.elements.push_back({a, b, c});
            m.elements.push_back({a, c, d});
        }
    }
    for (int i = 0; i < nx; ++i) {
        m.boundary_edges.push_back({id(i, 0), id(i + 1, 0), "bottom"});
        m.boundary_edges.push_back({id(i, ny), id(i + 1, ny), "top"});
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary_edges.push_back({id(0, j), id(0, j + 1), "left"});
        m.boundary_edges.push_back({id(nx, j), id(nx, j + 1), "right"});
    }
    m.validate();
    return m;
}

/// Nearest node by Euclidean distance; ties resolve to the lowest index.
inline int nearest_node(const Mesh& m, Vec2 p) {
    if (m.nodes.empty()) throw Error("mesh: empty mesh");
    int best = 0;
    double bd = norm2(m.nodes[0] - p);
    for (size_t i = 1; i < m.nodes.size(); ++i) {
        double d = norm2(m.nodes[i] - p);
        if (d < bd) {
            bd = d;
            best = int(i);
        }
    }
    return best;
}

/// Elements whose centroid lies in the closed box. An empty selection is an
/// error: a region quantity over it would be undefined.
inline std::vector<int> select_region(const Mesh& m, const Box& box) {
    if (m.elements.empty()) throw Error("mesh: empty mesh");
    std::vector<int> out;
    for (size_t e = 0; e < m.elements.size(); ++e)
        if (box.contains(m.element_centroid(int(e)))) out.push_back(int(e));
    if (out.empty()) throw Error("mesh: empty region");
    return out;
}

}  // namespace poresens
