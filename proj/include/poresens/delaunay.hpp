#pragma once

#include <cstdint>
#include <deque>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "poresens/mesh.hpp"
#include "poresens/pore.hpp"

namespace poresens {

/// Closed polygon with one tag per edge (edge i runs points[i] -> points[i+1]).
struct TaggedPolygon {
    Polygon points;
    std::vector<std::string> edge_tags;
};

inline TaggedPolygon rect_outline(double w, double h) {
    return {{{0, 0}, {w, 0}, {w, h}, {0, h}}, {"bottom", "right", "top", "left"}};
}

struct PorousMeshOptions {
    /// Target edge length at pore boundaries as a fraction of h.
    double boundary_size_factor = 0.25;
    /// Linear growth rate of the size field away from pore boundaries.
    double growth = 0.7;
    double min_angle_deg = 15.0;
    double thickness = 1.0;
    int max_points = 2000000;
};

/// Porous mesh plus its filled twin: the dense mesh shares every node and
/// element with the porous one outside the pores, so quantity differences
/// between the two solves isolate the pore effect instead of mixing in
/// far-field discretization error.
struct PorousMeshPair {
    Mesh porous;
    Mesh dense;
};

namespace detail {

// --- predicates with long-double rescue ------------------------------------

inline double orient2d(Vec2 a, Vec2 b, Vec2 c) {
    double l = (b.x - a.x) * (c.y - a.y);
    double r = (b.y - a.y) * (c.x - a.x);
    double det = l - r;
    double mag = std::abs(l) + std::abs(r);
    if (std::abs(det) > 1e-12 * mag) return det;
    long double ll = (long double)(b.x - a.x) * (long double)(c.y - a.y);
    long double rr = (long double)(b.y - a.y) * (long double)(c.x - a.x);
    long double d2 = ll - rr;
    long double m2 = std::abs((double)ll) + std::abs((double)rr);
    if (std::abs((double)d2) > 1e-16 * (double)m2) return (double)d2;
    return 0.0;
}

inline double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto det3 = [](auto ax, auto ay, auto az, auto bx, auto by, auto bz, auto cx, auto cy, auto cz) {
        return ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
    };
    double adx = a.x - d.x, ady = a.y - d.y;
    double bdx = b.x - d.x, bdy = b.y - d.y;
    double cdx = c.x - d.x, cdy = c.y - d.y;
    double ad2 = adx * adx + ady * ady, bd2 = bdx * bdx + bdy * bdy, cd2 = cdx * cdx + cdy * cdy;
    double det = det3(adx, ady, ad2, bdx, bdy, bd2, cdx, cdy, cd2);
    double mag = (std::abs(adx) + std::abs(ady) + ad2) * (std::abs(bdx) + std::abs(bdy) + bd2) *
                 (std::abs(cdx) + std::abs(cdy) + cd2);
    if (std::abs(det) > 1e-11 * mag) return det;
    long double ladx = (long double)a.x - d.x, lady = (long double)a.y - d.y;
    long double lbdx = (long double)b.x - d.x, lbdy = (long double)b.y - d.y;
    long double lcdx = (long double)c.x - d.x, lcdy = (long double)c.y - d.y;
    long double lad2 = ladx * ladx + lady * lady, lbd2 = lbdx * lbdx + lbdy * lbdy,
                lcd2 = lcdx * lcdx + lcdy * lcdy;
    long double d2 = det3(ladx, lady, lad2, lbdx, lbdy, lbd2, lcdx, lcdy, lcd2);
    if (std::abs((double)d2) > 1e-15 * mag) return (double)d2;
    return 0.0;
}

// --- incremental constrained Delaunay triangulation ------------------------

class Triangulator {
public:
    struct Tri {
        int v[3];    // CCW
        int adj[3];  // adj[i] shares the edge opposite v[i]
        bool alive = false;
    };
    struct SegTag {
        int kind;  // 0 = outer, 1 = pore
        int index; // edge index of outer polygon, or pore index
    };

    std::vector<Vec2> pts;
    std::vector<Tri> tris;
    std::vector<int> v2t;  // one alive incident triangle per vertex
    std::unordered_map<uint64_t, SegTag> segs;
    double scale = 1.0;

    explicit Triangulator(const Box& bbox) {
        Vec2 c = 0.5 * (bbox.lo + bbox.hi);
        scale = std::max(bbox.hi.x - bbox.lo.x, bbox.hi.y - bbox.lo.y);
        double r = 20.0 * scale + 1.0;
        pts = {{c.x - 2 * r, c.y - r}, {c.x + 2 * r, c.y - r}, {c.x, c.y + 2 * r}};
        v2t = {0, 0, 0};
        tris.push_back({{0, 1, 2}, {-1, -1, -1}, true});
        last_ = 0;
    }

    static uint64_t key(int a, int b) { return edge_key(a, b); }
    bool is_constrained(int a, int b) const { return segs.count(key(a, b)) != 0; }

    int locate(Vec2 p, int hint) const {
        int t = (hint >= 0 && hint < int(tris.size()) && tris[hint].alive) ? hint : first_alive();
        for (int step = 0; step < int(tris.size()) + 8; ++step) {
            const Tri& T = tris[t];
            int worst = -1;
            double worst_o = 0.0;
            for (int i = 0; i < 3; ++i) {
                double o = orient2d(pts[T.v[(i + 1) % 3]], pts[T.v[(i + 2) % 3]], p);
                if (o < worst_o) {
                    worst_o = o;
                    worst = i;
                }
            }
            if (worst < 0) return t;
            int nxt = T.adj[worst];
            if (nxt < 0) throw Error("triangulation: point escaped the bounding triangle");
            t = nxt;
        }
        // Fallback for rare walk cycles on degenerate configurations.
        for (size_t i = 0; i < tris.size(); ++i) {
            if (!tris[i].alive) continue;
            bool in = true;
            for (int k = 0; k < 3 && in; ++k)
                if (orient2d(pts[tris[i].v[(k + 1) % 3]], pts[tris[i].v[(k + 2) % 3]], p) < 0.0) in = false;
            if (in) return int(i);
        }
        throw Error("triangulation: point location failed");
    }

    /// Insert a point; returns its vertex index (an existing index if p
    /// coincides with a vertex). New triangle indices are appended to
    /// created, when given.
    int insert(Vec2 p, std::vector<int>* created = nullptr) {
        int t0 = locate(p, last_);
        for (int i = 0; i < 3; ++i)
            if (norm(pts[tris[t0].v[i]] - p) < 1e-12 * scale) return tris[t0].v[i];

        int vp = int(pts.size());
        pts.push_back(p);
        v2t.push_back(-1);

        // Cavity: BFS across circumcircle-violating neighbors, never across
        // constrained edges.
        std::vector<int> cav = {t0};
        std::unordered_set<int> in_cav = {t0};
        for (size_t i = 0; i < cav.size(); ++i) {
            const Tri& T = tris[cav[i]];
            for (int k = 0; k < 3; ++k) {
                int o = T.adj[k];
                if (o < 0 || in_cav.count(o)) continue;
                if (is_constrained(T.v[(k + 1) % 3], T.v[(k + 2) % 3])) continue;
                const Tri& O = tris[o];
                if (incircle(pts[O.v[0]], pts[O.v[1]], pts[O.v[2]], p) > 0.0) {
                    cav.push_back(o);
                    in_cav.insert(o);
                }
            }
        }
        // The fan is only valid if every cavity-boundary edge sees p strictly
        // on its left; grow the cavity across offending edges (this also
        // covers insertion exactly on an unconstrained edge).
        struct BEdge { int a, b, ext; };
        std::vector<BEdge> bnd;
        for (int guard = 0;; ++guard) {
            if (guard > 256) throw Error("triangulation: cavity repair did not converge");
            bnd.clear();
            bool grown = false;
            for (size_t i = 0; i < cav.size() && !grown; ++i) {
                const Tri& T = tris[cav[i]];
                for (int k = 0; k < 3; ++k) {
                    int o = T.adj[k];
                    if (o >= 0 && in_cav.count(o)) continue;
                    int a = T.v[(k + 1) % 3], b = T.v[(k + 2) % 3];
                    double tol = 1e-12 * norm(pts[a] - p) * norm(pts[b] - p);
                    if (orient2d(p, pts[a], pts[b]) <= tol) {
                        if (o < 0 || is_constrained(a, b))
                            throw Error("triangulation: degenerate insertion against a fixed edge");
                        cav.push_back(o);
                        in_cav.insert(o);
                        grown = true;
                        break;
                    }
                    bnd.push_back({a, b, o});
                }
            }
            if (!grown) break;
        }
        // Order boundary edges into a single cycle around p.
        std::unordered_map<int, int> next_of;
        for (size_t i = 0; i < bnd.size(); ++i) next_of[bnd[i].a] = int(i);
        if (next_of.size() != bnd.size())
            throw Error("triangulation: cavity boundary is not a single cycle");
        std::vector<int> order;
        order.reserve(bnd.size());
        int cur = 0;
        for (size_t i = 0; i < bnd.size(); ++i) {
            order.push_back(cur);
            cur = next_of.at(bnd[cur].b);
        }
        if (cur != 0) throw Error("triangulation: cavity boundary cycle mismatch");

        std::vector<int> slots;
        for (int t : cav) {
            tris[t].alive = false;
            slots.push_back(t);
        }
        while (slots.size() < bnd.size()) {
            slots.push_back(int(tris.size()));
            tris.push_back({});
        }
        for (size_t i = 0; i < bnd.size(); ++i) {
            const BEdge& e = bnd[order[i]];
            int id = slots[i];
            int id_next = slots[(i + 1) % bnd.size()];
            int id_prev = slots[(i + bnd.size() - 1) % bnd.size()];
            tris[id] = {{vp, e.a, e.b}, {e.ext, id_next, id_prev}, true};
            if (e.ext >= 0) {
                Tri& X = tris[e.ext];
                for (int k = 0; k < 3; ++k) {
                    int xa = X.v[(k + 1) % 3], xb = X.v[(k + 2) % 3];
                    if ((xa == e.a && xb == e.b) || (xa == e.b && xb == e.a)) X.adj[k] = id;
                }
            }
            v2t[e.a] = id;
            v2t[e.b] = id;
            if (created) created->push_back(id);
        }
        v2t[vp] = slots[0];
        last_ = slots[0];
        return vp;
    }

    std::vector<int> incident(int v) const {
        std::vector<int> out;
        std::unordered_set<int> seen;
        std::vector<int> stack = {v2t[v]};
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            if (t < 0 || seen.count(t) || !tris[t].alive) continue;
            const Tri& T = tris[t];
            if (T.v[0] != v && T.v[1] != v && T.v[2] != v) continue;
            seen.insert(t);
            out.push_back(t);
            for (int k = 0; k < 3; ++k) stack.push_back(T.adj[k]);
        }
        return out;
    }

    bool edge_exists(int a, int b) const {
        for (int t : incident(a)) {
            const Tri& T = tris[t];
            for (int k = 0; k < 3; ++k)
                if (T.v[k] == b) return true;
        }
        return false;
    }

    /// Flip the edge opposite vertex i of triangle t. Returns false if the
    /// edge is constrained or the surrounding quad is not strictly convex.
    bool flip(int t, int i) {
        int o = tris[t].adj[i];
        if (o < 0) return false;
        int a = tris[t].v[i], b = tris[t].v[(i + 1) % 3], c = tris[t].v[(i + 2) % 3];
        if (is_constrained(b, c)) return false;
        int q = -1;
        int n_bq = -1, n_qc = -1;
        for (int k = 0; k < 3; ++k) {
            const Tri& O = tris[o];
            if (O.v[k] != b && O.v[k] != c) q = O.v[k];
        }
        if (q < 0) return false;
        if (orient2d(pts[a], pts[b], pts[q]) <= 0.0 || orient2d(pts[a], pts[q], pts[c]) <= 0.0)
            return false;
        int n_ab = -1, n_ca = -1;
        for (int k = 0; k < 3; ++k) {
            int ta = tris[t].v[(k + 1) % 3], tb = tris[t].v[(k + 2) % 3];
            if ((ta == a && tb == b) || (ta == b && tb == a)) n_ab = tris[t].adj[k];
            if ((ta == c && tb == a) || (ta == a && tb == c)) n_ca = tris[t].adj[k];
            int oa = tris[o].v[(k + 1) % 3], ob = tris[o].v[(k + 2) % 3];
            if ((oa == b && ob == q) || (oa == q && ob == b)) n_bq = tris[o].adj[k];
            if ((oa == q && ob == c) || (oa == c && ob == q)) n_qc = tris[o].adj[k];
        }
        tris[t] = {{a, b, q}, {n_bq, o, n_ab}, true};
        tris[o] = {{a, q, c}, {n_qc, n_ca, t}, true};
        auto relink = [&](int nt, int edge_a, int edge_b, int to) {
            if (nt < 0) return;
            for (int k = 0; k < 3; ++k) {
                int na = tris[nt].v[(k + 1) % 3], nb = tris[nt].v[(k + 2) % 3];
                if ((na == edge_a && nb == edge_b) || (na == edge_b && nb == edge_a)) tris[nt].adj[k] = to;
            }
        };
        relink(n_bq, b, q, t);
        relink(n_qc, q, c, o);
        relink(n_ca, c, a, o);
        relink(n_ab, a, b, t);
        for (int vv : {a, b, q}) v2t[vv] = t;
        v2t[c] = o;
        return true;
    }

    /// Flip crossing edges until segment (a,b) is an edge, then constrain it.
    void recover(int a, int b, SegTag tag) {
        for (int guard = 0; guard < 10000; ++guard) {
            if (edge_exists(a, b)) {
                segs[key(a, b)] = tag;
                return;
            }
            bool flipped = false;
            for (size_t t = 0; t < tris.size() && !flipped; ++t) {
                if (!tris[t].alive) continue;
                for (int i = 0; i < 3 && !flipped; ++i) {
                    int u = tris[t].v[(i + 1) % 3], v = tris[t].v[(i + 2) % 3];
                    if (u == a || u == b || v == a || v == b) continue;
                    double o1 = orient2d(pts[a], pts[b], pts[u]);
                    double o2 = orient2d(pts[a], pts[b], pts[v]);
                    double o3 = orient2d(pts[u], pts[v], pts[a]);
                    double o4 = orient2d(pts[u], pts[v], pts[b]);
                    if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 && o2 && o3 && o4)
                        flipped = flip(int(t), i);
                }
            }
            if (!flipped) throw Error("triangulation: failed to recover a constrained segment");
        }
        throw Error("triangulation: segment recovery did not terminate");
    }

    /// Split constrained segment (a,b) at its midpoint; returns the new vertex.
    int split_segment(int a, int b, std::vector<int>* created = nullptr) {
        auto it = segs.find(key(a, b));
        if (it == segs.end()) throw Error("triangulation: split of a non-constrained segment");
        SegTag tag = it->second;
        segs.erase(it);
        Vec2 mid = 0.5 * (pts[a] + pts[b]);
        int m = insert(mid, created);
        segs[key(a, m)] = tag;
        segs[key(m, b)] = tag;
        return m;
    }

    int first_alive() const {
        for (size_t i = 0; i < tris.size(); ++i)
            if (tris[i].alive) return int(i);
        throw Error("triangulation: no alive triangles");
    }

    int last_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------

namespace detail {

struct SizeField {
    double h_max;
    double growth;
    struct Ring {
        const Pore* pore;
        double boundary_size;
        Box bbox;
    };
    std::vector<Ring> rings;

    double operator()(Vec2 x) const {
        double s = h_max;
        for (const auto& r : rings) {
            double reach = (s - r.boundary_size) / growth;
            double dx = std::max({r.bbox.lo.x - x.x, 0.0, x.x - r.bbox.hi.x});
            double dy = std::max({r.bbox.lo.y - x.y, 0.0, x.y - r.bbox.hi.y});
            if (std::hypot(dx, dy) > reach) continue;
            double d = point_polyline_distance(x, r.pore->boundary);
            s = std::min(s, r.boundary_size + growth * d);
        }
        return s;
    }
};

inline Box polygon_bbox(const Polygon& p) {
    Box b{{1e300, 1e300}, {-1e300, -1e300}};
    for (auto v : p) {
        b.lo.x = std::min(b.lo.x, v.x);
        b.lo.y = std::min(b.lo.y, v.y);
        b.hi.x = std::max(b.hi.x, v.x);
        b.hi.y = std::max(b.hi.y, v.y);
    }
    return b;
}

}  // namespace detail

inline PorousMeshPair generate_porous_meshes(const TaggedPolygon& outer, const std::vector<Pore>& pores,
                                             double h, const PorousMeshOptions& opt = {}) {
    if (outer.points.size() < 3 || outer.points.size() != outer.edge_tags.size())
        throw Error("porous mesh: outer polygon needs one tag per edge");
    if (polygon_area(outer.points) <= 0.0)
        throw Error("porous mesh: outer polygon must be counterclockwise");
    if (!(h > 0.0)) throw Error("porous mesh: target edge length must be positive");
    for (const auto& p : pores) {
        p.validate();
        for (auto v : p.boundary)
            if (!point_in_polygon(v, outer.points))
                throw Error("porous mesh: pore '" + p.id + "' touches or lies outside the outer boundary");
        if (polygon_polygon_distance(p.boundary, outer.points) <= 0.0)
            throw Error("porous mesh: pore '" + p.id + "' touches or lies outside the outer boundary");
    }
    for (size_t i = 0; i < pores.size(); ++i)
        for (size_t j = i + 1; j < pores.size(); ++j) {
            bool nested = point_in_polygon(pores[i].center, pores[j].boundary) ||
                          point_in_polygon(pores[j].center, pores[i].boundary);
            if (nested || polygon_polygon_distance(pores[i].boundary, pores[j].boundary) <= 0.0)
                throw Error("porous mesh: pores overlap ('" + pores[i].id + "', '" + pores[j].id + "')");
        }

    // Size field: h far away, graded down to the pore-boundary scale.
    detail::SizeField size{h, opt.growth, {}};
    std::vector<double> pore_seg(pores.size());
    for (size_t i = 0; i < pores.size(); ++i) {
        std::vector<double> lens;
        size_t n = pores[i].boundary.size();
        for (size_t k = 0; k < n; ++k)
            lens.push_back(norm(pores[i].boundary[(k + 1) % n] - pores[i].boundary[k]));
        std::nth_element(lens.begin(), lens.begin() + lens.size() / 2, lens.end());
        double med = lens[lens.size() / 2];
        double b = std::min(opt.boundary_size_factor * h, 1.5 * med);
        pore_seg[i] = b;
        size.rings.push_back({&pores[i], b, detail::polygon_bbox(pores[i].boundary)});
    }

    Box bbox = detail::polygon_bbox(outer.points);
    detail::Triangulator tri(bbox);

    // Constraint vertices, then segment recovery, with long edges pre-split
    // to their local target length.
    std::vector<int> outer_vids;
    for (auto v : outer.points) outer_vids.push_back(tri.insert(v));
    std::vector<std::vector<int>> pore_vids(pores.size());
    for (size_t i = 0; i < pores.size(); ++i)
        for (auto v : pores[i].boundary) pore_vids[i].push_back(tri.insert(v));

    auto constrain_chain = [&](const std::vector<int>& vids, const Polygon& poly, double target,
                               auto tag_of) {
        size_t n = vids.size();
        for (size_t k = 0; k < n; ++k) {
            Vec2 a = poly[k], b = poly[(k + 1) % n];
            int pieces = std::max(1, int(std::ceil(norm(b - a) / target - 1e-9)));
            int prev = vids[k];
            for (int s = 1; s <= pieces; ++s) {
                int nxt = (s == pieces) ? vids[(k + 1) % n] : tri.insert(a + (double(s) / pieces) * (b - a));
                tri.recover(prev, nxt, tag_of(k));
                prev = nxt;
            }
        }
    };
    constrain_chain(outer_vids, outer.points, h,
                    [&](size_t k) { return detail::Triangulator::SegTag{0, int(k)}; });
    for (size_t i = 0; i < pores.size(); ++i)
        constrain_chain(pore_vids[i], pores[i].boundary, std::max(1.4 * pore_seg[i], 1e-9),
                        [&](size_t) { return detail::Triangulator::SegTag{1, int(i)}; });

    // Interior seeds on a uniform grid wherever the size field is still flat.
    {
        double margin = 0.62 * h;
        for (double y = bbox.lo.y + 0.5 * h; y < bbox.hi.y; y += h) {
            for (double x = bbox.lo.x + 0.5 * h; x < bbox.hi.x; x += h) {
                Vec2 p{x, y};
                if (!point_in_polygon(p, outer.points)) continue;
                if (point_polyline_distance(p, outer.points) < margin) continue;
                if (size(p) < 0.9 * h) continue;
                bool near_pore = false;
                for (const auto& pr : pores)
                    if (point_polyline_distance(p, pr.boundary) < margin || point_in_polygon(p, pr.boundary))
                        near_pore = true;
                if (near_pore) continue;
                tri.insert(p);
            }
        }
    }

    // Ruppert refinement: split encroached subsegments first, then insert
    // circumcenters of skinny or oversized triangles.
    const double ratio_bound = 1.0 / (2.0 * std::sin(opt.min_angle_deg * M_PI / 180.0));
    auto tri_metrics = [&](int t, double& ratio, double& longest, Vec2& cc) {
        const auto& T = tri.tris[t];
        Vec2 a = tri.pts[T.v[0]], b = tri.pts[T.v[1]], c = tri.pts[T.v[2]];
        double la = norm(b - c), lb = norm(c - a), lc = norm(a - b);
        longest = std::max({la, lb, lc});
        double shortest = std::min({la, lb, lc});
        double area = 0.5 * detail::orient2d(a, b, c);
        if (area <= 0.0) {
            ratio = 1e300;
            cc = (a + b + c) / 3.0;
            return;
        }
        double R = la * lb * lc / (4.0 * area);
        ratio = R / shortest;
        double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        cc = {((norm2(a)) * (b.y - c.y) + (norm2(b)) * (c.y - a.y) + (norm2(c)) * (a.y - b.y)) / d,
              ((norm2(a)) * (c.x - b.x) + (norm2(b)) * (a.x - c.x) + (norm2(c)) * (b.x - a.x)) / d};
    };
    auto in_domain = [&](int t) {
        const auto& T = tri.tris[t];
        if (T.v[0] < 3 || T.v[1] < 3 || T.v[2] < 3) return false;
        Vec2 c = (tri.pts[T.v[0]] + tri.pts[T.v[1]] + tri.pts[T.v[2]]) / 3.0;
        return point_in_polygon(c, outer.points);
    };
    auto is_bad = [&](int t) {
        if (!tri.tris[t].alive || !in_domain(t)) return false;
        double ratio, longest;
        Vec2 cc;
        tri_metrics(t, ratio, longest, cc);
        const auto& T = tri.tris[t];
        Vec2 cen = (tri.pts[T.v[0]] + tri.pts[T.v[1]] + tri.pts[T.v[2]]) / 3.0;
        return ratio > ratio_bound || longest > 1.3 * size(cen);
    };
    auto encroached = [&](uint64_t k, Vec2 p) {
        int a = int(k & 0xffffffffu), b = int(k >> 32);
        Vec2 pa = tri.pts[a], pb = tri.pts[b];
        return dot(pa - p, pb - p) < 0.0;
    };

    std::deque<int> tri_queue;
    std::deque<uint64_t> seg_queue;
    for (size_t t = 0; t < tri.tris.size(); ++t)
        if (tri.tris[t].alive && is_bad(int(t))) tri_queue.push_back(int(t));

    auto after_insert = [&](const std::vector<int>& created) {
        for (int t : created) {
            if (!tri.tris[t].alive) continue;
            if (is_bad(t)) tri_queue.push_back(t);
            const auto& T = tri.tris[t];
            for (int i = 0; i < 3; ++i) {
                int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
                uint64_t k = detail::Triangulator::key(a, b);
                if (tri.segs.count(k) && encroached(k, tri.pts[T.v[i]])) seg_queue.push_back(k);
            }
        }
    };

    int budget = opt.max_points;
    auto min_split_len = [&](uint64_t k) {
        auto tag = tri.segs.at(k);
        return 0.2 * ((tag.kind == 1) ? pore_seg[tag.index] : h);
    };
    while (!seg_queue.empty() || !tri_queue.empty()) {
        if (int(tri.pts.size()) > budget)
            throw Error("porous mesh: refinement did not terminate within the point budget");
        if (!seg_queue.empty()) {
            uint64_t k = seg_queue.front();
            seg_queue.pop_front();
            if (!tri.segs.count(k)) continue;
            int a = int(k & 0xffffffffu), b = int(k >> 32);
            if (norm(tri.pts[a] - tri.pts[b]) < min_split_len(k)) continue;
            std::vector<int> created;
            tri.split_segment(a, b, &created);
            after_insert(created);
            continue;
        }
        int t = tri_queue.front();
        tri_queue.pop_front();
        if (!tri.tris[t].alive || !is_bad(t)) continue;
        double ratio, longest;
        Vec2 cc;
        tri_metrics(t, ratio, longest, cc);
        // If the path from the triangle to its circumcenter leaves through a
        // constrained edge, that edge is effectively encroached: split it.
        const auto& T = tri.tris[t];
        Vec2 start = (tri.pts[T.v[0]] + tri.pts[T.v[1]] + tri.pts[T.v[2]]) / 3.0;
        uint64_t blocked = 0;
        bool has_block = false;
        {
            int cur = t;
            for (int step = 0; step < 4096; ++step) {
                const auto& C = tri.tris[cur];
                int go = -1;
                for (int i = 0; i < 3; ++i) {
                    Vec2 ea = tri.pts[C.v[(i + 1) % 3]], eb = tri.pts[C.v[(i + 2) % 3]];
                    if (detail::orient2d(ea, eb, cc) < 0.0 && detail::orient2d(ea, eb, start) >= 0.0 &&
                        segments_intersect(start, cc, ea, eb)) {
                        go = i;
                        break;
                    }
                }
                if (go < 0) break;
                int a = C.v[(go + 1) % 3], b = C.v[(go + 2) % 3];
                if (tri.is_constrained(a, b)) {
                    blocked = detail::Triangulator::key(a, b);
                    has_block = true;
                    break;
                }
                int nxt = C.adj[go];
                if (nxt < 0) break;
                cur = nxt;
            }
        }
        if (has_block) {
            if (norm(tri.pts[int(blocked & 0xffffffffu)] - tri.pts[int(blocked >> 32)]) >=
                min_split_len(blocked)) {
                seg_queue.push_back(blocked);
                tri_queue.push_back(t);
            }
            continue;
        }
        std::vector<uint64_t> enc;
        for (const auto& [k, tag] : tri.segs)
            if (encroached(k, cc)) enc.push_back(k);
        if (!enc.empty()) {
            bool any = false;
            for (uint64_t k : enc)
                if (norm(tri.pts[int(k & 0xffffffffu)] - tri.pts[int(k >> 32)]) >= min_split_len(k)) {
                    seg_queue.push_back(k);
                    any = true;
                }
            if (any) tri_queue.push_back(t);
            continue;
        }
        std::vector<int> created;
        tri.insert(cc, &created);
        after_insert(created);
    }

    // Extraction: classify triangles, renumber, emit porous and dense twins.
    auto build = [&](bool fill_pores) {
        Mesh m;
        m.thickness = opt.thickness;
        std::vector<int> remap(tri.pts.size(), -1);
        auto map_node = [&](int v) {
            if (remap[v] < 0) {
                remap[v] = int(m.nodes.size());
                m.nodes.push_back(tri.pts[v]);
            }
            return remap[v];
        };
        for (size_t t = 0; t < tri.tris.size(); ++t) {
            if (!tri.tris[t].alive || !in_domain(int(t))) continue;
            const auto& T = tri.tris[t];
            if (!fill_pores) {
                Vec2 c = (tri.pts[T.v[0]] + tri.pts[T.v[1]] + tri.pts[T.v[2]]) / 3.0;
                bool in_pore = false;
                for (const auto& pr : pores)
                    if (pr.area > 0 && point_in_polygon(c, pr.boundary)) in_pore = true;
                if (in_pore) continue;
            }
            m.elements.push_back({map_node(T.v[0]), map_node(T.v[1]), map_node(T.v[2])});
        }
        for (const auto& [k, tag] : tri.segs) {
            int a = int(k & 0xffffffffu), b = int(k >> 32);
            if (tag.kind == 1 && fill_pores) continue;
            if (remap[a] < 0 || remap[b] < 0) continue;
            std::string name = (tag.kind == 0) ? outer.edge_tags[tag.index] : ("pore:" + pores[tag.index].id);
            m.boundary_edges.push_back({remap[a], remap[b], name});
        }
        std::sort(m.boundary_edges.begin(), m.boundary_edges.end(), [](const auto& x, const auto& y) {
            return std::tie(x.a, x.b, x.tag) < std::tie(y.a, y.b, y.tag);
        });
        m.validate();
        return m;
    };
    PorousMeshPair pair;
    pair.porous = build(false);
    pair.dense = build(true);
    return pair;
}

inline Mesh generate_porous_mesh(const TaggedPolygon& outer, const std::vector<Pore>& pores, double h,
                                 const PorousMeshOptions& opt = {}) {
    return generate_porous_meshes(outer, pores, h, opt).porous;
}

}  // namespace poresens
