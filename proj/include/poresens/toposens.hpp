#pragma once

#include <fstream>

#include "poresens/adjoint.hpp"
#include "poresens/pore.hpp"

namespace poresens {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Pointwise topological derivative for a spherical cavity in 3D linear
/// elasticity, per unit cavity volume, taking the primary stress and the
/// adjoint strain (equal to the primary strain for compliance).
inline double topo_derivative_3d(const Mat3& sigma, const Mat3& eps_adj, double nu) {
    if (!(nu >= 0.0 && nu < 0.5)) throw Error("toposens: Poisson ratio must be in [0, 0.5)");
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (sigma[i][j] != sigma[j][i] || eps_adj[i][j] != eps_adj[j][i])
                throw Error("toposens: tensors must be symmetric");
    double dd = 0.0, trs = 0.0, tre = 0.0;
    for (int i = 0; i < 3; ++i) {
        trs += sigma[i][i];
        tre += eps_adj[i][i];
        for (int j = 0; j < 3; ++j) dd += sigma[i][j] * eps_adj[i][j];
    }
    return 0.75 * (1.0 - nu) / (7.0 - 5.0 * nu) *
           (10.0 * dd - (1.0 - 5.0 * nu) / (1.0 - 2.0 * nu) * trs * tre);
}

/// Plane-stress analog for a circular cavity, per unit cavity area. For an
/// elastically consistent pair (eps = C^-1 sigma) this reduces to
/// ((s1+s2)^2 + 2(s1-s2)^2)/E in principal stresses, the exact first-order
/// energy release of a traction-free circular hole.
inline double topo_derivative_2d(const Tensor2& sigma, const Tensor2& eps_adj, double nu) {
    if (!(nu >= 0.0 && nu < 0.5)) throw Error("toposens: Poisson ratio must be in [0, 0.5)");
    return 4.0 / (1.0 + nu) * sigma.ddot(eps_adj) +
           (3.0 * nu - 1.0) / (1.0 - nu * nu) * sigma.trace() * eps_adj.trace();
}

/// Per-element topological derivative over the dense mesh.
struct TopoField {
    std::vector<double> values;
};

inline TopoField topo_field(const Mesh& mesh, const AdjointPair& pair, double nu) {
    TopoField f;
    f.values.resize(mesh.elements.size());
    for (size_t e = 0; e < mesh.elements.size(); ++e)
        f.values[e] = topo_derivative_2d(pair.primary.stress[e], pair.adjoint.strain[e], nu);
    return f;
}

/// Field value at a point; points on edges or vertices average over incident
/// elements with area weights, matching the stress sampling rule.
inline double topo_field_at(const Mesh& mesh, const TopoField& f, Vec2 p) {
    auto hits = detail::elements_containing(mesh, p);
    if (hits.empty()) throw Error("toposens: pore center outside mesh");
    double acc = 0.0, wsum = 0.0;
    for (int e : hits) {
        double w = mesh.element_area(e);
        acc += w * f.values[e];
        wsum += w;
    }
    return acc / wsum;
}

/// Topological estimator of a pore scaled by xi about its center: the scaled
/// area times the derivative at the center. xi = 1 is the standalone
/// topological estimator using the full pore area.
inline double d_topo(const Pore& pore, double t_at_center, double xi) {
    if (!(xi > 0.0 && xi <= 1.0)) throw Error("toposens: xi must be in (0, 1]");
    return xi * xi * pore.area * t_at_center;
}

inline void write_topo_csv(const TopoField& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("toposens: cannot open '" + path + "'");
    os << "element,T\n";
    for (size_t e = 0; e < f.values.size(); ++e) os << e << "," << detail::fmt_double(f.values[e]) << "\n";
}

}  // namespace poresens
