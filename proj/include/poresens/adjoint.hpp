#pragma once

#include "poresens/fem.hpp"

namespace poresens {

enum class QuantityKind { Compliance, NodalDisplacement, RegionAveragedDisplacement };

/// Quantity of interest. Nodal and region quantities may be anchored either
/// to mesh entities (node index / element-set name) or geometrically
/// (point / box), so the same spec resolves on any mesh of the same domain.
struct QuantitySpec {
    QuantityKind kind = QuantityKind::Compliance;
    int component = 1;  // 0 = x, 1 = y
    std::optional<int> node;
    std::optional<Vec2> point;
    std::optional<std::string> region_set;
    std::optional<Box> region_box;

    std::string name() const {
        switch (kind) {
            case QuantityKind::Compliance: return "compliance";
            case QuantityKind::NodalDisplacement:
                return std::string("nodal_disp_") + (component == 0 ? "x" : "y");
            case QuantityKind::RegionAveragedDisplacement:
                return std::string("region_avg_disp_") + (component == 0 ? "x" : "y");
        }
        return "?";
    }
};

inline QuantitySpec compliance_spec() { return {QuantityKind::Compliance, 1, {}, {}, {}, {}}; }
inline QuantitySpec nodal_disp_spec(Vec2 point, int component) {
    QuantitySpec s;
    s.kind = QuantityKind::NodalDisplacement;
    s.component = component;
    s.point = point;
    return s;
}
inline QuantitySpec region_avg_spec(Box box, int component) {
    QuantitySpec s;
    s.kind = QuantityKind::RegionAveragedDisplacement;
    s.component = component;
    s.region_box = box;
    return s;
}

/// Spec bound to one concrete mesh.
struct ResolvedQuantity {
    QuantityKind kind;
    int component;
    int node = -1;
    std::vector<int> region;
    double region_area = 0.0;
};

inline ResolvedQuantity resolve_quantity(const QuantitySpec& s, const Mesh& mesh) {
    ResolvedQuantity r{s.kind, s.component, -1, {}, 0.0};
    if (s.component != 0 && s.component != 1) throw Error("quantity: component must be x or y");
    if (s.kind == QuantityKind::NodalDisplacement) {
        if (s.node) {
            if (*s.node < 0 || *s.node >= int(mesh.nodes.size()))
                throw Error("quantity: node index out of range");
            r.node = *s.node;
        } else if (s.point) {
            r.node = nearest_node(mesh, *s.point);
        } else {
            throw Error("quantity: nodal displacement needs a node or a point");
        }
    } else if (s.kind == QuantityKind::RegionAveragedDisplacement) {
        if (s.region_set) {
            auto it = mesh.element_sets.find(*s.region_set);
            if (it == mesh.element_sets.end())
                throw Error("quantity: unknown element set '" + *s.region_set + "'");
            r.region = it->second;
        } else if (s.region_box) {
            r.region = select_region(mesh, *s.region_box);
        } else {
            throw Error("quantity: region quantity needs an element set or a box");
        }
        if (r.region.empty()) throw Error("quantity: empty region");
        for (int e : r.region) r.region_area += mesh.element_area(e);
    }
    return r;
}

/// Discrete adjoint load: the gradient of the quantity with respect to the
/// nodal displacement vector. Compliance reuses the primary load itself;
/// nodal displacement is a unit point load; the region average is the
/// consistent load of a constant body force 1/area over the region.
inline Eigen::VectorXd adjoint_load(const ResolvedQuantity& q, const Mesh& mesh,
                                    const Eigen::VectorXd& primary_load) {
    const int ndof = 2 * int(mesh.nodes.size());
    switch (q.kind) {
        case QuantityKind::Compliance:
            return primary_load;
        case QuantityKind::NodalDisplacement: {
            Eigen::VectorXd L = Eigen::VectorXd::Zero(ndof);
            L[2 * q.node + q.component] = 1.0;
            return L;
        }
        case QuantityKind::RegionAveragedDisplacement: {
            Eigen::VectorXd L = Eigen::VectorXd::Zero(ndof);
            for (int e : q.region) {
                double w = mesh.element_area(e) / (3.0 * q.region_area);
                for (int v : mesh.elements[e]) L[2 * v + q.component] += w;
            }
            return L;
        }
    }
    throw Error("quantity: unknown kind");
}

struct AdjointPair {
    SolutionField primary;
    SolutionField adjoint;  // homogeneous Dirichlet values
    ResolvedQuantity spec;
};

/// Solve the adjoint with the retained primary factorization. For compliance
/// this follows the identical numeric path as the primary solve, so the
/// self-adjoint identity holds bitwise when the prescribed values are zero.
inline AdjointPair solve_adjoint(const FemSystem& sys, const SolutionField& primary,
                                 const ResolvedQuantity& q) {
    Eigen::VectorXd L = adjoint_load(q, sys.mesh(), sys.external_load());
    SolutionField adj = sys.solve(L, true);
    return {primary, std::move(adj), q};
}

inline double evaluate_quantity(const ResolvedQuantity& q, const Mesh& mesh, const SolutionField& f,
                                const Eigen::VectorXd& external_load) {
    switch (q.kind) {
        case QuantityKind::Compliance:
            return f.u.dot(external_load);
        case QuantityKind::NodalDisplacement:
            return f.u[2 * q.node + q.component];
        case QuantityKind::RegionAveragedDisplacement: {
            double acc = 0.0;
            for (int e : q.region) {
                const auto& t = mesh.elements[e];
                double ubar = (f.u[2 * t[0] + q.component] + f.u[2 * t[1] + q.component] +
                               f.u[2 * t[2] + q.component]) / 3.0;
                acc += mesh.element_area(e) * ubar;
            }
            return acc / q.region_area;
        }
    }
    throw Error("quantity: unknown kind");
}

}  // namespace poresens
