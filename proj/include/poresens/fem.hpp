#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "poresens/mesh.hpp"

namespace poresens {

struct Material {
    double E = 1.0;
    double nu = 0.0;
    double thickness = 1.0;

    void validate() const {
        if (!(E > 0.0)) throw Error("material: Young's modulus must be positive");
        if (!(nu >= 0.0 && nu < 0.5)) throw Error("material: Poisson ratio must be in [0, 0.5)");
        if (!(thickness > 0.0)) throw Error("material: thickness must be positive");
    }
    /// Plane-stress constitutive matrix in Voigt order (xx, yy, xy) with
    /// engineering shear strain.
    Eigen::Matrix3d d_matrix() const {
        Eigen::Matrix3d D;
        double f = E / (1.0 - nu * nu);
        D << f, f * nu, 0, f * nu, f, 0, 0, 0, f * (1.0 - nu) / 2.0;
        return D;
    }
};

struct DirichletBC {
    std::string edge_tag;                  // edge tag, or empty when node-based
    std::optional<std::string> node_set;
    std::optional<Vec2> point;             // resolved via nearest_node
    bool fix_x = true, fix_y = true;
    Vec2 value{0, 0};
};

struct TractionBC {
    std::string edge_tag;
    Vec2 value;  // force per unit edge area (length x thickness)
};

struct PointLoad {
    std::optional<int> node;
    std::optional<Vec2> point;
    Vec2 force;
};

struct BoundaryConditions {
    std::vector<DirichletBC> dirichlet;
    std::vector<TractionBC> tractions;
    std::vector<PointLoad> point_loads;
    std::optional<Vec2> body_force;  // force per unit volume
};

struct SolutionField {
    Eigen::VectorXd u;                 // 2 dofs per node
    std::vector<Tensor2> stress;       // per element, constant
    std::vector<Tensor2> strain;
    double energy = 0.0;               // 1/2 u^T K u
    double residual = 0.0;             // |K u - f| / (|K| |u| + |f|), free dofs

    Vec2 displacement(int node) const { return {u[2 * node], u[2 * node + 1]}; }
};

namespace detail {

/// Constant-strain-triangle B matrix (3x6, Voigt with engineering shear).
inline Eigen::Matrix<double, 3, 6> cst_b_matrix(Vec2 a, Vec2 b, Vec2 c, double area) {
    Eigen::Matrix<double, 3, 6> B;
    double b1 = b.y - c.y, b2 = c.y - a.y, b3 = a.y - b.y;
    double c1 = c.x - b.x, c2 = a.x - c.x, c3 = b.x - a.x;
    B << b1, 0, b2, 0, b3, 0, 0, c1, 0, c2, 0, c3, c1, b1, c2, b2, c3, b3;
    return B / (2.0 * area);
}

}  // namespace detail

/// Assembled plane-stress system with its factorization retained, so adjoint
/// solves reuse the primary decomposition. Immutable after construction and
/// safe to share across threads for solves.
class FemSystem {
public:
    FemSystem(const Mesh& mesh, const Material& mat, const BoundaryConditions& bcs)
        : mesh_(&mesh), mat_(mat) {
        mat.validate();
        const int n = int(mesh.nodes.size());
        const int ndof = 2 * n;
        fixed_.assign(ndof, false);
        prescribed_.assign(ndof, 0.0);
        resolve_dirichlet(bcs);

        f_ext_ = Eigen::VectorXd::Zero(ndof);
        assemble_loads(bcs);

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(mesh.elements.size() * 36);
        Eigen::Matrix3d D = mat.d_matrix();
        for (size_t e = 0; e < mesh.elements.size(); ++e) {
            const auto& t = mesh.elements[e];
            double A = mesh.element_area(int(e));
            auto B = detail::cst_b_matrix(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], A);
            Eigen::Matrix<double, 6, 6> Ke = mat.thickness * A * B.transpose() * D * B;
            int dofs[6] = {2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1};
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) trips.emplace_back(dofs[i], dofs[j], Ke(i, j));
        }
        K_.resize(ndof, ndof);
        K_.setFromTriplets(trips.begin(), trips.end());

        free_index_.assign(ndof, -1);
        int nf = 0;
        for (int i = 0; i < ndof; ++i)
            if (!fixed_[i]) free_index_[i] = nf++;
        if (nf == 0) throw Error("fem: all degrees of freedom are constrained");
        n_free_ = nf;

        std::vector<Eigen::Triplet<double>> ff;
        for (int col = 0; col < K_.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(K_, col); it; ++it)
                if (!fixed_[it.row()] && !fixed_[it.col()])
                    ff.emplace_back(free_index_[it.row()], free_index_[it.col()], it.value());
        Kff_.resize(nf, nf);
        Kff_.setFromTriplets(ff.begin(), ff.end());
        k_norm_ = 0.0;
        for (int col = 0; col < Kff_.outerSize(); ++col)
            for (Eigen::SparseMatrix<double>::InnerIterator it(Kff_, col); it; ++it)
                k_norm_ = std::max(k_norm_, std::abs(it.value()));
        ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(Kff_);
        bool singular = ldlt_->info() != Eigen::Success;
        if (!singular) {
            const auto& D = ldlt_->vectorD();
            double dmax = D.maxCoeff();
            if (!(dmax > 0.0) || D.minCoeff() <= 1e-12 * dmax) singular = true;
        }
        if (singular)
            throw Error("fem: singular system (insufficient constraints to remove rigid-body modes)");
    }

    const Mesh& mesh() const { return *mesh_; }
    const Material& material() const { return mat_; }
    const Eigen::VectorXd& external_load() const { return f_ext_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return K_; }

    /// Solve K u = load with the retained factorization. With
    /// homogeneous_dirichlet the prescribed values are replaced by zero
    /// (adjoint convention); otherwise they are back-substituted.
    SolutionField solve(const Eigen::VectorXd& load, bool homogeneous_dirichlet) const {
        const int ndof = int(fixed_.size());
        if (load.size() != ndof) throw Error("fem: load vector size mismatch");
        if (!load.allFinite()) throw Error("fem: non-finite load");
        Eigen::VectorXd uc = Eigen::VectorXd::Zero(ndof);
        if (!homogeneous_dirichlet)
            for (int i = 0; i < ndof; ++i)
                if (fixed_[i]) uc[i] = prescribed_[i];
        Eigen::VectorXd rhs_full = load - K_ * uc;
        Eigen::VectorXd rhs(n_free_);
        for (int i = 0; i < ndof; ++i)
            if (!fixed_[i]) rhs[free_index_[i]] = rhs_full[i];
        Eigen::VectorXd x = ldlt_->solve(rhs);
        double fn = rhs.norm();
        auto backward_error = [&](const Eigen::VectorXd& xx) {
            double denom = k_norm_ * xx.norm() + fn;
            return denom > 0 ? (rhs - Kff_ * xx).norm() / denom : 0.0;
        };
        double res = backward_error(x);
        // iterative refinement down to well below the 1e-10 contract
        for (int it = 0; it < 5 && res > 1e-14; ++it) {
            x += ldlt_->solve(rhs - Kff_ * x);
            res = backward_error(x);
        }

        SolutionField out;
        out.u = uc;
        for (int i = 0; i < ndof; ++i)
            if (!fixed_[i]) out.u[i] = x[free_index_[i]];
        out.residual = res;
        if (out.residual > 1e-10)
            throw Error("fem: solve residual exceeds 1e-10");
        recover(out);
        return out;
    }

    SolutionField solve_primary() const { return solve(f_ext_, false); }

private:
    void resolve_dirichlet(const BoundaryConditions& bcs) {
        for (const auto& d : bcs.dirichlet) {
            std::vector<int> nodes;
            if (d.node_set) {
                auto it = mesh_->node_sets.find(*d.node_set);
                if (it == mesh_->node_sets.end())
                    throw Error("fem: unknown node set '" + *d.node_set + "'");
                nodes = it->second;
            } else if (d.point) {
                nodes.push_back(nearest_node(*mesh_, *d.point));
            } else {
                for (const auto& be : mesh_->boundary_edges)
                    if (be.tag == d.edge_tag) {
                        nodes.push_back(be.a);
                        nodes.push_back(be.b);
                    }
                if (nodes.empty()) throw Error("fem: no boundary edges tagged '" + d.edge_tag + "'");
            }
            for (int v : nodes) {
                if (d.fix_x) {
                    fixed_[2 * v] = true;
                    prescribed_[2 * v] = d.value.x;
                }
                if (d.fix_y) {
                    fixed_[2 * v + 1] = true;
                    prescribed_[2 * v + 1] = d.value.y;
                }
            }
        }
    }

    void assemble_loads(const BoundaryConditions& bcs) {
        for (const auto& tr : bcs.tractions) {
            bool found = false;
            for (const auto& be : mesh_->boundary_edges) {
                if (be.tag != tr.edge_tag) continue;
                found = true;
                double half = 0.5 * norm(mesh_->nodes[be.b] - mesh_->nodes[be.a]) * mat_.thickness;
                f_ext_[2 * be.a] += half * tr.value.x;
                f_ext_[2 * be.a + 1] += half * tr.value.y;
                f_ext_[2 * be.b] += half * tr.value.x;
                f_ext_[2 * be.b + 1] += half * tr.value.y;
            }
            if (!found) throw Error("fem: no boundary edges tagged '" + tr.edge_tag + "'");
        }
        for (const auto& pl : bcs.point_loads) {
            int v = pl.node ? *pl.node : nearest_node(*mesh_, pl.point.value());
            if (v < 0 || v >= int(mesh_->nodes.size())) throw Error("fem: point load node out of range");
            f_ext_[2 * v] += pl.force.x;
            f_ext_[2 * v + 1] += pl.force.y;
        }
        if (bcs.body_force) {
            for (size_t e = 0; e < mesh_->elements.size(); ++e) {
                double w = mesh_->element_area(int(e)) * mat_.thickness / 3.0;
                for (int v : mesh_->elements[e]) {
                    f_ext_[2 * v] += w * bcs.body_force->x;
                    f_ext_[2 * v + 1] += w * bcs.body_force->y;
                }
            }
        }
    }

    void recover(SolutionField& out) const {
        Eigen::Matrix3d D = mat_.d_matrix();
        size_t ne = mesh_->elements.size();
        out.stress.resize(ne);
        out.strain.resize(ne);
        for (size_t e = 0; e < ne; ++e) {
            const auto& t = mesh_->elements[e];
            double A = mesh_->element_area(int(e));
            auto B = detail::cst_b_matrix(mesh_->nodes[t[0]], mesh_->nodes[t[1]], mesh_->nodes[t[2]], A);
            Eigen::Matrix<double, 6, 1> ue;
            ue << out.u[2 * t[0]], out.u[2 * t[0] + 1], out.u[2 * t[1]], out.u[2 * t[1] + 1],
                out.u[2 * t[2]], out.u[2 * t[2] + 1];
            Eigen::Vector3d eps = B * ue;  // (exx, eyy, gamma_xy)
            Eigen::Vector3d sig = D * eps;
            out.strain[e] = {eps[0], eps[1], 0.5 * eps[2]};
            out.stress[e] = {sig[0], sig[1], sig[2]};
        }
        out.energy = 0.5 * out.u.dot(K_ * out.u);
    }

    const Mesh* mesh_;
    Material mat_;
    std::vector<bool> fixed_;
    std::vector<double> prescribed_;
    std::vector<int> free_index_;
    int n_free_ = 0;
    Eigen::VectorXd f_ext_;
    double k_norm_ = 0.0;
    Eigen::SparseMatrix<double> K_, Kff_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

inline SolutionField solve_primary(const Mesh& mesh, const Material& mat, const BoundaryConditions& bcs) {
    return FemSystem(mesh, mat, bcs).solve_primary();
}

namespace detail {

/// Elements containing the point (barycentric tolerance); a point on an edge
/// or vertex reports every incident element.
inline std::vector<int> elements_containing(const Mesh& mesh, Vec2 p) {
    std::vector<int> hits;
    for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const auto& t = mesh.elements[e];
        Vec2 a = mesh.nodes[t[0]], b = mesh.nodes[t[1]], c = mesh.nodes[t[2]];
        double A = 2.0 * mesh.element_area(int(e));
        double w0 = cross(b - p, c - p) / A;
        double w1 = cross(c - p, a - p) / A;
        double w2 = cross(a - p, b - p) / A;
        double tol = 1e-9;
        if (w0 >= -tol && w1 >= -tol && w2 >= -tol) hits.push_back(int(e));
    }
    return hits;
}

template <typename Get>
Tensor2 sample_element_tensor(const Mesh& mesh, Vec2 p, Get get) {
    auto hits = elements_containing(mesh, p);
    if (hits.empty()) throw Error("fem: point outside all elements");
    if (hits.size() == 1) return get(hits[0]);
    double wsum = 0.0;
    Tensor2 acc;
    for (int e : hits) {
        double w = mesh.element_area(e);
        acc = acc + w * get(e);
        wsum += w;
    }
    return (1.0 / wsum) * acc;
}

}  // namespace detail

/// Stress at a point: the containing element's constant stress, or the
/// area-weighted average of incident elements when the point lies on an
/// edge or vertex.
inline Tensor2 evaluate_stress_at(const Mesh& mesh, const SolutionField& f, Vec2 p) {
    return detail::sample_element_tensor(mesh, p, [&](int e) { return f.stress[e]; });
}

inline Tensor2 evaluate_strain_at(const Mesh& mesh, const SolutionField& f, Vec2 p) {
    return detail::sample_element_tensor(mesh, p, [&](int e) { return f.strain[e]; });
}

}  // namespace poresens
