#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>

#include "poresens/delaunay.hpp"
#include "poresens/shapesens.hpp"
#include "poresens/toposens.hpp"

namespace poresens {

struct EstimatorConfig {
    double xi = 1e-3;        // topological scale split
    int bem_elements = 64;
    int threads = 1;
    double oracle_tol = 0.005;    // relative change of Psi between levels
    int oracle_max_refine = 4;
    double oracle_h = 5.0;
};

struct PoreContribution {
    std::string pore_id;
    double d_topo = 0.0;             // xi-scaled topological part
    double d_shape = 0.0;            // eta-integrated shape part
    double d_pore = 0.0;             // d_topo + d_shape
    double d_topo_standalone = 0.0;  // full-area topological estimator (xi = 1)
    double max_von_mises = 0.0;      // |sigma_tt| on the free surface
    Vec2 max_von_mises_point{0, 0};
};

struct Effectivity {
    double i_psi = 0.0;
    double i_psi_reciprocal = 0.0;
    double i_d = 0.0;
    bool i_psi_defined = false;
    bool i_d_defined = false;
};

/// I_psi = (psi0 + D)/psi and I_D = D/(psi - psi0). Division-by-zero cases
/// come back flagged undefined rather than throwing. The reciprocal of
/// I_psi is carried alongside since published comparisons sometimes list
/// the inverted ratio.
inline Effectivity effectivity(double psi_exact, double psi0, double D) {
    Effectivity e;
    if (psi_exact != 0.0) {
        e.i_psi = (psi0 + D) / psi_exact;
        e.i_psi_defined = true;
        e.i_psi_reciprocal = (psi0 + D) != 0.0 ? psi_exact / (psi0 + D) : 0.0;
    }
    if (psi_exact != psi0) {
        e.i_d = D / (psi_exact - psi0);
        e.i_d_defined = true;
    }
    return e;
}

struct EstimateReport {
    QuantitySpec spec;
    double psi0 = 0.0;
    std::vector<PoreContribution> pores;
    double d_topo_total = 0.0;
    double d_shape_total = 0.0;
    double d_pore_total = 0.0;
    double d_topo_standalone_total = 0.0;
    double psi_pred = 0.0;
    std::optional<double> psi_oracle;
    std::optional<double> psi0_oracle;
    std::optional<Effectivity> eff;
    std::vector<std::string> warnings;
};

namespace detail {

inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    for (int t = 0; t < std::min(threads, n); ++t)
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// Model-assumption checks: pores should be small relative to their distance
/// to the outer surface and to each other. Violations degrade first-order
/// accuracy but are reported as warnings, never as errors.
inline std::vector<std::string> assumption_warnings(const std::vector<Pore>& pores,
                                                    const Polygon& outer) {
    std::vector<std::string> w;
    for (size_t i = 0; i < pores.size(); ++i) {
        double dia = 2.0 * std::sqrt(pores[i].area / M_PI);
        double ds = polygon_polygon_distance(pores[i].boundary, outer);
        if (ds < dia)
            w.push_back("pore '" + pores[i].id + "' is closer to the surface (" +
                        std::to_string(ds) + ") than its equivalent diameter (" + std::to_string(dia) +
                        "); first-order accuracy degrades");
        for (size_t j = i + 1; j < pores.size(); ++j) {
            double dp = polygon_polygon_distance(pores[i].boundary, pores[j].boundary);
            double dia2 = 2.0 * std::sqrt(pores[j].area / M_PI);
            if (dp < std::max(dia, dia2))
                w.push_back("pores '" + pores[i].id + "' and '" + pores[j].id + "' are closer (" +
                            std::to_string(dp) + ") than a pore diameter; interaction terms are neglected");
        }
    }
    return w;
}

}  // namespace detail

/// Five-step estimator: dense primary solve, per-quantity adjoint solve,
/// topological field, per-pore exterior solves with topological + shape
/// contributions, and linear superposition over pores. Pores run as a
/// parallel map with results collected in pore order, so reports are
/// identical for any thread count.
inline std::vector<EstimateReport> estimate(const Mesh& mesh, const Material& mat,
                                            const BoundaryConditions& bcs,
                                            const std::vector<QuantitySpec>& specs,
                                            const std::vector<Pore>& pores,
                                            const EstimatorConfig& cfg = {},
                                            const Polygon* outer_for_warnings = nullptr) {
    for (const auto& p : pores) {
        p.validate();
        if (detail::elements_containing(mesh, p.center).empty())
            throw Error("estimate: center of pore '" + p.id + "' lies outside the mesh");
    }
    FemSystem sys(mesh, mat, bcs);
    SolutionField z = sys.solve_primary();

    std::vector<std::string> warnings;
    if (outer_for_warnings) warnings = detail::assumption_warnings(pores, *outer_for_warnings);

    std::vector<EstimateReport> reports;
    for (const auto& spec : specs) {
        auto rq = resolve_quantity(spec, mesh);
        auto pair = solve_adjoint(sys, z, rq);
        auto tf = topo_field(mesh, pair, mat.nu);

        EstimateReport rep;
        rep.spec = spec;
        rep.psi0 = evaluate_quantity(rq, mesh, z, sys.external_load());
        rep.warnings = warnings;
        rep.pores.resize(pores.size());

        detail::parallel_for(int(pores.size()), cfg.threads, [&](int i) {
            const Pore& pore = pores[i];
            double T = topo_field_at(mesh, tf, pore.center);
            FarField far_z{evaluate_stress_at(mesh, z, pore.center)};
            Tensor2 eps_adj = evaluate_strain_at(mesh, pair.adjoint, pore.center);
            Eigen::Matrix3d D = mat.d_matrix();
            Eigen::Vector3d sl = D * Eigen::Vector3d{eps_adj.xx, eps_adj.yy, 2.0 * eps_adj.xy};
            FarField far_l{{sl[0], sl[1], sl[2]}};

            auto ext_z = exterior_solve(pore, far_z, mat, cfg.bem_elements);
            auto ext_l = exterior_solve(pore, far_l, mat, cfg.bem_elements);

            PoreContribution c;
            c.pore_id = pore.id;
            c.d_topo = mat.thickness * d_topo(pore, T, cfg.xi);
            c.d_topo_standalone = mat.thickness * d_topo(pore, T, 1.0);
            c.d_shape = mat.thickness * d_shape(pore, ext_z, ext_l, cfg.xi);
            c.d_pore = c.d_topo + c.d_shape;

            auto pf = total_surface_fields(ext_z);
            for (int k = 0; k < ext_z.size(); ++k) {
                if (std::abs(pf.sigma_tt[k]) > c.max_von_mises) {
                    c.max_von_mises = std::abs(pf.sigma_tt[k]);
                    c.max_von_mises_point = ext_z.mid[k];
                }
            }
            rep.pores[i] = std::move(c);
        });

        for (const auto& c : rep.pores) {
            rep.d_topo_total += c.d_topo;
            rep.d_shape_total += c.d_shape;
            rep.d_pore_total += c.d_pore;
            rep.d_topo_standalone_total += c.d_topo_standalone;
        }
        rep.psi_pred = rep.psi0 + rep.d_pore_total;
        reports.push_back(std::move(rep));
    }
    return reports;
}

// --- direct-FE oracle --------------------------------------------------------

struct OracleLevel {
    double h = 0.0;
    double psi = 0.0;           // porous mesh
    double psi0_matched = 0.0;  // filled twin of the same triangulation
    int elements = 0;
};

struct OracleResult {
    QuantitySpec spec;
    double psi = 0.0;
    double psi0_matched = 0.0;
    double delta = 0.0;  // psi - psi0_matched at the final level
    std::vector<OracleLevel> history;
    bool converged = false;        // Psi change below tolerance
    bool delta_converged = false;  // (Psi - Psi0) change below 2%
};

/// Ground-truth driver: conforming porous meshes refined by halving h until
/// the quantity settles. Each level also solves the filled twin mesh, whose
/// elements coincide outside the pores, so delta = psi - psi0_matched
/// cancels the shared discretization error.
inline std::vector<OracleResult> run_oracle(const TaggedPolygon& outer, const std::vector<Pore>& pores,
                                            const Material& mat, const BoundaryConditions& bcs,
                                            const std::vector<QuantitySpec>& specs, double h0,
                                            const EstimatorConfig& cfg = {}) {
    if (!(h0 > 0.0)) throw Error("oracle: initial edge length must be positive");
    std::vector<OracleResult> out(specs.size());
    for (size_t q = 0; q < specs.size(); ++q) out[q].spec = specs[q];

    PorousMeshOptions mopt;
    mopt.thickness = mat.thickness;
    double h = h0;
    bool psi_ok = false, delta_ok = false;
    for (int level = 0; level <= cfg.oracle_max_refine; ++level, h *= 0.5) {
        auto pair = generate_porous_meshes(outer, pores, h, mopt);
        FemSystem sys_p(pair.porous, mat, bcs);
        FemSystem sys_d(pair.dense, mat, bcs);
        auto fp = sys_p.solve_primary();
        auto fd = sys_d.solve_primary();
        for (size_t q = 0; q < specs.size(); ++q) {
            auto rp = resolve_quantity(specs[q], pair.porous);
            auto rd = resolve_quantity(specs[q], pair.dense);
            OracleLevel lv;
            lv.h = h;
            lv.elements = int(pair.porous.elements.size());
            lv.psi = evaluate_quantity(rp, pair.porous, fp, sys_p.external_load());
            lv.psi0_matched = evaluate_quantity(rd, pair.dense, fd, sys_d.external_load());
            out[q].history.push_back(lv);
        }
        if (level == 0) continue;
        psi_ok = true;
        delta_ok = true;
        for (auto& r : out) {
            size_t n = r.history.size();
            const auto& a = r.history[n - 2];
            const auto& b = r.history[n - 1];
            if (std::abs(b.psi - a.psi) > cfg.oracle_tol * std::abs(b.psi)) psi_ok = false;
            double da = a.psi - a.psi0_matched, db = b.psi - b.psi0_matched;
            if (std::abs(db - da) > 0.02 * std::abs(db)) delta_ok = false;
        }
        if (psi_ok && (delta_ok || pores.empty())) break;
    }
    if (!psi_ok) {
        std::string hist;
        for (const auto& lv : out.front().history)
            hist += " h=" + std::to_string(lv.h) + " psi=" + std::to_string(lv.psi);
        throw Error("oracle: quantity did not converge within " + std::to_string(cfg.oracle_max_refine) +
                    " refinements; history:" + hist);
    }
    for (auto& r : out) {
        r.converged = true;
        r.delta_converged = delta_ok || pores.empty();
        r.psi = r.history.back().psi;
        r.psi0_matched = r.history.back().psi0_matched;
        r.delta = r.psi - r.psi0_matched;
    }
    return out;
}

}  // namespace poresens
