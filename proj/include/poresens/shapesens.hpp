#pragma once

#include "poresens/exterior.hpp"

namespace poresens {

/// Normal design speed (X - Xc) . n at element midpoints, n pointing from
/// the pore into the material. Positive everywhere for a star-shaped pore;
/// zero off the pore boundary is implicit.
struct DesignSpeedField {
    std::vector<double> vn;
    std::vector<double> length;
};

inline DesignSpeedField design_speed_on(const ExteriorSolution& sol, Vec2 center) {
    DesignSpeedField f;
    f.vn.reserve(sol.size());
    for (int i = 0; i < sol.size(); ++i) {
        double v = dot(sol.mid[i] - center, sol.normal[i]);
        if (v <= 0.0)
            throw Error("shapesens: design speed non-positive on segment " + std::to_string(i) +
                        " (pore not star-shaped about its center)");
        f.vn.push_back(v);
    }
    f.length = sol.length;
    return f;
}

inline DesignSpeedField design_speed(const Pore& pore) {
    DesignSpeedField f;
    size_t n = pore.boundary.size();
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = pore.boundary[i], b = pore.boundary[(i + 1) % n];
        Vec2 t = b - a;
        double l = norm(t);
        Vec2 nrm{t.y / l, -t.x / l};
        double v = dot(0.5 * (a + b) - pore.center, nrm);
        if (v <= 0.0)
            throw Error("shapesens: design speed non-positive on segment " + std::to_string(i) +
                        " (pore not star-shaped about its center)");
        f.vn.push_back(v);
        f.length.push_back(l);
    }
    return f;
}

/// Boundary-integral shape sensitivity dPsi/d(eta) at unit scale: the
/// midpoint-rule integral of sigma(z):eps(lambda) V_n over the pore
/// boundary. The sign convention (n into the material, V_n > 0, eta growing
/// the pore) makes compliance strictly increase with pore growth; this is
/// the one calibrated sign of the pipeline.
inline double shape_sensitivity(const SurfaceFields& primary, const SurfaceFields& adjoint,
                                const DesignSpeedField& speeds) {
    size_t n = speeds.vn.size();
    if (primary.sigma.size() != n || adjoint.eps.size() != n)
        throw Error("shapesens: mismatched discretizations");
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i)
        acc += primary.sigma[i].ddot(adjoint.eps[i]) * speeds.vn[i] * speeds.length[i];
    return acc;
}

/// Shape estimator: the closed-form eta-integral of the unit-scale boundary
/// integrand over [xi, 1]. The boundary measure scales linearly in eta in
/// 2D, so the integral of eta d(eta) contributes (1 - xi^2)/2.
inline double d_shape(const Pore& pore, const ExteriorSolution& primary_ext,
                      const ExteriorSolution& adjoint_ext, double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw Error("shapesens: xi must be in (0, 1)");
    if (primary_ext.size() != adjoint_ext.size())
        throw Error("shapesens: primary and adjoint exterior solutions differ in discretization");
    auto speeds = design_speed_on(primary_ext, pore.center);
    auto pf = total_surface_fields(primary_ext);
    auto af = total_surface_fields(adjoint_ext);
    return 0.5 * (1.0 - xi * xi) * shape_sensitivity(pf, af, speeds);
}

}  // namespace poresens
