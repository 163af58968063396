#pragma once

#include <Eigen/Dense>

#include "poresens/fem.hpp"
#include "poresens/pore.hpp"

namespace poresens {

/// Constant far-field stress sampled at the pore center on the dense
/// structure; drives the exterior Neumann problem.
struct FarField {
    Tensor2 sigma;
};

/// Kirsch hoop stress on a traction-free circular hole under remote uniaxial
/// stress s, with theta measured from the load axis.
inline double kirsch_reference(double s, double theta) { return s * (1.0 - 2.0 * std::cos(2.0 * theta)); }

/// Exterior Neumann solution on the unit-scale pore boundary, discretized
/// with constant elements collocated at midpoints. The solution is
/// independent of the shape parameter, so one solve per driving field covers
/// every pore scale.
struct ExteriorSolution {
    std::vector<Vec2> a, b;        // element endpoints (counterclockwise)
    std::vector<Vec2> mid, tangent;
    std::vector<Vec2> normal;      // unit normal from the pore into the material
    std::vector<double> length;
    std::vector<Vec2> traction;    // prescribed exterior traction (w.r.t. material-side normal)
    std::vector<Vec2> u;           // boundary displacement of the exterior field
    FarField far_field;
    double E = 0.0, nu = 0.0;

    int size() const { return int(mid.size()); }
};

struct SurfaceFields {
    std::vector<Tensor2> sigma;   // total stress on the traction-free surface
    std::vector<Tensor2> eps;     // total strain, consistent with plane stress
    std::vector<double> sigma_tt; // signed hoop stress
};

namespace detail {

/// 2D Kelvin displacement kernel U_ij(source; field) in plane-strain form;
/// callers pass the effective Poisson ratio nu/(1+nu) for plane stress.
inline void kelvin_u(Vec2 src, Vec2 fld, double mu, double nubar, double out[2][2]) {
    Vec2 d = fld - src;
    double r = norm(d);
    double c = 1.0 / (8.0 * M_PI * mu * (1.0 - nubar));
    double lnr = std::log(1.0 / r);
    double rx = d.x / r, ry = d.y / r;
    out[0][0] = c * ((3.0 - 4.0 * nubar) * lnr + rx * rx);
    out[1][1] = c * ((3.0 - 4.0 * nubar) * lnr + ry * ry);
    out[0][1] = c * rx * ry;
    out[1][0] = out[0][1];
}

/// 2D Kelvin traction kernel T_ij(source; field) with n the outward normal of
/// the elastic domain at the field point.
inline void kelvin_t(Vec2 src, Vec2 fld, Vec2 n, double nubar, double out[2][2]) {
    Vec2 d = fld - src;
    double r = norm(d);
    double rx = d.x / r, ry = d.y / r;
    double drdn = rx * n.x + ry * n.y;
    double c = -1.0 / (4.0 * M_PI * (1.0 - nubar) * r);
    double k = 1.0 - 2.0 * nubar;
    out[0][0] = c * (drdn * (k + 2.0 * rx * rx));
    out[1][1] = c * (drdn * (k + 2.0 * ry * ry));
    out[0][1] = c * (drdn * 2.0 * rx * ry + k * (rx * n.y - ry * n.x));
    out[1][0] = c * (drdn * 2.0 * rx * ry + k * (ry * n.x - rx * n.y));
}

/// Gauss-Legendre 8-point rule on [0,1].
inline const std::array<std::pair<double, double>, 8>& gauss8() {
    static const std::array<std::pair<double, double>, 8> g = {{
        {0.01985507175123188, 0.05061426814518813},
        {0.10166676129318664, 0.11119051722668724},
        {0.2372337950418355, 0.15685332293894364},
        {0.40828267875217505, 0.18134189168918099},
        {0.59171732124782495, 0.18134189168918099},
        {0.7627662049581645, 0.15685332293894364},
        {0.89833323870681336, 0.11119051722668724},
        {0.98014492824876812, 0.05061426814518813},
    }};
    return g;
}

template <typename Kernel>
void integrate_segment(Vec2 src, Vec2 a, Vec2 b, int depth, double acc[2][2], Kernel&& k) {
    double len = norm(b - a);
    double dist = point_segment_distance(src, a, b);
    if (dist > 1.5 * len || depth >= 14) {
        double tmp[2][2];
        for (const auto& [t, w] : gauss8()) {
            k(a + t * (b - a), tmp);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) acc[i][j] += w * len * tmp[i][j];
        }
        return;
    }
    Vec2 m = 0.5 * (a + b);
    integrate_segment(src, a, m, depth + 1, acc, k);
    integrate_segment(src, m, b, depth + 1, acc, k);
}

}  // namespace detail

/// Solve the exterior Neumann problem driven by -sigma0 . n on the pore
/// boundary, with the field decaying at infinity. The polygon's segments are
/// the boundary elements; long edges are halved until at least n_elements.
inline ExteriorSolution exterior_solve(const Pore& pore, const FarField& far, const Material& mat,
                                       int n_elements = 64) {
    pore.validate();
    mat.validate();
    if (n_elements < 16) throw Error("exterior: need at least 16 boundary elements");
    if (!(std::isfinite(far.sigma.xx) && std::isfinite(far.sigma.yy) && std::isfinite(far.sigma.xy)))
        throw Error("exterior: far field must be finite");

    ExteriorSolution sol;
    sol.far_field = far;
    sol.E = mat.E;
    sol.nu = mat.nu;
    size_t np = pore.boundary.size();
    for (size_t i = 0; i < np; ++i) {
        sol.a.push_back(pore.boundary[i]);
        sol.b.push_back(pore.boundary[(i + 1) % np]);
    }
    while (int(sol.a.size()) < n_elements) {
        size_t longest = 0;
        double lmax = 0.0;
        for (size_t i = 0; i < sol.a.size(); ++i) {
            double l = norm(sol.b[i] - sol.a[i]);
            if (l > lmax + 1e-15 * lmax) {
                lmax = l;
                longest = i;
            }
        }
        Vec2 m = 0.5 * (sol.a[longest] + sol.b[longest]);
        sol.a.insert(sol.a.begin() + longest + 1, m);
        sol.b.insert(sol.b.begin() + longest + 1, sol.b[longest]);
        sol.b[longest] = m;
    }
    const int n = int(sol.a.size());
    for (int i = 0; i < n; ++i) {
        Vec2 t = sol.b[i] - sol.a[i];
        double l = norm(t);
        sol.length.push_back(l);
        sol.tangent.push_back(t / l);
        sol.normal.push_back({t.y / l, -t.x / l});  // CCW polygon: outward into material
        sol.mid.push_back(0.5 * (sol.a[i] + sol.b[i]));
    }

    const double mu = mat.E / (2.0 * (1.0 + mat.nu));
    const double nubar = mat.nu / (1.0 + mat.nu);  // plane-stress substitution

    // Prescribed traction with respect to the exterior-domain outward normal
    // n_mat = -normal: sigma_E . n_mat = -sigma0 . n_mat.
    for (int i = 0; i < n; ++i) {
        Vec2 nm = -1.0 * sol.normal[i];
        sol.traction.push_back({-(far.sigma.xx * nm.x + far.sigma.xy * nm.y),
                                -(far.sigma.xy * nm.x + far.sigma.yy * nm.y)});
    }

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    for (int i = 0; i < n; ++i) {
        Vec2 src = sol.mid[i];
        H(2 * i, 2 * i) += 0.5;
        H(2 * i + 1, 2 * i + 1) += 0.5;
        for (int j = 0; j < n; ++j) {
            double gu[2][2] = {{0, 0}, {0, 0}};
            if (i == j) {
                // analytic self integrals: PV of T vanishes on a straight
                // element; U integrates in closed form
                double L = sol.length[i];
                double cu = 1.0 / (8.0 * M_PI * mu * (1.0 - nubar));
                double base = (3.0 - 4.0 * nubar) * L * (1.0 - std::log(L / 2.0));
                Vec2 t = sol.tangent[i];
                gu[0][0] = cu * (base + L * t.x * t.x);
                gu[1][1] = cu * (base + L * t.y * t.y);
                gu[0][1] = cu * L * t.x * t.y;
                gu[1][0] = gu[0][1];
            } else {
                double ht[2][2] = {{0, 0}, {0, 0}};
                Vec2 nm = -1.0 * sol.normal[j];
                detail::integrate_segment(src, sol.a[j], sol.b[j], 0, ht, [&](Vec2 y, double out[2][2]) {
                    detail::kelvin_t(src, y, nm, nubar, out);
                });
                detail::integrate_segment(src, sol.a[j], sol.b[j], 0, gu, [&](Vec2 y, double out[2][2]) {
                    detail::kelvin_u(src, y, mu, nubar, out);
                });
                // Somigliana contracts T over its field index: transpose block
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) H(2 * i + r, 2 * j + c) += ht[c][r];
            }
            for (int r = 0; r < 2; ++r)
                rhs[2 * i + r] += gu[r][0] * sol.traction[j].x + gu[r][1] * sol.traction[j].y;
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(H);
    Eigen::VectorXd x = lu.solve(rhs);
    double res = (H * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (rhs.norm() > 0 && res > 1e-8)
        throw Error("exterior: rank-deficient boundary system (residual " + std::to_string(res) + ")");
    for (int i = 0; i < n; ++i) sol.u.push_back({x[2 * i], x[2 * i + 1]});
    return sol;
}

/// Total surface stress and strain on the traction-free pore boundary. The
/// state there is uniaxial along the tangent; the hoop stress comes from the
/// tangential derivative of the total boundary displacement,
/// sigma_tt = E eps_tt on a plane-stress free surface.
inline SurfaceFields total_surface_fields(const ExteriorSolution& sol) {
    const int n = sol.size();
    if (n == 0 || int(sol.u.size()) != n) throw Error("exterior: unsolved input");
    // far-field strain from plane-stress constitutive inversion
    double E = sol.E, nu = sol.nu;
    Tensor2 s0 = sol.far_field.sigma;
    Tensor2 e0{(s0.xx - nu * s0.yy) / E, (s0.yy - nu * s0.xx) / E, (1.0 + nu) / E * s0.xy};

    // cumulative arclength at midpoints
    std::vector<double> s(n, 0.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sol.length[i];
    for (int i = 1; i < n; ++i) s[i] = s[i - 1] + 0.5 * (sol.length[i - 1] + sol.length[i]);

    SurfaceFields out;
    out.sigma.resize(n);
    out.eps.resize(n);
    out.sigma_tt.resize(n);
    for (int i = 0; i < n; ++i) {
        // least-squares cubic through five neighboring midpoints
        Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
        Eigen::Vector4d bx = Eigen::Vector4d::Zero(), by = Eigen::Vector4d::Zero();
        for (int k = -2; k <= 2; ++k) {
            int j = ((i + k) % n + n) % n;
            double ds = s[j] - s[i];
            if (k < 0 && ds > 0) ds -= total;
            if (k > 0 && ds < 0) ds += total;
            Eigen::Vector4d phi{1.0, ds, ds * ds, ds * ds * ds};
            A += phi * phi.transpose();
            bx += phi * sol.u[j].x;
            by += phi * sol.u[j].y;
        }
        Eigen::Vector4d cx = A.ldlt().solve(bx), cy = A.ldlt().solve(by);
        Vec2 duds{cx[1], cy[1]};
        Vec2 t = sol.tangent[i], nn = sol.normal[i];
        double eps_tt = e0.project(t) + dot(t, duds);
        double stt = E * eps_tt;
        out.sigma_tt[i] = stt;
        out.sigma[i] = {stt * t.x * t.x, stt * t.y * t.y, stt * t.x * t.y};
        double enn = -nu * eps_tt;  // lateral contraction on the free surface
        out.eps[i] = {eps_tt * t.x * t.x + enn * nn.x * nn.x, eps_tt * t.y * t.y + enn * nn.y * nn.y,
                      eps_tt * t.x * t.y + enn * nn.x * nn.y};
    }
    return out;
}

/// Exterior displacement at a field point via the representation formula.
inline Vec2 exterior_displacement_at(const ExteriorSolution& sol, Vec2 p) {
    const int n = sol.size();
    if (int(sol.u.size()) != n) throw Error("exterior: unsolved input");
    double mu = sol.E / (2.0 * (1.0 + sol.nu));
    double nubar = sol.nu / (1.0 + sol.nu);
    Vec2 out{0, 0};
    for (int j = 0; j < n; ++j) {
        double gu[2][2] = {{0, 0}, {0, 0}}, ht[2][2] = {{0, 0}, {0, 0}};
        Vec2 nm = -1.0 * sol.normal[j];
        detail::integrate_segment(p, sol.a[j], sol.b[j], 0, gu, [&](Vec2 y, double o[2][2]) {
            detail::kelvin_u(p, y, mu, nubar, o);
        });
        detail::integrate_segment(p, sol.a[j], sol.b[j], 0, ht, [&](Vec2 y, double o[2][2]) {
            detail::kelvin_t(p, y, nm, nubar, o);
        });
        out.x += gu[0][0] * sol.traction[j].x + gu[0][1] * sol.traction[j].y -
                 (ht[0][0] * sol.u[j].x + ht[1][0] * sol.u[j].y);
        out.y += gu[0][1] * sol.traction[j].x + gu[1][1] * sol.traction[j].y -
                 (ht[0][1] * sol.u[j].x + ht[1][1] * sol.u[j].y);
    }
    return out;
}

}  // namespace poresens
