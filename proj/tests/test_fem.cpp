#include <catch2/catch_amalgamated.hpp>

#include "poresens/adjoint.hpp"
#include "poresens/fem.hpp"

using namespace poresens;

namespace {

// Left edge fixed in x, bottom-left corner also fixed in y, uniform traction
// s on the right edge: the exact solution is uniaxial stress s everywhere.
struct PatchTest {
    Mesh mesh;
    Material mat{200.0, 0.3, 2.0};
    BoundaryConditions bcs;
    double s = 7.0;
    double L = 10.0, H = 4.0;

    PatchTest() {
        mesh = generate_rect_mesh(L, H, 1.0);
        DirichletBC left;
        left.edge_tag = "left";
        left.fix_x = true;
        left.fix_y = false;
        DirichletBC corner;
        corner.point = Vec2{0, 0};
        corner.fix_x = false;
        corner.fix_y = true;
        bcs.dirichlet = {left, corner};
        bcs.tractions = {{"right", {s, 0}}};
    }
};

}  // namespace

TEST_CASE("zero loads give the zero solution") {
    Mesh mesh = generate_rect_mesh(4, 2, 1);
    BoundaryConditions bcs;
    DirichletBC d;
    d.edge_tag = "left";
    bcs.dirichlet = {d};
    auto f = solve_primary(mesh, {100.0, 0.3, 1.0}, bcs);
    CHECK(f.u.norm() == 0.0);
    for (const auto& s : f.stress) CHECK(s.von_mises() == 0.0);
    CHECK(f.energy == 0.0);
}

TEST_CASE("patch test: constant stress reproduced to 1e-10") {
    PatchTest p;
    auto f = solve_primary(p.mesh, p.mat, p.bcs);
    for (const auto& sig : f.stress) {
        CHECK(sig.xx == Catch::Approx(p.s).epsilon(1e-10));
        CHECK(std::abs(sig.yy) <= 1e-10 * p.s);
        CHECK(std::abs(sig.xy) <= 1e-10 * p.s);
    }
    SECTION("stress sampling at interior point and element centroid") {
        Tensor2 sig = evaluate_stress_at(p.mesh, f, {3.3, 1.2});
        CHECK(sig.xx == Catch::Approx(p.s).epsilon(1e-10));
        Vec2 c = p.mesh.element_centroid(5);
        Tensor2 s5 = evaluate_stress_at(p.mesh, f, c);
        CHECK(s5.xx == f.stress[5].xx);
        CHECK(s5.xy == f.stress[5].xy);
        CHECK_THROWS_WITH(evaluate_stress_at(p.mesh, f, {50, 50}),
                          Catch::Matchers::ContainsSubstring("outside"));
    }
    SECTION("strain sampling is consistent with the constitutive law") {
        Tensor2 eps = evaluate_strain_at(p.mesh, f, {3.3, 1.2});
        CHECK(eps.xx == Catch::Approx(p.s / p.mat.E).epsilon(1e-10));
        CHECK(eps.yy == Catch::Approx(-p.mat.nu * p.s / p.mat.E).epsilon(1e-10));
    }
}

TEST_CASE("stiffness is symmetric and energy-consistent") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    Eigen::SparseMatrix<double> d =
        Eigen::SparseMatrix<double>(sys.stiffness().transpose()) - sys.stiffness();
    CHECK(Eigen::MatrixXd(d).cwiseAbs().maxCoeff() == 0.0);
    auto f = sys.solve_primary();
    double w_ext = 0.5 * f.u.dot(sys.external_load());
    CHECK(f.energy == Catch::Approx(w_ext).epsilon(1e-10));
}

TEST_CASE("Betti reciprocity between two load cases") {
    Mesh mesh = generate_rect_mesh(10, 4, 0.5);
    Material mat{500.0, 0.25, 1.0};
    BoundaryConditions base;
    DirichletBC d;
    d.edge_tag = "left";
    base.dirichlet = {d};

    BoundaryConditions bc1 = base;
    bc1.tractions = {{"right", {3.0, -1.0}}};
    BoundaryConditions bc2 = base;
    bc2.tractions = {{"top", {0.0, -2.0}}};
    FemSystem s1(mesh, mat, bc1), s2(mesh, mat, bc2);
    auto f1 = s1.solve_primary();
    auto f2 = s2.solve_primary();
    double w12 = f1.u.dot(s2.external_load());
    double w21 = f2.u.dot(s1.external_load());
    CHECK(w12 == Catch::Approx(w21).epsilon(1e-10));
}

TEST_CASE("slender cantilever matches beam theory within 5%") {
    double L = 100.0, H = 10.0, P = 50.0;  // total tip shear load
    Material mat{30000.0, 0.3, 1.0};
    Mesh mesh = generate_rect_mesh(L, H, 0.5);
    BoundaryConditions bcs;
    DirichletBC d;
    d.edge_tag = "left";
    bcs.dirichlet = {d};
    bcs.tractions = {{"right", {0, -P / (H * mat.thickness)}}};
    auto f = solve_primary(mesh, mat, bcs);
    int tip = nearest_node(mesh, {L, H / 2});
    double w_fe = -f.displacement(tip).y;
    // Timoshenko: PL^3/3EI + PL/(k G A), k = 5/6 for a rectangle
    double I = mat.thickness * H * H * H / 12.0;
    double G = mat.E / (2.0 * (1.0 + mat.nu));
    double A = H * mat.thickness;
    double w_beam = P * L * L * L / (3.0 * mat.E * I) + P * L / ((5.0 / 6.0) * G * A);
    CHECK(w_fe == Catch::Approx(w_beam).epsilon(0.05));

    SECTION("midline shear stress near the parabolic beam value") {
        Mesh m2 = generate_rect_mesh(L, H, 2.0);
        auto f2 = solve_primary(m2, mat, bcs);
        Tensor2 sig = evaluate_stress_at(m2, f2, {L / 2, H / 2});
        double tau_beam = 1.5 * P / A;  // parabolic shear at the neutral axis
        CHECK(std::abs(sig.xy) == Catch::Approx(tau_beam).epsilon(0.15));
    }
}

TEST_CASE("compliance increments decrease monotonically under refinement") {
    Material mat{6.89e4, 0.35, 1.0};
    BoundaryConditions bcs;
    DirichletBC d;
    d.edge_tag = "left";
    bcs.dirichlet = {d};
    bcs.tractions = {{"top", {0, -1000.0}}};
    std::vector<double> c;
    for (double h : {10.0, 5.0, 2.5}) {
        Mesh mesh = generate_rect_mesh(200, 100, h);
        FemSystem sys(mesh, mat, bcs);
        auto f = sys.solve_primary();
        c.push_back(f.u.dot(sys.external_load()));
    }
    double d1 = c[1] - c[0], d2 = c[2] - c[1];
    CHECK(d1 > 0.0);
    CHECK(d2 > 0.0);
    CHECK(d2 < d1);
}

TEST_CASE("singular system is reported") {
    Mesh mesh = generate_rect_mesh(4, 2, 1);
    BoundaryConditions bcs;  // no Dirichlet at all
    bcs.tractions = {{"right", {1, 0}}};
    CHECK_THROWS_WITH(solve_primary(mesh, {100.0, 0.3, 1.0}, bcs),
                      Catch::Matchers::ContainsSubstring("singular"));
}

// --- adjoint ---------------------------------------------------------------

TEST_CASE("compliance is self-adjoint bitwise") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    auto z = sys.solve_primary();
    auto rq = resolve_quantity(compliance_spec(), p.mesh);
    auto pair = solve_adjoint(sys, z, rq);
    REQUIRE(pair.adjoint.u.size() == z.u.size());
    CHECK((pair.adjoint.u - z.u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nodal adjoint load is a discrete delta; Betti identity holds") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    auto z = sys.solve_primary();
    auto spec = nodal_disp_spec({p.L, p.H}, 0);  // x displacement at top-right corner
    auto rq = resolve_quantity(spec, p.mesh);
    auto L = adjoint_load(rq, p.mesh, sys.external_load());
    CHECK(L.cwiseAbs().sum() == 1.0);
    CHECK(L[2 * rq.node + 0] == 1.0);
    auto pair = solve_adjoint(sys, z, rq);
    double via_adjoint = pair.adjoint.u.dot(sys.external_load());
    double direct = evaluate_quantity(rq, p.mesh, z, sys.external_load());
    CHECK(via_adjoint == Catch::Approx(direct).epsilon(1e-10));
}

TEST_CASE("region adjoint load integrates to one") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    auto spec = region_avg_spec({{2, 1}, {8, 3}}, 1);
    auto rq = resolve_quantity(spec, p.mesh);
    auto L = adjoint_load(rq, p.mesh, sys.external_load());
    double total = 0.0;
    for (int i = 0; i < L.size(); ++i)
        if (i % 2 == 1) total += L[i];
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
    auto z = sys.solve_primary();
    auto pair = solve_adjoint(sys, z, rq);
    double via_adjoint = pair.adjoint.u.dot(sys.external_load());
    double direct = evaluate_quantity(rq, p.mesh, z, sys.external_load());
    CHECK(via_adjoint == Catch::Approx(direct).epsilon(1e-10));
}

TEST_CASE("quantity values on the exact uniaxial solution") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    auto z = sys.solve_primary();

    auto nodal = resolve_quantity(nodal_disp_spec({p.L, 0}, 0), p.mesh);
    double ux = evaluate_quantity(nodal, p.mesh, z, sys.external_load());
    CHECK(ux == Catch::Approx(p.s * p.L / p.mat.E).epsilon(1e-10));

    auto comp = resolve_quantity(compliance_spec(), p.mesh);
    double c = evaluate_quantity(comp, p.mesh, z, sys.external_load());
    CHECK(c == Catch::Approx(p.s * p.s * p.L * p.H * p.mat.thickness / p.mat.E).epsilon(1e-10));

    // region average of u_x over a box: s/E times the area-weighted mean of
    // element centroid x, computable from the mesh alone
    auto reg = resolve_quantity(region_avg_spec({{2, 0}, {8, 4}}, 0), p.mesh);
    double expect = 0.0;
    for (int e : reg.region) expect += p.mesh.element_area(e) * p.mesh.element_centroid(e).x;
    expect *= p.s / (p.mat.E * reg.region_area);
    double got = evaluate_quantity(reg, p.mesh, z, sys.external_load());
    CHECK(got == Catch::Approx(expect).epsilon(1e-10));

    // zero field gives zero for all three kinds
    SolutionField zero = z;
    zero.u.setZero();
    CHECK(evaluate_quantity(comp, p.mesh, zero, sys.external_load()) == 0.0);
    CHECK(evaluate_quantity(nodal, p.mesh, zero, sys.external_load()) == 0.0);
    CHECK(evaluate_quantity(reg, p.mesh, zero, sys.external_load()) == 0.0);
}

TEST_CASE("zero adjoint load yields the zero adjoint field") {
    PatchTest p;
    FemSystem sys(p.mesh, p.mat, p.bcs);
    Eigen::VectorXd L = Eigen::VectorXd::Zero(2 * p.mesh.nodes.size());
    auto adj = sys.solve(L, true);
    CHECK(adj.u.norm() == 0.0);
}

TEST_CASE("quantity resolution errors") {
    PatchTest p;
    QuantitySpec bad;
    bad.kind = QuantityKind::NodalDisplacement;
    bad.node = 100000;
    CHECK_THROWS_WITH(resolve_quantity(bad, p.mesh), Catch::Matchers::ContainsSubstring("out of range"));
    QuantitySpec badr;
    badr.kind = QuantityKind::RegionAveragedDisplacement;
    badr.region_set = "nope";
    CHECK_THROWS(resolve_quantity(badr, p.mesh));
}
