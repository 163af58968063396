#include <catch2/catch_amalgamated.hpp>

#include "poresens/report.hpp"

using namespace poresens;

namespace {

// Cantilever benchmark: 200 x 100 plate clamped on the left, uniform
// downward pressure on top, three quantities of interest.
struct Benchmark {
    double W = 200.0, H = 100.0;
    Material mat{6.89e4, 0.35, 1.0};
    BoundaryConditions bcs;
    std::vector<QuantitySpec> specs;

    Benchmark() {
        DirichletBC left;
        left.edge_tag = "left";
        bcs.dirichlet = {left};
        bcs.tractions = {{"top", {0, -1000.0}}};
        specs = {compliance_spec(), nodal_disp_spec({W, 0}, 1),
                 region_avg_spec({{150, 40}, {170, 60}}, 1)};
    }
};

}  // namespace

TEST_CASE("estimate with zero pores returns psi0 exactly") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    auto reports = estimate(mesh, b.mat, b.bcs, b.specs, {});
    REQUIRE(reports.size() == 3);
    for (const auto& r : reports) {
        CHECK(r.d_pore_total == 0.0);
        CHECK(r.psi_pred == r.psi0);
        CHECK(r.pores.empty());
    }
    CHECK(reports[0].psi0 > 0.0);
}

TEST_CASE("pore in a stress-free region contributes nothing") {
    Material mat{1000.0, 0.3, 1.0};
    Mesh mesh = generate_rect_mesh(400, 50, 5.0);
    BoundaryConditions bcs;
    DirichletBC left;
    left.edge_tag = "left";
    bcs.dirichlet = {left};
    PointLoad pl;
    pl.point = Vec2{5, 25};
    pl.force = {0, -10};
    bcs.point_loads = {pl};
    auto pore = circle_pore("far", {380, 25}, 4.0, 32);
    auto reports = estimate(mesh, mat, bcs, {compliance_spec()}, {pore});
    REQUIRE(reports.size() == 1);
    CHECK(std::abs(reports[0].pores[0].d_pore) <= 1e-6 * std::abs(reports[0].psi0));
}

TEST_CASE("superposition: multi-pore estimate is the exact sum of single-pore runs") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    auto p1 = circle_pore("p1", {70, 30}, 4.0, 32);
    auto p2 = circle_pore("p2", {130, 70}, 6.0, 32);
    auto multi = estimate(mesh, b.mat, b.bcs, b.specs, {p1, p2});
    auto s1 = estimate(mesh, b.mat, b.bcs, b.specs, {p1});
    auto s2 = estimate(mesh, b.mat, b.bcs, b.specs, {p2});
    for (size_t q = 0; q < b.specs.size(); ++q) {
        CHECK(multi[q].pores[0].d_pore == s1[q].pores[0].d_pore);
        CHECK(multi[q].pores[1].d_pore == s2[q].pores[0].d_pore);
        double total = multi[q].pores[0].d_pore + multi[q].pores[1].d_pore;
        CHECK(multi[q].d_pore_total == total);
        CHECK(multi[q].psi_pred == multi[q].psi0 + total);
        CHECK(multi[q].psi_pred == s1[q].psi0 + (s1[q].pores[0].d_pore + s2[q].pores[0].d_pore));
    }
}

TEST_CASE("reports are bitwise identical across thread counts") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    std::vector<Pore> pores;
    for (int i = 0; i < 6; ++i)
        pores.push_back(circle_pore("p" + std::to_string(i), {40.0 + 20 * i, 30.0 + 5 * i}, 3.0, 32));
    EstimatorConfig c1, c8;
    c1.threads = 1;
    c8.threads = 8;
    auto r1 = estimate(mesh, b.mat, b.bcs, b.specs, pores, c1);
    auto r8 = estimate(mesh, b.mat, b.bcs, b.specs, pores, c8);
    CHECK(report_to_json(r1) == report_to_json(r8));
}

TEST_CASE("load linearity: compliance change scales quadratically, displacements linearly") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    auto pore = circle_pore("p", {100, 50}, 5.0, 32);
    auto r1 = estimate(mesh, b.mat, b.bcs, b.specs, {pore});
    Benchmark b2;
    b2.bcs.tractions = {{"top", {0, -2000.0}}};
    auto r2 = estimate(mesh, b2.mat, b2.bcs, b2.specs, {pore});
    CHECK(r2[0].d_pore_total == Catch::Approx(4.0 * r1[0].d_pore_total).epsilon(1e-10));
    CHECK(r2[1].d_pore_total == Catch::Approx(2.0 * r1[1].d_pore_total).epsilon(1e-10));
    CHECK(r2[2].d_pore_total == Catch::Approx(2.0 * r1[2].d_pore_total).epsilon(1e-10));
    CHECK(r2[0].psi0 == Catch::Approx(4.0 * r1[0].psi0).epsilon(1e-10));
}

TEST_CASE("two far-apart identical pores in a uniform field contribute equally") {
    Material mat{6.89e4, 0.35, 1.0};
    Mesh mesh = generate_rect_mesh(200, 100, 5.0);
    BoundaryConditions bcs;
    DirichletBC left;
    left.edge_tag = "left";
    left.fix_x = true;
    left.fix_y = false;
    DirichletBC corner;
    corner.point = Vec2{0, 0};
    corner.fix_x = false;
    corner.fix_y = true;
    bcs.dirichlet = {left, corner};
    bcs.tractions = {{"right", {1000, 0}}};
    auto p1 = circle_pore("a", {60, 50}, 4.0, 32);
    auto p2 = circle_pore("b", {140, 50}, 4.0, 32);
    auto r = estimate(mesh, mat, bcs, {compliance_spec()}, {p1, p2});
    CHECK(r[0].pores[0].d_pore == Catch::Approx(r[0].pores[1].d_pore).epsilon(0.01));
}

TEST_CASE("assumption warnings for close pores and near-surface pores") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    auto p1 = circle_pore("a", {100, 50}, 5.0, 32);
    auto p2 = circle_pore("b", {112, 50}, 5.0, 32);  // gap 2 < diameter 10
    auto p3 = circle_pore("c", {50, 6}, 5.0, 32);    // 1 from the bottom surface
    Polygon outer = rect_outline(b.W, b.H).points;
    auto r = estimate(mesh, b.mat, b.bcs, {compliance_spec()}, {p1, p2, p3}, {}, &outer);
    REQUIRE(!r.empty());
    bool pore_pair = false, near_surface = false;
    for (const auto& w : r[0].warnings) {
        if (w.find("interaction") != std::string::npos) pore_pair = true;
        if (w.find("surface") != std::string::npos) near_surface = true;
    }
    CHECK(pore_pair);
    CHECK(near_surface);
}

TEST_CASE("max surface von Mises lies on the pore boundary") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 5.0);
    auto pore = circle_pore("p", {100, 50}, 5.0, 64);
    auto r = estimate(mesh, b.mat, b.bcs, {compliance_spec()}, {pore});
    const auto& c = r[0].pores[0];
    CHECK(c.max_von_mises > 0.0);
    CHECK(point_polyline_distance(c.max_von_mises_point, pore.boundary) < 1e-9 * 5.0);
}

// --- effectivity ---------------------------------------------------------------

TEST_CASE("effectivity indices") {
    auto e = effectivity(10.0, 4.0, 6.0);  // exact estimator
    CHECK(e.i_psi == Catch::Approx(1.0));
    CHECK(e.i_d == Catch::Approx(1.0));

    auto t = effectivity(16.207, 16.199 - 0.5, 0.5);  // published-style values
    CHECK(t.i_psi == Catch::Approx(16.199 / 16.207).epsilon(1e-12));
    CHECK(t.i_psi == Catch::Approx(0.99951).margin(5e-6));
    CHECK(t.i_psi_reciprocal == Catch::Approx(16.207 / 16.199).epsilon(1e-12));

    auto z = effectivity(5.0, 3.0, 0.0);
    CHECK(z.i_d == 0.0);
    CHECK(z.i_d_defined);

    auto undef = effectivity(0.0, 0.0, 1.0);
    CHECK_FALSE(undef.i_psi_defined);
    CHECK_FALSE(undef.i_d_defined);
    auto undef2 = effectivity(3.0, 3.0, 1.0);
    CHECK(undef2.i_psi_defined);
    CHECK_FALSE(undef2.i_d_defined);
}

// --- oracle --------------------------------------------------------------------

TEST_CASE("oracle with zero pores agrees with the structured dense mesh") {
    Benchmark b;
    EstimatorConfig cfg;
    auto oracle = run_oracle(rect_outline(b.W, b.H), {}, b.mat, b.bcs, b.specs, 5.0, cfg);
    Mesh dense = generate_rect_mesh(b.W, b.H, 2.5);
    FemSystem sys(dense, b.mat, b.bcs);
    auto z = sys.solve_primary();
    for (size_t q = 0; q < b.specs.size(); ++q) {
        auto rq = resolve_quantity(b.specs[q], dense);
        double psi0 = evaluate_quantity(rq, dense, z, sys.external_load());
        CHECK(oracle[q].converged);
        CHECK(oracle[q].psi == Catch::Approx(psi0).epsilon(0.005));
        CHECK(oracle[q].delta == 0.0);
    }
}

TEST_CASE("oracle compliance grows monotonically with pore size") {
    Benchmark b;
    EstimatorConfig cfg;
    cfg.oracle_max_refine = 3;
    std::vector<QuantitySpec> comp = {compliance_spec()};
    auto o5 = run_oracle(rect_outline(b.W, b.H), {circle_pore("p", {100, 50}, 5.0, 64)}, b.mat, b.bcs,
                         comp, 5.0, cfg);
    auto o10 = run_oracle(rect_outline(b.W, b.H), {circle_pore("p", {100, 50}, 10.0, 64)}, b.mat,
                          b.bcs, comp, 5.0, cfg);
    CHECK(o5[0].psi > o5[0].psi0_matched);
    CHECK(o10[0].psi > o5[0].psi);
    CHECK(o10[0].delta > o5[0].delta);
    CHECK(o5[0].delta > 0.0);
}

TEST_CASE("report JSON carries schema, hashes and results") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 10.0);
    auto r = estimate(mesh, b.mat, b.bcs, {compliance_spec()}, {});
    std::string js = report_to_json(r, "{\"note\":1}", {{"mesh", fnv1a_hex("abc")}});
    auto parsed = nlohmann::json::parse(js);
    CHECK(parsed.at("schema") == "poresens/1");
    CHECK(parsed.at("input_hashes").at("mesh") == fnv1a_hex("abc"));
    CHECK(parsed.at("results").size() == 1);
    CHECK(parsed.at("results").at(0).at("psi_pred").get<double>() == Catch::Approx(r[0].psi_pred));
}

TEST_CASE("compare table joins estimate and oracle rows") {
    Benchmark b;
    Mesh mesh = generate_rect_mesh(b.W, b.H, 10.0);
    auto est = estimate(mesh, b.mat, b.bcs, b.specs, {});
    std::vector<OracleResult> oracle(3);
    for (size_t i = 0; i < 3; ++i) {
        oracle[i].spec = b.specs[i];
        oracle[i].psi = est[i].psi0 * 1.01;
        oracle[i].psi0_matched = est[i].psi0;
    }
    std::string csv = compare_csv(est, oracle);
    CHECK(csv.find("compliance") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    std::vector<OracleResult> wrong(2);
    CHECK_THROWS_WITH(compare_csv(est, wrong), Catch::Matchers::ContainsSubstring("spec mismatch"));
}
