// Command-line front end: dense solves, porosity estimates, direct-FE
// oracle runs, estimate/oracle comparison tables, parameter sweeps, and
// descriptor statistics.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "poresens/porestats.hpp"
#include "poresens/report.hpp"
#include "poresens/svg.hpp"

using namespace poresens;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// Removes declared outputs unless the command finished cleanly.
struct OutputGuard {
    std::vector<std::string> paths;
    bool committed = false;
    ~OutputGuard() {
        if (!committed)
            for (const auto& p : paths) std::remove(p.c_str());
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << content;
    if (!f) throw Error("failed writing '" + path + "'");
}

void validate_json_output(const std::string& path) {
    auto j = json::parse(slurp(path));
    if (!j.contains("schema") || j.at("schema") != "poresens/1")
        throw Error("output '" + path + "' failed schema validation");
}

struct Config {
    json raw;
    Material material;
    BoundaryConditions bcs;
    std::vector<QuantitySpec> quantities;
    std::optional<TaggedPolygon> domain;
    bool domain_is_rect = false;
    double rect_w = 0.0, rect_h = 0.0;
    double domain_h = 0.0;
    EstimatorConfig est;
    // sweep geometry defaults
    double sweep_radius = 5.0;
    Vec2 sweep_center{100, 50};
    int sweep_ngon = 64;
    Box sweep_region{{60, 20}, {140, 80}};
};

Vec2 vec2_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Config load_config(const std::string& path) {
    Config c;
    c.raw = json::parse(slurp(path));
    const json& j = c.raw;
    if (!j.contains("schema") || j.at("schema") != "poresens/1")
        throw Error("config: missing or unsupported schema (expect \"poresens/1\")");

    const auto& m = j.at("material");
    c.material = {m.at("E").get<double>(), m.at("nu").get<double>(), m.value("thickness", 1.0)};
    c.material.validate();

    const auto& b = j.at("bcs");
    for (const auto& d : b.value("dirichlet", json::array())) {
        DirichletBC bc;
        if (d.contains("edge")) bc.edge_tag = d.at("edge").get<std::string>();
        if (d.contains("node_set")) bc.node_set = d.at("node_set").get<std::string>();
        if (d.contains("point")) bc.point = vec2_of(d.at("point"));
        std::string comps = d.value("components", "xy");
        bc.fix_x = comps.find('x') != std::string::npos;
        bc.fix_y = comps.find('y') != std::string::npos;
        if (!bc.fix_x && !bc.fix_y) throw Error("config: dirichlet entry fixes no components");
        if (d.contains("value")) bc.value = vec2_of(d.at("value"));
        c.bcs.dirichlet.push_back(bc);
    }
    for (const auto& t : b.value("tractions", json::array()))
        c.bcs.tractions.push_back({t.at("edge").get<std::string>(), vec2_of(t.at("value"))});
    for (const auto& p : b.value("point_loads", json::array())) {
        PointLoad pl;
        if (p.contains("node")) pl.node = p.at("node").get<int>();
        if (p.contains("point")) pl.point = vec2_of(p.at("point"));
        pl.force = vec2_of(p.at("force"));
        c.bcs.point_loads.push_back(pl);
    }
    if (b.contains("body_force")) c.bcs.body_force = vec2_of(b.at("body_force"));

    for (const auto& q : j.at("quantities")) c.quantities.push_back(quantity_spec_from_json(q));
    if (c.quantities.empty()) throw Error("config: no quantities given");

    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        c.domain_h = d.at("h").get<double>();
        TaggedPolygon tp;
        if (d.contains("rect")) {
            c.domain_is_rect = true;
            c.rect_w = d.at("rect").at(0).get<double>();
            c.rect_h = d.at("rect").at(1).get<double>();
            tp = rect_outline(c.rect_w, c.rect_h);
        } else {
            for (const auto& p : d.at("polygon")) tp.points.push_back(vec2_of(p));
            for (const auto& t : d.at("edge_tags")) tp.edge_tags.push_back(t.get<std::string>());
            if (tp.points.size() != tp.edge_tags.size())
                throw Error("config: domain polygon needs one tag per edge");
        }
        c.domain = tp;
    }
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        c.est.xi = e.value("xi", c.est.xi);
        c.est.bem_elements = e.value("bem_elements", c.est.bem_elements);
        c.est.oracle_tol = e.value("oracle_tol", c.est.oracle_tol);
        c.est.oracle_max_refine = e.value("oracle_max_refine", c.est.oracle_max_refine);
        c.est.oracle_h = e.value("oracle_h", c.est.oracle_h);
    }
    if (!(c.est.xi > 0.0 && c.est.xi < 1.0)) throw Error("config: xi must be in (0,1)");
    if (c.est.bem_elements < 16) throw Error("config: bem_elements must be at least 16");
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        c.sweep_radius = s.value("radius", c.sweep_radius);
        if (s.contains("center")) c.sweep_center = vec2_of(s.at("center"));
        c.sweep_ngon = s.value("ngon", c.sweep_ngon);
        if (s.contains("region")) {
            const auto& r = s.at("region");
            c.sweep_region = {{r.at(0).get<double>(), r.at(1).get<double>()},
                              {r.at(2).get<double>(), r.at(3).get<double>()}};
        }
    }
    return c;
}

// Dense mesh from the config domain: structured grid for rectangles,
// conforming triangulation otherwise.
Mesh generate_domain_mesh(const Config& cfg) {
    if (!cfg.domain) throw Error("no --mesh given and the config has no domain");
    if (cfg.domain_is_rect) {
        Mesh m = generate_rect_mesh(cfg.rect_w, cfg.rect_h, cfg.domain_h);
        m.thickness = cfg.material.thickness;
        return m;
    }
    PorousMeshOptions opt;
    opt.thickness = cfg.material.thickness;
    return generate_porous_mesh(*cfg.domain, {}, cfg.domain_h, opt);
}

// Ellipse with prescribed area and circularity, star-shaped about its center.
Pore ellipse_pore_with_circularity(const std::string& id, Vec2 center, double area, double circ,
                                   int ngon) {
    if (!(circ > 0.0 && circ <= 1.0)) throw Error("sweep: circularity must be in (0,1]");
    auto circ_of_aspect = [&](double q) {
        double a = std::sqrt(area * q / M_PI), b = a / q;
        Polygon poly;
        for (int i = 0; i < ngon; ++i) {
            double t = 2 * M_PI * i / ngon;
            poly.push_back({a * std::cos(t), b * std::sin(t)});
        }
        return 2.0 * std::sqrt(M_PI * std::abs(polygon_area(poly))) / polygon_perimeter(poly);
    };
    double lo = 1.0, hi = 1.0;
    while (circ_of_aspect(hi) > circ && hi < 1e4) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (circ_of_aspect(mid) > circ)
            lo = mid;
        else
            hi = mid;
    }
    double q = 0.5 * (lo + hi);
    double a = std::sqrt(area * q / M_PI), b = a / q;
    Polygon poly;
    for (int i = 0; i < ngon; ++i) {
        double t = 2 * M_PI * i / ngon;
        poly.push_back({center.x + a * std::cos(t), center.y + b * std::sin(t)});
    }
    return make_pore(id, center, poly);
}

std::vector<Pore> sweep_pores(const Config& cfg, const std::string& param, double value) {
    double R = cfg.sweep_radius;
    Vec2 c = cfg.sweep_center;
    int n = cfg.sweep_ngon;
    if (param == "radius") return {circle_pore("p", c, value, n)};
    if (param == "surface-distance")  // distance from the pore boundary to the bottom surface
        return {circle_pore("p", {c.x, value + R}, R, n)};
    if (param == "pore-spacing") {  // surface-to-surface gap between two equal pores
        double half = 0.5 * (value + 2.0 * R);
        return {circle_pore("a", {c.x - half, c.y}, R, n), circle_pore("b", {c.x + half, c.y}, R, n)};
    }
    if (param == "density") {  // value = pore count in the sweep region
        int k = int(std::llround(value));
        if (k < 1) throw Error("sweep: density count must be positive");
        int cols = int(std::ceil(std::sqrt(double(k))));
        int rows = (k + cols - 1) / cols;
        std::vector<Pore> out;
        Vec2 lo = cfg.sweep_region.lo, hi = cfg.sweep_region.hi;
        for (int i = 0; i < k; ++i) {
            int r = i / cols, q = i % cols;
            Vec2 p{lo.x + (q + 0.5) * (hi.x - lo.x) / cols, lo.y + (r + 0.5) * (hi.y - lo.y) / rows};
            out.push_back(circle_pore("p" + std::to_string(i), p, R, n));
        }
        return out;
    }
    if (param == "circularity") return {ellipse_pore_with_circularity("p", c, M_PI * R * R, value, n)};
    throw Error("sweep: unknown parameter '" + param +
                "' (radius | surface-distance | pore-spacing | density | circularity)");
}

int run(int argc, char** argv) {
    CLI::App app{"2D plane-stress porosity sensitivity toolkit"};
    app.require_subcommand(1);

    std::string mesh_path, pores_path, config_path, out_path, plot_path, format = "json";
    std::string estimate_path, oracle_path, csv_path, param, values_csv;
    int threads = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config JSON")->required();
        sub->add_option("--out", out_path, "output path")->required();
        sub->add_option("--threads", threads, "worker thread cap");
        sub->add_option("--format", format, "json|csv");
    };

    auto* solve = app.add_subcommand("solve", "dense FE solve; writes displacement and stress fields");
    solve->add_option("--mesh", mesh_path, "mesh JSON");
    add_common(solve);

    auto* est = app.add_subcommand("estimate", "porosity-sensitivity estimate on the dense structure");
    est->add_option("--mesh", mesh_path, "mesh JSON (defaults to the config domain)");
    est->add_option("--pores", pores_path, "pore JSON")->required();
    add_common(est);

    auto* orc =
        app.add_subcommand("oracle", "direct FE on conforming porous meshes, refined to convergence");
    orc->add_option("--pores", pores_path, "pore JSON")->required();
    add_common(orc);

    auto* cmp = app.add_subcommand("compare", "join an estimate with an oracle into an effectivity table");
    cmp->add_option("--estimate", estimate_path, "estimate report JSON")->required();
    cmp->add_option("--oracle", oracle_path, "oracle JSON")->required();
    cmp->add_option("--out", out_path, "output CSV")->required();

    auto* swp = app.add_subcommand("sweep", "vary one pore parameter and tabulate effectivity");
    swp->add_option("--param", param, "radius | surface-distance | pore-spacing | density | circularity")
        ->required();
    swp->add_option("--values", values_csv, "comma-separated grid")->required();
    swp->add_option("--plot", plot_path, "SVG of I_D versus the parameter");
    add_common(swp);

    auto* sts = app.add_subcommand("stats", "descriptor statistics: distribution fits and CDFs");
    sts->add_option("--csv", csv_path, "descriptor CSV")->required();
    sts->add_option("--out", out_path, "fit report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    OutputGuard guard;
    guard.paths.push_back(out_path);
    if (!plot_path.empty()) guard.paths.push_back(plot_path);

    if (solve->parsed()) {
        Config cfg = load_config(config_path);
        cfg.est.threads = threads;
        Mesh mesh = mesh_path.empty() ? generate_domain_mesh(cfg) : load_mesh(mesh_path);
        FemSystem sys(mesh, cfg.material, cfg.bcs);
        auto f = sys.solve_primary();
        std::ostringstream os;
        os << "{\"schema\":\"poresens/1\",\"config\":" << cfg.raw.dump()
           << ",\"input_hashes\":{\"config\":\"" << fnv1a_hex(slurp(config_path)) << "\""
           << (mesh_path.empty() ? "" : ",\"mesh\":\"" + fnv1a_hex(slurp(mesh_path)) + "\"") << "}";
        os << ",\"energy\":" << detail::fmt_double(f.energy)
           << ",\"residual\":" << detail::fmt_double(f.residual) << ",\"quantities\":[";
        for (size_t q = 0; q < cfg.quantities.size(); ++q) {
            auto rq = resolve_quantity(cfg.quantities[q], mesh);
            os << (q ? "," : "") << "{\"name\":\"" << cfg.quantities[q].name() << "\",\"value\":"
               << detail::fmt_double(evaluate_quantity(rq, mesh, f, sys.external_load())) << "}";
        }
        os << "],\"u\":[";
        for (size_t i = 0; i < mesh.nodes.size(); ++i)
            os << (i ? "," : "") << "[" << detail::fmt_double(f.u[2 * i]) << ","
               << detail::fmt_double(f.u[2 * i + 1]) << "]";
        os << "],\"stress\":[";
        for (size_t e = 0; e < f.stress.size(); ++e)
            os << (e ? "," : "") << "[" << detail::fmt_double(f.stress[e].xx) << ","
               << detail::fmt_double(f.stress[e].yy) << "," << detail::fmt_double(f.stress[e].xy) << "]";
        os << "]}";
        write_file(out_path, os.str());
        validate_json_output(out_path);
    } else if (est->parsed()) {
        Config cfg = load_config(config_path);
        cfg.est.threads = threads;
        Mesh mesh = mesh_path.empty() ? generate_domain_mesh(cfg) : load_mesh(mesh_path);
        auto pores = load_pores(pores_path);
        Polygon outer;
        if (cfg.domain) outer = cfg.domain->points;
        auto reports = estimate(mesh, cfg.material, cfg.bcs, cfg.quantities, pores, cfg.est,
                                cfg.domain ? &outer : nullptr);
        std::map<std::string, std::string> hashes = {{"config", fnv1a_hex(slurp(config_path))},
                                                     {"pores", fnv1a_hex(slurp(pores_path))}};
        if (!mesh_path.empty()) hashes["mesh"] = fnv1a_hex(slurp(mesh_path));
        json resolved = cfg.raw;
        resolved["threads"] = threads;
        write_file(out_path, report_to_json(reports, resolved.dump(), hashes));
        validate_json_output(out_path);
    } else if (orc->parsed()) {
        Config cfg = load_config(config_path);
        if (!cfg.domain) throw Error("oracle: config must define a domain");
        auto pores = load_pores(pores_path);
        auto results = run_oracle(*cfg.domain, pores, cfg.material, cfg.bcs, cfg.quantities,
                                  cfg.est.oracle_h, cfg.est);
        write_file(out_path, oracle_to_json(results));
        validate_json_output(out_path);
    } else if (cmp->parsed()) {
        auto ej = json::parse(slurp(estimate_path));
        auto oj = json::parse(slurp(oracle_path));
        std::vector<EstimateReport> reports;
        for (const auto& r : ej.at("results")) {
            EstimateReport rep;
            rep.spec = quantity_spec_from_json(r.at("quantity"));
            rep.psi0 = r.at("psi0").get<double>();
            rep.d_topo_total = r.at("d_topo_total").get<double>();
            rep.d_shape_total = r.at("d_shape_total").get<double>();
            rep.d_pore_total = r.at("d_pore_total").get<double>();
            rep.d_topo_standalone_total = r.at("d_topo_standalone_total").get<double>();
            rep.psi_pred = r.at("psi_pred").get<double>();
            reports.push_back(rep);
        }
        std::vector<OracleResult> oracle;
        for (const auto& r : oj.at("oracle")) {
            OracleResult o;
            o.spec = quantity_spec_from_json(r.at("quantity"));
            o.psi = r.at("psi").get<double>();
            o.psi0_matched = r.at("psi0_matched").get<double>();
            oracle.push_back(o);
        }
        write_file(out_path, compare_csv(reports, oracle));
    } else if (swp->parsed()) {
        Config cfg = load_config(config_path);
        cfg.est.threads = threads;
        if (!cfg.domain) throw Error("sweep: config must define a domain");
        std::vector<double> values;
        {
            std::istringstream vs(values_csv);
            std::string cell;
            while (std::getline(vs, cell, ',')) values.push_back(std::stod(cell));
            if (values.empty()) throw Error("sweep: empty value grid");
        }
        Mesh dense = generate_domain_mesh(cfg);
        std::ostringstream os;
        os << "param,value,spec,psi0,D_topo_total,D_shape_total,D_pore_total,psi_pred,psi_oracle,"
              "I_psi,I_D,I_D_topo_only,I_D_shape_only\n";
        std::map<std::string, PlotSeries> curves;
        Polygon outer = cfg.domain->points;
        for (double v : values) {
            auto pores = sweep_pores(cfg, param, v);
            auto est_reports =
                estimate(dense, cfg.material, cfg.bcs, cfg.quantities, pores, cfg.est, &outer);
            auto oracle = run_oracle(*cfg.domain, pores, cfg.material, cfg.bcs, cfg.quantities,
                                     cfg.est.oracle_h, cfg.est);
            for (size_t q = 0; q < cfg.quantities.size(); ++q) {
                const auto& e = est_reports[q];
                const auto& o = oracle[q];
                auto eff = effectivity(o.psi, o.psi0_matched, e.d_pore_total);
                auto efft = effectivity(o.psi, o.psi0_matched, e.d_topo_standalone_total);
                auto effs = effectivity(o.psi, o.psi0_matched, e.d_shape_total);
                os << param << "," << detail::fmt_double(v) << "," << e.spec.name() << ","
                   << detail::fmt_double(e.psi0) << "," << detail::fmt_double(e.d_topo_total) << ","
                   << detail::fmt_double(e.d_shape_total) << "," << detail::fmt_double(e.d_pore_total)
                   << "," << detail::fmt_double(e.psi_pred) << "," << detail::fmt_double(o.psi) << ","
                   << (eff.i_psi_defined ? detail::fmt_double(eff.i_psi) : "") << ","
                   << (eff.i_d_defined ? detail::fmt_double(eff.i_d) : "") << ","
                   << (efft.i_d_defined ? detail::fmt_double(efft.i_d) : "") << ","
                   << (effs.i_d_defined ? detail::fmt_double(effs.i_d) : "") << "\n";
                if (eff.i_d_defined) curves[e.spec.name()].points.push_back({v, eff.i_d});
            }
        }
        write_file(out_path, os.str());
        if (!plot_path.empty()) {
            std::vector<PlotSeries> series;
            for (auto& [name, s] : curves) {
                s.name = name;
                series.push_back(s);
            }
            write_line_plot(plot_path, series, "porosity sensitivity effectivity", param, "I_D");
        }
    } else if (sts->parsed()) {
        auto rows = read_descriptor_csv(csv_path);
        if (rows.empty()) throw Error("stats: descriptor CSV has no rows");
        auto column = [&](auto get) {
            std::vector<double> v;
            for (const auto& r : rows) {
                double x = get(r);
                if (!std::isnan(x)) v.push_back(x);
            }
            return v;
        };
        std::ostringstream os;
        os << "{\"schema\":\"poresens/1\",\"n\":" << rows.size() << ",\"columns\":{";
        struct Col {
            const char* name;
            std::vector<double> values;
        };
        std::vector<Col> cols = {
            {"eq_diameter", column([](const DescriptorRow& r) { return r.eq_diameter; })},
            {"sphericity", column([](const DescriptorRow& r) { return r.sphericity; })},
            {"dist_surface", column([](const DescriptorRow& r) { return r.dist_surface; })},
            {"dist_pore", column([](const DescriptorRow& r) { return r.dist_pore; })},
        };
        size_t k = 0;
        for (const auto& col : cols) {
            os << (k++ ? "," : "") << "\"" << col.name << "\":";
            if (int(col.values.size()) < 10) {
                os << "{\"skipped\":\"fewer than 10 samples\"}";
                continue;
            }
            auto fit = fit_distributions(col.values);
            auto cdf = cumulative_distribution(col.values);
            os << "{\"fit\":" << fit_result_json(fit) << ",\"cdf\":[";
            for (size_t i = 0; i < cdf.size(); ++i)
                os << (i ? "," : "") << "[" << detail::fmt_double(cdf[i].first) << ","
                   << detail::fmt_double(cdf[i].second) << "]";
            os << "]}";
        }
        os << "}}";
        write_file(out_path, os.str());
        validate_json_output(out_path);
    }

    guard.committed = true;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "error: " << msg << "\n";
        return 1;
    }
}
