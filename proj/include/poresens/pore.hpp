#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poresens/format.hpp"
#include "poresens/geometry.hpp"

namespace poresens {

/// Closed counterclockwise polyline at full scale (shape parameter 1), with
/// the scaling center it shrinks about. Must be star-shaped about the center;
/// radial scaling is only a valid shrink under that condition.
struct Pore {
    std::string id;
    Vec2 center;
    Polygon boundary;
    double area = 0.0;

    void validate() const {
        if (boundary.size() < 3) throw Error("pore '" + id + "': boundary needs at least 3 points");
        double a = polygon_area(boundary);
        if (a <= 0.0) throw Error("pore '" + id + "': boundary must be counterclockwise with positive area");
        if (!polygon_simple(boundary)) throw Error("pore '" + id + "': boundary is self-intersecting");
        if (!point_in_polygon(center, boundary))
            throw Error("pore '" + id + "': center is not strictly inside the boundary");
        size_t bad = 0;
        if (!polygon_star_shaped_about(boundary, center, &bad))
            throw Error("pore '" + id + "': not star-shaped about its center (design speed <= 0 on segment " +
                        std::to_string(bad) + ")");
    }
};

inline Pore make_pore(std::string id, Vec2 center, Polygon boundary) {
    Pore p{std::move(id), center, std::move(boundary), 0.0};
    p.area = polygon_area(p.boundary);
    p.validate();
    return p;
}

/// Circle discretized as a regular n-gon (vertices on the circle).
inline Pore circle_pore(std::string id, Vec2 center, double radius, int n = 64, double phase = 0.0) {
    return make_pore(std::move(id), center, regular_polygon(center, radius, n, phase));
}

inline std::vector<Pore> pores_from_json(const nlohmann::json& j) {
    std::vector<Pore> out;
    try {
        for (const auto& pj : j) {
            Polygon b;
            for (const auto& v : pj.at("boundary")) b.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            out.push_back(make_pore(pj.at("id").get<std::string>(),
                                    {pj.at("center").at(0).get<double>(), pj.at("center").at(1).get<double>()},
                                    std::move(b)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("pores: parse error: ") + e.what());
    }
    return out;
}

inline std::vector<Pore> load_pores(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("pores: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("pores: parse error in '") + path + "': " + e.what());
    }
    return pores_from_json(j);
}

inline std::string pores_to_json(const std::vector<Pore>& pores) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < pores.size(); ++i) {
        const auto& p = pores[i];
        os << (i ? "," : "") << "{\"boundary\":[";
        for (size_t k = 0; k < p.boundary.size(); ++k)
            os << (k ? "," : "") << "[" << detail::fmt_double(p.boundary[k].x) << ","
               << detail::fmt_double(p.boundary[k].y) << "]";
        os << "],\"center\":[" << detail::fmt_double(p.center.x) << "," << detail::fmt_double(p.center.y)
           << "],\"id\":\"" << detail::json_escape(p.id) << "\"}";
    }
    os << "]";
    return os.str();
}

inline void save_pores(const std::vector<Pore>& pores, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("pores: cannot open '" + path + "' for writing");
    f << pores_to_json(pores) << "\n";
}

}  // namespace poresens
