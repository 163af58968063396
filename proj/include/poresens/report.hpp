#pragma once

#include "poresens/estimator.hpp"

namespace poresens {

inline std::string quantity_spec_json(const QuantitySpec& s) {
    std::ostringstream os;
    switch (s.kind) {
        case QuantityKind::Compliance:
            os << "{\"kind\":\"compliance\"}";
            break;
        case QuantityKind::NodalDisplacement:
            os << "{\"kind\":\"nodal_disp\",";
            if (s.node) os << "\"node\":" << *s.node << ",";
            if (s.point)
                os << "\"point\":[" << detail::fmt_double(s.point->x) << ","
                   << detail::fmt_double(s.point->y) << "],";
            os << "\"component\":\"" << (s.component == 0 ? "x" : "y") << "\"}";
            break;
        case QuantityKind::RegionAveragedDisplacement:
            os << "{\"kind\":\"region_avg_disp\",";
            if (s.region_set) os << "\"region\":\"" << detail::json_escape(*s.region_set) << "\",";
            if (s.region_box)
                os << "\"box\":[" << detail::fmt_double(s.region_box->lo.x) << ","
                   << detail::fmt_double(s.region_box->lo.y) << ","
                   << detail::fmt_double(s.region_box->hi.x) << ","
                   << detail::fmt_double(s.region_box->hi.y) << "],";
            os << "\"component\":\"" << (s.component == 0 ? "x" : "y") << "\"}";
            break;
    }
    return os.str();
}

inline QuantitySpec quantity_spec_from_json(const nlohmann::json& j) {
    QuantitySpec s;
    std::string kind = j.at("kind").get<std::string>();
    if (j.contains("component")) {
        std::string c = j.at("component").get<std::string>();
        if (c != "x" && c != "y") throw Error("config: component must be \"x\" or \"y\"");
        s.component = (c == "x") ? 0 : 1;
    }
    if (kind == "compliance") {
        s.kind = QuantityKind::Compliance;
    } else if (kind == "nodal_disp") {
        s.kind = QuantityKind::NodalDisplacement;
        if (j.contains("node")) s.node = j.at("node").get<int>();
        if (j.contains("point")) s.point = Vec2{j.at("point").at(0).get<double>(), j.at("point").at(1).get<double>()};
        if (!s.node && !s.point) throw Error("config: nodal_disp needs \"node\" or \"point\"");
    } else if (kind == "region_avg_disp") {
        s.kind = QuantityKind::RegionAveragedDisplacement;
        if (j.contains("region")) s.region_set = j.at("region").get<std::string>();
        if (j.contains("box")) {
            const auto& b = j.at("box");
            s.region_box = Box{{b.at(0).get<double>(), b.at(1).get<double>()},
                               {b.at(2).get<double>(), b.at(3).get<double>()}};
        }
        if (!s.region_set && !s.region_box) throw Error("config: region_avg_disp needs \"region\" or \"box\"");
    } else {
        throw Error("config: unknown quantity kind '" + kind + "'");
    }
    return s;
}

/// FNV-1a 64-bit content hash, hex-encoded; embedded in reports so a result
/// can be traced to exact input bytes.
inline std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

inline std::string effectivity_json(const Effectivity& e) {
    std::ostringstream os;
    os << "{\"i_psi\":" << (e.i_psi_defined ? detail::fmt_double(e.i_psi) : "null")
       << ",\"i_psi_reciprocal\":" << (e.i_psi_defined ? detail::fmt_double(e.i_psi_reciprocal) : "null")
       << ",\"i_d\":" << (e.i_d_defined ? detail::fmt_double(e.i_d) : "null") << "}";
    return os.str();
}

inline std::string report_to_json(const std::vector<EstimateReport>& reports,
                                  const std::string& resolved_config_json = "null",
                                  const std::map<std::string, std::string>& input_hashes = {}) {
    std::ostringstream os;
    os << "{\"schema\":\"poresens/1\",\"config\":" << resolved_config_json << ",\"input_hashes\":{";
    size_t k = 0;
    for (const auto& [name, hash] : input_hashes)
        os << (k++ ? "," : "") << "\"" << detail::json_escape(name) << "\":\"" << hash << "\"";
    os << "},\"results\":[";
    for (size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        os << (r ? "," : "") << "{\"quantity\":" << quantity_spec_json(rep.spec)
           << ",\"name\":\"" << rep.spec.name() << "\""
           << ",\"psi0\":" << detail::fmt_double(rep.psi0) << ",\"pores\":[";
        for (size_t i = 0; i < rep.pores.size(); ++i) {
            const auto& c = rep.pores[i];
            os << (i ? "," : "") << "{\"id\":\"" << detail::json_escape(c.pore_id) << "\""
               << ",\"d_topo\":" << detail::fmt_double(c.d_topo)
               << ",\"d_shape\":" << detail::fmt_double(c.d_shape)
               << ",\"d_pore\":" << detail::fmt_double(c.d_pore)
               << ",\"d_topo_standalone\":" << detail::fmt_double(c.d_topo_standalone)
               << ",\"max_von_mises\":" << detail::fmt_double(c.max_von_mises)
               << ",\"max_von_mises_point\":[" << detail::fmt_double(c.max_von_mises_point.x) << ","
               << detail::fmt_double(c.max_von_mises_point.y) << "]}";
        }
        os << "],\"d_topo_total\":" << detail::fmt_double(rep.d_topo_total)
           << ",\"d_shape_total\":" << detail::fmt_double(rep.d_shape_total)
           << ",\"d_pore_total\":" << detail::fmt_double(rep.d_pore_total)
           << ",\"d_topo_standalone_total\":" << detail::fmt_double(rep.d_topo_standalone_total)
           << ",\"psi_pred\":" << detail::fmt_double(rep.psi_pred);
        if (rep.psi_oracle) os << ",\"psi_oracle\":" << detail::fmt_double(*rep.psi_oracle);
        if (rep.psi0_oracle) os << ",\"psi0_oracle\":" << detail::fmt_double(*rep.psi0_oracle);
        if (rep.eff) os << ",\"effectivity\":" << effectivity_json(*rep.eff);
        os << ",\"warnings\":[";
        for (size_t w = 0; w < rep.warnings.size(); ++w)
            os << (w ? "," : "") << "\"" << detail::json_escape(rep.warnings[w]) << "\"";
        os << "]}";
    }
    os << "]}";
    return os.str();
}

inline std::string oracle_to_json(const std::vector<OracleResult>& results) {
    std::ostringstream os;
    os << "{\"schema\":\"poresens/1\",\"oracle\":[";
    for (size_t r = 0; r < results.size(); ++r) {
        const auto& o = results[r];
        os << (r ? "," : "") << "{\"quantity\":" << quantity_spec_json(o.spec)
           << ",\"name\":\"" << o.spec.name() << "\""
           << ",\"psi\":" << detail::fmt_double(o.psi)
           << ",\"psi0_matched\":" << detail::fmt_double(o.psi0_matched)
           << ",\"delta\":" << detail::fmt_double(o.delta)
           << ",\"converged\":" << (o.converged ? "true" : "false")
           << ",\"delta_converged\":" << (o.delta_converged ? "true" : "false") << ",\"history\":[";
        for (size_t l = 0; l < o.history.size(); ++l) {
            const auto& lv = o.history[l];
            os << (l ? "," : "") << "{\"h\":" << detail::fmt_double(lv.h)
               << ",\"elements\":" << lv.elements << ",\"psi\":" << detail::fmt_double(lv.psi)
               << ",\"psi0_matched\":" << detail::fmt_double(lv.psi0_matched) << "}";
        }
        os << "]}";
    }
    os << "]}";
    return os.str();
}

/// Effectivity table joining estimates with oracle truths; rows keyed by
/// quantity name. Throws on any mismatch between the two spec lists.
inline std::string compare_csv(const std::vector<EstimateReport>& est,
                               const std::vector<OracleResult>& oracle) {
    if (est.size() != oracle.size()) throw Error("compare: spec mismatch");
    std::ostringstream os;
    os << "spec,psi0,D_topo_total,D_shape_total,D_pore_total,psi_pred,psi_oracle,I_psi,I_D,"
          "I_D_topo_only,I_D_shape_only\n";
    for (size_t i = 0; i < est.size(); ++i) {
        if (est[i].spec.name() != oracle[i].spec.name()) throw Error("compare: spec mismatch");
        const auto& e = est[i];
        const auto& o = oracle[i];
        auto eff = effectivity(o.psi, o.psi0_matched, e.d_pore_total);
        auto eff_topo = effectivity(o.psi, o.psi0_matched, e.d_topo_standalone_total);
        auto eff_shape = effectivity(o.psi, o.psi0_matched, e.d_shape_total);
        os << e.spec.name() << "," << detail::fmt_double(e.psi0) << ","
           << detail::fmt_double(e.d_topo_total) << "," << detail::fmt_double(e.d_shape_total) << ","
           << detail::fmt_double(e.d_pore_total) << "," << detail::fmt_double(e.psi_pred) << ","
           << detail::fmt_double(o.psi) << "," << (eff.i_psi_defined ? detail::fmt_double(eff.i_psi) : "")
           << "," << (eff.i_d_defined ? detail::fmt_double(eff.i_d) : "") << ","
           << (eff_topo.i_d_defined ? detail::fmt_double(eff_topo.i_d) : "") << ","
           << (eff_shape.i_d_defined ? detail::fmt_double(eff_shape.i_d) : "") << "\n";
    }
    return os.str();
}

}  // namespace poresens
