#pragma once

#include <fstream>
#include <numeric>
#include <span>

#include "poresens/pore.hpp"

namespace poresens {

// --- descriptors -------------------------------------------------------------

struct Descriptor2D {
    double area = 0.0;
    double eq_diameter = 0.0;   // sqrt(4A/pi)
    double circularity = 0.0;   // 2 sqrt(pi A) / perimeter, 1 for a circle
};

inline Descriptor2D descriptors_2d(const Polygon& poly) {
    if (poly.size() < 3) throw Error("porestats: degenerate polygon");
    double a = std::abs(polygon_area(poly));
    double p = polygon_perimeter(poly);
    if (a <= 0.0 || p <= 0.0) throw Error("porestats: degenerate polygon");
    return {a, std::sqrt(4.0 * a / M_PI), 2.0 * std::sqrt(M_PI * a) / p};
}

struct TriSurface {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> tris;
};

struct Descriptor3D {
    double volume = 0.0;
    double area = 0.0;
    double sphericity = 0.0;  // pi^(1/3) (6V)^(2/3) / A, 1 for a sphere
};

/// Volume by the divergence theorem over a closed, outward-oriented surface.
inline Descriptor3D descriptors_3d(const TriSurface& s) {
    double vol = 0.0, area = 0.0;
    for (const auto& t : s.tris) {
        const auto& a = s.vertices[t[0]];
        const auto& b = s.vertices[t[1]];
        const auto& c = s.vertices[t[2]];
        vol += (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
                a[2] * (b[0] * c[1] - b[1] * c[0])) / 6.0;
        double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
        double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
        double cxs = uy * vz - uz * vy, cys = uz * vx - ux * vz, czs = ux * vy - uy * vx;
        area += 0.5 * std::sqrt(cxs * cxs + cys * cys + czs * czs);
    }
    if (vol <= 0.0) throw Error("porestats: negative volume (surface open or inverted)");
    return {vol, area, std::cbrt(M_PI) * std::pow(6.0 * vol, 2.0 / 3.0) / area};
}

// --- spatial statistics ------------------------------------------------------

struct SpatialStats {
    std::vector<double> nearest_pore;   // NaN when undefined (single pore)
    std::vector<double> dist_surface;
};

inline SpatialStats spatial_stats(const std::vector<Pore>& pores, const Polygon& outer) {
    if (pores.empty()) throw Error("porestats: need at least one pore");
    SpatialStats s;
    for (size_t i = 0; i < pores.size(); ++i) {
        s.dist_surface.push_back(polygon_polygon_distance(pores[i].boundary, outer));
        double best = std::numeric_limits<double>::quiet_NaN();
        for (size_t j = 0; j < pores.size(); ++j) {
            if (j == i) continue;
            double d = polygon_polygon_distance(pores[i].boundary, pores[j].boundary);
            if (std::isnan(best) || d < best) best = d;
        }
        s.nearest_pore.push_back(best);
    }
    return s;
}

/// Empirical CDF: sorted (value, fraction <= value) pairs, final fraction 1.
inline std::vector<std::pair<double, double>> cumulative_distribution(std::vector<double> values) {
    if (values.empty()) throw Error("porestats: empty sample");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    size_t n = values.size();
    for (size_t i = 0; i < n; ++i) {
        if (i + 1 < n && values[i + 1] == values[i]) continue;
        out.emplace_back(values[i], double(i + 1) / double(n));
    }
    return out;
}

// --- maximum-likelihood fitting ----------------------------------------------

enum class DistFamily { Normal, Gamma, Weibull, Lognormal, Exponential };

inline const char* family_name(DistFamily f) {
    switch (f) {
        case DistFamily::Normal: return "normal";
        case DistFamily::Gamma: return "gamma";
        case DistFamily::Weibull: return "weibull";
        case DistFamily::Lognormal: return "lognormal";
        case DistFamily::Exponential: return "exponential";
    }
    return "?";
}

struct FamilyFit {
    DistFamily family = DistFamily::Normal;
    bool ok = false;
    std::string note;
    double p1 = 0.0, p2 = 0.0;  // family parameters (see fit_distributions)
    int k = 2;                  // parameter count
    double log_l = 0.0, aic = 0.0, bic = 0.0;
};

struct FitResult {
    std::vector<FamilyFit> families;
    DistFamily selected = DistFamily::Normal;
    int n = 0;

    const FamilyFit& fit(DistFamily f) const {
        for (const auto& ff : families)
            if (ff.family == f) return ff;
        throw Error("porestats: family not fitted");
    }
};

inline double aic_of(int k, double log_l) { return 2.0 * k - 2.0 * log_l; }
inline double bic_of(int k, double log_l, int n) { return k * std::log(double(n)) - 2.0 * log_l; }

namespace detail {

inline double digamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r -= 1.0 / x;
        x += 1.0;
    }
    double f = 1.0 / (x * x);
    return r + std::log(x) - 0.5 / x -
           f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f / 240.0)));
}

inline double trigamma(double x) {
    double r = 0.0;
    while (x < 6.0) {
        r += 1.0 / (x * x);
        x += 1.0;
    }
    double f = 1.0 / (x * x);
    return r + 1.0 / x + f / 2.0 + f / x * (1.0 / 6.0 - f * (1.0 / 30.0 - f / 42.0));
}

}  // namespace detail

/// MLE over five families. Parameters: (mu, sigma) for normal and lognormal,
/// (shape, scale) for gamma and weibull, (rate, unused) for exponential.
/// Positive-support families are skipped with a note when the data has
/// non-positive values; skipped families never win selection. Selection
/// minimizes AIC with BIC as the tie-break.
inline FitResult fit_distributions(std::span<const double> values) {
    const int n = int(values.size());
    if (n < 10) throw Error("porestats: need at least 10 samples to fit");
    for (double v : values)
        if (!std::isfinite(v)) throw Error("porestats: non-finite sample");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;  // MLE variance
    bool all_positive = std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });

    FitResult out;
    out.n = n;

    {  // normal
        FamilyFit f;
        f.family = DistFamily::Normal;
        f.k = 2;
        if (var > 0.0) {
            f.ok = true;
            f.p1 = mean;
            f.p2 = std::sqrt(var);
            f.log_l = -0.5 * n * (std::log(2.0 * M_PI * var) + 1.0);
        } else {
            f.note = "zero variance";
        }
        out.families.push_back(f);
    }

    double log_sum = 0.0, log_mean = 0.0, log_var = 0.0;
    if (all_positive) {
        for (double v : values) log_sum += std::log(v);
        log_mean = log_sum / n;
        for (double v : values) log_var += (std::log(v) - log_mean) * (std::log(v) - log_mean);
        log_var /= n;
    }

    {  // gamma: shape a, scale th; profile Newton on log a - digamma(a) = s
        FamilyFit f;
        f.family = DistFamily::Gamma;
        f.k = 2;
        if (!all_positive) {
            f.note = "skipped: non-positive data";
        } else {
            double s = std::log(mean) - log_mean;
            if (s <= 0.0) {
                f.note = "degenerate dispersion";
            } else {
                double a = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
                bool conv = false;
                for (int it = 0; it < 100; ++it) {
                    double g = std::log(a) - detail::digamma(a) - s;
                    double dg = 1.0 / a - detail::trigamma(a);
                    double step = g / dg;
                    double next = a - step;
                    if (next <= 0.0) next = a / 2.0;
                    if (std::abs(next - a) < 1e-12 * a) {
                        a = next;
                        conv = true;
                        break;
                    }
                    a = next;
                }
                if (!conv) {
                    f.note = "skipped: no convergence";
                } else {
                    double th = mean / a;
                    f.ok = true;
                    f.p1 = a;
                    f.p2 = th;
                    f.log_l = (a - 1.0) * log_sum - n * mean / th - n * a * std::log(th) - n * std::lgamma(a);
                }
            }
        }
        out.families.push_back(f);
    }

    {  // weibull: shape k, scale lam; Newton on the profile equation
        FamilyFit f;
        f.family = DistFamily::Weibull;
        f.k = 2;
        if (!all_positive) {
            f.note = "skipped: non-positive data";
        } else {
            double k = log_var > 0 ? 1.2 / std::sqrt(log_var) : 1.0;
            bool conv = false;
            for (int it = 0; it < 200; ++it) {
                double swk = 0.0, swkl = 0.0, swkl2 = 0.0;
                for (double v : values) {
                    double w = std::pow(v, k), l = std::log(v);
                    swk += w;
                    swkl += w * l;
                    swkl2 += w * l * l;
                }
                double g = swkl / swk - 1.0 / k - log_mean;
                double dg = (swkl2 * swk - swkl * swkl) / (swk * swk) + 1.0 / (k * k);
                double next = k - g / dg;
                if (next <= 0.0) next = k / 2.0;
                if (std::abs(next - k) < 1e-12 * k) {
                    k = next;
                    conv = true;
                    break;
                }
                k = next;
            }
            if (!conv) {
                f.note = "skipped: no convergence";
            } else {
                double swk = 0.0;
                for (double v : values) swk += std::pow(v, k);
                double lam = std::pow(swk / n, 1.0 / k);
                f.ok = true;
                f.p1 = k;
                f.p2 = lam;
                f.log_l = n * std::log(k) - n * k * std::log(lam) + (k - 1.0) * log_sum - swk / std::pow(lam, k);
            }
        }
        out.families.push_back(f);
    }

    {  // lognormal: normal MLE on logs
        FamilyFit f;
        f.family = DistFamily::Lognormal;
        f.k = 2;
        if (!all_positive) {
            f.note = "skipped: non-positive data";
        } else if (log_var <= 0.0) {
            f.note = "zero variance of logs";
        } else {
            f.ok = true;
            f.p1 = log_mean;
            f.p2 = std::sqrt(log_var);
            f.log_l = -0.5 * n * (std::log(2.0 * M_PI * log_var) + 1.0) - log_sum;
        }
        out.families.push_back(f);
    }

    {  // exponential: rate = 1/mean
        FamilyFit f;
        f.family = DistFamily::Exponential;
        f.k = 1;
        if (!all_positive) {
            f.note = "skipped: non-positive data";
        } else {
            f.ok = true;
            f.p1 = 1.0 / mean;
            f.log_l = n * (std::log(f.p1) - 1.0);
        }
        out.families.push_back(f);
    }

    bool any = false;
    for (auto& f : out.families) {
        if (!f.ok) continue;
        f.aic = aic_of(f.k, f.log_l);
        f.bic = bic_of(f.k, f.log_l, n);
        if (!any || f.aic < out.fit(out.selected).aic - 1e-12 ||
            (std::abs(f.aic - out.fit(out.selected).aic) <= 1e-12 && f.bic < out.fit(out.selected).bic))
            out.selected = f.family;
        any = true;
    }
    if (!any) throw Error("porestats: no family could be fitted");
    return out;
}

// --- quantiles, templates, regression ------------------------------------------

/// Inverse standard-normal CDF (Wichura's PPND16 rational approximation,
/// accurate to ~1e-16).
inline double norm_ppf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("porestats: quantile probability must be in (0,1)");
    double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                  1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                  4.2313330701600911252e1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
               4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
               2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
               5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
               5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -v : v;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r = 0.0;  // Pearson correlation
};

inline LinearFit linear_regression(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("porestats: regression needs matched samples");
    double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    double cxx = sxx - sx * sx / n, cyy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    if (cxx <= 0.0) throw Error("porestats: regression abscissa has zero variance");
    LinearFit f;
    f.slope = cxy / cxx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r = (cyy > 0.0) ? cxy / std::sqrt(cxx * cyy) : 0.0;
    return f;
}

/// Template pore model in (aspect ratio, major semi-axis) coordinates.
struct TemplatePore {
    double aspect = 0.0;
    double major = 0.0;
};

/// Deterministic quantile sampling of the fitted lognormal aspect-ratio
/// distribution at probabilities (i - 1/2)/count, with the major semi-axis
/// from the linear regression.
inline std::vector<TemplatePore> sample_templates(double log_mu, double log_sigma,
                                                  const LinearFit& major_of_aspect, int count = 50) {
    if (count < 1) throw Error("porestats: template count must be positive");
    std::vector<TemplatePore> out;
    for (int i = 1; i <= count; ++i) {
        double p = (i - 0.5) / count;
        double aspect = std::exp(log_mu + log_sigma * norm_ppf(p));
        out.push_back({aspect, major_of_aspect.slope * aspect + major_of_aspect.intercept});
    }
    return out;
}

/// Nearest template by Euclidean distance in raw (aspect, major) coordinates;
/// ties resolve to the lowest index.
inline int match_template(const TemplatePore& p, std::span<const TemplatePore> templates) {
    if (templates.empty()) throw Error("porestats: empty template list");
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < templates.size(); ++i) {
        double dx = p.aspect - templates[i].aspect, dy = p.major - templates[i].major;
        double d = dx * dx + dy * dy;
        if (d < bd) {
            bd = d;
            best = int(i);
        }
    }
    return best;
}

// --- CSV / JSON interchange -----------------------------------------------------

struct DescriptorRow {
    std::string id;
    double eq_diameter = 0.0;
    double sphericity = 0.0;
    double dist_surface = 0.0;
    double dist_pore = 0.0;  // NaN when undefined
};

inline void write_descriptor_csv(const std::vector<DescriptorRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("porestats: cannot open '" + path + "'");
    os << "id,eq_diameter,sphericity,dist_surface,dist_pore\n";
    for (const auto& r : rows) {
        os << r.id << "," << detail::fmt_double(r.eq_diameter) << "," << detail::fmt_double(r.sphericity)
           << "," << detail::fmt_double(r.dist_surface) << ",";
        if (!std::isnan(r.dist_pore)) os << detail::fmt_double(r.dist_pore);
        os << "\n";
    }
}

inline std::vector<DescriptorRow> read_descriptor_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("porestats: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(is, line)) throw Error("porestats: empty descriptor file");
    std::vector<DescriptorRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        DescriptorRow r;
        std::getline(ls, r.id, ',');
        auto next = [&](double& out, bool optional) {
            if (!std::getline(ls, cell, ',')) cell.clear();
            if (cell.empty()) {
                if (!optional) throw Error("porestats: malformed descriptor row");
                out = std::numeric_limits<double>::quiet_NaN();
            } else {
                out = std::stod(cell);
            }
        };
        next(r.eq_diameter, false);
        next(r.sphericity, false);
        next(r.dist_surface, false);
        next(r.dist_pore, true);
        rows.push_back(r);
    }
    return rows;
}

inline std::string fit_result_json(const FitResult& r) {
    std::ostringstream os;
    os << "{\"n\":" << r.n << ",\"selected\":\"" << family_name(r.selected) << "\",\"families\":{";
    size_t i = 0;
    for (const auto& f : r.families) {
        os << (i++ ? "," : "") << "\"" << family_name(f.family) << "\":";
        if (!f.ok) {
            os << "{\"skipped\":\"" << detail::json_escape(f.note) << "\"}";
            continue;
        }
        os << "{\"params\":[" << detail::fmt_double(f.p1);
        if (f.k > 1) os << "," << detail::fmt_double(f.p2);
        os << "],\"log_likelihood\":" << detail::fmt_double(f.log_l)
           << ",\"aic\":" << detail::fmt_double(f.aic) << ",\"bic\":" << detail::fmt_double(f.bic) << "}";
    }
    os << "}}";
    return os.str();
}

}  // namespace poresens
