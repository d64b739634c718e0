#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phj/util.hpp"

namespace phj {

// 1-periodic additive potential / forcing term.
struct PotentialSpec {
    enum class Kind { FourierCoefficients, NodeSamples, SawtoothVs };

    Kind kind = Kind::FourierCoefficients;
    double a0 = 0.0;
    std::vector<double> ac;  // coefficient of cos(2*pi*(k+1)*y)
    std::vector<double> as;  // coefficient of sin(2*pi*(k+1)*y)
    std::vector<double> nodes;
    double s = 0.5;

    static PotentialSpec zero() { return PotentialSpec{}; }

    static PotentialSpec cosine(double amp = 1.0, int harmonic = 1) {
        if (harmonic < 1) throw std::invalid_argument("cosine: harmonic must be >= 1");
        PotentialSpec v;
        v.ac.assign(static_cast<std::size_t>(harmonic), 0.0);
        v.ac.back() = amp;
        return v;
    }

    static PotentialSpec sine(double amp = 1.0, int harmonic = 1) {
        if (harmonic < 1) throw std::invalid_argument("sine: harmonic must be >= 1");
        PotentialSpec v;
        v.as.assign(static_cast<std::size_t>(harmonic), 0.0);
        v.as.back() = amp;
        return v;
    }

    static PotentialSpec sawtooth(double s) {
        if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("sawtooth: s must lie in (0,1)");
        PotentialSpec v;
        v.kind = Kind::SawtoothVs;
        v.s = s;
        return v;
    }

    static PotentialSpec samples(std::vector<double> vals) {
        if (vals.size() < 2) throw std::invalid_argument("samples: need at least two nodes");
        PotentialSpec v;
        v.kind = Kind::NodeSamples;
        v.nodes = std::move(vals);
        return v;
    }

    bool is_zero() const { return kind == Kind::FourierCoefficients && a0 == 0.0 && ac.empty() && as.empty(); }

    double value(double y) const {
        double u = frac_part(y);
        switch (kind) {
            case Kind::FourierCoefficients: {
                double v = a0;
                for (std::size_t k = 0; k < ac.size(); ++k)
                    if (ac[k] != 0.0) v += ac[k] * std::cos(kTwoPi * static_cast<double>(k + 1) * u);
                for (std::size_t k = 0; k < as.size(); ++k)
                    if (as[k] != 0.0) v += as[k] * std::sin(kTwoPi * static_cast<double>(k + 1) * u);
                return v;
            }
            case Kind::SawtoothVs:
                return u <= s ? -u / s : (u - 1.0) / (1.0 - s);
            case Kind::NodeSamples: {
                double r = u * static_cast<double>(nodes.size());
                std::size_t i = static_cast<std::size_t>(r);
                if (i >= nodes.size()) i = 0;
                double w = r - static_cast<double>(i);
                std::size_t j = (i + 1 == nodes.size()) ? 0 : i + 1;
                return (1.0 - w) * nodes[i] + w * nodes[j];
            }
        }
        return 0.0;
    }

    double deriv(double y) const {
        double u = frac_part(y);
        switch (kind) {
            case Kind::FourierCoefficients: {
                double v = 0.0;
                for (std::size_t k = 0; k < ac.size(); ++k)
                    if (ac[k] != 0.0) v -= ac[k] * kTwoPi * static_cast<double>(k + 1) * std::sin(kTwoPi * static_cast<double>(k + 1) * u);
                for (std::size_t k = 0; k < as.size(); ++k)
                    if (as[k] != 0.0) v += as[k] * kTwoPi * static_cast<double>(k + 1) * std::cos(kTwoPi * static_cast<double>(k + 1) * u);
                return v;
            }
            case Kind::SawtoothVs:
                return u < s ? -1.0 / s : 1.0 / (1.0 - s);
            case Kind::NodeSamples: {
                double r = u * static_cast<double>(nodes.size());
                std::size_t i = static_cast<std::size_t>(r);
                if (i >= nodes.size()) i = 0;
                std::size_t j = (i + 1 == nodes.size()) ? 0 : i + 1;
                return (nodes[j] - nodes[i]) * static_cast<double>(nodes.size());
            }
        }
        return 0.0;
    }

    double minimum() const { return scan(false); }
    double maximum() const { return scan(true); }

    double mean_value() const {
        switch (kind) {
            case Kind::FourierCoefficients:
                return a0;
            case Kind::SawtoothVs:
                return -0.5;
            case Kind::NodeSamples: {
                double m = 0.0;
                for (double x : nodes) m += x;
                return m / static_cast<double>(nodes.size());
            }
        }
        return 0.0;
    }

    double lipschitz() const {
        switch (kind) {
            case Kind::FourierCoefficients: {
                double L = 0.0;
                for (std::size_t k = 0; k < ac.size(); ++k) L += std::abs(ac[k]) * kTwoPi * static_cast<double>(k + 1);
                for (std::size_t k = 0; k < as.size(); ++k) L += std::abs(as[k]) * kTwoPi * static_cast<double>(k + 1);
                return L;
            }
            case Kind::SawtoothVs:
                return std::max(1.0 / s, 1.0 / (1.0 - s));
            case Kind::NodeSamples: {
                double L = 0.0;
                for (std::size_t i = 0; i < nodes.size(); ++i) {
                    std::size_t j = (i + 1 == nodes.size()) ? 0 : i + 1;
                    L = std::max(L, std::abs(nodes[j] - nodes[i]) * static_cast<double>(nodes.size()));
                }
                return L;
            }
        }
        return 0.0;
    }

  private:
    double scan(bool want_max) const {
        if (kind == Kind::SawtoothVs) return want_max ? 0.0 : -1.0;
        if (kind == Kind::FourierCoefficients && ac.empty() && as.empty()) return a0;
        int N = 8192;
        double best = value(0.0);
        for (int i = 1; i < N; ++i) {
            double v = value(static_cast<double>(i) / N);
            best = want_max ? std::max(best, v) : std::min(best, v);
        }
        return best;
    }
};

// Kinetic profile of the nonconvex family: piecewise linear through
// (0,0), (th3,1/3), (th2,1/2), (th1,1/3), rising with slope 2 until it
// exceeds 1, slope 1 afterwards.
struct LtyKinetic {
    double th1 = 1.0;
    double th2 = 0.5;
    double th3 = 0.25;
    std::vector<double> r;
    std::vector<double> val;

    void build() {
        if (!(th3 > 0.0 && th3 < th2 && th2 < th1))
            throw std::invalid_argument("lty kinetic: need 0 < th3 < th2 < th1");
        r = {0.0, th3, th2, th1, th1 + (1.0 - 1.0 / 3.0) / 2.0};
        val = {0.0, 1.0 / 3.0, 0.5, 1.0 / 3.0, 1.0};
    }

    double eval(double radius) const {
        if (radius >= r.back()) return val.back() + (radius - r.back());
        for (std::size_t i = 1; i < r.size(); ++i) {
            if (radius <= r[i]) {
                double w = (radius - r[i - 1]) / (r[i] - r[i - 1]);
                return (1.0 - w) * val[i - 1] + w * val[i];
            }
        }
        return val.back();
    }

    double max_slope(double upto) const {
        double m = 0.0;
        for (std::size_t i = 1; i < r.size(); ++i) {
            if (r[i - 1] >= upto) break;
            m = std::max(m, std::abs((val[i] - val[i - 1]) / (r[i] - r[i - 1])));
        }
        if (upto > r.back()) m = std::max(m, 1.0);
        return std::max(m, 1e-12);
    }
};

enum class HamiltonianFamily { PowerPlusPotential, Eikonal, EikonalPlusForcing, LTYNonconvex };

struct HamiltonianSpec {
    HamiltonianFamily family = HamiltonianFamily::Eikonal;
    double q = 1.0;
    PotentialSpec V = PotentialSpec::zero();
    PotentialSpec f = PotentialSpec::zero();  // forcing coupled to the second path component
    double lty_s = 0.5;
    LtyKinetic lty;
    double growth_c = 1.0;
    double growth_C = 1.0;

    double kinetic(double p) const {
        double r = std::abs(p);
        switch (family) {
            case HamiltonianFamily::PowerPlusPotential:
                if (q == 2.0) return r * r;
                if (q == 1.0) return r;
                return std::pow(r, q);
            case HamiltonianFamily::Eikonal:
            case HamiltonianFamily::EikonalPlusForcing:
                return r;
            case HamiltonianFamily::LTYNonconvex:
                return lty.eval(r);
        }
        return 0.0;
    }

    // Upper bound for |d/dp kinetic| over |p| <= pm.
    double kinetic_slope_bound(double pm) const {
        switch (family) {
            case HamiltonianFamily::PowerPlusPotential:
                if (q == 1.0) return 1.0;
                return q * std::pow(std::max(pm, 1e-12), q - 1.0);
            case HamiltonianFamily::Eikonal:
            case HamiltonianFamily::EikonalPlusForcing:
                return 1.0;
            case HamiltonianFamily::LTYNonconvex:
                return lty.max_slope(pm);
        }
        return 1.0;
    }

    bool has_potential() const {
        return (family == HamiltonianFamily::PowerPlusPotential || family == HamiltonianFamily::LTYNonconvex) &&
               !V.is_zero();
    }

    double potential(double y) const {
        switch (family) {
            case HamiltonianFamily::PowerPlusPotential:
            case HamiltonianFamily::LTYNonconvex:
                return V.value(y);
            case HamiltonianFamily::Eikonal:
            case HamiltonianFamily::EikonalPlusForcing:
                return 0.0;
        }
        return 0.0;
    }

    double growth_exponent() const { return family == HamiltonianFamily::PowerPlusPotential ? q : 1.0; }
};

inline double eval(const HamiltonianSpec& spec, double p, double y) { return spec.kinetic(p) + spec.potential(y); }

inline HamiltonianSpec make_eikonal() {
    HamiltonianSpec h;
    h.family = HamiltonianFamily::Eikonal;
    h.q = 1.0;
    return h;
}

inline HamiltonianSpec make_eikonal_forcing(PotentialSpec forcing) {
    HamiltonianSpec h;
    h.family = HamiltonianFamily::EikonalPlusForcing;
    h.q = 1.0;
    h.f = std::move(forcing);
    return h;
}

inline HamiltonianSpec make_power(double q, PotentialSpec V) {
    if (!(q >= 1.0)) throw std::invalid_argument("make_power: q must be >= 1");
    HamiltonianSpec h;
    h.family = HamiltonianFamily::PowerPlusPotential;
    h.q = q;
    h.V = std::move(V);
    h.growth_c = 1.0;
    h.growth_C = std::max(1.0, h.V.maximum());
    return h;
}

inline HamiltonianSpec make_lty(double s, LtyKinetic kin = LtyKinetic{}) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("make_lty: s must lie in (0,1)");
    if (kin.r.empty()) kin.build();
    HamiltonianSpec h;
    h.family = HamiltonianFamily::LTYNonconvex;
    h.q = 1.0;
    h.lty_s = s;
    h.lty = std::move(kin);
    h.V = PotentialSpec::sawtooth(s);
    return h;
}

// min over y of H(p,y) divided by the leading kinetic growth; coercivity wants
// this bounded below by c/2 at grid extremes.
inline double coercivity_ratio(const HamiltonianSpec& spec, double p) {
    double lead = std::pow(std::max(std::abs(p), 1e-9), spec.growth_exponent());
    double lo = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 256; ++i) lo = std::min(lo, eval(spec, p, static_cast<double>(i) / 256.0));
    return lo / lead;
}

// ---------------------------------------------------------------------------
// Legendre transforms on grids

struct LegendreTable {
    std::vector<double> z;      // uniform, symmetric about 0
    std::vector<double> gstar;  // conjugate values
    double support_lo = 0.0;    // slope range of the source table; the conjugate
    double support_hi = 0.0;    // is trusted only inside [support_lo, support_hi]
    std::vector<char> truncated;
    bool any_truncated = false;

    struct Value {
        double g = 0.0;
        bool outside = false;
    };

    Value eval(double zq) const {
        Value out;
        if (zq < support_lo - 1e-12 || zq > support_hi + 1e-12) {
            out.outside = true;
        }
        if (zq <= z.front()) {
            out.g = gstar.front();
            return out;
        }
        if (zq >= z.back()) {
            out.g = gstar.back();
            return out;
        }
        double h = z[1] - z[0];
        std::size_t i = static_cast<std::size_t>((zq - z[0]) / h);
        if (i + 1 >= z.size()) i = z.size() - 2;
        double w = (zq - z[i]) / h;
        out.g = (1.0 - w) * gstar[i] + w * gstar[i + 1];
        return out;
    }
};

// G*(z) = max_p (z p - G(p)) over the sampled p grid. Ties near the max prefer
// the p closest to 0 so that flat pieces do not spuriously flag truncation.
inline LegendreTable legendre_transform(const std::vector<double>& p_grid, const std::vector<double>& g,
                                        const std::vector<double>& z_grid) {
    if (p_grid.size() != g.size() || p_grid.size() < 3) throw std::invalid_argument("legendre_transform: bad table");
    LegendreTable table;
    table.z = z_grid;
    table.gstar.resize(z_grid.size());
    table.truncated.assign(z_grid.size(), 0);
    double slope_lo = std::numeric_limits<double>::infinity();
    double slope_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < p_grid.size(); ++i) {
        double sl = (g[i] - g[i - 1]) / (p_grid[i] - p_grid[i - 1]);
        slope_lo = std::min(slope_lo, sl);
        slope_hi = std::max(slope_hi, sl);
    }
    table.support_lo = slope_lo;
    table.support_hi = slope_hi;
    double scale = 0.0;
    for (double gv : g) scale = std::max(scale, std::abs(gv));
    scale = std::max(scale, 1.0);
    for (std::size_t j = 0; j < z_grid.size(); ++j) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < p_grid.size(); ++i) {
            double v = z_grid[j] * p_grid[i] - g[i];
            if (v > best + 1e-13 * scale) {
                best = v;
                arg = i;
            } else if (v > best - 1e-13 * scale && std::abs(p_grid[i]) < std::abs(p_grid[arg])) {
                best = std::max(best, v);
                arg = i;
            }
        }
        table.gstar[j] = best;
        if (arg == 0 || arg + 1 == p_grid.size()) {
            table.truncated[j] = 1;
            table.any_truncated = true;
        }
    }
    return table;
}

// Conjugate with an automatic symmetric z grid covering the slope range.
inline LegendreTable make_conjugate(const std::vector<double>& p_grid, const std::vector<double>& g, int m_points) {
    double slope_lo = std::numeric_limits<double>::infinity();
    double slope_hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < p_grid.size(); ++i) {
        double sl = (g[i] - g[i - 1]) / (p_grid[i] - p_grid[i - 1]);
        slope_lo = std::min(slope_lo, sl);
        slope_hi = std::max(slope_hi, sl);
    }
    double zm = std::max(std::abs(slope_lo), std::abs(slope_hi));
    if (!(zm > 0.0)) zm = 1.0;
    if (m_points % 2 == 0) ++m_points;
    return legendre_transform(p_grid, g, linspace(-zm, zm, m_points));
}

inline std::vector<double> biconjugate(const LegendreTable& table, const std::vector<double>& p_grid) {
    std::vector<double> out(p_grid.size());
    for (std::size_t i = 0; i < p_grid.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < table.z.size(); ++j) best = std::max(best, p_grid[i] * table.z[j] - table.gstar[j]);
        out[i] = best;
    }
    return out;
}

inline bool discrete_convex(const std::vector<double>& vals, double tol) {
    for (std::size_t i = 1; i + 1 < vals.size(); ++i)
        if (vals[i + 1] + vals[i - 1] < 2.0 * vals[i] - tol) return false;
    return true;
}

inline std::string legendre_csv(const LegendreTable& t) {
    std::ostringstream os;
    os << "p,gstar\n";
    for (std::size_t i = 0; i < t.z.size(); ++i) os << fmt_g17(t.z[i]) << "," << fmt_g17(t.gstar[i]) << "\n";
    return os.str();
}

}  // namespace phj
