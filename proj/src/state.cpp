#include "ksf/state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ksf {

std::vector<std::string> GaugeParams::violations(const KasnerData& k) const {
    std::vector<std::string> out;
    auto add = [&](const std::string& s) { out.push_back(s); };
    if (!(eps1 + 0.5 * k.r0 > 0.0)) add("eps1 + r0/2 > 0 fails (eps1 = " + std::to_string(eps1) + ")");
    if (!(eps2 > 0.0 && eps2 < 1.0)) add("0 < eps2 < 1 fails (eps2 = " + std::to_string(eps2) + ")");
    for (int a = 0; a < k.m(); ++a) {
        if (!(eps2 + 0.5 * k.r0 - 0.5 * k.r[a] > 0.0)) {
            std::ostringstream os;
            os << "eps2 + r0/2 - r_A/2 > 0 fails for A = " << a << " (r_A = " << k.r[a] << ")";
            add(os.str());
        }
    }
    if (!(nu > 0.0)) add("nu > 0 fails (nu = " + std::to_string(nu) + ")");
    if (!(eps2 + nu < 1.0)) add("eps2 + nu < 1 fails (" + std::to_string(eps2 + nu) + ")");
    if (k_order < 0) add("k_order must be non-negative");
    return out;
}

void GaugeParams::validate(const KasnerData& k) const {
    const auto v = violations(k);
    if (v.empty()) return;
    std::string msg = "gauge parameters inadmissible:";
    for (const auto& s : v) msg += "\n  " + s;
    throw std::invalid_argument(msg);
}

GaugeParams default_gauge(const KasnerData& k) {
    GaugeParams g;
    const int n = k.n;
    g.eps1 = std::max(0.0, -0.5 * k.r0) + 0.1;
    double e2 = 0.0;
    for (double ra : k.r) e2 = std::max(e2, std::max(0.0, 0.5 * (ra - k.r0)));
    g.eps2 = std::min(e2 + 0.1, 0.89);
    g.nu = 0.5 * (1.0 - g.eps2);
    g.mu = 0.0;
    g.gamma = 2.0;
    g.h = 1.0;
    g.l = 1.0 / (n - 1.0);
    g.a = n - 1.0;
    g.b = 2.0;
    g.c = n - 1.0;
    g.d = 1.5;
    g.p = 0.5;
    g.q = 0.0;
    g.s = (2.0 * n - 5.0) / (2.0 * n - 2.0);
    g.u = (7.0 - 2.0 * n) / (2.0 * n - 2.0);
    return g;
}

void to_json(nlohmann::json& j, const GaugeParams& g) {
    j = {{"eps1", g.eps1}, {"eps2", g.eps2}, {"nu", g.nu}, {"k_order", g.k_order}, {"mu", g.mu},
         {"gamma", g.gamma}, {"a", g.a}, {"b", g.b}, {"c", g.c}, {"d", g.d}, {"p", g.p}, {"q", g.q},
         {"s", g.s}, {"u", g.u}, {"h", g.h}, {"l", g.l}};
}

void update_from_json(const nlohmann::json& j, GaugeParams& g) {
    auto take = [&](const char* key, double& v) {
        if (j.contains(key)) v = j.at(key).get<double>();
    };
    take("eps1", g.eps1);
    take("eps2", g.eps2);
    take("nu", g.nu);
    take("mu", g.mu);
    take("gamma", g.gamma);
    take("a", g.a);
    take("b", g.b);
    take("c", g.c);
    take("d", g.d);
    take("p", g.p);
    take("q", g.q);
    take("s", g.s);
    take("u", g.u);
    take("h", g.h);
    take("l", g.l);
    if (j.contains("k_order") && j.at("k_order").is_number_integer()) g.k_order = j.at("k_order").get<int>();
}

double project_symmetries(FieldState& s) {
    const Layout& L = s.lay;
    const int m = L.m;
    double dist = 0.0;
    for (long p = 0; p < s.npts(); ++p) {
        double tr = 0.0;
        for (int a = 0; a < m; ++a) tr += s.W(p, L.S(a, a));
        for (int a = 0; a < m; ++a)
            for (int b = a; b < m; ++b) {
                double v = 0.5 * (s.W(p, L.S(a, b)) + s.W(p, L.S(b, a)));
                if (a == b) v -= tr / m;
                dist = std::max({dist, std::abs(v - s.W(p, L.S(a, b))), std::abs(v - s.W(p, L.S(b, a)))});
                s.W(p, L.S(a, b)) = v;
                s.W(p, L.S(b, a)) = v;
            }
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int c = a; c < m; ++c) {
                    const double v = 0.5 * (s.W(p, L.C(a, b, c)) - s.W(p, L.C(c, b, a)));
                    dist = std::max({dist, std::abs(v - s.W(p, L.C(a, b, c))), std::abs(-v - s.W(p, L.C(c, b, a)))});
                    s.W(p, L.C(a, b, c)) = v;
                    s.W(p, L.C(c, b, a)) = -v;
                }
    }
    return dist;
}

}  // namespace ksf
