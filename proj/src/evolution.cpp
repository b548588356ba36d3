#include "ksf/evolution.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

#include "ksf/constraints.hpp"
#include "ksf/fuchsian.hpp"
#include "ksf/snapshot.hpp"
#include "ksf/symmetrizer.hpp"

namespace ksf {

TorusGrid GridSpec::make(int m) const {
    if (static_cast<int>(dims.size()) != m)
        throw std::invalid_argument("grid.dims has " + std::to_string(dims.size()) + " entries, expected " +
                                    std::to_string(m));
    return TorusGrid(m, L, dims, method, fd_order);
}

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
    std::vector<std::string> errs;
    const SubcriticalResult sc = check_subcritical(kd);
    if (!sc.subcritical) {
        std::ostringstream os;
        os << "Kasner data not sub-critical: r_" << sc.omega << " + r_" << sc.lambda << " - r_" << sc.gamma << " = "
           << sc.max_value << " >= r0 + 2 = " << kd.r0 + 2.0;
        errs.push_back(os.str());
    }
    for (const auto& v : gp.violations(kd)) errs.push_back(v);
    if (!(t_end > 0.0)) errs.push_back("t_end must be positive");
    if (!(t_end < t0)) errs.push_back("t_end must be below t0");
    if (!(c_cfl > 0.0 && c_cfl < 1.0)) errs.push_back("c_cfl must lie in (0, 1)");
    if (!(c_log > 0.0 && c_log < 1.0)) errs.push_back("c_log must lie in (0, 1)");
    if (static_cast<int>(grid.dims.size()) != kd.m())
        errs.push_back("grid.dims needs " + std::to_string(kd.m()) + " entries");
    for (int d : grid.dims)
        if (d != 1 && d < 8) errs.push_back("active grid axes need at least 8 points (got " + std::to_string(d) + ")");
    if (!(grid.L > 0.0)) errs.push_back("grid.L must be positive");
    if (pert.amplitude < 0.0) errs.push_back("perturbation amplitude must be non-negative");
    if (outputs_per_decade < 1) errs.push_back("outputs_per_decade must be >= 1");
    if (sobolev_k < 1) errs.push_back("sobolev_k must be >= 1");
    if (cone) {
        try {
            ConeDomain c = *cone;
            if (c.rho1 <= 0.0) c.rho1 = 1e-300;
            c.validate(grid.L);
        } catch (const std::exception& e) {
            errs.push_back(e.what());
        }
        if (std::abs(cone->t0 - t0) > 1e-14 * t0) errs.push_back("cone.t0 must equal t0");
    }
    if (errs.empty()) return;
    std::string msg = "invalid run configuration:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw std::invalid_argument(msg);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["kasner"] = {{"n", kd.n}, {"q", kd.q}};
    nlohmann::json g;
    ksf::to_json(g, gp);
    j["gauge"] = g;
    j["grid"] = {{"L", grid.L},
                 {"dims", grid.dims},
                 {"method", grid.method == DerivMethod::Spectral ? "spectral" : "fd"},
                 {"fd_order", grid.fd_order}};
    if (cone) {
        nlohmann::json c;
        ksf::to_json(c, *cone);
        j["cone"] = c;
    }
    j["t0"] = t0;
    j["t_end"] = t_end;
    j["c_cfl"] = c_cfl;
    j["c_log"] = c_log;
    j["perturbation"] = {{"amplitude", pert.amplitude},
                         {"max_wavenumber", pert.max_wavenumber},
                         {"modes", pert.modes},
                         {"seed", pert.seed},
                         {"tolerance", pert.tolerance},
                         {"max_iterations", pert.max_iterations},
                         {"outside_radius", pert.outside_radius},
                         {"outside_amplitude", pert.outside_amplitude},
                         {"outside_seed", pert.outside_seed}};
    j["outputs_per_decade"] = outputs_per_decade;
    j["checkpoints"] = checkpoints;
    j["sobolev_k"] = sobolev_k;
    j["region_radius"] = region_radius;
    j["probes"] = probes;
    j["probe_seed"] = probe_seed;
    j["weyl"] = weyl;
    j["monitor_samples"] = monitor_samples;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    const nlohmann::json kj = j.value("kasner", nlohmann::json::object());
    const int n = kj.value("n", 4);
    std::vector<double> q;
    if (kj.contains("q")) {
        q = kj.at("q").get<std::vector<double>>();
    } else {
        q.assign(n - 1, 1.0 / (n - 1));
    }
    c.kd = kasner_from_q(n, q);
    c.gp = default_gauge(c.kd);
    if (j.contains("gauge")) update_from_json(j.at("gauge"), c.gp);
    if (j.contains("gauge") && j.at("gauge").contains("eps2") && !j.at("gauge").contains("nu"))
        c.gp.nu = 0.5 * (1.0 - c.gp.eps2);
    const TorusGrid g = TorusGrid::from_json(j.value("grid", nlohmann::json::object()), n - 1);
    c.grid.L = g.L();
    c.grid.dims = g.dims();
    c.grid.method = g.method();
    c.grid.fd_order = g.fd_order();
    c.t0 = j.value("t0", 1.0);
    c.t_end = j.value("t_end", 1e-3 * c.t0);
    if (j.contains("cone")) {
        const auto& cj = j.at("cone");
        ConeDomain cd;
        cd.t0 = c.t0;
        cd.t1 = 0.0;
        cd.rho0 = cj.at("rho0").get<double>();
        cd.rho1 = cj.value("rho1", 0.0);
        cd.eps = cj.value("eps", c.gp.eps2);
        c.cone = cd;
    }
    c.c_cfl = j.value("c_cfl", c.c_cfl);
    c.c_log = j.value("c_log", c.c_log);
    if (j.contains("perturbation")) {
        const auto& p = j.at("perturbation");
        c.pert.amplitude = p.value("amplitude", 0.0);
        c.pert.max_wavenumber = p.value("max_wavenumber", c.pert.max_wavenumber);
        c.pert.modes = p.value("modes", c.pert.modes);
        c.pert.seed = p.value("seed", c.pert.seed);
        c.pert.tolerance = p.value("tolerance", c.pert.tolerance);
        c.pert.max_iterations = p.value("max_iterations", c.pert.max_iterations);
        c.pert.outside_radius = p.value("outside_radius", 0.0);
        c.pert.outside_amplitude = p.value("outside_amplitude", 0.0);
        c.pert.outside_seed = p.value("outside_seed", c.pert.outside_seed);
    }
    c.outputs_per_decade = j.value("outputs_per_decade", c.outputs_per_decade);
    c.checkpoints = j.value("checkpoints", c.checkpoints);
    c.sobolev_k = j.value("sobolev_k", c.sobolev_k);
    c.region_radius = j.value("region_radius", c.region_radius);
    c.probes = j.value("probes", c.probes);
    c.probe_seed = j.value("probe_seed", c.probe_seed);
    c.weyl = j.value("weyl", c.weyl);
    c.monitor_samples = j.value("monitor_samples", c.monitor_samples);
    return c;
}

std::string RunConfig::hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json InitialDataReport::to_json() const {
    return {{"residuals_rms", residuals},
            {"residuals_max", residuals_max},
            {"iterations", iterations},
            {"converged", converged},
            {"perturbation_norm", perturbation_norm}};
}

// ---------------------------------------------------------------- initial data

namespace {

Eigen::ArrayXd random_field(const TorusGrid& g, std::mt19937_64& rng, int modes, int kmax) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> wn(0, std::max(kmax, 1));
    Eigen::ArrayXd f = Eigen::ArrayXd::Zero(g.npts());
    const double base = M_PI / g.L();
    for (int j = 0; j < modes; ++j) {
        std::vector<int> k(g.m(), 0);
        bool nonzero = false;
        while (!nonzero) {
            for (int a = 0; a < g.m(); ++a) {
                k[a] = g.active(a) ? wn(rng) : 0;
                nonzero = nonzero || k[a] != 0;
            }
            if (g.n_active() == 0) break;
        }
        const double A = u(rng), ph = M_PI * u(rng);
        for (long p = 0; p < g.npts(); ++p) {
            double arg = ph;
            for (int a = 0; a < g.m(); ++a) arg += base * k[a] * g.coord(p, a);
            f[p] += A * std::cos(arg);
        }
    }
    return f / std::max(1, modes);
}

}  // namespace

void solve_hamiltonian(RescaledState& w, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd) {
    const int h = w.lay.H();
    auto eval = [&](double v) {
        w.W.col(h).setConstant(v);
        return Eigen::ArrayXd(rescaled_constraints(w, g, gp, kd).H.col(0));
    };
    const Eigen::ArrayXd c = eval(0.0), fp = eval(1.0), fm = eval(-1.0);
    const Eigen::ArrayXd a = 0.5 * (fp + fm) - c, b = 0.5 * (fp - fm);
    const Eigen::ArrayXd disc = b.square() - 4.0 * a * c;
    if ((disc < 0.0).any()) throw std::runtime_error("Hamiltonian constraint has no real root for H");
    w.W.col(h) = -2.0 * c / (b + b.sign() * disc.sqrt());
}

namespace {

Eigen::ArrayXXd momentum_field(const RescaledState& w, const TorusGrid& g, const GaugeParams& gp,
                               const KasnerData& kd) {
    return rescaled_constraints(w, g, gp, kd).M;
}

// Sigma correction from the principal part of the momentum constraint, linearized about the background.
void momentum_correction(RescaledState& w, const Eigen::ArrayXXd& M, const TorusGrid& g, const GaugeParams& gp,
                         const KasnerData& kd) {
    const Layout& L = w.lay;
    const int m = L.m, n = L.n;
    if (g.n_active() == 0) return;
    const double tau = std::pow(w.t, 1.0 - gp.eps2), b = (n - 2.0) * kd.r0 + 2.0 * m;
    std::vector<double> ebar(m);
    for (int a = 0; a < m; ++a) ebar[a] = std::pow(w.t, gp.eps2 + 0.5 * kd.r0 - 0.5 * kd.r[a]);
    std::vector<std::vector<std::complex<double>>> Mh(m);
    for (int a = 0; a < m; ++a) {
        const Eigen::ArrayXd col = M.col(a);
        Mh[a] = g.forward(col.data());
    }
    std::vector<std::vector<std::complex<double>>> Sh(m * m, std::vector<std::complex<double>>(g.n_modes()));
    for (long k = 1; k < g.n_modes(); ++k) {
        bool nyq = false;
        const Eigen::VectorXd kv = g.wavevector(k, &nyq);
        if (nyq) continue;
        Eigen::VectorXd K(m);
        for (int a = 0; a < m; ++a) K[a] = tau * ebar[a] * kv[a];
        auto S_of = [&](const Eigen::VectorXd& xi) {
            Eigen::MatrixXd S = 0.5 * (K * xi.transpose() + xi * K.transpose());
            S.diagonal().array() -= K.dot(xi) / m;
            return S;
        };
        Eigen::MatrixXd Lk(m, m);
        for (int j = 0; j < m; ++j) {
            const Eigen::MatrixXd S = S_of(Eigen::VectorXd::Unit(m, j));
            double rS = 0.0;
            for (int a = 0; a < m; ++a) rS += kd.r[a] * S(a, a);
            Lk.col(j) = -S * K + (n - 2.0) * K * rS / b;
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(Lk);
        if (!lu.isInvertible()) continue;
        Eigen::VectorXd re(m), im(m);
        for (int a = 0; a < m; ++a) {
            re[a] = -Mh[a][k].real();
            im[a] = -Mh[a][k].imag();
        }
        const Eigen::MatrixXd Sre = S_of(lu.solve(re)), Sim = S_of(lu.solve(im));
        // Sigma-hat = i S(xi)
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c) Sh[a * m + c][k] = std::complex<double>(-Sim(a, c), Sre(a, c));
    }
    Eigen::ArrayXd out(w.npts());
    for (int a = 0; a < m; ++a)
        for (int c = a; c < m; ++c) {
            g.backward(Sh[a * m + c], out.data());
            w.W.col(L.S(a, c)) += out;
            if (c != a) w.W.col(L.S(c, a)) += out;
        }
}

double rms_cols(const Eigen::ArrayXXd& f) { return std::sqrt(f.square().rowwise().sum().mean()); }

}  // namespace

InitialData make_initial_data(const RunConfig& cfg) {
    cfg.validate();
    const KasnerData& kd = cfg.kd;
    const GaugeParams& gp = cfg.gp;
    const TorusGrid g = cfg.grid.make(kd.m());
    const Layout L(kd.n);
    const int m = L.m;
    InitialData id{background_rescaled(kd, gp.eps1, gp.eps2, cfg.t0, g.npts()), {}};
    RescaledState& w = id.w;
    const RescaledState bg = w;
    const PerturbationSpec& ps = cfg.pert;

    if (ps.amplitude > 0.0) {
        // Free data: a trace-free Sigma seed over the exact Kasner frame, so C = U = 0 and the momentum
        // constraint stays a pure divergence. H follows pointwise from the Hamiltonian constraint.
        std::mt19937_64 rng(ps.seed);
        for (int a = 0; a < m; ++a)
            for (int c = a; c < m; ++c) {
                const Eigen::ArrayXd f = ps.amplitude * random_field(g, rng, ps.modes, ps.max_wavenumber);
                w.W.col(L.S(a, c)) += f;
                if (c != a) w.W.col(L.S(c, a)) += f;
            }
        project_symmetries(w);
        for (int it = 0; it < ps.max_iterations; ++it) {
            solve_hamiltonian(w, g, gp, kd);
            const Eigen::ArrayXXd M = momentum_field(w, g, gp, kd);
            id.report.iterations = it + 1;
            if (!M.allFinite()) throw std::runtime_error("constraint solve diverged (non-finite momentum residual)");
            if (rms_cols(M) < 0.05 * ps.tolerance) break;
            momentum_correction(w, M, g, gp, kd);
        }
        solve_hamiltonian(w, g, gp, kd);
    }

    auto residuals = [&](const Region& region) {
        const ConstraintFields cf = rescaled_constraints(w, g, gp, kd);
        const Eigen::ArrayXd mask = region_mask(g, region);
        auto mx = [&](const Eigen::ArrayXXd& f) { return (f.abs().rowwise().maxCoeff() * mask).maxCoeff(); };
        id.report.residuals = constraint_norms(cf, g, region);
        id.report.residuals_max = {mx(cf.A), mx(cf.B), mx(cf.Cj), mx(cf.D), mx(cf.M), mx(cf.H)};
    };
    residuals(Region::torus());
    double worst = 0.0;
    for (double r : id.report.residuals) worst = std::max(worst, r);
    id.report.converged = worst <= ps.tolerance;
    if (!id.report.converged) {
        std::ostringstream os;
        os << "constraint solve did not reach tolerance " << ps.tolerance << " after " << id.report.iterations
           << " iterations; RMS residuals A,B,C,D,M,H =";
        for (double r : id.report.residuals) os << " " << r;
        throw std::runtime_error(os.str());
    }

    if (ps.outside_radius > 0.0 && ps.outside_amplitude > 0.0) {
        // chi = 1 - cutoff vanishes on the ball and is constant near the faces of the torus.
        if (ps.outside_radius >= g.L()) throw std::invalid_argument("outside_radius must be below L");
        std::mt19937_64 rng(ps.outside_seed);
        Eigen::ArrayXd chi(g.npts());
        for (long p = 0; p < g.npts(); ++p) chi[p] = 1.0 - smooth_cutoff(g.radius(p), ps.outside_radius, g.L());
        for (int k = 0; k < L.size(); ++k) {
            double scale = 1.0;
            if (k < m * m) scale = bg.W(0, L.e(k / m, k / m));
            if (k == L.alpha()) scale = bg.W(0, L.alpha());
            w.W.col(k) += ps.outside_amplitude * scale * chi * random_field(g, rng, ps.modes, ps.max_wavenumber);
        }
        project_symmetries(w);
        residuals(Region::ball(ps.outside_radius));
    }
    id.report.perturbation_norm = sobolev_norm(w.W - bg.W, g, cfg.sobolev_k);
    if ((w.W.col(L.alpha()) <= 0.0).any()) throw std::runtime_error("perturbed lapse is not positive");
    return id;
}

// ---------------------------------------------------------------- stepping

double step(RescaledState& w, double dt, const TorusGrid& g, const GaugeParams& gp, const KasnerData& kd) {
    if (!(dt > 0.0 && dt < w.t)) throw std::invalid_argument("step size must satisfy 0 < dt < t");
    const double t = w.t;
    auto stage = [&](const Eigen::ArrayXXd& W, double ts) {
        RescaledState s(ts, w.lay.n, w.npts());
        s.W = W;
        return rhs_modified(s, g, gp, kd).W;
    };
    const Eigen::ArrayXXd k1 = stage(w.W, t);
    const Eigen::ArrayXXd k2 = stage(w.W - 0.5 * dt * k1, t - 0.5 * dt);
    const Eigen::ArrayXXd k3 = stage(w.W - 0.5 * dt * k2, t - 0.5 * dt);
    const Eigen::ArrayXXd k4 = stage(w.W - dt * k3, t - dt);
    w.W -= (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    w.t = t - dt;
    if (!w.W.allFinite()) throw std::runtime_error("state became non-finite at t = " + std::to_string(w.t));
    if ((w.W.col(w.lay.alpha()) <= 0.0).any())
        throw std::runtime_error("lapse reached zero at t = " + std::to_string(w.t));
    return project_symmetries(w);
}

double step_size(const RescaledState& w, const TorusGrid& g, const RunConfig& cfg) {
    double dt = cfg.c_log * w.t;
    if (g.n_active() > 0) {
        const double e = frame_norm(w).maxCoeff();
        if (e > 0.0) dt = std::min(dt, cfg.c_cfl * std::pow(w.t, cfg.gp.eps2) * g.min_dx() / e);
    }
    return dt;
}

std::vector<double> output_times(double t0, double t_end, int per_decade) {
    std::vector<double> out;
    const double decades = std::log10(t0 / t_end);
    const long count = static_cast<long>(std::ceil(decades * per_decade - 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(std::max(t_end, t0 * std::pow(10.0, -static_cast<double>(i) / per_decade)));
    out.back() = t_end;
    return out;
}

// ---------------------------------------------------------------- run

RunResult run(const RunConfig& cfg, const RecordHook& hook) {
    InitialData id = make_initial_data(cfg);
    return run_from(cfg, id.w, id.report, hook);
}

RunResult run_from(const RunConfig& cfg_in, const RescaledState& w0, const InitialDataReport& init,
                   const RecordHook& hook) {
    cfg_in.validate();
    RunConfig cfg = cfg_in;
    const KasnerData& kd = cfg.kd;
    const GaugeParams& gp = cfg.gp;
    const TorusGrid g = cfg.grid.make(kd.m());
    const int n = kd.n;

    std::optional<SymmetrizerSet> sym;
    if (cfg.cone) {
        if (cfg.cone->rho1 <= 0.0) {
            // rho1 = 1.01 * 6 n^3 * sup|e| at t0 so the boundary criterion holds initially.
            cfg.cone->rho1 = 1.01 * 6.0 * n * n * n * frame_norm(w0).maxCoeff();
        }
        cfg.cone->validate(g.L());
        sym = build(kd, gp);
    }
    RecordOptions opt;
    opt.sobolev_k = cfg.sobolev_k;
    opt.weyl = cfg.weyl;
    opt.cone = cfg.cone;
    if (cfg.region_radius > 0.0) opt.ball = cfg.region_radius;
    opt.sym = sym ? &*sym : nullptr;
    opt.monitor_samples = cfg.monitor_samples;
    double probe_radius = g.L();
    if (cfg.cone) probe_radius = cfg.cone->rho_tilde0();
    else if (cfg.region_radius > 0.0) probe_radius = cfg.region_radius;
    if (cfg.probes > 0) opt.probes = choose_probes(g, probe_radius, cfg.probes, cfg.probe_seed);

    RunResult res;
    res.init = init;
    res.ts.probe_index = opt.probes;
    RescaledState w = w0;
    w.t = cfg.t0;

    const std::vector<double> times = output_times(cfg.t0, cfg.t_end, cfg.outputs_per_decade);
    const bool write = cfg.checkpoints && !cfg.out_dir.empty();
    if (write) std::filesystem::create_directories(cfg.out_dir);
    const std::string chash = cfg.hash();
    std::future<void> pending;
    int ck = 0;
    auto checkpoint = [&](const RescaledState& s) {
        if (!write) return;
        if (pending.valid()) pending.get();
        const std::string path = cfg.out_dir + "/checkpoint_" + std::to_string(ck++) + ".ksf";
        pending = std::async(std::launch::async, [path, s, &g, chash] { write_snapshot(path, s, g, "rescaled", chash); });
    };

    double energy_int = 0.0, proj = 0.0;
    auto record = [&](bool key) {
        DiagnosticsRecord r = record_diagnostics(w, g, gp, kd, opt);
        r.projection = proj;
        proj = 0.0;
        if (!res.ts.records.empty()) {
            const auto& prev = res.ts.records.back();
            energy_int += 0.5 * (prev.norm_PW * prev.norm_PW + r.norm_PW * r.norm_PW) * std::log(prev.t / r.t);
        }
        const double E = r.norm_W * r.norm_W + energy_int;
        if (res.ts.records.empty()) res.energy.initial = E;
        if (res.energy.initial > 0.0) res.energy.max_ratio = std::max(res.energy.max_ratio, E / res.energy.initial);
        if (hook) hook(w, r);
        res.ts.records.push_back(std::move(r));
        if (key) {
            res.keyframes.push_back(w);
            checkpoint(w);
        }
    };
    auto is_key = [&](double t) {
        const double d = std::log10(cfg.t0 / t);
        return std::abs(d - std::round(d)) < 1e-9 || t == cfg.t_end;
    };

    record(true);
    try {
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double target = times[i];
            while (w.t > target * (1.0 + 1e-13)) {
                double dt = std::min(step_size(w, g, cfg), w.t - target);
                if (w.t - dt - target < 1e-3 * dt) dt = w.t - target;
                proj = std::max(proj, step(w, dt, g, gp, kd));
                ++res.steps;
            }
            w.t = target;
            record(is_key(target));
        }
    } catch (const std::exception& e) {
        if (write) {
            if (pending.valid()) pending.get();
            write_snapshot(cfg.out_dir + "/abort.ksf", w, g, "rescaled", chash);
        }
        throw std::runtime_error(std::string("run aborted: ") + e.what());
    }
    if (pending.valid()) pending.get();
    res.final_state = w;

    Region region = Region::torus();
    if (cfg.cone) region = Region::ball(cfg.cone->rho_tilde0());
    else if (cfg.region_radius > 0.0) region = Region::ball(cfg.region_radius);
    try {
        res.asymptotics = extract_asymptotics(res.ts, res.keyframes, g, gp, kd, region);
    } catch (const std::exception& e) {
        res.extraction_error = e.what();
    }
    return res;
}

nlohmann::json LocalizationReport::to_json() const {
    nlohmann::json j = {{"rho1", rho1},
                        {"t", t},
                        {"rho", rho},
                        {"discrepancy", discrepancy},
                        {"max_discrepancy", max_discrepancy},
                        {"monitors_ok", monitors_ok}};
    j["monitors"] = nlohmann::json::array();
    for (const auto& m : monitors) j["monitors"].push_back(m.to_json());
    return j;
}

LocalizationReport localization_test(const RunConfig& cfg_in, double outside_amplitude, std::uint64_t outside_seed) {
    if (!cfg_in.cone) throw std::invalid_argument("localization test needs a cone domain");
    RunConfig a = cfg_in;
    a.pert.outside_radius = 0.0;
    a.pert.outside_amplitude = 0.0;
    a.checkpoints = false;
    const InitialData da = make_initial_data(a);
    if (a.cone->rho1 <= 0.0) a.cone->rho1 = 1.01 * 6.0 * std::pow(a.kd.n, 3) * frame_norm(da.w).maxCoeff();
    RunConfig b = a;
    b.pert.outside_radius = a.cone->rho0;
    b.pert.outside_amplitude = outside_amplitude;
    b.pert.outside_seed = outside_seed;
    const InitialData db = make_initial_data(b);

    const TorusGrid g = a.grid.make(a.kd.m());
    std::vector<long> inside;
    for (long p = 0; p < g.npts(); ++p)
        if (g.radius(p) <= a.cone->rho0) inside.push_back(p);
    std::vector<Eigen::ArrayXXd> ref;
    LocalizationReport rep;
    rep.rho1 = a.cone->rho1;
    run_from(a, da.w, da.report, [&](const RescaledState& w, const DiagnosticsRecord& d) {
        Eigen::ArrayXXd rows(static_cast<long>(inside.size()), w.W.cols());
        for (std::size_t i = 0; i < inside.size(); ++i) rows.row(static_cast<long>(i)) = w.W.row(inside[i]);
        ref.push_back(std::move(rows));
        if (d.monitors) {
            rep.monitors.push_back(*d.monitors);
            rep.monitors_ok = rep.monitors_ok && d.monitors->ok();
        }
    });
    std::size_t k = 0;
    run_from(b, db.w, db.report, [&](const RescaledState& w, const DiagnosticsRecord& d) {
        if (k >= ref.size()) throw std::logic_error("localization runs produced different output times");
        const double rho = a.cone->rho_of_t(w.t);
        double mx = 0.0;
        for (std::size_t i = 0; i < inside.size(); ++i)
            if (g.radius(inside[i]) <= rho)
                mx = std::max(mx, (w.W.row(inside[i]) - ref[k].row(static_cast<long>(i))).abs().maxCoeff());
        rep.t.push_back(w.t);
        rep.rho.push_back(rho);
        rep.discrepancy.push_back(mx);
        rep.max_discrepancy = std::max(rep.max_discrepancy, mx);
        if (d.monitors) rep.monitors_ok = rep.monitors_ok && d.monitors->ok();
        ++k;
    });
    return rep;
}

}  // namespace ksf
