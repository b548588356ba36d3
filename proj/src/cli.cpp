#include "ksf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ksf/diagnostics.hpp"
#include "ksf/evolution.hpp"
#include "ksf/kasner.hpp"
#include "ksf/parallel.hpp"
#include "ksf/snapshot.hpp"
#include "ksf/symmetrizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ksf::cli {

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"check-kasner", "verify-symmetrizer", "appendix-check",
                                                   "make-data",    "evolve",             "diagnose",
                                                   "extract",      "cone-uniqueness"};
    return names;
}

void apply_override(json& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw std::invalid_argument("override key '" + key + "' has an empty component");
        if (!node->is_object()) *node = json::object();
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

json load_config(const Invocation& inv) {
    json cfg = json::object();
    if (!inv.config_path.empty()) {
        std::ifstream f(inv.config_path);
        if (!f) throw std::invalid_argument("cannot read config file " + inv.config_path);
        try {
            cfg = json::parse(f, nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config " + inv.config_path + " is not valid JSON: " + e.what());
        }
        if (!cfg.is_object()) throw std::invalid_argument("config root must be an object");
    }
    for (const auto& o : inv.overrides) apply_override(cfg, o);
    if (inv.seed) {
        cfg["seed"] = *inv.seed;
        cfg["perturbation"]["seed"] = *inv.seed;
    }
    return cfg;
}

namespace {

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << j.dump(2) << "\n";
}

KasnerData kasner_of(const json& cfg, int n_default = 4) {
    const json k = cfg.value("kasner", json::object());
    const int n = k.value("n", n_default);
    if (k.contains("sample_seed")) return sample_subcritical(n, k.at("sample_seed").get<std::uint64_t>(), k.value("min_margin", 0.0));
    if (k.contains("q")) return kasner_from_q(n, k.at("q").get<std::vector<double>>());
    return kasner_from_q(n, std::vector<double>(n - 1, 1.0 / (n - 1)));
}

GaugeParams gauge_of(const json& cfg, const KasnerData& kd) {
    GaugeParams gp = default_gauge(kd);
    if (cfg.contains("gauge")) {
        const json& g = cfg.at("gauge");
        update_from_json(g, gp);
        if (g.contains("eps2") && !g.contains("nu")) gp.nu = 0.5 * (1.0 - gp.eps2);
    }
    return gp;
}

std::vector<int> dims_list(const json& cfg) {
    if (cfg.contains("ns")) return cfg.at("ns").get<std::vector<int>>();
    return {cfg.value("kasner", json::object()).value("n", 4)};
}

struct Check {
    std::string name;
    double value;
    double limit;
    bool upper;  // value <= limit when true, value >= limit otherwise
};

json checks_json(const std::vector<Check>& cs, bool& pass) {
    json arr = json::array();
    for (const auto& c : cs) {
        const bool ok = std::isfinite(c.value) && (c.upper ? c.value <= c.limit : c.value >= c.limit);
        pass = pass && ok;
        arr.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"bound", c.upper ? "max" : "min"},
                       {"pass", ok}});
    }
    return arr;
}

// Optional assertions on a finished run, enabled by keys of cfg["assert"].
std::vector<Check> run_checks(const json& a, const TimeSeries& ts, const std::optional<AsymptoticData>& ad,
                              const std::optional<BlowupCheck>& bc, const std::string& extraction_error) {
    std::vector<Check> cs;
    if (a.contains("max_constraint")) {
        double worst = 0.0;
        for (const auto& r : ts.records)
            for (double c : r.constraints) worst = std::max(worst, c);
        cs.push_back({"max_constraint", worst, a.at("max_constraint").get<double>(), true});
    }
    if (a.contains("max_background_deviation")) {
        double worst = 0.0;
        for (const auto& r : ts.records) worst = std::max(worst, r.background_deviation);
        cs.push_back({"max_background_deviation", worst, a.at("max_background_deviation").get<double>(), true});
    }
    if (a.contains("min_kasner_decay") && ts.records.size() > 1) {
        const double t_end = ts.records.back().t;
        const auto it = std::min_element(ts.records.begin(), ts.records.end(), [&](const auto& x, const auto& y) {
            return std::abs(std::log(x.t / (10 * t_end))) < std::abs(std::log(y.t / (10 * t_end)));
        });
        const double decay = it->kasner_residual_max / std::max(ts.records.back().kasner_residual_max, 1e-300);
        cs.push_back({"kasner_decay", decay, a.at("min_kasner_decay").get<double>(), false});
    }
    const bool wants_ad = a.contains("min_zeta") || a.contains("max_alpha_fit_rms") || a.contains("max_blowup_error");
    if (wants_ad && !ad) {
        spdlog::error("extraction failed: {}", extraction_error);
        cs.push_back({"extraction", 0.0, 1.0, false});
        return cs;
    }
    if (a.contains("min_zeta")) cs.push_back({"zeta", ad->zeta, a.at("min_zeta").get<double>(), false});
    if (a.contains("max_alpha_fit_rms")) {
        const double w = ad->alpha_fit_rms.empty()
                             ? 0.0
                             : *std::max_element(ad->alpha_fit_rms.begin(), ad->alpha_fit_rms.end());
        cs.push_back({"alpha_fit_rms", w, a.at("max_alpha_fit_rms").get<double>(), true});
    }
    if (a.contains("max_blowup_error") && bc) {
        const double lim = a.at("max_blowup_error").get<double>();
        cs.push_back({"blowup_scalar", bc->worst_scalar, lim, true});
        cs.push_back({"blowup_ricci", bc->worst_ricci, lim, true});
        cs.push_back({"blowup_mean_curvature", bc->worst_mean, lim, true});
        if (!bc->weyl_fit.empty()) cs.push_back({"blowup_weyl", bc->worst_weyl, lim, true});
    }
    return cs;
}

Region region_of(const RunConfig& rc) {
    if (rc.cone) return Region::ball(rc.cone->rho_tilde0());
    if (rc.region_radius > 0.0) return Region::ball(rc.region_radius);
    return Region::torus();
}

// ---------------------------------------------------------------- commands

CommandResult cmd_check_kasner(const json& cfg) {
    const KasnerData kd = kasner_of(cfg);
    const SubcriticalResult sc = check_subcritical(kd, cfg.value("unrestricted", false));
    json k;
    to_json(k, kd);
    CommandResult res;
    res.pass = sc.subcritical;
    res.report = {{"kasner", k},
                  {"subcritical", sc.subcritical},
                  {"margin", sc.margin},
                  {"max_value", sc.max_value},
                  {"argmax", {sc.omega, sc.lambda, sc.gamma}},
                  {"sum_r_residual", kd.sum_r_residual()},
                  {"sum_r2_residual", kd.sum_r2_residual()}};
    return res;
}

CommandResult cmd_verify_symmetrizer(const json& cfg, const std::string& out) {
    CommandResult res;
    res.report["results"] = json::array();
    for (int n : dims_list(cfg)) {
        json c = cfg;
        c["kasner"]["n"] = n;
        if (cfg.contains("ns")) c["kasner"].erase("q");
        const KasnerData kd = kasner_of(c, n);
        const GaugeParams gp = gauge_of(c, kd);
        const SymmetrizerSet sym = build(kd, gp);
        json v = verify(sym);
        bool pass = true;
        v["checks"] = checks_json({{"b0_symmetry_defect", v["b0_symmetry_defect"], 1e-12, true},
                                   {"bd_symmetry_defect", v["bd_symmetry_defect"], 1e-12, true},
                                   {"b0_min_eig", v["b0_min_eig"], v["b0_bound_lo"], false},
                                   {"b0_max_eig", v["b0_max_eig"], v["b0_bound_hi"], true},
                                   {"b0_symmetry_condition", std::abs(v["b0_symmetry_condition"].get<double>()), 1e-14, true},
                                   {"projector_defect", v["projector_defect"], 1e-12, true}},
                                  pass);
        v["pass"] = pass;
        res.pass = res.pass && pass;
        if (!out.empty() && cfg.value("export", false)) {
            const fs::path dir = fs::path(out) / ("matrices_n" + std::to_string(n));
            fs::create_directories(dir);
            export_matrix_market(sym.B0, (dir / "B0.mtx").string());
            for (std::size_t d = 0; d < sym.BD.size(); ++d)
                export_matrix_market(sym.BD[d], (dir / ("B" + std::to_string(d) + ".mtx")).string());
            export_matrix_market(sym.Bc, (dir / "Bc.mtx").string());
        }
        res.report["results"].push_back(v);
    }
    res.report["pass"] = res.pass;
    return res;
}

CommandResult cmd_appendix_check(const json& cfg) {
    CommandResult res;
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{7});
    const int samples = cfg.value("mc_pd_samples", 100);
    std::vector<int> ns = cfg.contains("ns") ? cfg.at("ns").get<std::vector<int>>() : std::vector<int>{4, 5, 6, 7, 8, 9, 10, 11};
    res.report["results"] = json::array();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ub(-4.0, 4.0), ua(0.0, 1.0);
    for (int n : ns) {
        json r = appendix_identities(n, seed);
        // Stated sufficient condition a > |b|/2, and the exact condition a > 0, a + b(n-2)/2 > 0.
        int counterexamples = 0, exact_mismatch = 0;
        double worst = 1e300;
        json first = nullptr;
        for (int i = 0; i < samples; ++i) {
            const double b = ub(rng), a = std::abs(b) / 2.0 + 1e-3 + 2.0 * ua(rng);
            const McPdResult m = mc_pd_check(n, a, b);
            worst = std::min(worst, m.min_eig);
            if (!m.actually_pd) {
                ++counterexamples;
                if (first.is_null()) first = {{"a", a}, {"b", b}, {"min_eig", m.min_eig}};
            }
            const bool exact = a > 0.0 && a + b * (n - 2) / 2.0 > 0.0;
            if (exact != m.actually_pd || std::abs(m.min_eig - m.min_eig_closed_form) > 1e-10) ++exact_mismatch;
        }
        r["mc_pd_samples"] = samples;
        r["mc_pd_counterexamples"] = counterexamples;
        r["mc_pd_first_counterexample"] = first;
        r["mc_pd_exact_condition_mismatches"] = exact_mismatch;
        r["mc_pd_min_eig"] = worst;
        const bool pass = r["all"].get<bool>() && counterexamples == 0 && exact_mismatch == 0;
        r["pass"] = pass;
        res.pass = res.pass && pass;
        res.report["results"].push_back(r);
    }
    res.report["pass"] = res.pass;
    return res;
}

CommandResult cmd_make_data(const json& cfg, const std::string& out) {
    RunConfig rc = RunConfig::from_json(cfg);
    const InitialData id = make_initial_data(rc);
    const TorusGrid g = rc.grid.make(rc.kd.m());
    CommandResult res;
    res.pass = id.report.converged;
    res.report = {{"initial_data", id.report.to_json()}, {"config_hash", rc.hash()}};
    if (!out.empty()) {
        write_snapshot((fs::path(out) / "initial.ksf").string(), id.w, g, "rescaled", rc.hash());
        res.report["snapshot"] = "initial.ksf";
    }
    return res;
}

CommandResult cmd_evolve(const json& cfg, const std::string& out) {
    RunConfig rc = RunConfig::from_json(cfg);
    rc.out_dir = out;
    rc.validate();
    const TorusGrid g = rc.grid.make(rc.kd.m());
    spdlog::info("evolve: n={} grid {} t {} -> {} amplitude {}", rc.kd.n, json(rc.grid.dims).dump(), rc.t0, rc.t_end,
                 rc.pert.amplitude);
    const RunResult rr = run(rc, [](const RescaledState& w, const DiagnosticsRecord& d) {
        spdlog::info("t={:.4e} max constraint {:.3e} bg deviation {:.3e}", w.t,
                     *std::max_element(d.constraints.begin(), d.constraints.end()), d.background_deviation);
    });
    CommandResult res;
    std::optional<BlowupCheck> bc;
    if (rr.asymptotics) {
        try {
            bc = blowup_exponents(rr.ts, *rr.asymptotics, rc.kd);
        } catch (const std::exception& e) {
            spdlog::warn("blow-up fit failed: {}", e.what());
        }
    }
    res.report = {{"config_hash", rc.hash()},
                  {"steps", rr.steps},
                  {"initial_data", rr.init.to_json()},
                  {"energy", {{"initial", rr.energy.initial}, {"max_ratio", rr.energy.max_ratio}}}};
    if (rr.asymptotics) res.report["asymptotics"] = rr.asymptotics->summary();
    else res.report["extraction_error"] = rr.extraction_error;
    if (bc) res.report["blowup"] = bc->to_json();
    bool pass = true;
    res.report["checks"] = checks_json(run_checks(cfg.value("assert", json::object()), rr.ts, rr.asymptotics, bc,
                                                  rr.extraction_error),
                                       pass);
    res.pass = pass;
    if (!out.empty()) {
        const fs::path dir(out);
        rr.ts.write_csv((dir / "timeseries.csv").string());
        write_json(dir / "timeseries.json", rr.ts.to_json());
        for (std::size_t i = 0; i < rr.keyframes.size(); ++i)
            write_snapshot((dir / ("keyframe_" + std::to_string(i) + ".ksf")).string(), rr.keyframes[i], g, "rescaled",
                           rc.hash());
        write_snapshot((dir / "final.ksf").string(), rr.final_state, g, "rescaled", rc.hash());
    }
    return res;
}

CommandResult cmd_diagnose(const json& cfg, const std::string& input) {
    if (input.empty()) throw std::invalid_argument("diagnose needs --input <snapshot>");
    const RunConfig rc = RunConfig::from_json(cfg);
    RescaledState w;
    const SnapshotHeader h = read_snapshot(input, w);
    if (h.kind != "rescaled") throw std::invalid_argument("diagnose expects a rescaled snapshot, got " + h.kind);
    if (h.n != rc.kd.n) throw std::invalid_argument("snapshot dimension does not match the config");
    const TorusGrid g(rc.kd.m(), h.L, h.dims, rc.grid.method, rc.grid.fd_order);
    RecordOptions opt;
    opt.sobolev_k = rc.sobolev_k;
    opt.weyl = rc.weyl;
    if (rc.region_radius > 0.0) opt.ball = rc.region_radius;
    const DiagnosticsRecord r = record_diagnostics(w, g, rc.gp, rc.kd, opt);
    TimeSeries ts;
    ts.records.push_back(r);
    CommandResult res;
    res.report = {{"t", w.t}, {"snapshot_hash", h.config_hash}, {"record", ts.to_json()["records"][0]}};
    bool pass = true;
    res.report["checks"] =
        checks_json(run_checks(cfg.value("assert", json::object()), ts, std::nullopt, std::nullopt, ""), pass);
    res.pass = pass;
    return res;
}

CommandResult cmd_extract(const json& cfg_in, const std::string& input) {
    if (input.empty()) throw std::invalid_argument("extract needs --input <run directory>");
    const fs::path dir(input);
    std::ifstream fc(dir / "config.json");
    if (!fc) throw std::invalid_argument("no config.json in " + input);
    json cfg = json::parse(fc);
    if (cfg_in.contains("assert")) cfg["assert"] = cfg_in.at("assert");
    const RunConfig rc = RunConfig::from_json(cfg);
    std::ifstream ft(dir / "timeseries.json");
    if (!ft) throw std::invalid_argument("no timeseries.json in " + input);
    const TimeSeries ts = TimeSeries::from_json(json::parse(ft));
    std::vector<RescaledState> keys;
    for (int i = 0;; ++i) {
        const fs::path p = dir / ("keyframe_" + std::to_string(i) + ".ksf");
        if (!fs::exists(p)) break;
        RescaledState w;
        read_snapshot(p.string(), w);
        keys.push_back(std::move(w));
    }
    const TorusGrid g = rc.grid.make(rc.kd.m());
    CommandResult res;
    std::optional<AsymptoticData> ad;
    std::optional<BlowupCheck> bc;
    std::string err;
    try {
        ad = extract_asymptotics(ts, keys, g, rc.gp, rc.kd, region_of(rc));
        bc = blowup_exponents(ts, *ad, rc.kd);
    } catch (const std::exception& e) {
        err = e.what();
    }
    if (ad) res.report["asymptotics"] = ad->summary();
    if (bc) res.report["blowup"] = bc->to_json();
    if (!err.empty()) res.report["extraction_error"] = err;
    bool pass = ad.has_value();
    res.report["checks"] = checks_json(run_checks(cfg.value("assert", json::object()), ts, ad, bc, err), pass);
    res.pass = pass;
    return res;
}

CommandResult cmd_cone_uniqueness(const json& cfg) {
    RunConfig rc = RunConfig::from_json(cfg);
    if (!rc.cone) throw std::invalid_argument("cone-uniqueness needs a cone block with rho0");
    const json o = cfg.value("outside", json::object());
    const double tol = cfg.value("tolerance", 1e-5);
    const LocalizationReport lr =
        localization_test(rc, o.value("amplitude", 1e-3), o.value("seed", std::uint64_t{2}));
    CommandResult res;
    res.report = lr.to_json();
    res.report["tolerance"] = tol;
    res.pass = lr.max_discrepancy <= tol && lr.monitors_ok;
    res.report["pass"] = res.pass;
    return res;
}

}  // namespace

CommandResult run_command(const Invocation& inv, const json& cfg) {
    const std::string& c = inv.command;
    if (c == "check-kasner") return cmd_check_kasner(cfg);
    if (c == "verify-symmetrizer") return cmd_verify_symmetrizer(cfg, inv.out_dir);
    if (c == "appendix-check") return cmd_appendix_check(cfg);
    if (c == "make-data") return cmd_make_data(cfg, inv.out_dir);
    if (c == "evolve") return cmd_evolve(cfg, inv.out_dir);
    if (c == "diagnose") return cmd_diagnose(cfg, inv.input);
    if (c == "extract") return cmd_extract(cfg, inv.input);
    if (c == "cone-uniqueness") return cmd_cone_uniqueness(cfg);
    throw std::invalid_argument("unknown command " + c);
}

int main(int argc, char** argv) {
    CLI::App app{"Fuchsian evolution of perturbed Kasner spacetimes toward the big bang"};
    app.require_subcommand(1);
    Invocation inv;
    std::uint64_t seed = 0;
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", inv.config_path, "JSON config file");
        sub->add_option("--set", inv.overrides, "override key=value (dotted keys, JSON values)");
        sub->add_option("--out", inv.out_dir, "output directory");
        sub->add_option("--input", inv.input, "snapshot (diagnose) or run directory (extract)");
        sub->add_option("--seed", seed, "random seed");
        sub->add_option("--threads", inv.threads, "worker threads (0: hardware)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kConfigError;
    }
    inv.command = app.get_subcommands().front()->get_name();
    if (app.get_subcommands().front()->count("--seed")) inv.seed = seed;
    spdlog::set_default_logger(spdlog::default_logger()->clone("ksf"));
    spdlog::set_pattern("[%H:%M:%S] %v");

    json cfg;
    CommandResult res;
    try {
        if (inv.threads > 0) set_num_threads(inv.threads);
        cfg = load_config(inv);
        if (cfg.contains("threads") && inv.threads <= 0) set_num_threads(cfg.at("threads").get<int>());
        if (!inv.out_dir.empty()) {
            fs::create_directories(inv.out_dir);
            json echo = cfg;
            echo["command"] = inv.command;
            write_json(fs::path(inv.out_dir) / "config.json", echo);
        }
        res = run_command(inv, cfg);
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime abort: " << e.what() << "\n";
        return kRuntimeAbort;
    }
    res.report["command"] = inv.command;
    res.report["pass"] = res.pass;
    try {
        if (!inv.out_dir.empty()) write_json(fs::path(inv.out_dir) / "report.json", res.report);
    } catch (const std::exception& e) {
        std::cerr << "runtime abort: " << e.what() << "\n";
        return kRuntimeAbort;
    }
    std::cout << res.report.dump(2) << "\n";
    std::cout << (res.pass ? "PASS" : "FAIL") << " " << inv.command << "\n";
    return res.pass ? kPass : kAssertion;
}

}  // namespace ksf::cli
