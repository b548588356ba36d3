#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "ksf/evolution.hpp"
#include "ksf/fuchsian.hpp"
#include "ksf/snapshot.hpp"

using namespace ksf;

namespace {

RunConfig small_config(double amplitude) {
    RunConfig cfg;
    cfg.kd = kasner_from_q(4, {0.5, 0.3, 0.2});
    cfg.gp = default_gauge(cfg.kd);
    cfg.grid.dims = {12, 12, 12};
    cfg.pert.amplitude = amplitude;
    cfg.pert.seed = 9;
    return cfg;
}

}  // namespace

TEST_CASE("zero amplitude gives the background") {
    const RunConfig cfg = small_config(0.0);
    const InitialData d = make_initial_data(cfg);
    const RescaledState bg = background_rescaled(cfg.kd, cfg.gp.eps1, cfg.gp.eps2, cfg.t0, d.w.npts());
    CHECK((d.w.W - bg.W).abs().maxCoeff() == 0.0);
    CHECK(d.report.converged);
}

TEST_CASE("perturbed data satisfy the constraints") {
    const RunConfig cfg = small_config(1e-3);
    const InitialData d = make_initial_data(cfg);
    CHECK(d.report.converged);
    for (double r : d.report.residuals) CHECK(r <= 1e-8);
    CHECK(d.report.perturbation_norm > 1e-4);
    CHECK(d.report.perturbation_norm < 1e-1);
}

TEST_CASE("initial data are deterministic in the seed") {
    RunConfig cfg = small_config(1e-3);
    const InitialData a = make_initial_data(cfg), b = make_initial_data(cfg);
    CHECK((a.w.W - b.w.W).abs().maxCoeff() == 0.0);
    const std::string h = cfg.hash();
    CHECK(h == RunConfig::from_json(cfg.to_json()).hash());
    cfg.pert.seed = 10;
    CHECK(cfg.hash() != h);
    CHECK((make_initial_data(cfg).w.W - a.w.W).abs().maxCoeff() > 0.0);
}

TEST_CASE("oversized perturbations are reported") {
    const RunConfig cfg = small_config(5.0);
    CHECK_THROWS_AS(make_initial_data(cfg), std::runtime_error);
}

TEST_CASE("RK4 is fourth order on the homogeneous background") {
    RunConfig cfg = small_config(0.0);
    const TorusGrid g = GridSpec{M_PI, {1, 1, 1}}.make(3);
    const double t0 = 1.0, t1 = 0.5;
    const RescaledState exact = background_rescaled(cfg.kd, cfg.gp.eps1, cfg.gp.eps2, t1, 1);
    double prev = 0;
    for (int N : {8, 16, 32}) {
        RescaledState w = background_rescaled(cfg.kd, cfg.gp.eps1, cfg.gp.eps2, t0, 1);
        for (int i = 0; i < N; ++i) step(w, (t0 - t1) / N, g, cfg.gp, cfg.kd);
        CHECK(w.t == doctest::Approx(t1).epsilon(1e-14));
        const double err = (w.W - exact.W).abs().maxCoeff();
        if (prev > 0) CHECK(prev / err > 12.0);
        prev = err;
    }
}

TEST_CASE("snapshots round-trip bit for bit") {
    const RunConfig cfg = small_config(1e-3);
    const InitialData d = make_initial_data(cfg);
    const TorusGrid g = cfg.grid.make(3);
    const std::string path = "/tmp/ksf_test_snapshot.ksf";
    write_snapshot(path, d.w, g, "rescaled", cfg.hash());
    RescaledState back;
    const SnapshotHeader h = read_snapshot(path, back);
    CHECK(h.kind == "rescaled");
    CHECK(h.config_hash == cfg.hash());
    CHECK(back.t == d.w.t);
    CHECK((back.W == d.w.W).all());
    std::remove(path.c_str());
}

TEST_CASE("config validation lists every problem") {
    RunConfig cfg = small_config(0.0);
    cfg.t_end = 2.0;
    cfg.c_cfl = -1.0;
    cfg.grid.dims = {4, 12, 12};
    try {
        cfg.validate();
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("t_end") != std::string::npos);
        CHECK(msg.find("c_cfl") != std::string::npos);
        CHECK(msg.find("8") != std::string::npos);
    }
}

TEST_CASE("output times") {
    const std::vector<double> ts = output_times(1.0, 1e-3, 10);
    CHECK(ts.size() == 31);
    CHECK(ts.front() == 1.0);
    CHECK(ts.back() == 1e-3);
    for (std::size_t i = 1; i < ts.size(); ++i) CHECK(ts[i] < ts[i - 1]);
}

TEST_CASE("a short run keeps the constraints small") {
    RunConfig cfg = small_config(1e-3);
    cfg.t_end = 0.1;
    cfg.probes = 2;
    cfg.region_radius = 1.0;
    const RunResult r = run(cfg);
    CHECK(r.final_state.t == doctest::Approx(0.1));
    for (const auto& rec : r.ts.records)
        for (double c : rec.constraints) CHECK(c < 1e-6);
    CHECK(r.energy.max_ratio < 10.0);
}
