#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ksf/cli.hpp"

using namespace ksf::cli;

namespace {

int call(std::vector<std::string> args) {
    args.insert(args.begin(), "ksf_cli");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("dotted overrides") {
    nlohmann::json cfg = {{"perturbation", {{"amplitude", 0.0}}}};
    apply_override(cfg, "perturbation.amplitude=1e-3");
    apply_override(cfg, "grid.dims=[8,8,8]");
    apply_override(cfg, "out=some/dir");
    CHECK(cfg["perturbation"]["amplitude"].get<double>() == 1e-3);
    CHECK(cfg["grid"]["dims"].size() == 3);
    CHECK(cfg["out"].get<std::string>() == "some/dir");
    CHECK_THROWS_AS(apply_override(cfg, "missing_equals"), std::invalid_argument);
}

TEST_CASE("seed override reaches the perturbation") {
    Invocation inv;
    inv.overrides = {"t0=0.5"};
    inv.seed = 42;
    const nlohmann::json cfg = load_config(inv);
    CHECK(cfg["t0"].get<double>() == 0.5);
    CHECK(cfg["perturbation"]["seed"].get<std::uint64_t>() == 42);
}

TEST_CASE("exit codes") {
    const std::string out = (std::filesystem::temp_directory_path() / "ksf_cli_test").string();
    CHECK(call({"check-kasner", "--set", "kasner.q=[0.5,0.3,0.2]", "--out", out}) == kPass);
    CHECK(std::filesystem::exists(out + "/report.json"));
    CHECK(call({"check-kasner", "--set", "kasner.q=[-0.2,0.6,0.6]", "--out", out}) == kAssertion);
    CHECK(call({"check-kasner", "--set", "kasner.q=[0.5,0.5]", "--out", out}) == kConfigError);
    CHECK(call({"no-such-command"}) == kConfigError);
    CHECK(call({"diagnose", "--input", out + "/missing.ksf", "--out", out}) != kPass);
    std::filesystem::remove_all(out);
}

TEST_CASE("command list") {
    const auto& names = command_names();
    for (const char* c : {"evolve", "verify-symmetrizer", "check-kasner", "cone-uniqueness"})
        CHECK(std::find(names.begin(), names.end(), c) != names.end());
}
