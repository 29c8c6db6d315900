// Command-line front end. Builds a run descriptor from an optional JSON
// config plus flags and hands it to the C API.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "calderon/calderon.h"

using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"Series reversion for the Calderon problem"};
    app.set_version_flag("--version", std::string(cal_version()));

    std::string config;
    json flags = json::object();
    app.add_option("--config", config, "JSON descriptor (or a meta.json from an earlier run)")->check(CLI::ExistingFile);

    // every flag below overrides the config entry of the same name
    auto text = [&](const char* flag, const char* key, const char* help) {
        return app.add_option_function<std::string>(flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
    };
    auto real = [&](const char* flag, const char* key, const char* help) {
        return app.add_option_function<double>(flag, [&flags, key](double v) { flags[key] = v; }, help);
    };
    auto integer = [&](const char* flag, const char* key, const char* help) {
        return app.add_option_function<long long>(flag, [&flags, key](long long v) { flags[key] = v; }, help);
    };
    auto toggle = [&](const char* flag, const char* key, const char* help) {
        return app.add_flag_function(flag, [&flags, key](std::int64_t) { flags[key] = true; }, help);
    };

    text("--command", "command", "forward | reconstruct | analytic-sweep | phantom | selftest")
        ->check(CLI::IsMember({"forward", "reconstruct", "analytic-sweep", "phantom", "selftest"}));
    text("--backend", "backend", "cm | scem | analytic");
    text("--geometry", "geometry", "phantom | concentric");
    text("--out", "out", "output directory");
    text("--datum", "datum", "datum CSV for reconstruct");
    text("--layout", "layout", "electrode layout JSON");
    text("--alignment", "alignment", "aligned | nonaligned | both (phantom)");
    integer("--degree", "degree", "finite element degree (1 or 2)");
    real("--mesh-h", "mesh_h", "data mesh size");
    real("--recon-h", "recon_h", "reconstruction mesh size");
    integer("--J", "J", "number of boundary basis functions");
    integer("--K", "K", "series order");
    real("--alpha", "alpha", "singular value threshold");
    real("--beta", "beta", "contrast cut-off");
    real("--rho", "rho", "inclusion radius (concentric geometry)");
    integer("--pixels", "pixels", "target pixel count");
    integer("--electrodes", "electrodes", "number of electrodes");
    integer("--seed", "seed", "random seed (selftest)");
    toggle("--relative-threshold", "relative_threshold", "alpha is relative to the largest singular value");
    toggle("--experimental", "experimental", "allow orders beyond 4 through the general recursion");
    toggle("--selftest-fault", "selftest_fault", "inject a sign fault into the analytic perturbation operator");
    std::vector<int> span;
    app.add_option("--span", span, "frequencies used by the analytic backend");
    std::vector<double> kappa;
    app.add_option("--kappa", kappa, "kappa1 kappa2 (concentric geometry)")->expected(2);
    std::vector<double> phantom;
    app.add_option("--phantom-values", phantom, "square and pentagon contrasts")->expected(2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    json desc = json::object();
    if (!config.empty()) {
        std::ifstream is(config);
        std::stringstream ss;
        ss << is.rdbuf();
        try {
            desc = json::parse(ss.str());
        } catch (const json::exception& e) {
            std::cerr << "usage error: " << config << ": " << e.what() << '\n';
            return 2;
        }
        if (desc.contains("descriptor")) desc = desc["descriptor"];
    }
    for (auto& [k, v] : flags.items()) desc[k] = v;
    if (!span.empty()) desc["span"] = span;
    if (!kappa.empty()) desc["kappa"] = kappa;
    if (!phantom.empty()) desc["phantom_values"] = phantom;

    char* report = nullptr;
    int exit_code = 0;
    if (cal_run(desc.dump().c_str(), &report, &exit_code) != CAL_OK) {
        std::cerr << "error: " << cal_last_error() << '\n';
        return 1;
    }
    (exit_code == 0 || desc.value("command", std::string()) == "selftest" ? std::cout : std::cerr) << report;
    cal_string_free(report);
    return exit_code;
}
