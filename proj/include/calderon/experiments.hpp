#ifndef CALDERON_EXPERIMENTS_HPP
#define CALDERON_EXPERIMENTS_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace calderon {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Everything a run needs; mirrors the JSON config accepted by the CLI.
struct RunDescriptor {
    std::string command = "selftest";  // forward | reconstruct | analytic-sweep | phantom | selftest
    std::string backend = "cm";        // cm | scem | analytic
    std::string geometry = "phantom";  // phantom | concentric
    std::string out = "out";

    int degree = 2;
    double mesh_h = 0.015;   // data mesh
    double recon_h = 0.03;   // reconstruction mesh
    int J = 20;
    int K = 4;
    double alpha = 3e-5;
    double beta = 0.1;
    bool relative_threshold = false;
    bool experimental = false;

    // concentric geometry / analytic sweeps; unset means the per-command default
    std::optional<double> rho;
    std::array<double, 2> kappa = {0.0, 1.0};
    std::vector<int> span = {1, 2};
    int samples = 64;
    int deltas = 12;

    // phantom
    double inner_radius = 0.85;
    int pixels = 200;
    std::string alignment = "both";  // aligned | nonaligned | both
    std::array<double, 2> phantom_values = {0.3, 0.8};

    // electrodes
    int electrodes = 16;
    double electrode_coverage = 0.5;
    double contact_impedance = 1.0;
    std::string layout;  // JSON file, overrides the equal layout

    std::string datum;  // ND/electrode matrix CSV for reconstruct
    unsigned seed = 1;
    bool selftest_fault = false;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Accepts a descriptor object or a meta.json (uses its "descriptor" member).
RunDescriptor parse_descriptor(const std::string& json_text, const RunDescriptor& defaults = {});
std::string descriptor_to_json(const RunDescriptor& d);

struct RunReport {
    int exit_code = 0;  // 0 ok, 1 numerical failure, 2 usage error
    std::string message;
};

/// Dispatches on d.command, writes into d.out and never throws.
RunReport run(const RunDescriptor& d);

// The individual commands throw std::invalid_argument (usage) or
// NumericalError; run() maps these to exit codes.

struct PhantomCase {
    std::string name;
    int pixels = 0;
    std::vector<double> relative_errors;  // per order K, L2 over the reconstruction region
    double seconds = 0.0;
};

struct PhantomOutcome {
    std::vector<PhantomCase> cases;
    double data_seconds = 0.0;
    double total_seconds = 0.0;
};

PhantomOutcome run_phantom(const RunDescriptor& d);

struct SweepOutcome {
    std::array<double, 4> fig4_left_max{};   // max |signed error| per K, kappa1 grid
    std::array<double, 4> fig4_right_max{};  // same for kappa2
    std::vector<double> slopes;              // fitted log-log slopes per K
};

SweepOutcome run_analytic_sweep(const RunDescriptor& d);

struct SelftestCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Invariant suite at reduced sizes; the report is deterministic.
std::vector<SelftestCheck> run_selftest(const RunDescriptor& d);
std::string format_selftest(const std::vector<SelftestCheck>& checks);

void run_forward(const RunDescriptor& d);
void run_reconstruct(const RunDescriptor& d);

}  // namespace calderon

#endif
