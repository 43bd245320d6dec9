#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isocycle/group.hpp"
#include "isocycle/integrand.hpp"
#include "isocycle/io.hpp"
#include "isocycle/isotopy.hpp"
#include "isocycle/types.hpp"

namespace isocycle {

// Exit codes of the batch front door.
constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitDiscriminantError = 3;
constexpr int kExitIsotopyError = 4;
constexpr int kExitQuadratureError = 5;

struct JobSpec {
    std::string command;  // eval | continue | monodromy | homotopy |
                          // transversality | discriminant | volume | oracle
    std::string job_file;       // for diagnostics and relative path resolution
    std::string canonical_dump; // canonical job JSON, hashed together with inputs

    int n = 2;
    std::optional<CMatrix> g;               // eval / discriminant
    std::optional<std::string> path_file;   // continue / monodromy / oracle / homotopy
    std::optional<std::string> path_file_b; // homotopy second path
    std::vector<int> f1;
    std::vector<int> f2;
    Complex alpha = 0.0;
    int resolution = 0;        // 0 -> per-n default
    int samples_per_segment = 0;
    std::uint64_t seed = 20240817;
    int count = 0;             // transversality pencils / discriminant samples
    IsotopyConfig config;

    std::string result_name = "result.json";
    std::optional<std::string> cycle_csv;
    std::optional<std::string> trace_csv;
};

/// Parse and validate a job file; command-specific required fields checked.
JobSpec load_job(const std::string& file);
JobSpec parse_job(const nlohmann::json& j, const std::string& job_file);

/// Run the job and write artifacts under out_dir. Throws the module error
/// types; the CLI maps them to exit codes.
void run_job(const JobSpec& job, const std::string& out_dir);

/// Map an exception type to the documented exit code.
int exit_code_for(const std::exception& e);

int default_resolution(int n);

}  // namespace isocycle
