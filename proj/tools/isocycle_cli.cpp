#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "isocycle/io.hpp"
#include "isocycle/jobs.hpp"

namespace {

int run_one(const std::string& job_file, const std::string& out_dir,
            int resolution_override, const std::string& alpha_override,
            long long seed_override, std::mutex& log_mutex) {
    try {
        isocycle::JobSpec job = isocycle::load_job(job_file);
        if (resolution_override > 0) job.resolution = resolution_override;
        if (!alpha_override.empty()) {
            nlohmann::json aj = nlohmann::json::parse(alpha_override, nullptr, false);
            if (aj.is_discarded()) aj = alpha_override;
            job.alpha = isocycle::complex_from_json(aj);
        }
        if (seed_override >= 0) job.seed = static_cast<std::uint64_t>(seed_override);
        isocycle::run_job(job, out_dir);
        return isocycle::kExitOk;
    } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << job_file << ": " << e.what() << "\n";
        return isocycle::exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-finite matrix elements of SL(n,R) degenerate series: "
                 "evaluation, analytic continuation and monodromy"};
    std::vector<std::string> job_files;
    std::string out_dir = ".";
    int resolution = 0;
    std::string alpha;
    long long seed = -1;
    int workers = 1;
    app.add_option("--job", job_files, "Job file(s), JSON")->required();
    app.add_option("--out", out_dir, "Output directory for result artifacts");
    app.add_option("--resolution", resolution, "Override the mesh resolution");
    app.add_option("--alpha", alpha,
                   "Override alpha; a number or an [re, im] JSON pair");
    app.add_option("--seed", seed, "Override the sampling seed");
    app.add_option("--jobs", workers, "Worker pool size for batch runs")
        ->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::vector<int> codes(job_files.size(), 0);
    const std::size_t pool =
        std::min<std::size_t>(std::max(workers, 1), job_files.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < pool; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < job_files.size();
                 i = next.fetch_add(1)) {
                codes[i] = run_one(job_files[i], out_dir, resolution, alpha, seed,
                                   log_mutex);
            }
        });
    }
    for (std::thread& t : threads) t.join();
    for (int code : codes) {
        if (code != 0) return code;
    }
    return isocycle::kExitOk;
}
