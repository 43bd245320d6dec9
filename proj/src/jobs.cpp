#include "isocycle/jobs.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "isocycle/continuation.hpp"
#include "isocycle/quadric.hpp"
#include "isocycle/sl2_oracle.hpp"

namespace fs = std::filesystem;

namespace isocycle {
namespace {

const std::set<std::string> kCommands = {"eval",       "continue",      "monodromy",
                                         "homotopy",   "transversality", "discriminant",
                                         "volume",     "oracle"};

std::vector<int> exponents_from_json(const nlohmann::json& j) {
    std::vector<int> k;
    for (const auto& e : j) k.push_back(e.get<int>());
    return k;
}

std::string resolve_relative(const std::string& job_file, const std::string& ref) {
    fs::path p(ref);
    if (p.is_absolute()) return ref;
    return (fs::path(job_file).parent_path() / p).string();
}

void apply_config_overrides(IsotopyConfig& cfg, const nlohmann::json& j) {
    if (j.contains("delta_target")) cfg.delta_target = double_from_json(j["delta_target"]);
    if (j.contains("delta_min")) cfg.delta_min = double_from_json(j["delta_min"]);
    if (j.contains("max_step")) cfg.max_step = double_from_json(j["max_step"]);
    if (j.contains("step_shrink")) cfg.step_shrink = double_from_json(j["step_shrink"]);
    if (j.contains("max_halvings")) cfg.max_halvings = j["max_halvings"].get<int>();
    if (j.contains("flow_gain")) cfg.flow_gain = double_from_json(j["flow_gain"]);
    if (j.contains("relax_gain")) cfg.relax_gain = double_from_json(j["relax_gain"]);
    if (j.contains("smoothing_passes")) cfg.smoothing_passes = j["smoothing_passes"].get<int>();
    if (j.contains("max_flow_iters")) cfg.max_flow_iters = j["max_flow_iters"].get<int>();
    if (j.contains("disc_floor")) cfg.disc_floor = double_from_json(j["disc_floor"]);
    cfg.validate();
}

OrderedJson config_echo(const JobSpec& job) {
    OrderedJson c;
    c["n"] = job.n;
    c["resolution"] = job.resolution;
    c["alpha"] = complex_to_json(job.alpha);
    c["seed"] = job.seed;
    c["delta_target"] = format_double(job.config.delta_target);
    c["delta_min"] = format_double(job.config.delta_min);
    c["max_step"] = format_double(job.config.max_step);
    c["flow_gain"] = format_double(job.config.flow_gain);
    c["relax_gain"] = format_double(job.config.relax_gain);
    c["smoothing_passes"] = job.config.smoothing_passes;
    c["disc_floor"] = format_double(job.config.disc_floor);
    return c;
}

std::string input_hash(const JobSpec& job) {
    std::string bytes = job.canonical_dump;
    if (job.path_file) bytes += read_file(*job.path_file);
    if (job.path_file_b) bytes += read_file(*job.path_file_b);
    return fnv1a_hex(bytes);
}

void write_result(const JobSpec& job, const std::string& out_dir, OrderedJson body) {
    OrderedJson result;
    result["command"] = job.command;
    result["input_hash"] = input_hash(job);
    result["config"] = config_echo(job);
    for (auto& [key, value] : body.items()) result[key] = std::move(value);
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / job.result_name).string(), result.dump(2) + "\n");
}

OrderedJson trace_summary(const Trace& trace) {
    OrderedJson t;
    t["steps"] = trace.steps.size();
    t["min_clearance"] = format_double(trace.steps.empty() ? 0.0 : trace.min_clearance());
    t["max_branch_jump"] = format_double(trace.max_branch_jump());
    t["total_displacement"] = format_double(trace.total_displacement);
    return t;
}

void maybe_write_artifacts(const JobSpec& job, const std::string& out_dir,
                           const ContinuationResult& r) {
    if (job.trace_csv) r.trace.write_csv((fs::path(out_dir) / *job.trace_csv).string());
    if (job.cycle_csv) r.final_cycle.write_csv((fs::path(out_dir) / *job.cycle_csv).string());
}

void run_eval(const JobSpec& job, const std::string& out_dir) {
    const GroupElement g(*job.g);
    const ContinuationResult r =
        matrix_element(g, KFiniteFunction(job.f1), KFiniteFunction(job.f2), job.alpha,
                       job.resolution, job.config);
    OrderedJson body;
    body["value"] = complex_to_json(r.value);
    body["error_estimate"] = format_double(r.error_estimate);
    maybe_write_artifacts(job, out_dir, r);
    write_result(job, out_dir, std::move(body));
}

void run_continue(const JobSpec& job, const std::string& out_dir) {
    const GroupPath path = load_path(*job.path_file);
    const ContinuationResult r =
        continue_path(path, KFiniteFunction(job.f1), KFiniteFunction(job.f2), job.alpha,
                      job.resolution, job.config);
    OrderedJson body;
    body["value"] = complex_to_json(r.value);
    body["error_estimate"] = format_double(r.error_estimate);
    body["trace"] = trace_summary(r.trace);
    maybe_write_artifacts(job, out_dir, r);
    write_result(job, out_dir, std::move(body));
}

void run_monodromy(const JobSpec& job, const std::string& out_dir) {
    const GroupPath loop = load_path(*job.path_file);
    const MonodromyResult r =
        monodromy(loop, KFiniteFunction(job.f1), KFiniteFunction(job.f2), job.alpha,
                  job.resolution, job.config);
    OrderedJson body;
    body["initial"] = complex_to_json(r.initial);
    body["final"] = complex_to_json(r.final);
    body["difference"] = complex_to_json(r.difference);
    if (r.ratio) {
        body["ratio"] = complex_to_json(*r.ratio);
        body["ratio_deviation"] = format_double(std::abs(*r.ratio - 1.0));
    }
    body["error_estimate"] = format_double(r.error_estimate);
    body["trace"] = trace_summary(r.trace);
    if (job.trace_csv) r.trace.write_csv((fs::path(out_dir) / *job.trace_csv).string());
    write_result(job, out_dir, std::move(body));
}

void run_homotopy(const JobSpec& job, const std::string& out_dir) {
    const GroupPath a = load_path(*job.path_file);
    const GroupPath b = load_path(*job.path_file_b);
    const HomotopyReport r =
        homotopy_check(a, b, KFiniteFunction(job.f1), KFiniteFunction(job.f2), job.alpha,
                       job.resolution, job.config);
    OrderedJson body;
    body["value_a"] = complex_to_json(r.value_a);
    body["value_b"] = complex_to_json(r.value_b);
    body["error_a"] = format_double(r.error_a);
    body["error_b"] = format_double(r.error_b);
    body["relative_difference"] = format_double(r.relative_difference);
    body["pass"] = r.pass;
    write_result(job, out_dir, std::move(body));
}

void run_transversality(const JobSpec& job, const std::string& out_dir) {
    const int count = job.count > 0 ? job.count : 200;
    std::mt19937_64 rng(job.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int transversal = 0;
    double min_defect = std::numeric_limits<double>::infinity();
    double min_gap = std::numeric_limits<double>::infinity();
    int conclusive = 0;
    for (int trial = 0; trial < count; ++trial) {
        RMatrix a(job.n, job.n), b(job.n, job.n);
        TransversalityReport rep;
        while (true) {
            for (int i = 0; i < job.n; ++i)
                for (int k = i; k < job.n; ++k) {
                    a(i, k) = a(k, i) = gauss(rng);
                    b(i, k) = b(k, i) = gauss(rng);
                }
            // Keep B comfortably invertible so the pencil is regular.
            b += RMatrix::Identity(job.n, job.n) * 0.0;
            if (std::abs(b.determinant()) < 1e-3) continue;
            rep = transversality_check(Quadric(a.cast<Complex>()),
                                       Quadric(b.cast<Complex>()), 40,
                                       job.seed + 7919 * trial);
            if (rep.min_eigenvalue_gap > 1e-6) break;  // spec: distinct eigenvalues
        }
        if (rep.transversal) ++transversal;
        if (rep.sampling_conclusive) {
            ++conclusive;
            min_defect = std::min(min_defect, rep.sampled_min_defect);
        }
        min_gap = std::min(min_gap, rep.min_eigenvalue_gap);
    }
    OrderedJson body;
    body["pencils"] = count;
    body["transversal"] = transversal;
    body["sampling_conclusive"] = conclusive;
    body["min_sampled_defect"] =
        format_double(std::isfinite(min_defect) ? min_defect : 0.0);
    body["min_eigenvalue_gap"] = format_double(min_gap);
    body["pass"] = transversal == count;
    write_result(job, out_dir, std::move(body));
}

void run_discriminant(const JobSpec& job, const std::string& out_dir) {
    OrderedJson body;
    if (job.g) {
        const GroupElement g(*job.g);
        const SpectralData data = spectral_data(g);
        OrderedJson eigs = OrderedJson::array();
        for (const Complex& l : data.eigenvalues) eigs.push_back(complex_to_json(l));
        body["eigenvalues"] = std::move(eigs);
        body["disc_resultant"] = complex_to_json(data.disc);
        body["disc_product"] = complex_to_json(data.disc_product);
        const double scale = std::max(std::abs(data.disc), std::abs(data.disc_product));
        body["route_agreement"] =
            format_double(scale > 0.0 ? std::abs(data.disc - data.disc_product) / scale
                                      : 0.0);
        body["in_discriminant"] = in_discriminant(g, job.config.disc_floor);
    } else {
        const int count = job.count > 0 ? job.count : 100;
        std::mt19937_64 rng(job.seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < count; ++trial) {
            CMatrix m(job.n, job.n);
            for (int i = 0; i < job.n; ++i)
                for (int k = 0; k < job.n; ++k)
                    m(i, k) = Complex(gauss(rng), 0.3 * gauss(rng));
            const Complex det = m.determinant();
            if (std::abs(det) < 1e-3) {
                --trial;
                continue;
            }
            m /= std::exp(std::log(det) / static_cast<double>(job.n));
            const SpectralData data = spectral_data(GroupElement(m));
            const double scale =
                std::max(std::abs(data.disc), std::abs(data.disc_product));
            if (scale > 0.0) {
                worst = std::max(worst, std::abs(data.disc - data.disc_product) / scale);
            }
        }
        body["samples"] = count;
        body["worst_route_disagreement"] = format_double(worst);
        body["pass"] = worst < 1e-8;
    }
    write_result(job, out_dir, std::move(body));
}

void run_volume(const JobSpec& job, const std::string& out_dir) {
    const Cycle cycle = Cycle::real_cycle(job.n, job.resolution);
    const IntegrationResult r = cycle.integrate(volume_density());
    const double exact = job.n == 2 ? kPi : kPi * kPi;
    OrderedJson body;
    body["value"] = complex_to_json(r.value);
    body["error_estimate"] = format_double(r.error_estimate);
    body["exact"] = format_double(exact);
    body["relative_error"] = format_double(std::abs(r.value - exact) / exact);
    write_result(job, out_dir, std::move(body));
}

void run_oracle(const JobSpec& job, const std::string& out_dir) {
    const GroupPath path = load_path(*job.path_file);
    const Complex value = oracle_continue(path, KFiniteFunction(job.f1),
                                          KFiniteFunction(job.f2), job.alpha);
    OrderedJson body;
    body["value"] = complex_to_json(value);
    const ThetaReport rep = theta(path.at(static_cast<double>(path.segments())));
    OrderedJson th;
    th["finite"] = rep.theta_finite;
    if (rep.theta_finite) th["value"] = complex_to_json(rep.theta);
    th["abcd"] = complex_to_json(rep.abcd);
    th["on_abcd_divisor"] = rep.on_abcd_divisor;
    body["theta"] = std::move(th);
    write_result(job, out_dir, std::move(body));
}

}  // namespace

int default_resolution(int n) { return n == 2 ? 24 : 10; }

JobSpec parse_job(const nlohmann::json& j, const std::string& job_file) {
    JobSpec job;
    job.job_file = job_file;
    job.canonical_dump = j.dump();
    if (!j.contains("command")) throw InputError("job: missing \"command\"");
    job.command = j.at("command").get<std::string>();
    if (!kCommands.count(job.command)) {
        throw InputError("job: unknown command \"" + job.command + "\"");
    }
    job.n = j.value("n", 2);
    if (job.n != 2 && job.n != 4) throw InputError("job: n must be 2 or 4");
    if (j.contains("g")) job.g = matrix_from_json(j.at("g"));
    if (j.contains("path_file")) {
        job.path_file = resolve_relative(job_file, j.at("path_file").get<std::string>());
    }
    if (j.contains("path_file_b")) {
        job.path_file_b =
            resolve_relative(job_file, j.at("path_file_b").get<std::string>());
    }
    job.f1 = j.contains("f1") ? exponents_from_json(j.at("f1"))
                              : std::vector<int>(job.n, 0);
    job.f2 = j.contains("f2") ? exponents_from_json(j.at("f2"))
                              : std::vector<int>(job.n, 0);
    if (j.contains("alpha")) job.alpha = complex_from_json(j.at("alpha"));
    job.resolution = j.value("resolution", 0);
    if (job.resolution <= 0) job.resolution = default_resolution(job.n);
    job.samples_per_segment = j.value("samples_per_segment", 0);
    job.seed = j.value("seed", std::uint64_t{20240817});
    job.count = j.value("count", 0);
    if (j.contains("config")) apply_config_overrides(job.config, j.at("config"));
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        job.result_name = o.value("result", std::string("result.json"));
        if (o.contains("cycle_csv")) job.cycle_csv = o.at("cycle_csv").get<std::string>();
        if (o.contains("trace_csv")) job.trace_csv = o.at("trace_csv").get<std::string>();
    }

    const bool needs_path = job.command == "continue" || job.command == "monodromy" ||
                            job.command == "oracle";
    if (needs_path && !job.path_file) {
        throw InputError("job: command \"" + job.command + "\" requires \"path_file\"");
    }
    if (job.command == "homotopy" && (!job.path_file || !job.path_file_b)) {
        throw InputError("job: homotopy requires \"path_file\" and \"path_file_b\"");
    }
    if (job.command == "eval" && !job.g) {
        throw InputError("job: eval requires \"g\"");
    }
    auto even_sum = [](const std::vector<int>& k) {
        int s = 0;
        for (int v : k) s += v;
        return s % 2 == 0;
    };
    if (!even_sum(job.f1) || !even_sum(job.f2)) {
        throw InputError("job: exponent sums must be even");
    }
    if (static_cast<int>(job.f1.size()) != job.n ||
        static_cast<int>(job.f2.size()) != job.n) {
        throw InputError("job: exponent lists must have length n");
    }
    return job;
}

JobSpec load_job(const std::string& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("job: malformed JSON in " + file + ": " + e.what());
    }
    return parse_job(j, file);
}

void run_job(const JobSpec& job, const std::string& out_dir) {
    fs::create_directories(out_dir);
    if (job.command == "eval") return run_eval(job, out_dir);
    if (job.command == "continue") return run_continue(job, out_dir);
    if (job.command == "monodromy") return run_monodromy(job, out_dir);
    if (job.command == "homotopy") return run_homotopy(job, out_dir);
    if (job.command == "transversality") return run_transversality(job, out_dir);
    if (job.command == "discriminant") return run_discriminant(job, out_dir);
    if (job.command == "volume") return run_volume(job, out_dir);
    if (job.command == "oracle") return run_oracle(job, out_dir);
    throw InputError("job: unknown command \"" + job.command + "\"");
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const DiscriminantError*>(&e)) return kExitDiscriminantError;
    if (dynamic_cast<const IsotopyError*>(&e)) return kExitIsotopyError;
    if (dynamic_cast<const QuadratureError*>(&e)) return kExitQuadratureError;
    return kExitInputError;
}

}  // namespace isocycle
