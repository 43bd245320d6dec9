// Acceptance suite: exercises the ten shipping criteria end to end, partly
// through the library and partly through the CLI binary. Usage:
//   acceptance <fixtures-dir> <cli-binary>
// Prints exactly one PASS/FAIL line per criterion and exits nonzero if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isocycle/continuation.hpp"
#include "isocycle/cycle.hpp"
#include "isocycle/group.hpp"
#include "isocycle/integrand.hpp"
#include "isocycle/io.hpp"
#include "isocycle/quadric.hpp"
#include "isocycle/types.hpp"

namespace fs = std::filesystem;
using namespace isocycle;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool ok, const std::string& detail) {
    std::cout << "criterion " << criterion << " (" << name << "): "
              << (ok ? "PASS" : "FAIL") << " -- " << detail << "\n";
    if (!ok) ++g_failures;
}

double rel(Complex a, Complex b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << x;
    return os.str();
}

struct CliRunner {
    std::string binary;
    fs::path fixtures;
    fs::path scratch;
    int counter = 0;

    // Runs one job file into a fresh output directory; returns (exit code, dir).
    std::pair<int, fs::path> run(const std::string& job, const std::string& extra = "") {
        const fs::path out = scratch / ("run" + std::to_string(counter++));
        fs::create_directories(out);
        std::string cmd = binary + " --job " + (fixtures / job).string() + " --out " +
                          out.string() + (extra.empty() ? "" : " " + extra) +
                          " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return {code, out};
    }
};

nlohmann::json read_result(const fs::path& dir) {
    return nlohmann::json::parse(read_file((dir / "result.json").string()));
}

Complex value_of(const nlohmann::json& result, const std::string& key) {
    return complex_from_json(result.at(key));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

// Independent oracle: vol(RP^{n-1}) = area(S^{n-1}) / 2 with
// area(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2), computed here from scratch.
double sphere_volume_oracle(int n) {
    return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

void criterion_volume() {
    const auto t0 = std::chrono::steady_clock::now();
    const Cycle c2 = Cycle::real_cycle(2, 24);
    const IntegrationResult v2 = c2.integrate(volume_density());
    const double t2 = seconds_since(t0);
    const double err2 = std::abs(v2.value - sphere_volume_oracle(2));

    const auto t1 = std::chrono::steady_clock::now();
    const Cycle c4 = Cycle::real_cycle(4, 10);
    const IntegrationResult v4 = c4.integrate(volume_density());
    const double t4 = seconds_since(t1);
    const double err4 = std::abs(v4.value - sphere_volume_oracle(4)) / sphere_volume_oracle(4);

    const bool ok = err2 < 1e-10 && t2 < 1.0 && err4 < 1e-3 && t4 < 60.0;
    report(1, "projective volume vs closed form", ok,
           "n=2 abs err " + fmt(err2) + " in " + fmt(t2) + "s; n=4 rel err " +
               fmt(err4) + " in " + fmt(t4) + "s");
}

// ---------------------------------------------------------------- criterion 2

CMatrix random_rotation(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    RMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
    Eigen::HouseholderQR<RMatrix> qr(m);
    RMatrix q = qr.householderQ();
    RMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) *= -1.0;
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q.cast<Complex>();
}

void criterion_invariance() {
    std::mt19937_64 rng(314159);
    double worst2 = 0.0, worst4 = 0.0;
    for (int n : {2, 4}) {
        const Cycle cycle = Cycle::real_cycle(n, n == 2 ? 24 : 10);
        std::vector<int> k(n, 0);
        k[0] = 1;
        k[1] = 1;  // even-degree test function x1 x2 / Q
        const KFiniteFunction f(k);
        auto integral_with = [&](const CMatrix& rot) {
            const Cycle::Density density = [&](const CVector& x, const CMatrix& frame,
                                               const BranchState& branch) {
                const CVector y = rot.transpose() * x;  // row action x -> x rot
                const Complex logq = std::log(bilinear(CMatrix::Identity(n, n), y));
                return f.eval(y, logq) * invariant_form(x, frame, branch.logQ_source);
            };
            return cycle.integrate(density).value;
        };
        const Complex base = integral_with(CMatrix::Identity(n, n));
        for (int trial = 0; trial < 20; ++trial) {
            const Complex rotated = integral_with(random_rotation(n, rng));
            const double dev = std::abs(rotated - base) /
                               std::max(1.0, std::abs(base));
            (n == 2 ? worst2 : worst4) = std::max(n == 2 ? worst2 : worst4, dev);
        }
    }
    const bool ok = worst2 < 1e-8 && worst4 < 1e-3;
    report(2, "SO(n) invariance of the measure", ok,
           "worst deviation n=2 " + fmt(worst2) + ", n=4 " + fmt(worst4));
}

// ---------------------------------------------------------------- criterion 3

GroupElement random_real_group(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (true) {
        RMatrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = gauss(rng);
        const double det = m.determinant();
        if (det < 1e-3) continue;  // need a positive determinant for a real n-th root
        m /= std::pow(det, 1.0 / n);
        return GroupElement(m.cast<Complex>());
    }
}

GroupElement random_complex_group(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (true) {
        CMatrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = Complex(gauss(rng), 0.4 * gauss(rng));
        const Complex det = m.determinant();
        if (std::abs(det) < 1e-3) continue;
        m /= std::exp(std::log(det) / static_cast<double>(n));
        return GroupElement(m);
    }
}

// Finite-difference Jacobian determinant of the sphere map x -> xg/|xg|.
double pushforward_determinant(const GroupElement& g, const RVector& x) {
    const int n = g.n();
    const RMatrix gr = g.matrix().real();
    // Orthonormal tangent basis at x by Gram-Schmidt on coordinate vectors.
    std::vector<RVector> tangent;
    for (int i = 0; i < n && static_cast<int>(tangent.size()) < n - 1; ++i) {
        RVector v = RVector::Zero(n);
        v(i) = 1.0;
        v -= v.dot(x) * x;
        for (const RVector& t : tangent) v -= v.dot(t) * t;
        if (v.norm() < 1e-6) continue;
        tangent.push_back(v / v.norm());
    }
    const RVector y0 = (gr.transpose() * x).normalized();
    std::vector<RVector> image_basis;
    for (int i = 0; i < n && static_cast<int>(image_basis.size()) < n - 1; ++i) {
        RVector v = RVector::Zero(n);
        v(i) = 1.0;
        v -= v.dot(y0) * y0;
        for (const RVector& t : image_basis) v -= v.dot(t) * t;
        if (v.norm() < 1e-6) continue;
        image_basis.push_back(v / v.norm());
    }
    const double h = 1e-6;
    RMatrix jac(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i) {
        const RVector plus = (gr.transpose() * (x + h * tangent[i]).normalized()).normalized();
        const RVector minus = (gr.transpose() * (x - h * tangent[i]).normalized()).normalized();
        const RVector d = (plus - minus) / (2.0 * h);
        for (int j = 0; j < n - 1; ++j) jac(j, i) = d.dot(image_basis[j]);
    }
    return std::abs(jac.determinant());
}

// Branch-free Jacobian: for even n the exponent n/2 is an integer, so
// J(g,x) = (Q(x)/Q(xg))^{n/2} is rational in the entries.
Complex rational_jacobian(const GroupElement& g, const CVector& x) {
    const int n = g.n();
    const CMatrix id = CMatrix::Identity(n, n);
    const Complex qs = bilinear(id, x);
    const Complex qt = bilinear(id, right_action(g, x));
    Complex j = 1.0;
    for (int i = 0; i < n / 2; ++i) j *= qs / qt;
    return j;
}

void criterion_jacobian() {
    std::mt19937_64 rng(27182818);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_fd = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial % 2 == 0 ? 2 : 4;
        const GroupElement g = random_real_group(n, rng);
        RVector x(n);
        for (int i = 0; i < n; ++i) x(i) = gauss(rng);
        x.normalize();
        const double fd = pushforward_determinant(g, x);
        const double an = std::exp(log_jacobian_principal(g, x.cast<Complex>()).real());
        worst_fd = std::max(worst_fd, std::abs(fd - an) / an);
    }
    double worst_cocycle = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial % 2 == 0 ? 2 : 4;
        const GroupElement g1 = random_complex_group(n, rng);
        const GroupElement g2 = random_complex_group(n, rng);
        CVector x(n);
        for (int i = 0; i < n; ++i) x(i) = Complex(gauss(rng), gauss(rng));
        const GroupElement g12(g1.matrix() * g2.matrix());
        const Complex lhs = rational_jacobian(g12, x);
        const Complex rhs = rational_jacobian(g1, x) * rational_jacobian(g2, right_action(g1, x));
        worst_cocycle = std::max(worst_cocycle, rel(lhs, rhs));
    }
    const bool ok = worst_fd < 1e-6 && worst_cocycle < 1e-12;
    report(3, "Jacobian cocycle and pushforward", ok,
           "worst FD deviation " + fmt(worst_fd) + ", worst cocycle residual " +
               fmt(worst_cocycle));
}

// ---------------------------------------------------------------- criterion 4

void criterion_real_path(CliRunner& cli) {
    const char* cont[] = {"job_real_a.json", "job_real_b.json", "job_real_c.json"};
    const char* eval[] = {"job_eval_end_a.json", "job_eval_end_b.json",
                          "job_eval_end_c.json"};
    double worst = 0.0;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        const auto [ca, da] = cli.run(cont[i]);
        const auto [cb, db] = cli.run(eval[i]);
        if (ca != 0 || cb != 0) {
            ok = false;
            continue;
        }
        worst = std::max(worst, rel(value_of(read_result(da), "value"),
                                    value_of(read_result(db), "value")));
    }
    ok = ok && worst < 1e-8;
    report(4, "real-path continuation matches direct quadrature", ok,
           "worst relative deviation " + fmt(worst) + " over 3 (f1,f2,alpha) combinations");
}

// ---------------------------------------------------------------- criterion 5

void criterion_homotopy(CliRunner& cli) {
    const auto [ch, dh] = cli.run("job_homotopy.json");
    const auto [cr, dr] = cli.run("job_reversal.json");
    const auto [cb, db] = cli.run("job_eval_base.json");
    bool ok = ch == 0 && cr == 0 && cb == 0;
    double hom_dev = 1.0, rev_dev = 1.0;
    if (ok) {
        const nlohmann::json h = read_result(dh);
        hom_dev = std::strtod(h.at("relative_difference").get<std::string>().c_str(), nullptr);
        rev_dev = rel(value_of(read_result(dr), "value"), value_of(read_result(db), "value"));
        ok = h.at("pass").get<bool>() && hom_dev < 1e-6 && rev_dev < 1e-8;
    }
    report(5, "homotopy invariance and path reversal", ok,
           "homotopic-pair deviation " + fmt(hom_dev) + ", reversal deviation " +
               fmt(rev_dev));
}

// ---------------------------------------------------------------- criterion 6

void criterion_monodromy(CliRunner& cli) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [cm, dm] = cli.run("job_monodromy.json");
    const double elapsed = seconds_since(t0);
    const auto [co, dout] = cli.run("job_oracle.json");
    const auto [cc, dc] = cli.run("job_monodromy_contractible.json");
    bool ok = cm == 0 && co == 0 && cc == 0;
    double ratio_dev = 0.0, oracle_dev = 1.0, triv_dev = 1.0;
    if (ok) {
        const nlohmann::json m = read_result(dm);
        ratio_dev = std::abs(value_of(m, "ratio") - 1.0);
        oracle_dev = rel(value_of(m, "final"), value_of(read_result(dout), "value"));
        triv_dev = std::abs(value_of(read_result(dc), "ratio") - 1.0);
        ok = ratio_dev > 1e-3 && oracle_dev < 1e-4 && triv_dev < 1e-6 && elapsed < 30.0;
    }
    report(6, "monodromy around the discriminant", ok,
           "|ratio-1| " + fmt(ratio_dev) + " (nontrivial), engine-vs-oracle " +
               fmt(oracle_dev) + ", contractible-loop deviation " + fmt(triv_dev) +
               ", " + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------- criterion 7

void criterion_transversality() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int transversal = 0, total = 0;
    double min_defect = std::numeric_limits<double>::infinity();
    for (int n : {2, 4}) {
        for (int trial = 0; trial < 100; ++trial) {
            TransversalityReport rep;
            while (true) {
                RMatrix a(n, n), b(n, n);
                for (int i = 0; i < n; ++i)
                    for (int k = i; k < n; ++k) {
                        a(i, k) = a(k, i) = gauss(rng);
                        b(i, k) = b(k, i) = gauss(rng);
                    }
                if (std::abs(b.determinant()) < 1e-3) continue;
                rep = transversality_check(Quadric(a.cast<Complex>()),
                                           Quadric(b.cast<Complex>()), 40,
                                           11 + 7919 * trial + n);
                if (rep.min_eigenvalue_gap > 1e-6) break;  // pairwise-distinct pencil
            }
            ++total;
            if (rep.transversal) ++transversal;
            if (n == 4 && rep.sampling_conclusive) {
                min_defect = std::min(min_defect, rep.sampled_min_defect);
            }
        }
    }
    // Degenerate control: A = B makes the gradients parallel everywhere on the
    // common quadric, so the defect must vanish at sampled intersection points.
    // Points are produced by solving Q_A(y + t e_1) = 0 directly; the Newton
    // projection is rank-deficient when the two quadrics coincide.
    double worst_degenerate = 0.0;
    for (int n : {2, 4}) {
        RMatrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = i; k < n; ++k) a(i, k) = a(k, i) = gauss(rng);
        const Quadric qa(a.cast<Complex>());
        int found = 0;
        for (int attempt = 0; attempt < 50 && found < 10; ++attempt) {
            CVector x(n);
            for (int i = 0; i < n; ++i) x(i) = Complex(gauss(rng), gauss(rng));
            const Complex c2 = qa.matrix()(0, 0);
            const Complex c1 = qa.gradient(x)(0);
            const Complex c0 = quadric_eval(qa, x);
            const Complex root = std::sqrt(c1 * c1 - 4.0 * c2 * c0);
            x(0) += (-c1 + root) / (2.0 * c2);
            if (std::abs(quadric_eval(qa, x)) > 1e-10 * x.squaredNorm()) continue;
            ++found;
            worst_degenerate = std::max(worst_degenerate, transversality_defect(qa, qa, x));
        }
    }
    const bool ok = transversal == total && min_defect > 1e-6 &&
                    worst_degenerate < 1e-12;
    report(7, "pencil transversality", ok,
           std::to_string(transversal) + "/" + std::to_string(total) +
               " transversal, min sampled defect (n=4) " + fmt(min_defect) +
               ", degenerate-control defect " + fmt(worst_degenerate));
}

// ---------------------------------------------------------------- criterion 8

void criterion_discriminant() {
    // Constructed elements with multiple eigenvalues of g g^t.
    double worst_constructed = 0.0;
    {
        CMatrix r2(2, 2);  // rotation: g g^t = I
        r2 << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7);
        worst_constructed = std::max(worst_constructed, std::abs(discriminant(GroupElement(r2))));

        CMatrix d4 = CMatrix::Zero(4, 4);  // diag(a, a, 1/a, 1/a): two double eigenvalues
        d4(0, 0) = d4(1, 1) = 1.3;
        d4(2, 2) = d4(3, 3) = 1.0 / 1.3;
        worst_constructed = std::max(worst_constructed, std::abs(discriminant(GroupElement(d4))));

        CMatrix r4 = CMatrix::Zero(4, 4);  // block rotation: g g^t = I
        r4(0, 0) = r4(1, 1) = std::cos(0.4);
        r4(0, 1) = -std::sin(0.4);
        r4(1, 0) = std::sin(0.4);
        r4(2, 2) = r4(3, 3) = std::cos(1.1);
        r4(2, 3) = -std::sin(1.1);
        r4(3, 2) = std::sin(1.1);
        worst_constructed = std::max(worst_constructed, std::abs(discriminant(GroupElement(r4))));
    }
    // Random elements: resultant route vs eigenvalue-product route.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_routes = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial % 2 == 0 ? 2 : 4;
        const SpectralData data = spectral_data(random_complex_group(n, rng));
        const double scale = std::max(std::abs(data.disc), std::abs(data.disc_product));
        if (scale > 0.0) {
            worst_routes = std::max(worst_routes, std::abs(data.disc - data.disc_product) / scale);
        }
    }
    const bool ok = worst_constructed < 1e-10 && worst_routes < 1e-8;
    report(8, "discriminant routes", ok,
           "constructed multiple-eigenvalue |disc| " + fmt(worst_constructed) +
               ", worst route disagreement " + fmt(worst_routes));
}

// ---------------------------------------------------------------- criterion 9

void criterion_n4_smoke(CliRunner& cli) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [cs, ds] = cli.run("job_n4_smoke.json");
    const double elapsed = seconds_since(t0);
    const auto [cr, dr] = cli.run("job_n4_refine.json");
    bool ok = cs == 0 && cr == 0;
    double dev = 1.0, clearance = 0.0;
    if (ok) {
        const nlohmann::json s = read_result(ds);
        dev = rel(value_of(s, "value"), value_of(read_result(dr), "value"));
        clearance = std::strtod(
            s.at("trace").at("min_clearance").get<std::string>().c_str(), nullptr);
        ok = dev < 1e-2 && clearance >= 1e-3 && elapsed < 300.0;
    }
    report(9, "n=4 complex continuation smoke test", ok,
           "refinement deviation " + fmt(dev) + ", min clearance " + fmt(clearance) +
               ", " + fmt(elapsed) + "s");
}

// --------------------------------------------------------------- criterion 10

void criterion_determinism(CliRunner& cli) {
    bool ok = true;
    for (const char* job :
         {"job_real_b.json", "job_homotopy.json", "job_monodromy.json"}) {
        const auto [c1, d1] = cli.run(job);
        const auto [c2, d2] = cli.run(job);
        if (c1 != 0 || c2 != 0) {
            ok = false;
            continue;
        }
        const std::string bytes1 = read_file((d1 / "result.json").string());
        const std::string bytes2 = read_file((d2 / "result.json").string());
        ok = ok && !bytes1.empty() && bytes1 == bytes2;
    }
    report(10, "byte-identical reruns", ok,
           ok ? "result JSON identical across reruns of criteria 4-6 jobs"
              : "result JSON differed or a rerun failed");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <fixtures-dir> <cli-binary>\n";
        return 64;
    }
    CliRunner cli;
    cli.fixtures = argv[1];
    cli.binary = argv[2];
    cli.scratch = fs::temp_directory_path() / "isocycle-acceptance";
    fs::remove_all(cli.scratch);
    fs::create_directories(cli.scratch);

    criterion_volume();
    criterion_invariance();
    criterion_jacobian();
    criterion_real_path(cli);
    criterion_homotopy(cli);
    criterion_monodromy(cli);
    criterion_transversality();
    criterion_discriminant();
    criterion_n4_smoke(cli);
    criterion_determinism(cli);

    std::cout << (g_failures == 0 ? "all criteria passed"
                                  : std::to_string(g_failures) + " criteria failed")
              << "\n";
    return g_failures == 0 ? 0 : 1;
}
