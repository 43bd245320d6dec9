#include "isocycle/group.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace isocycle {
namespace {

CMatrix normalize_det(CMatrix m, const char* what) {
    const Complex det = m.determinant();
    if (std::abs(det) < 1e-14) {
        throw InputError(std::string(what) + ": determinant is numerically zero");
    }
    const int n = static_cast<int>(m.rows());
    const Complex root = std::exp(std::log(det) / static_cast<double>(n));
    return m / root;
}

std::string poly_to_string(const std::vector<Complex>& c) {
    std::ostringstream os;
    os << "[";
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (j) os << ", ";
        os << c[j].real() << (c[j].imag() < 0 ? "-" : "+") << std::abs(c[j].imag()) << "i";
    }
    os << "]";
    return os.str();
}

}  // namespace

GroupElement::GroupElement(CMatrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 2) {
        throw InputError("GroupElement: matrix must be square, n >= 2");
    }
    if (entries_.rows() % 2 != 0) {
        throw InputError("GroupElement: odd n is not supported");
    }
    const Complex det = entries_.determinant();
    if (std::abs(det - 1.0) > 1e-6) {
        std::ostringstream os;
        os << "GroupElement: |det - 1| = " << std::abs(det - 1.0) << " exceeds 1e-6";
        throw InputError(os.str());
    }
    entries_ = normalize_det(entries_, "GroupElement");
}

bool GroupElement::is_real(double tol) const {
    return entries_.imag().cwiseAbs().maxCoeff() <= tol;
}

GroupElement GroupElement::identity(int n) {
    return GroupElement(CMatrix::Identity(n, n));
}

std::vector<Complex> sym_char_poly(const GroupElement& g) {
    // Faddeev-LeVerrier on M = g g^t; coefficients of det(lambda I - M),
    // which is the monic normalization of det(M - lambda I) for even n.
    const CMatrix m = g.symmetrized();
    const int n = g.n();
    std::vector<Complex> coeffs(n + 1);
    coeffs[n] = 1.0;
    CMatrix mk = m;
    Complex ck = -mk.trace();
    coeffs[n - 1] = ck;
    for (int k = 2; k <= n; ++k) {
        mk = m * (mk + ck * CMatrix::Identity(n, n));
        ck = -mk.trace() / static_cast<double>(k);
        coeffs[n - k] = ck;
    }
    return coeffs;
}

std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs) {
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg < 1) return {};
    CMatrix companion = CMatrix::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
    Eigen::ComplexEigenSolver<CMatrix> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw InputError("polynomial_roots: eigenvalue iteration failed for " +
                         poly_to_string(coeffs));
    }
    std::vector<Complex> roots(deg);
    for (int i = 0; i < deg; ++i) roots[i] = solver.eigenvalues()(i);
    return roots;
}

std::vector<Complex> pencil_eigenvalues(const GroupElement& g) {
    const std::vector<Complex> coeffs = sym_char_poly(g);
    const std::vector<Complex> roots = polynomial_roots(coeffs);
    for (const Complex& r : roots) {
        Complex value = 0.0;
        double scale = 0.0;
        Complex pw = 1.0;
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            value += coeffs[j] * pw;
            scale += std::abs(coeffs[j]) * std::abs(pw);
            pw *= r;
        }
        if (std::abs(value) > 1e-8 * std::max(scale, 1.0)) {
            throw InputError("pencil_eigenvalues: residual too large for root of " +
                             poly_to_string(coeffs));
        }
    }
    return roots;
}

Complex polynomial_discriminant(const std::vector<Complex>& monic) {
    const int n = static_cast<int>(monic.size()) - 1;
    // Sylvester resultant of p and p', descending-coefficient convention.
    std::vector<Complex> p(n + 1), dp(n);
    for (int j = 0; j <= n; ++j) p[j] = monic[n - j];
    for (int j = 0; j < n; ++j) dp[j] = monic[n - j] * static_cast<double>(n - j);
    const int size = 2 * n - 1;
    CMatrix syl = CMatrix::Zero(size, size);
    for (int r = 0; r < n - 1; ++r)
        for (int j = 0; j <= n; ++j) syl(r, r + j) = p[j];
    for (int r = 0; r < n; ++r)
        for (int j = 0; j <= n - 1; ++j) syl(n - 1 + r, r + j) = dp[j];
    const Complex res = syl.determinant();
    const int sign = ((n * (n - 1) / 2) % 2 == 0) ? 1 : -1;
    return static_cast<double>(sign) * res;
}

Complex discriminant(const GroupElement& g) {
    return polynomial_discriminant(sym_char_poly(g));
}

SpectralData spectral_data(const GroupElement& g) {
    SpectralData data;
    data.char_coeffs = sym_char_poly(g);
    data.eigenvalues = pencil_eigenvalues(g);
    data.disc = polynomial_discriminant(data.char_coeffs);
    Complex prod = 1.0;
    for (std::size_t i = 0; i < data.eigenvalues.size(); ++i)
        for (std::size_t j = i + 1; j < data.eigenvalues.size(); ++j) {
            const Complex d = data.eigenvalues[i] - data.eigenvalues[j];
            prod *= d * d;
        }
    data.disc_product = prod;
    return data;
}

bool in_discriminant(const GroupElement& g, double tol) {
    return std::abs(discriminant(g)) < tol;
}

GroupPath::GroupPath(std::vector<GroupElement> waypoints, int samples_per_segment,
                     double disc_floor)
    : waypoints_(std::move(waypoints)),
      samples_per_segment_(samples_per_segment),
      disc_floor_(disc_floor) {
    if (waypoints_.empty()) throw InputError("GroupPath: no waypoints");
    if (samples_per_segment_ < 1) throw InputError("GroupPath: samples_per_segment < 1");
    const int n = waypoints_.front().n();
    for (std::size_t i = 1; i < waypoints_.size(); ++i) {
        if (waypoints_[i].n() != n) throw InputError("GroupPath: mixed dimensions");
    }
    const auto [min_disc, where] = clearance();
    if (min_disc < disc_floor_) {
        std::ostringstream os;
        os << "GroupPath: |disc| = " << min_disc << " at sample " << where
           << " is below the floor " << disc_floor_;
        throw DiscriminantError(os.str());
    }
}

GroupElement GroupPath::at(double s) const {
    if (segments() == 0) return waypoints_.front();
    s = std::clamp(s, 0.0, static_cast<double>(segments()));
    std::size_t seg = static_cast<std::size_t>(std::floor(s));
    if (seg >= segments()) seg = segments() - 1;
    const double t = s - static_cast<double>(seg);
    const CMatrix blend = (1.0 - t) * waypoints_[seg].matrix() +
                          t * waypoints_[seg + 1].matrix();
    return GroupElement(normalize_det(blend, "GroupPath::at"));
}

GroupPath GroupPath::reversed() const {
    std::vector<GroupElement> rev(waypoints_.rbegin(), waypoints_.rend());
    return GroupPath(std::move(rev), samples_per_segment_, disc_floor_);
}

GroupPath GroupPath::concatenated(const GroupPath& tail) const {
    if (tail.n() != n()) throw InputError("GroupPath: concatenation dimension mismatch");
    const double gap = (tail.waypoints().front().matrix() - waypoints_.back().matrix()).norm();
    if (gap > 1e-10) throw InputError("GroupPath: concatenation endpoints disagree");
    std::vector<GroupElement> all = waypoints_;
    all.insert(all.end(), tail.waypoints().begin() + 1, tail.waypoints().end());
    return GroupPath(std::move(all), samples_per_segment_, std::min(disc_floor_, tail.disc_floor()));
}

double GroupPath::sample_parameter(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(samples_per_segment_);
}

std::pair<double, std::size_t> GroupPath::clearance() const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t k = 0; k < sample_count(); ++k) {
        const double v = std::abs(discriminant(at(sample_parameter(k))));
        if (v < best) {
            best = v;
            best_idx = k;
        }
    }
    return {best, best_idx};
}

std::pair<double, std::size_t> path_clearance(const GroupPath& path) {
    return path.clearance();
}

}  // namespace isocycle
