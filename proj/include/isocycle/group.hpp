#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "isocycle/types.hpp"

namespace isocycle {

/// Element of SL(n,C) with even n. Construction normalizes the determinant
/// by the principal n-th root when |det - 1| <= 1e-6 and rejects anything
/// further away.
class GroupElement {
  public:
    explicit GroupElement(CMatrix entries);

    int n() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    bool is_real(double tol = 1e-12) const;

    /// g g^t, the matrix of the moving quadric Q(xg) = x (g g^t) x^t.
    CMatrix symmetrized() const { return entries_ * entries_.transpose(); }

    static GroupElement identity(int n);

  private:
    CMatrix entries_;
};

/// Coefficients, roots and discriminant of det(g g^t - lambda I).
struct SpectralData {
    std::vector<Complex> char_coeffs;  // monic, c[k] multiplies lambda^k, c[n] = 1
    std::vector<Complex> eigenvalues;
    Complex disc;                      // resultant-based value
    Complex disc_product;              // prod_{i<j} (l_i - l_j)^2 cross-check
};

/// Monic coefficients of det(g g^t - lambda I), index k -> lambda^k.
std::vector<Complex> sym_char_poly(const GroupElement& g);

/// Roots of sym_char_poly(g); throws if the residual check fails.
std::vector<Complex> pencil_eigenvalues(const GroupElement& g);

/// Discriminant of the monic characteristic polynomial (resultant route).
Complex discriminant(const GroupElement& g);

SpectralData spectral_data(const GroupElement& g);

bool in_discriminant(const GroupElement& g, double tol);

/// Polynomial utilities shared with the sl2 oracle.
std::vector<Complex> polynomial_roots(const std::vector<Complex>& coeffs);
Complex polynomial_discriminant(const std::vector<Complex>& monic_coeffs);

/// Piecewise path s |-> g(s), entrywise-linear between waypoints with
/// determinant renormalization at every sample. The global parameter runs
/// over [0, segments()].
class GroupPath {
  public:
    GroupPath(std::vector<GroupElement> waypoints, int samples_per_segment,
              double disc_floor = 1e-6);

    int n() const { return waypoints_.front().n(); }
    std::size_t segments() const { return waypoints_.size() - 1; }
    int samples_per_segment() const { return samples_per_segment_; }
    const std::vector<GroupElement>& waypoints() const { return waypoints_; }
    double disc_floor() const { return disc_floor_; }

    /// Point at global parameter s in [0, segments()].
    GroupElement at(double s) const;

    GroupPath reversed() const;
    GroupPath concatenated(const GroupPath& tail) const;

    /// (min |disc| over the sample grid, argmin sample index).
    std::pair<double, std::size_t> clearance() const;

    std::size_t sample_count() const { return segments() * samples_per_segment_ + 1; }
    double sample_parameter(std::size_t k) const;

  private:
    std::vector<GroupElement> waypoints_;
    int samples_per_segment_;
    double disc_floor_;
};

std::pair<double, std::size_t> path_clearance(const GroupPath& path);

}  // namespace isocycle
