#pragma once

#include <vector>

#include "isocycle/types.hpp"

namespace isocycle {

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Lagrange differentiation matrix for arbitrary distinct nodes:
/// (D f)(i) = f'(node_i) for the interpolating polynomial.
RMatrix differentiation_matrix(const std::vector<double>& nodes);

/// Barycentric interpolation weights for the given nodes.
std::vector<double> barycentric_weights(const std::vector<double>& nodes);

/// Row of barycentric interpolation coefficients evaluating at t.
RVector barycentric_row(const std::vector<double>& nodes,
                        const std::vector<double>& weights, double t);

/// Spectral differentiation matrix for an even-size uniform periodic grid
/// with spacing h over a full period.
RMatrix periodic_differentiation_matrix(int size, double h);

/// Trigonometric interpolation matrix from an even-size uniform periodic grid
/// (period `period`) to arbitrary evaluation points.
RMatrix trig_interpolation_matrix(int size, double period,
                                  const std::vector<double>& eval_points);

}  // namespace isocycle
