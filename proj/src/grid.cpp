#include "isocycle/grid.hpp"

#include <cmath>

namespace isocycle {

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(order);
    weights.resize(order);
    for (int i = 0; i < order; ++i) {
        // Chebyshev-based initial guess, then Newton on P_order.
        double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
    const std::size_t m = nodes.size();
    std::vector<double> w(m, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) w[i] /= (nodes[i] - nodes[j]);
    return w;
}

RMatrix differentiation_matrix(const std::vector<double>& nodes) {
    const int m = static_cast<int>(nodes.size());
    const std::vector<double> w = barycentric_weights(nodes);
    RMatrix d = RMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        double diag = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            d(i, j) = (w[j] / w[i]) / (nodes[i] - nodes[j]);
            diag -= d(i, j);
        }
        d(i, i) = diag;
    }
    return d;
}

RVector barycentric_row(const std::vector<double>& nodes,
                        const std::vector<double>& weights, double t) {
    const int m = static_cast<int>(nodes.size());
    RVector row = RVector::Zero(m);
    for (int j = 0; j < m; ++j) {
        if (std::abs(t - nodes[j]) < 1e-14) {
            row.setZero();
            row(j) = 1.0;
            return row;
        }
    }
    double denom = 0.0;
    for (int j = 0; j < m; ++j) {
        const double c = weights[j] / (t - nodes[j]);
        row(j) = c;
        denom += c;
    }
    row /= denom;
    return row;
}

RMatrix periodic_differentiation_matrix(int size, double h) {
    RMatrix d = RMatrix::Zero(size, size);
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            if (i == j) continue;
            const int k = i - j;
            const double sign = (k % 2 == 0) ? 1.0 : -1.0;
            d(i, j) = 0.5 * sign / std::tan(0.5 * k * h);
        }
    return d;
}

RMatrix trig_interpolation_matrix(int size, double period,
                                  const std::vector<double>& eval_points) {
    // Even-size uniform grid t_j = j * period / size; cardinal function
    // tau(s) = sin(size * s / 2) * cot(s / 2) / size with s in grid units of 2*pi.
    const int m = static_cast<int>(eval_points.size());
    RMatrix interp = RMatrix::Zero(m, size);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < size; ++j) {
            double s = 2.0 * kPi * (eval_points[i] / period - static_cast<double>(j) / size);
            s = std::remainder(s, 2.0 * kPi);
            if (std::abs(s) < 1e-14) {
                interp(i, j) = 1.0;
            } else {
                interp(i, j) = std::sin(0.5 * size * s) / (size * std::tan(0.5 * s));
            }
        }
    }
    return interp;
}

}  // namespace isocycle
