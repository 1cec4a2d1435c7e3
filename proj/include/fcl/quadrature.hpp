#pragma once

#include <array>
#include <functional>
#include <vector>

namespace fcl {

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
const std::vector<double>& gl_nodes(int order);
const std::vector<double>& gl_weights(int order);

/// Adaptive tensor Gauss-Legendre integral of f over the axis-aligned box
/// [lo, hi] in n dimensions (f must be smooth on the closed box).
double integrate_box(int n, const std::array<double, 3>& lo,
                     const std::array<double, 3>& hi,
                     const std::function<double(const std::array<double, 3>&)>& f,
                     double relTol, double absTol);

/// J(delta) = integral over two unit cells at integer offset delta of
/// |x - y|^{-n-s}; delta != 0. Physical cell pairs scale as h^{n-s} * J.
double unit_offset_integral(int n, double s, const std::array<int, 3>& delta);

/// Integral over the complement of the box [lo, hi] of f(|y - x|) dy, for x
/// strictly inside the box, given the radial tail Q(rho) = int_rho^inf
/// f(r) r^{n-1} dr. Exact in n = 1; face quadrature otherwise.
double outside_box_radial(int n, const std::array<double, 3>& lo,
                          const std::array<double, 3>& hi,
                          const std::array<double, 3>& x,
                          const std::function<double(double)>& tailQ,
                          double relTol);

/// Same for the power kernel |y - x|^{-n-q}: Q(rho) = rho^{-q} / q.
double outside_box_integral(int n, const std::array<double, 3>& lo,
                            const std::array<double, 3>& hi,
                            const std::array<double, 3>& x, double q,
                            double relTol = 1e-10);

}  // namespace fcl
