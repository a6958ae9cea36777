#pragma once

#include <complex>
#include <span>
#include <vector>

namespace illusion::lpc {

// Biased autocorrelation r[0..max_lag].
std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag);

struct Model {
    // Prediction polynomial A(z) = 1 + a[1] z^-1 + ... + a[p] z^-p; a[0] == 1.
    std::vector<double> coefficients;
    // Residual energy after order-p prediction (the squared gain).
    double error = 0.0;
};

// Levinson-Durbin recursion. If the recursion becomes unstable (reflection
// coefficient magnitude >= 1 or non-positive error) it stops at the last
// stable order and pads the remaining coefficients with zeros.
Model levinson_durbin(std::span<const double> autocorr, std::size_t order);

// All complex roots of a monic-in-z form of `coefficients`, i.e. the roots
// of c[0] z^n + c[1] z^(n-1) + ... + c[n]. Uses Aberth-Ehrlich iteration.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients);

// |A(e^{j w})| for normalized angular frequency w.
double response_magnitude(std::span<const double> coefficients, double omega);

}  // namespace illusion::lpc
