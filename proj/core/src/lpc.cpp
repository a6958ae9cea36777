#include "illusion/lpc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "illusion/error.hpp"

namespace illusion::lpc {

std::vector<double> autocorrelation(std::span<const double> frame, std::size_t max_lag) {
    std::vector<double> r(max_lag + 1, 0.0);
    for (std::size_t lag = 0; lag <= max_lag && lag < frame.size(); ++lag) {
        double acc = 0.0;
        for (std::size_t i = lag; i < frame.size(); ++i) acc += frame[i] * frame[i - lag];
        r[lag] = acc;
    }
    return r;
}

Model levinson_durbin(std::span<const double> autocorr, std::size_t order) {
    if (autocorr.size() < order + 1) throw InvalidInput("levinson_durbin: autocorrelation too short");
    Model model;
    model.coefficients.assign(order + 1, 0.0);
    model.coefficients[0] = 1.0;
    double error = autocorr[0];
    if (error <= 0.0) {
        model.error = 0.0;
        return model;
    }
    std::vector<double> a(order + 1, 0.0), prev(order + 1, 0.0);
    a[0] = 1.0;
    for (std::size_t i = 1; i <= order; ++i) {
        double acc = autocorr[i];
        for (std::size_t j = 1; j < i; ++j) acc += a[j] * autocorr[i - j];
        const double k = -acc / error;
        if (!(std::abs(k) < 1.0)) break;
        prev = a;
        for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
        a[i] = k;
        const double next_error = error * (1.0 - k * k);
        if (next_error <= 0.0) {
            a = prev;
            break;
        }
        error = next_error;
    }
    model.coefficients = std::move(a);
    model.error = error;
    return model;
}

namespace {

struct Eval {
    std::complex<double> value;
    std::complex<double> derivative;
};

Eval horner(std::span<const double> c, std::complex<double> z) {
    std::complex<double> p = c[0];
    std::complex<double> dp = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        dp = dp * z + p;
        p = p * z + c[i];
    }
    return {p, dp};
}

}  // namespace

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coefficients) {
    // Drop leading zeros; trailing zeros are roots at the origin.
    std::size_t first = 0;
    while (first < coefficients.size() && coefficients[first] == 0.0) ++first;
    std::vector<double> c(coefficients.begin() + static_cast<std::ptrdiff_t>(first), coefficients.end());
    std::vector<std::complex<double>> roots;
    while (c.size() > 1 && c.back() == 0.0) {
        c.pop_back();
        roots.emplace_back(0.0, 0.0);
    }
    const std::size_t degree = c.empty() ? 0 : c.size() - 1;
    if (degree == 0) return roots;

    // Normalize to monic.
    const double lead = c[0];
    for (double& v : c) v /= lead;

    // Initial guesses on a circle bounded by the Cauchy radius.
    double radius = 0.0;
    for (std::size_t i = 1; i <= degree; ++i) {
        radius = std::max(radius, std::pow(std::abs(c[i]), 1.0 / static_cast<double>(i)));
    }
    radius = std::max(radius, 1e-3);
    std::vector<std::complex<double>> z(degree);
    for (std::size_t k = 0; k < degree; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(degree) + 0.4;
        z[k] = std::polar(radius, angle);
    }

    constexpr int kMaxIterations = 500;
    std::vector<bool> converged(degree, false);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        bool all_done = true;
        for (std::size_t k = 0; k < degree; ++k) {
            if (converged[k]) continue;
            const auto [p, dp] = horner(c, z[k]);
            if (std::abs(p) == 0.0) {
                converged[k] = true;
                continue;
            }
            const std::complex<double> ratio = p / dp;
            std::complex<double> repulsion = 0.0;
            for (std::size_t j = 0; j < degree; ++j) {
                if (j != k) repulsion += 1.0 / (z[k] - z[j]);
            }
            const std::complex<double> step = ratio / (1.0 - ratio * repulsion);
            z[k] -= step;
            if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z[k]))) {
                converged[k] = true;
            } else {
                all_done = false;
            }
        }
        if (all_done) break;
    }
    roots.insert(roots.end(), z.begin(), z.end());
    return roots;
}

double response_magnitude(std::span<const double> coefficients, double omega) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < coefficients.size(); ++i) {
        acc += coefficients[i] * std::polar(1.0, -omega * static_cast<double>(i));
    }
    return std::abs(acc);
}

}  // namespace illusion::lpc
