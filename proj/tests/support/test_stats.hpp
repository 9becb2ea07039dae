#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "skillforge/nn.hpp"

namespace test_support {

/// Chi-square critical value via the Wilson-Hilferty approximation;
/// z_quantile is the standard-normal quantile of the same tail (2.326 for
/// p = 0.01).
inline double chi2_critical(int dof, double z_quantile) {
    double a = 2.0 / (9.0 * dof);
    double c = 1.0 - a + z_quantile * std::sqrt(a);
    return dof * c * c * c;
}

/// One-sample Kolmogorov statistic against a cdf.
template <class Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    double d = 0.0;
    const double n = static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
    }
    return d;
}

/// Two-sample Kolmogorov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

/// Rejection threshold for the two-sample KS test at significance alpha
/// (c(0.01) = 1.628).
inline double ks_two_sample_threshold(std::size_t n, std::size_t m, double c_alpha = 1.628) {
    return c_alpha * std::sqrt((static_cast<double>(n) + m) / (static_cast<double>(n) * m));
}

/// Central-difference gradient of an arbitrary scalar loss over the net's
/// flat parameters.
template <class LossFn>
skillforge::Vector finite_diff_grad(skillforge::nn::Mlp& net, LossFn&& loss, double h = 1e-6) {
    skillforge::Vector p = net.flat_params();
    skillforge::Vector g(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        skillforge::Vector q = p;
        q[i] = p[i] + h;
        net.set_flat_params(q);
        double up = loss();
        q[i] = p[i] - h;
        net.set_flat_params(q);
        double down = loss();
        g[i] = (up - down) / (2.0 * h);
    }
    net.set_flat_params(p);
    return g;
}

inline double rel_error(const skillforge::Vector& a, const skillforge::Vector& b) {
    double denom = std::max(a.norm(), b.norm());
    if (denom == 0.0) return 0.0;
    return (a - b).norm() / denom;
}

}  // namespace test_support
