#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace iqtest {

/// E[x^p] for x ~ N(mu, sigma^2).
inline double gaussian_moment(int p, double mu, double sigma) {
    double prev = 1.0, cur = mu;
    if (p == 0) return 1.0;
    for (int k = 2; k <= p; ++k) {
        const double next = mu * cur + (k - 1) * sigma * sigma * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// sum_n v_n x_n^p over a one-dimensional node set, adding mirrored nodes first
/// so odd moments of a symmetric rule cancel exactly.
inline double quad_moment(const Eigen::VectorXd& v, const Eigen::VectorXd& x, int p) {
    const Eigen::Index n = v.size();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n / 2; ++i) s += v(i) * std::pow(x(i), p) + v(n - 1 - i) * std::pow(x(n - 1 - i), p);
    if (n % 2) s += v(n / 2) * std::pow(x(n / 2), p);
    return s;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Eigen::MatrixXd scalar_cov(double var) { return Eigen::MatrixXd::Constant(1, 1, var); }

}  // namespace iqtest
