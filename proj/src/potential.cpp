#include "atomdiode/potential.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace atomdiode {

namespace {

void check_ordering(double x_s, double x_p) {
    // Stokes before pump along +x (Fig.-1 style geometry); wrong order breaks
    // the adiabatic transfer but is not a hard error.
    if (!(x_s < x_p))
        std::cerr << "atomdiode: warning: x_S >= x_P, Stokes profile should precede the pump\n";
}

}  // namespace

PotentialSpec build_three_level(const ThreeLevelParams& p) {
    if (p.omega_hat < 0.0 || p.w_hat < 0.0)
        throw std::invalid_argument("build_three_level: amplitudes must be non-negative");
    if (!(p.delta_x > 0.0))
        throw std::invalid_argument("build_three_level: width must be positive");
    check_ordering(p.x_s, p.x_p);

    GaussianProfile om_p{p.x_p, p.delta_x, p.omega_hat};
    GaussianProfile om_s{p.x_s, p.delta_x, p.omega_hat};
    GaussianProfile w{p.x_w, p.delta_x, p.w_hat};

    PotentialSpec spec;
    spec.dim = 3;
    spec.x_left = std::min({om_p.support_left(), om_s.support_left(), w.support_left()});
    spec.x_right = std::max({om_p.support_right(), om_s.support_right(), w.support_right()});
    spec.eval = [om_p, om_s, w](double x) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
        m(0, 0) = 0.5 * w(x);
        m(0, 1) = m(1, 0) = 0.5 * om_p(x);
        m(1, 2) = m(2, 1) = 0.5 * om_s(x);
        return m;
    };
    return spec;
}

PotentialSpec build_two_level(const TwoLevelParams& p) {
    if (p.f_hat_sq < 0.0)
        throw std::invalid_argument("build_two_level: f^2 must be non-negative");
    if (!(p.delta_x > 0.0))
        throw std::invalid_argument("build_two_level: width must be positive");
    check_ordering(p.x_s, p.x_p);

    const double f_hat = std::sqrt(p.f_hat_sq);
    GaussianProfile f_p{p.x_p, p.delta_x, f_hat};
    GaussianProfile f_s{p.x_s, p.delta_x, f_hat};

    PotentialSpec spec;
    spec.dim = 2;
    spec.x_left = std::min(f_p.support_left(), f_s.support_left());
    spec.x_right = std::max(f_p.support_right(), f_s.support_right());
    spec.eval = [f_p, f_s](double x) {
        const double fp = f_p(x), fs = f_s(x);
        Eigen::MatrixXd m(2, 2);
        m(0, 0) = 0.5 * fp * fp;
        m(0, 1) = m(1, 0) = 0.5 * fp * fs;
        m(1, 1) = 0.5 * fs * fs;
        return m;
    };
    return spec;
}

PotentialSpec build_square_barrier(double height, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("build_square_barrier: need a < b");
    PotentialSpec spec;
    spec.dim = 1;
    spec.x_left = a;
    spec.x_right = b;
    spec.eval = [height](double) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = height;
        return m;
    };
    return spec;
}

TwoLevelEigensystem two_level_eigensystem(const TwoLevelParams& p, double x) {
    // Evaluate through the log-ratio so the asymptotic limits, where both
    // profiles underflow, stay well defined.
    const double f_hat = std::sqrt(p.f_hat_sq);
    if (!(f_hat > 0.0))
        throw std::domain_error("two_level_eigensystem: asymptotic region (f_P = f_S = 0)");
    const double zp = (x - p.x_p) / p.delta_x;
    const double zs = (x - p.x_s) / p.delta_x;
    const double fp = f_hat * std::exp(-0.5 * zp * zp);
    const double fs = f_hat * std::exp(-0.5 * zs * zs);

    TwoLevelEigensystem e;
    e.lambda1 = 0.0;
    e.lambda2 = 0.5 * (fp * fp + fs * fs);

    // ratio fS/fP = exp((zp^2 - zs^2)/2), finite even when fp, fs underflow
    const double log_ratio = 0.5 * (zp * zp - zs * zs);
    if (log_ratio > 350.0) {  // fS dominates completely
        e.zeta1 = {1.0, 0.0};
        e.zeta2 = {0.0, 1.0};
    } else if (log_ratio < -350.0) {  // fP dominates completely
        e.zeta1 = {0.0, -1.0};
        e.zeta2 = {1.0, 0.0};
    } else {
        const double r = std::exp(log_ratio);  // fS/fP
        const double norm = std::sqrt(1.0 + r * r);
        e.zeta1 = {r / norm, -1.0 / norm};
        e.zeta2 = {1.0 / norm, r / norm};
    }
    return e;
}

}  // namespace atomdiode
