#pragma once

#include <Eigen/Dense>
#include <functional>

#include "atomdiode/profiles.hpp"

namespace atomdiode {

// Channel-coupling potential V(x)/hbar: a real symmetric d x d matrix of
// angular frequencies (1/us), identically zero outside [x_left, x_right].
struct PotentialSpec {
    int dim = 1;
    double x_left = 0.0;   // um
    double x_right = 0.0;  // um
    std::function<Eigen::MatrixXd(double)> eval;

    Eigen::MatrixXd operator()(double x) const {
        if (x < x_left || x > x_right) return Eigen::MatrixXd::Zero(dim, dim);
        return eval(x);
    }
};

struct ThreeLevelParams {
    double omega_hat = 0.0;  // 1/us, pump/Stokes Rabi amplitude
    double w_hat = 0.0;      // 1/us, reflecting barrier amplitude
    double x_p = 170.0;      // um
    double x_s = 140.0;      // um
    double x_w = 260.0;      // um
    double delta_x = 15.0;   // um
};

struct TwoLevelParams {
    double f_hat_sq = 0.0;  // 1/us, f-hat squared (the API takes f^2 directly)
    double x_p = 170.0;     // um
    double x_s = 140.0;     // um
    double delta_x = 15.0;  // um
};

// V(x)/hbar = (1/2) [[W, Om_P, 0], [Om_P, 0, Om_S], [0, Om_S, 0]]
PotentialSpec build_three_level(const ThreeLevelParams& p);

// V(x)/hbar = (1/2) [[fP^2, fP fS], [fP fS, fS^2]]
PotentialSpec build_two_level(const TwoLevelParams& p);

// Single-channel piecewise-constant potential (height in 1/us over [a, b]);
// used as a closed-form scattering reference.
PotentialSpec build_square_barrier(double height, double a, double b);

// Position-dependent eigensystem of the two-level potential.
// zeta1 = (fS, -fP)/sqrt(fP^2+fS^2) with eigenvalue 0,
// zeta2 = (fP, fS)/sqrt(fP^2+fS^2) with eigenvalue (fP^2+fS^2)/2.
struct TwoLevelEigensystem {
    Eigen::Vector2d zeta1;
    Eigen::Vector2d zeta2;
    double lambda1 = 0.0;  // exactly zero
    double lambda2 = 0.0;  // (fP^2+fS^2)/2, 1/us
};

TwoLevelEigensystem two_level_eigensystem(const TwoLevelParams& p, double x);

}  // namespace atomdiode
