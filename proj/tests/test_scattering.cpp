#include <doctest.h>

#include <cmath>
#include <complex>

#include "atomdiode/scattering.hpp"

using namespace atomdiode;

namespace {

// Closed-form transmission probability through a square barrier of height v0
// (energy units of angular frequency) and width length; e = kinetic energy.
double square_barrier_t2(double e, double v0, double length, double m_over_hbar) {
    if (e < v0) {
        const double kappa = std::sqrt(2.0 * m_over_hbar * (v0 - e));
        const double s = std::sinh(kappa * length);
        return 1.0 / (1.0 + v0 * v0 * s * s / (4.0 * e * (v0 - e)));
    }
    if (e == v0) {  // limit: 1 / (1 + m k^2 L^2 / 2) with k at the barrier top
        const double k = std::sqrt(2.0 * m_over_hbar * e);
        return 1.0 / (1.0 + k * k * length * length / 4.0);
    }
    const double kp = std::sqrt(2.0 * m_over_hbar * (e - v0));
    const double s = std::sin(kp * length);
    return 1.0 / (1.0 + v0 * v0 * s * s / (4.0 * e * (e - v0)));
}

PotentialSpec zero_potential(int dim) {
    PotentialSpec spec;
    spec.dim = dim;
    spec.x_left = 0.0;
    spec.x_right = 10.0;
    spec.eval = [dim](double) { return Eigen::MatrixXd::Zero(dim, dim); };
    return spec;
}

}  // namespace

TEST_CASE("zero potential gives identity transmission in the fixed phase convention") {
    const UnitSystem units;
    const SolverConfig cfg;
    for (int dim : {1, 3}) {
        const PotentialSpec spec = zero_potential(dim);
        for (double v : {0.0025, 0.05, 0.8}) {
            const ScatteringResult res = solve_scattering(spec, v, units, cfg);
            CHECK((res.Tl - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-11);
            CHECK((res.Tr - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-11);
            CHECK(res.Rl.cwiseAbs().maxCoeff() < 1e-11);
            CHECK(res.Rr.cwiseAbs().maxCoeff() < 1e-11);
        }
    }
}

TEST_CASE("square barrier transmission matches the closed form to 1e-10") {
    const UnitSystem units;
    SolverConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-13;
    const double v0 = 2.0;  // 1/us
    const PotentialSpec spec = build_square_barrier(v0, 0.0, 1.0);
    for (double ratio : {0.25, 0.5, 0.9, 1.5, 4.0}) {
        CAPTURE(ratio);
        const double e = ratio * v0;
        const double v = std::sqrt(2.0 * e / units.m_over_hbar);
        const ScatteringResult res = solve_scattering(spec, v, units, cfg);
        const double t2 = std::norm(res.Tl(0, 0));
        CHECK(std::abs(t2 - square_barrier_t2(e, v0, 1.0, units.m_over_hbar)) < 1e-10);
        // single channel current conservation
        CHECK(std::norm(res.Tl(0, 0)) + std::norm(res.Rl(0, 0)) == doctest::Approx(1.0));
    }
}

TEST_CASE("unitarity and reciprocity for the three-level potential") {
    const UnitSystem units;
    const SolverConfig cfg;
    ThreeLevelParams p;
    p.omega_hat = 1.0;
    p.w_hat = 100.0;
    const PotentialSpec spec = build_three_level(p);
    for (double v_cm : {0.5, 2.0, 10.0, 40.0}) {
        CAPTURE(v_cm);
        const ScatteringResult res = solve_scattering(spec, v_cm * cm_per_s, units, cfg);
        const Eigen::MatrixXcd s = assemble_s_matrix(res);
        const Eigen::MatrixXcd defect =
            s.adjoint() * s - Eigen::MatrixXcd::Identity(s.rows(), s.cols());
        CHECK(defect.cwiseAbs().maxCoeff() < 1e-8);
        CHECK((res.Tr - res.Tl.transpose()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("self-reported error estimate is honest for the barrier") {
    const UnitSystem units;
    SolverConfig cfg;
    cfg.rel_tol = 1e-10;
    const PotentialSpec spec = build_square_barrier(2.0, 0.0, 1.0);
    const double e = 1.0;
    const double v = std::sqrt(2.0 * e / units.m_over_hbar);
    const ScatteringResult res = solve_scattering(spec, v, units, cfg);
    CHECK(res.error_estimate <= cfg.rel_tol);
    CHECK(std::abs(std::norm(res.Tl(0, 0)) - square_barrier_t2(e, 2.0, 1.0, units.m_over_hbar)) <
          10.0 * cfg.rel_tol);
}

TEST_CASE("invalid inputs are rejected") {
    const UnitSystem units;
    const SolverConfig cfg;
    const PotentialSpec spec = zero_potential(1);
    CHECK_THROWS(solve_scattering(spec, 0.0, units, cfg));
    CHECK_THROWS(solve_scattering(spec, -0.1, units, cfg));
}

TEST_CASE("scan preserves order and isolates per-point failures") {
    const UnitSystem units;
    const SolverConfig cfg;
    const PotentialSpec spec = zero_potential(1);
    const std::vector<double> vs{0.1, -1.0, 0.2};
    const auto points = scan_velocities(spec, vs, units, cfg, 2);
    REQUIRE(points.size() == 3);
    CHECK(points[0].result.has_value());
    CHECK_FALSE(points[1].result.has_value());
    CHECK_FALSE(points[1].error.empty());
    CHECK(points[2].result.has_value());
    CHECK(points[2].v == 0.2);
}
