#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "atomdiode/potential.hpp"
#include "atomdiode/units.hpp"

namespace atomdiode {

struct SolverConfig {
    double rel_tol = 1e-10;      // target change of amplitudes under step halving
    double abs_tol = 1e-12;
    double initial_step = 0.1;   // um, coarsest slab width
    long max_slabs = 4'000'000;  // total slab budget across refinements
    std::string method = "magnus-imbedding";
};

// Amplitude matrices at fixed incidence speed v. Entry (beta, alpha) is the
// amplitude for incidence in channel alpha, outgoing channel beta. The free
// propagation phase across [x_left, x_right] is divided out, so a zero
// potential gives Tl = Tr = I and Rl = Rr = 0.
struct ScatteringResult {
    double v = 0.0;  // um/us, modulus of incidence velocity
    Eigen::MatrixXcd Rl, Tl, Rr, Tr;
    double error_estimate = 0.0;  // max amplitude change at the last halving
};

ScatteringResult solve_scattering(const PotentialSpec& spec, double v,
                                  const UnitSystem& units, const SolverConfig& cfg);

// 2d x 2d scattering matrix [[Rl, Tr], [Tl, Rr]]; unitary for a real
// potential with all channels open.
Eigen::MatrixXcd assemble_s_matrix(const ScatteringResult& r);

struct ScanPoint {
    double v = 0.0;
    std::optional<ScatteringResult> result;
    std::string error;  // empty on success
};

std::vector<ScanPoint> scan_velocities(const PotentialSpec& spec,
                                       const std::vector<double>& velocities,
                                       const UnitSystem& units, const SolverConfig& cfg,
                                       int threads = 0);

}  // namespace atomdiode
