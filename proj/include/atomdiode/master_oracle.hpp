#pragma once

#include <Eigen/Dense>

#include "atomdiode/dynamics.hpp"
#include "atomdiode/potential.hpp"
#include "atomdiode/units.hpp"

namespace atomdiode {

// Small-grid master-equation reference solver. Evolves the full density
// matrix of the three-channel system under the Lindblad generator whose
// unravelling the Monte Carlo trajectories sample:
//   d rho/dt = -i[K + U, rho]
//              + gamma * Integral du (3/8)(1+u^2) J_u rho J_u^dag
//              - (gamma/2){|top><top|, rho}
// with J_u transferring the top channel to the ground channel with recoil
// phase exp(i (m/hbar) v_rec u x). The recoil integral is evaluated by
// 8-node Gauss-Legendre quadrature, which folds into a fixed kernel in the
// position representation. Time stepping is classical RK4; the kinetic
// commutator is applied spectrally. Deliberately simple and dense: the grid
// is capped at 256 points.
struct MasterParams {
    PotentialSpec spec;
    Grid grid;
    UnitSystem units;
    double gamma = 0.0;  // 1/us
    double v_rec = 0.0;  // um/us
    double t_max = 0.0;  // us
    double dt = 0.0;     // us; 0 selects 0.01 rad of phase per step
    double v_abs_max = 0.0;
};

struct MasterResult {
    Eigen::MatrixXcd rho;  // (channels*n) x (channels*n), position basis
    double trace = 0.0;    // with the dx weight; 1 up to integrator error
    double trace_drift = 0.0;  // |trace - 1|
    double p_r = 0.0;
    std::vector<double> channel_populations;
};

// rho(0) = |psi0><psi0| (psi0 has discrete norm 1).
MasterResult evolve_master(const MasterParams& params, const WavePacket& psi0);

// Rightward probability of a density matrix, same convention as p_r for
// pure states: positive-k diagonal weight of the ground and top channels,
// normalized by the trace.
double master_p_r(const Eigen::MatrixXcd& rho, const Grid& grid, int channels);

}  // namespace atomdiode
