#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "atomdiode/fft.hpp"
#include "atomdiode/potential.hpp"
#include "atomdiode/rng.hpp"
#include "atomdiode/units.hpp"

namespace atomdiode {

// Uniform periodic spatial grid; x_j = x_min + j dx, j = 0..n-1.
struct Grid {
    double x_min = 0.0;  // um
    double x_max = 0.0;  // um
    int n = 0;           // power of two preferred

    double length() const { return x_max - x_min; }
    double dx() const { return length() / n; }
    double x(int j) const { return x_min + j * dx(); }
    // Signed wavenumber of bin j (1/um), FFT ordering.
    double k(int j) const {
        const int jj = (j <= n / 2) ? j : j - n;
        return 2.0 * M_PI * jj / length();
    }
};

// Resolution rule: the largest wavenumber the state can reach must satisfy
// k_max * dx < pi/4.
void require_grid_resolution(const Grid& grid, const UnitSystem& units, double v_abs_max);

struct WavePacket {
    Grid grid;
    int channels = 3;
    CplxVector psi;  // channel-major: psi[c*n + j]
    double time = 0.0;

    std::complex<double>* channel(int c) { return psi.data() + static_cast<size_t>(c) * grid.n; }
    const std::complex<double>* channel(int c) const {
        return psi.data() + static_cast<size_t>(c) * grid.n;
    }
    double norm_sq() const;
    double channel_norm_sq(int c) const;
};

// Gaussian packet in the ground channel:
// psi_1(x) ~ exp(-(dv0 m/hbar / 2)(x-x0)^2 + i v0 (m/hbar) x), discrete norm 1.
// dv0 enters literally as the exponent coefficient.
WavePacket initial_wavepacket(const Grid& grid, int channels, double x0, double v0,
                              double dv0, const UnitSystem& units);

struct OpenSystemParams {
    double gamma = 0.0;  // 1/us, decay rate from the top to the ground channel
    double v_rec = 0.0;  // um/us, recoil velocity
    double t_max = 0.0;  // us
    double dt = 0.0;     // us; 0 selects 0.05 rad of potential/kinetic phase per substep
    double v_abs_max = 0.0;  // um/us, bound on reachable velocity, for the grid check
};

// Emission direction cosine with density (3/8)(1+u^2) on [-1,1], by
// closed-form inversion of the cubic CDF.
double sample_recoil_u(Rng& rng);

// Spontaneous-emission collapse: the top-channel component is transferred to
// the ground channel with a recoil phase and unit norm.
void apply_jump(WavePacket& wp, double u, double v_rec, const UnitSystem& units);

// Strang split-step propagator for the effective (non-Hermitian) Hamiltonian
// H/hbar = k^2/(2 m/hbar) + V/hbar - i (gamma/2) |top><top|.
class SplitStepPropagator {
  public:
    SplitStepPropagator(const PotentialSpec& spec, const Grid& grid, const UnitSystem& units,
                        double gamma, double dt, double v_abs_max);
    ~SplitStepPropagator();
    SplitStepPropagator(const SplitStepPropagator&) = delete;
    SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

    double dt() const;
    const Grid& grid() const;

    // One half-kinetic / potential / half-kinetic step of size dt (or a
    // custom tau <= dt for jump-time refinement). Norm non-increasing.
    void step(WavePacket& wp) const;
    void step_custom(WavePacket& wp, double tau) const;

    double max_potential_frequency() const;  // spectral-norm bound on V/hbar (1/us)

    struct Impl;
    Impl* impl() const { return impl_.get(); }

  private:
    std::unique_ptr<Impl> impl_;
};

struct JumpEvent {
    double t = 0.0;  // us
    double u = 0.0;
};

struct TrajectoryResult {
    WavePacket final_packet;  // renormalized
    std::vector<JumpEvent> jumps;
};

// Monte Carlo wave function trajectory: propagate with the effective
// Hamiltonian until the squared norm falls below a uniform draw, refine the
// jump time by bisection to dt/10, collapse, repeat until t_max.
TrajectoryResult run_trajectory(const SplitStepPropagator& prop, const OpenSystemParams& params,
                                const WavePacket& wp0, uint64_t seed);

// Probability of rightward motion in the ground and top channels (the middle
// channel is excluded).
double p_r(const WavePacket& wp);

// Signed-k momentum density per channel, ascending k order.
std::vector<std::vector<double>> momentum_density(const WavePacket& wp);

double mean_position(const WavePacket& wp);
double mean_velocity(const WavePacket& wp, const UnitSystem& units);
double mean_energy(const WavePacket& wp, const PotentialSpec& spec, const UnitSystem& units);

struct EnsembleOptions {
    int n = 2;                 // trajectory count, even
    uint64_t master_seed = 0;
    int threads = 0;           // 0 = hardware concurrency
    bool keep_density = true;  // accumulate momentum densities
};

struct EnsembleResult {
    int n = 0;
    double p_r_mean = 0.0;
    double error_bar = 0.0;  // |mean over n - mean over first n/2|
    double mean_jumps = 0.0;
    int failed = 0;
    std::vector<double> channel_populations;            // averaged final norms^2
    std::vector<std::vector<double>> momentum_density;  // averaged, per channel
    std::vector<double> p_r_per_trajectory;
    std::vector<std::vector<double>> populations_per_trajectory;  // [trajectory][channel]
};

// Deterministic given (master seed, n, grid, dt) regardless of thread count.
// Trajectories that never jump share the cached deterministic evolution, so
// the cost scales with the number of jumping trajectories.
EnsembleResult run_ensemble(const SplitStepPropagator& prop, const OpenSystemParams& params,
                            const WavePacket& wp0, const EnsembleOptions& opts);

}  // namespace atomdiode
