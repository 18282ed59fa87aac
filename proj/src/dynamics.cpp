#include "atomdiode/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <thread>

namespace atomdiode {

namespace {

using std::complex;
constexpr complex<double> im{0.0, 1.0};

// Channels below this squared norm are kinetically frozen (their FFTs are
// skipped); the potential step can always repopulate them.
constexpr double skip_channel_norm_sq = 1e-20;

// Per-point density threshold (relative to the maximum) defining the packet
// window inside which the potential matrices are applied.
constexpr double packet_window_rel = 1e-30;

}  // namespace

void require_grid_resolution(const Grid& grid, const UnitSystem& units, double v_abs_max) {
    const double k_max = units.wavenumber(v_abs_max);
    if (!(k_max * grid.dx() < M_PI / 4.0))
        throw std::invalid_argument(
            "grid too coarse: k_max * dx must stay below pi/4 for the reachable velocities");
}

double WavePacket::norm_sq() const {
    double s = 0.0;
    for (const auto& z : psi) s += std::norm(z);
    return s * grid.dx();
}

double WavePacket::channel_norm_sq(int c) const {
    const std::complex<double>* p = channel(c);
    double s = 0.0;
    for (int j = 0; j < grid.n; ++j) s += std::norm(p[j]);
    return s * grid.dx();
}

WavePacket initial_wavepacket(const Grid& grid, int channels, double x0, double v0,
                              double dv0, const UnitSystem& units) {
    if (grid.n < 2) throw std::invalid_argument("initial_wavepacket: empty grid");
    if (!(dv0 > 0.0)) throw std::invalid_argument("initial_wavepacket: dv0 must be positive");
    WavePacket wp;
    wp.grid = grid;
    wp.channels = channels;
    wp.psi.assign(static_cast<size_t>(channels) * grid.n, {0.0, 0.0});

    const double a = 0.5 * dv0 * units.m_over_hbar;  // envelope exponent coefficient
    const double kv = units.wavenumber(v0);
    std::complex<double>* g = wp.channel(0);
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.x(j);
        g[j] = std::exp(complex<double>(-a * (x - x0) * (x - x0), kv * x));
    }
    const double peak = std::exp(0.0);
    if (std::abs(g[0]) > 1e-10 * peak || std::abs(g[grid.n - 1]) > 1e-10 * peak)
        throw std::invalid_argument("initial_wavepacket: packet clipped by grid");
    const double norm = std::sqrt(wp.norm_sq());
    for (auto& z : wp.psi) z /= norm;
    return wp;
}

double sample_recoil_u(Rng& rng) {
    // Invert F(u) = 1/2 + (3/8)(u + u^3/3): u^3 + 3u = 8r - 4, solved by
    // Cardano (the discriminant is always positive).
    const double q = 8.0 * rng.uniform() - 4.0;
    const double s = std::sqrt(0.25 * q * q + 1.0);
    return std::cbrt(0.5 * q + s) + std::cbrt(0.5 * q - s);
}

void apply_jump(WavePacket& wp, double u, double v_rec, const UnitSystem& units) {
    const int n = wp.grid.n;
    const int top = wp.channels - 1;
    const double nrm = std::sqrt(wp.channel_norm_sq(top));
    if (!(nrm > 0.0)) throw std::runtime_error("apply_jump: top channel is empty");
    const double kick = units.m_over_hbar * v_rec * u;
    std::complex<double>* ground = wp.channel(0);
    std::complex<double>* excited = wp.channel(top);
    for (int j = 0; j < n; ++j) {
        const double x = wp.grid.x(j);
        ground[j] = std::exp(complex<double>(0.0, kick * x)) * excited[j] / nrm;
    }
    for (int c = 1; c < wp.channels; ++c)
        std::memset(wp.channel(c), 0, sizeof(complex<double>) * n);
}

// ---------------------------------------------------------------------------

struct SplitStepPropagator::Impl {
    PotentialSpec spec;
    Grid grid;
    UnitSystem units;
    double gamma = 0.0;
    double dt = 0.0;
    double v_abs_max = 0.0;
    int d = 3;
    int n = 0;
    int j0 = 0, j1 = 0;  // grid index range covering the potential support
    double pot_freq_max = 0.0;

    CplxVector kin_half;   // exp(-i (dt/2) k^2/(2 m/hbar)) / n
    CplxVector kin_full;   // exp(-i dt k^2/(2 m/hbar)) / n
    CplxVector kin_half_inv;
    CplxVector kin_full_inv;
    std::vector<complex<double>> pot;      // d*d matrices, point-major, for dt
    std::vector<complex<double>> pot_inv;  // built lazily for jump recovery
    double decay_half = 1.0;               // exp(-gamma dt / 2), outside the support
    Fft fft;

    Impl(const PotentialSpec& spec_, const Grid& grid_, const UnitSystem& units_,
         double gamma_, double dt_, double v_abs_max_)
        : spec(spec_), grid(grid_), units(units_), gamma(gamma_), v_abs_max(v_abs_max_),
          d(spec_.dim), n(grid_.n), fft(grid_.n) {
        if (gamma < 0.0) throw std::invalid_argument("propagator: gamma must be non-negative");
        require_grid_resolution(grid, units, v_abs_max);

        j0 = std::clamp(static_cast<int>(std::floor((spec.x_left - grid.x_min) / grid.dx())),
                        0, n);
        j1 = std::clamp(static_cast<int>(std::ceil((spec.x_right - grid.x_min) / grid.dx())) + 1,
                        0, n);

        for (int j = j0; j < j1; ++j) {
            const Eigen::MatrixXd u = spec(grid.x(j));
            double row_max = 0.0;
            for (int r = 0; r < d; ++r) row_max = std::max(row_max, u.row(r).cwiseAbs().sum());
            pot_freq_max = std::max(pot_freq_max, row_max);
        }

        // Both Strang factors are exact matrix exponentials, so stability is
        // unconditional; accuracy is governed by the kinetic phase of the
        // physically reachable wavenumbers (the packet only samples potential
        // regions up to its own energy scale), hence the kinetic bound here.
        dt = dt_;
        if (dt <= 0.0) dt = 0.05 / std::max(units.kinetic_frequency(v_abs_max), 1e-12);
        if (!(dt * units.kinetic_frequency(v_abs_max) < 0.25))
            throw std::invalid_argument("propagator: dt violates the 0.25 rad kinetic bound");

        kin_half = kinetic_phases(0.5 * dt, true);
        kin_full = kinetic_phases(dt, true);
        pot = build_pot(dt, 0, n);
        decay_half = std::exp(-0.5 * gamma * dt);
    }

    CplxVector kinetic_phases(double tau, bool normalized) const {
        CplxVector out(n);
        const double scale = normalized ? 1.0 / n : 1.0;
        for (int j = 0; j < n; ++j) {
            const double k = grid.k(j);
            out[j] = scale * std::exp(complex<double>(0.0, -tau * k * k / (2.0 * units.m_over_hbar)));
        }
        return out;
    }

    // exp(-i tau (U(x) - i (gamma/2) P_top)) for grid points [lo, hi) within
    // the support; identity elsewhere apart from the top-channel decay.
    std::vector<complex<double>> build_pot(double tau, int lo, int hi) const {
        const int a = std::max(lo, j0), b = std::min(hi, j1);
        std::vector<complex<double>> table(static_cast<size_t>(std::max(0, b - a)) * d * d);
        Eigen::MatrixXcd m(d, d);
        for (int j = a; j < b; ++j) {
            const Eigen::MatrixXd u = spec(grid.x(j));
            m = -im * tau * u.cast<complex<double>>();
            m(d - 1, d - 1) -= 0.5 * gamma * tau;
            const Eigen::MatrixXcd e = m.exp();
            complex<double>* dst = table.data() + static_cast<size_t>(j - a) * d * d;
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) dst[r * d + c] = e(r, c);
        }
        return table;
    }

    void apply_kinetic(WavePacket& wp, const CplxVector& phase) const {
        for (int c = 0; c < wp.channels; ++c) {
            complex<double>* ch = wp.channel(c);
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += std::norm(ch[j]);
            if (s * grid.dx() < skip_channel_norm_sq) continue;
            fft.forward(ch);
            for (int j = 0; j < n; ++j) ch[j] *= phase[j];
            fft.backward(ch);
        }
    }

    // Packet window [first, last) by per-point total density.
    std::pair<int, int> packet_window(const WavePacket& wp) const {
        std::vector<double> rho(n, 0.0);
        for (int c = 0; c < wp.channels; ++c) {
            const complex<double>* ch = wp.channel(c);
            for (int j = 0; j < n; ++j) rho[j] += std::norm(ch[j]);
        }
        const double cut = packet_window_rel * *std::max_element(rho.begin(), rho.end());
        int lo = 0, hi = n;
        while (lo < n && rho[lo] <= cut) ++lo;
        while (hi > lo && rho[hi - 1] <= cut) --hi;
        return {lo, hi};
    }

    void apply_potential(WavePacket& wp, const std::vector<complex<double>>& table,
                         int table_lo, double decay, bool invert_decay) const {
        const auto [wlo, whi] = packet_window(wp);
        const int a = std::max(wlo, j0), b = std::min(whi, j1);
        const double dk = invert_decay ? 1.0 / decay : decay;
        complex<double>* top = wp.channel(wp.channels - 1);
        // decay outside the support (within the packet window)
        for (int j = wlo; j < std::min(whi, j0); ++j) top[j] *= dk;
        for (int j = std::max(wlo, j1); j < whi; ++j) top[j] *= dk;

        complex<double> in[8], out[8];
        for (int j = a; j < b; ++j) {
            const complex<double>* m = table.data() + static_cast<size_t>(j - table_lo) * d * d;
            for (int c = 0; c < d; ++c) in[c] = wp.channel(c)[j];
            for (int r = 0; r < d; ++r) {
                complex<double> acc{0.0, 0.0};
                for (int c = 0; c < d; ++c) acc += m[r * d + c] * in[c];
                out[r] = acc;
            }
            for (int c = 0; c < d; ++c) wp.channel(c)[j] = out[c];
        }
    }

    void ensure_inverse_tables() {
        if (pot_inv.empty()) {
            pot_inv = build_pot(-dt, 0, n);
            kin_half_inv = kinetic_phases(-0.5 * dt, true);
            kin_full_inv = kinetic_phases(-dt, true);
        }
    }
};

SplitStepPropagator::SplitStepPropagator(const PotentialSpec& spec, const Grid& grid,
                                         const UnitSystem& units, double gamma, double dt,
                                         double v_abs_max)
    : impl_(std::make_unique<Impl>(spec, grid, units, gamma, dt, v_abs_max)) {}

SplitStepPropagator::~SplitStepPropagator() = default;

double SplitStepPropagator::dt() const { return impl_->dt; }
const Grid& SplitStepPropagator::grid() const { return impl_->grid; }
double SplitStepPropagator::max_potential_frequency() const { return impl_->pot_freq_max; }

void SplitStepPropagator::step(WavePacket& wp) const {
    Impl& p = *impl_;
    p.apply_kinetic(wp, p.kin_half);
    p.apply_potential(wp, p.pot, p.j0, p.decay_half, false);
    p.apply_kinetic(wp, p.kin_half);
    wp.time += p.dt;
}

void SplitStepPropagator::step_custom(WavePacket& wp, double tau) const {
    Impl& p = *impl_;
    if (!(tau >= 0.0 && tau <= p.dt + 1e-15))
        throw std::invalid_argument("step_custom: tau outside [0, dt]");
    if (tau == 0.0) return;
    const CplxVector half = p.kinetic_phases(0.5 * tau, true);
    const auto [wlo, whi] = p.packet_window(wp);
    const auto table = p.build_pot(tau, wlo, whi);
    p.apply_kinetic(wp, half);
    p.apply_potential(wp, table, std::max(wlo, p.j0), std::exp(-0.5 * p.gamma * tau), false);
    p.apply_kinetic(wp, half);
    wp.time += tau;
}

// ---------------------------------------------------------------------------
// Trajectory machinery. The production loop merges the trailing and leading
// half-kinetic steps of consecutive Strang steps; states held between steps
// are "post-potential" and still need one trailing half-kinetic step to be
// physical. Their norm already equals the physical norm, which is all the
// jump detection needs.

namespace {

struct MergedEvolution {
    const SplitStepPropagator::Impl& p;

    // Fresh start from a physical state at step index s. Runs to step index
    // stop; returns the step index m (s < m <= stop) at which norm^2 first
    // drops to r2, leaving wp as the post-potential state at m, or -1 if the
    // end was reached, leaving wp physical.
    long run(WavePacket& wp, long s, long stop, double r2,
             std::vector<double>* norm_log = nullptr,
             const std::function<void(long, const WavePacket&)>& on_step = nullptr) const {
        p.apply_kinetic(wp, p.kin_half);
        for (long m = s + 1; m <= stop; ++m) {
            if (m > s + 1) p.apply_kinetic(wp, p.kin_full);
            p.apply_potential(wp, p.pot, p.j0, p.decay_half, false);
            const double ns = wp.norm_sq();
            if (norm_log) norm_log->push_back(ns);
            if (on_step) on_step(m, wp);
            if (ns <= r2) return m;
        }
        p.apply_kinetic(wp, p.kin_half);
        return -1;
    }

    // Same loop entered from a stored post-potential state at step index s.
    long run_from_merged(WavePacket& wp, long s, long stop, double r2) const {
        for (long m = s + 1; m <= stop; ++m) {
            p.apply_kinetic(wp, p.kin_full);
            p.apply_potential(wp, p.pot, p.j0, p.decay_half, false);
            if (wp.norm_sq() <= r2) return m;
        }
        p.apply_kinetic(wp, p.kin_half);
        return -1;
    }

    // Undo the last step of `run`: wp is the post-potential state at step m,
    // produced from a fresh start at step s; restores the physical state at
    // step m-1.
    void unwind_last_step(WavePacket& wp, long m, long s) const {
        const_cast<SplitStepPropagator::Impl&>(p).ensure_inverse_tables();
        p.apply_potential(wp, p.pot_inv, p.j0, p.decay_half, true);
        if (m > s + 1) {
            p.apply_kinetic(wp, p.kin_full_inv);
            p.apply_kinetic(wp, p.kin_half);
        } else {
            p.apply_kinetic(wp, p.kin_half_inv);
        }
    }
};

void check_edges(const WavePacket& wp) {
    const int n = wp.grid.n;
    double edge = 0.0, peak = 0.0;
    for (int c = 0; c < wp.channels; ++c) {
        const std::complex<double>* ch = wp.channel(c);
        for (int j = 0; j < n; ++j) peak = std::max(peak, std::norm(ch[j]));
        for (int j = 0; j < 3; ++j) {
            edge = std::max(edge, std::norm(ch[j]));
            edge = std::max(edge, std::norm(ch[n - 1 - j]));
        }
    }
    if (edge > 1e-12 * peak)
        throw std::runtime_error("trajectory: packet reached the grid boundary");
}

long step_count(const SplitStepPropagator& prop, const OpenSystemParams& params) {
    const long m = std::lround(params.t_max / prop.dt());
    if (m < 1 || std::abs(m * prop.dt() - params.t_max) > 1e-9 * params.t_max)
        throw std::invalid_argument("run: t_max must be an integer number of dt steps");
    return m;
}

// Locate the jump inside (t_{m-1}, t_m] by bisection to dt/10 and collapse.
// wp enters as the physical state at step m-1 and leaves as the physical
// state at step m (post jump). Returns the jump event.
JumpEvent resolve_jump(const SplitStepPropagator& prop, const OpenSystemParams& params,
                       WavePacket& wp, long m, double r2, Rng& rng,
                       const UnitSystem& units) {
    const double dt = prop.dt();
    double lo = 0.0, hi = dt;
    WavePacket probe;
    WavePacket at_hi = wp;
    prop.step_custom(at_hi, dt);
    while (hi - lo > dt / 10.0) {
        const double mid = 0.5 * (lo + hi);
        probe = wp;
        prop.step_custom(probe, mid);
        if (probe.norm_sq() <= r2) {
            hi = mid;
            at_hi = std::move(probe);
        } else {
            lo = mid;
        }
    }
    JumpEvent ev;
    ev.t = (m - 1) * dt + hi;
    ev.u = sample_recoil_u(rng);
    wp = std::move(at_hi);
    apply_jump(wp, ev.u, params.v_rec, units);
    wp.time = ev.t;
    // realign to the step grid
    prop.step_custom(wp, dt - hi);
    wp.time = m * dt;
    return ev;
}

void renormalize(WavePacket& wp) {
    const double nrm = std::sqrt(wp.norm_sq());
    for (auto& z : wp.psi) z /= nrm;
}

}  // namespace

TrajectoryResult run_trajectory(const SplitStepPropagator& prop, const OpenSystemParams& params,
                                const WavePacket& wp0, uint64_t seed) {
    const auto& impl = *prop.impl();
    const long total = step_count(prop, params);
    MergedEvolution evo{impl};
    Rng rng(seed);

    TrajectoryResult out;
    out.final_packet = wp0;
    WavePacket& wp = out.final_packet;
    long s = 0;
    double r2 = rng.uniform();
    while (true) {
        const long m = evo.run(wp, s, total, r2);
        if (m < 0) break;
        evo.unwind_last_step(wp, m, s);
        out.jumps.push_back(resolve_jump(prop, params, wp, m, r2, rng, impl.units));
        r2 = rng.uniform();
        s = m;
        if (s == total) {  // jump landed exactly on the final step
            break;
        }
    }
    wp.time = params.t_max;
    check_edges(wp);
    renormalize(wp);
    return out;
}

double p_r(const WavePacket& wp) {
    const int n = wp.grid.n;
    Fft fft(n);
    CplxVector buf(n);
    double pos = 0.0, total = 0.0;
    for (int c = 0; c < wp.channels; ++c) {
        std::copy(wp.channel(c), wp.channel(c) + n, buf.begin());
        fft.forward(buf.data());
        for (int j = 0; j < n; ++j) {
            const double w = std::norm(buf[j]);
            total += w;
            if (j >= 1 && j < n / 2 && c != 1) pos += w;
        }
    }
    return total > 0.0 ? pos / total : 0.0;
}

std::vector<std::vector<double>> momentum_density(const WavePacket& wp) {
    const int n = wp.grid.n;
    Fft fft(n);
    CplxVector buf(n);
    const double scale = wp.grid.dx() / n;
    std::vector<std::vector<double>> out(wp.channels, std::vector<double>(n));
    for (int c = 0; c < wp.channels; ++c) {
        std::copy(wp.channel(c), wp.channel(c) + n, buf.begin());
        fft.forward(buf.data());
        for (int i = 0; i < n; ++i) {
            const int l = (i + n / 2) % n;  // ascending signed k
            out[c][i] = scale * std::norm(buf[l]);
        }
    }
    return out;
}

double mean_position(const WavePacket& wp) {
    double m1 = 0.0, m0 = 0.0;
    for (int c = 0; c < wp.channels; ++c) {
        const std::complex<double>* ch = wp.channel(c);
        for (int j = 0; j < wp.grid.n; ++j) {
            const double w = std::norm(ch[j]);
            m0 += w;
            m1 += w * wp.grid.x(j);
        }
    }
    return m1 / m0;
}

double mean_velocity(const WavePacket& wp, const UnitSystem& units) {
    const int n = wp.grid.n;
    Fft fft(n);
    CplxVector buf(n);
    double m1 = 0.0, m0 = 0.0;
    for (int c = 0; c < wp.channels; ++c) {
        std::copy(wp.channel(c), wp.channel(c) + n, buf.begin());
        fft.forward(buf.data());
        for (int j = 0; j < n; ++j) {
            const double w = std::norm(buf[j]);
            m0 += w;
            m1 += w * wp.grid.k(j);
        }
    }
    return m1 / (m0 * units.m_over_hbar);
}

double mean_energy(const WavePacket& wp, const PotentialSpec& spec, const UnitSystem& units) {
    const int n = wp.grid.n;
    Fft fft(n);
    CplxVector buf(n);
    double kin = 0.0, m0 = 0.0;
    for (int c = 0; c < wp.channels; ++c) {
        std::copy(wp.channel(c), wp.channel(c) + n, buf.begin());
        fft.forward(buf.data());
        for (int j = 0; j < n; ++j) {
            const double w = std::norm(buf[j]);
            m0 += w;
            kin += w * units.kinetic_frequency(wp.grid.k(j) / units.m_over_hbar);
        }
    }
    kin /= m0;

    double pot = 0.0;
    std::vector<std::complex<double>> v(wp.channels);
    for (int j = 0; j < n; ++j) {
        const double x = wp.grid.x(j);
        if (x < spec.x_left || x > spec.x_right) continue;
        const Eigen::MatrixXd u = spec(x);
        for (int r = 0; r < wp.channels; ++r) {
            std::complex<double> acc{0.0, 0.0};
            for (int c = 0; c < wp.channels; ++c) acc += u(r, c) * wp.channel(c)[j];
            pot += std::real(std::conj(wp.channel(r)[j]) * acc);
        }
    }
    pot *= wp.grid.dx() / wp.norm_sq();
    return kin + pot;
}

// ---------------------------------------------------------------------------

namespace {

struct CachedPrefix {
    std::vector<double> norm_log;          // norm^2 after each step, 1-based step m at [m-1]
    std::vector<long> checkpoint_steps;    // step indices of stored merged states
    std::vector<WavePacket> checkpoints;   // post-potential states
    WavePacket final_packet;               // physical, renormalized
    double final_norm_sq = 1.0;
    double final_p_r = 0.0;
    std::vector<double> final_populations;
    std::vector<std::vector<double>> final_density;
};

struct TrajectoryOutput {
    bool ok = false;
    bool jumped = false;
    double p_r_value = 0.0;
    double jump_count = 0.0;
    std::vector<double> populations;
    std::vector<std::vector<double>> density;  // only stored when jumped
    std::string error;
};

}  // namespace

EnsembleResult run_ensemble(const SplitStepPropagator& prop, const OpenSystemParams& params,
                            const WavePacket& wp0, const EnsembleOptions& opts) {
    if (opts.n < 2 || opts.n % 2 != 0)
        throw std::invalid_argument("run_ensemble: n must be even and >= 2");
    const auto& impl = *prop.impl();
    const long total = step_count(prop, params);
    MergedEvolution evo{impl};

    // Deterministic no-jump evolution shared by every trajectory that never
    // collapses; checkpoints bound the replay cost for those that do.
    CachedPrefix cache;
    {
        const long ncheck = 16;
        const long stride = std::max<long>(1, total / ncheck);
        WavePacket wp = wp0;
        cache.norm_log.reserve(total);
        const long end = evo.run(wp, 0, total, -1.0, &cache.norm_log,
                                 [&](long m, const WavePacket& state) {
                                     if (m % stride == 0 && m < total) {
                                         cache.checkpoint_steps.push_back(m);
                                         cache.checkpoints.push_back(state);
                                     }
                                 });
        (void)end;
        wp.time = params.t_max;
        check_edges(wp);
        cache.final_norm_sq = wp.norm_sq();
        renormalize(wp);
        cache.final_packet = wp;
        cache.final_p_r = p_r(wp);
        for (int c = 0; c < wp.channels; ++c)
            cache.final_populations.push_back(wp.channel_norm_sq(c));
        if (opts.keep_density) cache.final_density = momentum_density(wp);
    }

    std::vector<TrajectoryOutput> results(opts.n);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < opts.n; i = next.fetch_add(1)) {
            TrajectoryOutput& out = results[i];
            try {
                Rng rng(trajectory_seed(opts.master_seed, static_cast<uint64_t>(i)));
                const double r2 = rng.uniform();
                if (cache.final_norm_sq > r2) {
                    out.ok = true;
                    out.p_r_value = cache.final_p_r;
                    out.populations = cache.final_populations;
                    continue;
                }
                // First step m with norm^2 <= r2 (the log is non-increasing).
                const auto it = std::lower_bound(cache.norm_log.begin(), cache.norm_log.end(),
                                                 r2, std::greater<double>());
                long m = static_cast<long>(it - cache.norm_log.begin()) + 1;
                // Replay from the last checkpoint before m.
                WavePacket wp;
                long s;
                const auto cp = std::upper_bound(cache.checkpoint_steps.begin(),
                                                 cache.checkpoint_steps.end(), m - 1);
                if (cp == cache.checkpoint_steps.begin()) {
                    wp = wp0;
                    s = 0;
                    m = evo.run(wp, s, total, r2);
                } else {
                    const size_t ci = (cp - cache.checkpoint_steps.begin()) - 1;
                    s = cache.checkpoint_steps[ci];
                    wp = cache.checkpoints[ci];
                    m = evo.run_from_merged(wp, s, total, r2);
                    // run_from_merged applies a full kinetic step first, so
                    // unwinding must take the m > s+1 branch regardless.
                    s = -1;
                }
                std::vector<JumpEvent> jumps;
                double r = r2;
                while (m >= 0) {
                    evo.unwind_last_step(wp, m, s < 0 ? m - 2 : s);
                    jumps.push_back(resolve_jump(prop, params, wp, m, r, rng, impl.units));
                    r = rng.uniform();
                    s = m;
                    if (s == total) break;
                    m = evo.run(wp, s, total, r);
                }
                wp.time = params.t_max;
                check_edges(wp);
                renormalize(wp);
                out.ok = true;
                out.jumped = true;
                out.jump_count = static_cast<double>(jumps.size());
                out.p_r_value = p_r(wp);
                for (int c = 0; c < wp.channels; ++c)
                    out.populations.push_back(wp.channel_norm_sq(c));
                if (opts.keep_density) out.density = momentum_density(wp);
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
            }
        }
    };

    int threads = opts.threads;
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, opts.n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Fixed-order reduction, independent of completion order.
    EnsembleResult res;
    res.n = opts.n;
    res.channel_populations.assign(wp0.channels, 0.0);
    if (opts.keep_density)
        res.momentum_density.assign(wp0.channels, std::vector<double>(wp0.grid.n, 0.0));
    double sum = 0.0, half_sum = 0.0, jump_sum = 0.0;
    int ok_count = 0, half_count = 0;
    for (int i = 0; i < opts.n; ++i) {
        const TrajectoryOutput& out = results[i];
        if (!out.ok) {
            ++res.failed;
            continue;
        }
        ++ok_count;
        sum += out.p_r_value;
        jump_sum += out.jump_count;
        res.p_r_per_trajectory.push_back(out.p_r_value);
        res.populations_per_trajectory.push_back(out.populations);
        if (i < opts.n / 2) {
            half_sum += out.p_r_value;
            ++half_count;
        }
        for (int c = 0; c < wp0.channels; ++c) res.channel_populations[c] += out.populations[c];
        if (opts.keep_density) {
            const auto& dens = out.jumped ? out.density : cache.final_density;
            for (int c = 0; c < wp0.channels; ++c)
                for (int j = 0; j < wp0.grid.n; ++j) res.momentum_density[c][j] += dens[c][j];
        }
    }
    if (ok_count == 0) throw std::runtime_error("run_ensemble: every trajectory failed");
    res.p_r_mean = sum / ok_count;
    res.mean_jumps = jump_sum / ok_count;
    res.error_bar = half_count > 0 ? std::abs(res.p_r_mean - half_sum / half_count) : 0.0;
    for (auto& p : res.channel_populations) p /= ok_count;
    if (opts.keep_density)
        for (auto& ch : res.momentum_density)
            for (auto& v : ch) v /= ok_count;
    return res;
}

}  // namespace atomdiode
