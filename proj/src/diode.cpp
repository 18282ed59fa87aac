#include "atomdiode/diode.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace atomdiode {

namespace {

double abs2(const std::complex<double>& z) { return std::norm(z); }

// The two failure-term groups of the window criterion: everything that can go
// wrong on the left-incidence (adiabatic transfer) side vs the
// right-incidence (barrier reflection) side.
struct FailureSplit {
    double stirap = 0.0;
    double reflection = 0.0;
    double total() const { return stirap + reflection; }
};

FailureSplit split_failure(const ScatteringResult& left, const ScatteringResult& right) {
    const int d = left.Rl.rows();
    if (right.Rl.rows() != d)
        throw std::invalid_argument("failure_functional: dimension mismatch");
    FailureSplit f;
    for (int a = 0; a < d; ++a) {
        f.stirap += abs2(left.Rl(a, 0));
        f.reflection += abs2(right.Tr(a, 0));
    }
    for (int a = 1; a < d; ++a) f.reflection += abs2(right.Rr(a, 0));
    for (int a = 0; a < d - 1; ++a) f.stirap += abs2(left.Tl(a, 0));
    f.stirap += 1.0 - abs2(left.Tl(d - 1, 0));
    f.reflection += 1.0 - abs2(right.Rr(0, 0));
    return f;
}

}  // namespace

DiodePoint diode_quantities(const ScatteringResult& res, Side side) {
    const int d = res.Rl.rows();
    DiodePoint p;
    if (side == Side::left) {
        p.v = res.v;
        p.r2 = abs2(res.Rl(0, 0));
        p.t2 = abs2(res.Tl(d - 1, 0));
    } else {
        p.v = -res.v;
        p.r2 = abs2(res.Rr(0, 0));
        p.t2 = abs2(res.Tr(d - 1, 0));
    }
    return p;
}

double failure_functional(const ScatteringResult& res_left, const ScatteringResult& res_right) {
    return split_failure(res_left, res_right).total();
}

std::string to_string(LimitingSide side) {
    return side == LimitingSide::stirap_failure ? "stirap-failure" : "reflection-failure";
}

std::vector<double> default_vmax_grid(double v_min, double v_top) {
    std::vector<double> grid;
    const double step = 0.25 * cm_per_s;
    for (double v = v_min; v <= v_top + 1e-12; v += step) grid.push_back(v);
    return grid;
}

VmaxSurfacePoint find_v_max(const PotentialSpec& spec, double eps,
                            const std::vector<double>& v_grid, const UnitSystem& units,
                            const SolverConfig& cfg) {
    if (v_grid.empty()) throw std::invalid_argument("find_v_max: empty velocity grid");
    VmaxSurfacePoint out;
    std::optional<double> last_ok;
    for (double v : v_grid) {
        ScatteringResult res;
        try {
            res = solve_scattering(spec, v, units, cfg);
        } catch (const std::exception& e) {
            out.error = e.what();
            break;
        }
        const FailureSplit f = split_failure(res, res);
        if (f.total() >= eps) {
            // Ties go to reflection failure, which dominates at these scales.
            out.limiting = f.stirap > f.reflection ? LimitingSide::stirap_failure
                                                   : LimitingSide::reflection_failure;
            out.v_max = last_ok;
            return out;
        }
        last_ok = v;
    }
    // Window extends past the grid (or the solver failed): classify at the
    // last examined point.
    if (last_ok) {
        const ScatteringResult res = solve_scattering(spec, *last_ok, units, cfg);
        const FailureSplit f = split_failure(res, res);
        out.limiting = f.stirap > f.reflection ? LimitingSide::stirap_failure
                                               : LimitingSide::reflection_failure;
    }
    out.v_max = last_ok;
    return out;
}

std::vector<VmaxSurfacePoint> sweep_vmax_surface(const std::vector<double>& omega_grid,
                                                 const std::vector<double>& w_grid,
                                                 const ThreeLevelParams& geometry,
                                                 double eps, const std::vector<double>& v_grid,
                                                 const UnitSystem& units, const SolverConfig& cfg,
                                                 int threads) {
    if (omega_grid.empty() || w_grid.empty())
        throw std::invalid_argument("sweep_vmax_surface: empty parameter grid");
    const size_t npts = omega_grid.size() * w_grid.size();
    std::vector<VmaxSurfacePoint> out(npts);

    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(npts)));

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < npts; i = next.fetch_add(1)) {
            const double om = omega_grid[i / w_grid.size()];
            const double w = w_grid[i % w_grid.size()];
            ThreeLevelParams p = geometry;
            p.omega_hat = om;
            p.w_hat = w;
            VmaxSurfacePoint pt;
            try {
                pt = find_v_max(build_three_level(p), eps, v_grid, units, cfg);
            } catch (const std::exception& e) {
                pt.error = e.what();
            }
            pt.omega_hat = om;
            pt.w_hat = w;
            out[i] = pt;
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return out;
}

ReverseDiodePoint reverse_diode_check(const ScatteringResult& res) {
    if (res.Rl.rows() != 2)
        throw std::invalid_argument("reverse_diode_check: requires a two-level result");
    ReverseDiodePoint p;
    p.tr_12_sq = abs2(res.Tr(0, 1));
    p.rr_22_sq = abs2(res.Rr(1, 1));
    p.tl_21_sq = abs2(res.Tl(1, 0));
    p.rl_22_sq = abs2(res.Rl(1, 1));
    return p;
}

}  // namespace atomdiode
