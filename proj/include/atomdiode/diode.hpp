#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atomdiode/scattering.hpp"

namespace atomdiode {

// Ground-state diode quantities at one signed velocity. Negative v denotes
// incidence from the right.
struct DiodePoint {
    double v = 0.0;        // um/us, signed
    double r2 = 0.0;       // |R-hat|^2
    double t2 = 0.0;       // |T-hat|^2
    double failure = 0.0;  // failure functional, when both sides are known
};

enum class Side { left, right };

// v > 0 side: R-hat = Rl_11, T-hat = Tl_d1 (upper channel out);
// v < 0 side: R-hat = Rr_11, T-hat = Tr_d1.
DiodePoint diode_quantities(const ScatteringResult& res, Side side);

// Sum of all unwanted ground-state scattering probabilities plus the deficits
// of the two wanted ones; the diode operates where this is < epsilon.
double failure_functional(const ScatteringResult& res_left, const ScatteringResult& res_right);

enum class LimitingSide { stirap_failure, reflection_failure };

std::string to_string(LimitingSide side);

struct VmaxSurfacePoint {
    double omega_hat = 0.0;  // 1/us
    double w_hat = 0.0;      // 1/us
    std::optional<double> v_max;  // um/us; empty if failure >= eps at v_min already
    LimitingSide limiting = LimitingSide::reflection_failure;
    std::string error;  // non-empty if the solver failed at some grid point
};

// Default velocity grid for the window search: v_min upward in 0.25 cm/s steps.
std::vector<double> default_vmax_grid(double v_min, double v_top);

// Largest grid velocity V such that failure(v) < eps for every grid point in
// [v_min, V], with a tag naming the failure-term group that binds just above.
VmaxSurfacePoint find_v_max(const PotentialSpec& spec, double eps,
                            const std::vector<double>& v_grid, const UnitSystem& units,
                            const SolverConfig& cfg);

std::vector<VmaxSurfacePoint> sweep_vmax_surface(const std::vector<double>& omega_grid,
                                                 const std::vector<double>& w_grid,
                                                 const ThreeLevelParams& geometry,
                                                 double eps, const std::vector<double>& v_grid,
                                                 const UnitSystem& units, const SolverConfig& cfg,
                                                 int threads = 0);

// Excited-state incidence on the two-level potential: the diode works in the
// opposite direction. Reports (|Tr_12|^2, |Rr_22|^2, |Tl_21|^2, |Rl_22|^2).
struct ReverseDiodePoint {
    double tr_12_sq = 0.0;
    double rr_22_sq = 0.0;
    double tl_21_sq = 0.0;
    double rl_22_sq = 0.0;
};

ReverseDiodePoint reverse_diode_check(const ScatteringResult& res);

}  // namespace atomdiode
