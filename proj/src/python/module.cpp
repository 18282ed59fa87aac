#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "atomdiode/diode.hpp"
#include "atomdiode/dynamics.hpp"
#include "atomdiode/master_oracle.hpp"
#include "atomdiode/potential.hpp"
#include "atomdiode/scattering.hpp"
#include "atomdiode/units.hpp"

namespace py = pybind11;
using namespace atomdiode;

PYBIND11_MODULE(_atomdiode, m) {
    m.doc() = "Three-level atom-diode simulator: stationary scattering, operating-window "
              "search, and Monte Carlo open-system wavepacket dynamics";

    m.attr("CM_PER_S") = cm_per_s;
    m.attr("PER_S") = per_s;
    m.attr("NEON_M_OVER_HBAR") = neon_m_over_hbar;

    py::class_<UnitSystem>(m, "UnitSystem")
        .def(py::init<>())
        .def(py::init<double>(), py::arg("m_over_hbar"))
        .def_readonly("m_over_hbar", &UnitSystem::m_over_hbar)
        .def("wavenumber", &UnitSystem::wavenumber)
        .def("kinetic_frequency", &UnitSystem::kinetic_frequency);

    py::class_<ThreeLevelParams>(m, "ThreeLevelParams")
        .def(py::init([](double omega_hat, double w_hat, double x_p, double x_s, double x_w,
                         double delta_x) {
                 return ThreeLevelParams{omega_hat, w_hat, x_p, x_s, x_w, delta_x};
             }),
             py::arg("omega_hat"), py::arg("w_hat"), py::arg("x_p") = 170.0,
             py::arg("x_s") = 140.0, py::arg("x_w") = 260.0, py::arg("delta_x") = 15.0)
        .def_readwrite("omega_hat", &ThreeLevelParams::omega_hat)
        .def_readwrite("w_hat", &ThreeLevelParams::w_hat);

    py::class_<TwoLevelParams>(m, "TwoLevelParams")
        .def(py::init([](double f_hat_sq, double x_p, double x_s, double delta_x) {
                 return TwoLevelParams{f_hat_sq, x_p, x_s, delta_x};
             }),
             py::arg("f_hat_sq"), py::arg("x_p") = 170.0, py::arg("x_s") = 140.0,
             py::arg("delta_x") = 15.0);

    py::class_<PotentialSpec>(m, "PotentialSpec")
        .def_readonly("dim", &PotentialSpec::dim)
        .def_readonly("x_left", &PotentialSpec::x_left)
        .def_readonly("x_right", &PotentialSpec::x_right)
        .def("__call__", &PotentialSpec::operator());

    m.def("build_three_level", &build_three_level);
    m.def("build_two_level", &build_two_level);
    m.def("build_square_barrier", &build_square_barrier, py::arg("height"), py::arg("a"),
          py::arg("b"));

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("rel_tol", &SolverConfig::rel_tol)
        .def_readwrite("abs_tol", &SolverConfig::abs_tol)
        .def_readwrite("initial_step", &SolverConfig::initial_step)
        .def_readwrite("max_slabs", &SolverConfig::max_slabs);

    py::class_<ScatteringResult>(m, "ScatteringResult")
        .def_readonly("v", &ScatteringResult::v)
        .def_readonly("Rl", &ScatteringResult::Rl)
        .def_readonly("Tl", &ScatteringResult::Tl)
        .def_readonly("Rr", &ScatteringResult::Rr)
        .def_readonly("Tr", &ScatteringResult::Tr)
        .def_readonly("error_estimate", &ScatteringResult::error_estimate);

    m.def("solve_scattering", &solve_scattering, py::arg("spec"), py::arg("v"),
          py::arg("units") = UnitSystem(), py::arg("config") = SolverConfig());
    m.def("assemble_s_matrix", &assemble_s_matrix);

    py::enum_<Side>(m, "Side").value("left", Side::left).value("right", Side::right);

    py::class_<DiodePoint>(m, "DiodePoint")
        .def_readonly("v", &DiodePoint::v)
        .def_readonly("r2", &DiodePoint::r2)
        .def_readonly("t2", &DiodePoint::t2);

    m.def("diode_quantities", &diode_quantities);
    m.def("failure_functional", &failure_functional);
    m.def("default_vmax_grid", &default_vmax_grid);

    py::enum_<LimitingSide>(m, "LimitingSide")
        .value("stirap_failure", LimitingSide::stirap_failure)
        .value("reflection_failure", LimitingSide::reflection_failure);

    py::class_<VmaxSurfacePoint>(m, "VmaxSurfacePoint")
        .def_readonly("omega_hat", &VmaxSurfacePoint::omega_hat)
        .def_readonly("w_hat", &VmaxSurfacePoint::w_hat)
        .def_readonly("v_max", &VmaxSurfacePoint::v_max)
        .def_readonly("limiting", &VmaxSurfacePoint::limiting)
        .def_readonly("error", &VmaxSurfacePoint::error);

    m.def("find_v_max", &find_v_max, py::arg("spec"), py::arg("eps"), py::arg("v_grid"),
          py::arg("units") = UnitSystem(), py::arg("config") = SolverConfig());

    py::class_<Grid>(m, "Grid")
        .def(py::init([](double x_min, double x_max, int n) {
                 return Grid{x_min, x_max, n};
             }),
             py::arg("x_min"), py::arg("x_max"), py::arg("n"))
        .def_readonly("x_min", &Grid::x_min)
        .def_readonly("x_max", &Grid::x_max)
        .def_readonly("n", &Grid::n)
        .def("dx", &Grid::dx);

    py::class_<WavePacket>(m, "WavePacket")
        .def_readonly("channels", &WavePacket::channels)
        .def_readonly("time", &WavePacket::time)
        .def("norm_sq", &WavePacket::norm_sq)
        .def("channel_norm_sq", &WavePacket::channel_norm_sq);

    m.def("initial_wavepacket", &initial_wavepacket, py::arg("grid"), py::arg("channels"),
          py::arg("x0"), py::arg("v0"), py::arg("dv0"), py::arg("units") = UnitSystem());
    m.def("p_r", &p_r);
    m.def("mean_position", &mean_position);
    m.def("mean_velocity", &mean_velocity, py::arg("packet"), py::arg("units") = UnitSystem());

    py::class_<OpenSystemParams>(m, "OpenSystemParams")
        .def(py::init<>())
        .def_readwrite("gamma", &OpenSystemParams::gamma)
        .def_readwrite("v_rec", &OpenSystemParams::v_rec)
        .def_readwrite("t_max", &OpenSystemParams::t_max)
        .def_readwrite("dt", &OpenSystemParams::dt)
        .def_readwrite("v_abs_max", &OpenSystemParams::v_abs_max);

    py::class_<SplitStepPropagator>(m, "SplitStepPropagator")
        .def(py::init<const PotentialSpec&, const Grid&, const UnitSystem&, double, double,
                      double>(),
             py::arg("spec"), py::arg("grid"), py::arg("units"), py::arg("gamma"),
             py::arg("dt"), py::arg("v_abs_max"))
        .def("dt", &SplitStepPropagator::dt)
        .def("step", &SplitStepPropagator::step);

    py::class_<EnsembleOptions>(m, "EnsembleOptions")
        .def(py::init<>())
        .def_readwrite("n", &EnsembleOptions::n)
        .def_readwrite("master_seed", &EnsembleOptions::master_seed)
        .def_readwrite("threads", &EnsembleOptions::threads)
        .def_readwrite("keep_density", &EnsembleOptions::keep_density);

    py::class_<EnsembleResult>(m, "EnsembleResult")
        .def_readonly("n", &EnsembleResult::n)
        .def_readonly("p_r_mean", &EnsembleResult::p_r_mean)
        .def_readonly("error_bar", &EnsembleResult::error_bar)
        .def_readonly("mean_jumps", &EnsembleResult::mean_jumps)
        .def_readonly("failed", &EnsembleResult::failed)
        .def_readonly("channel_populations", &EnsembleResult::channel_populations)
        .def_readonly("p_r_per_trajectory", &EnsembleResult::p_r_per_trajectory);

    m.def("run_ensemble", &run_ensemble, py::arg("propagator"), py::arg("params"),
          py::arg("initial"), py::arg("options"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<MasterParams>(m, "MasterParams")
        .def(py::init<>())
        .def_readwrite("spec", &MasterParams::spec)
        .def_readwrite("grid", &MasterParams::grid)
        .def_readwrite("units", &MasterParams::units)
        .def_readwrite("gamma", &MasterParams::gamma)
        .def_readwrite("v_rec", &MasterParams::v_rec)
        .def_readwrite("t_max", &MasterParams::t_max)
        .def_readwrite("dt", &MasterParams::dt)
        .def_readwrite("v_abs_max", &MasterParams::v_abs_max);

    py::class_<MasterResult>(m, "MasterResult")
        .def_readonly("trace", &MasterResult::trace)
        .def_readonly("trace_drift", &MasterResult::trace_drift)
        .def_readonly("p_r", &MasterResult::p_r)
        .def_readonly("channel_populations", &MasterResult::channel_populations);

    m.def("evolve_master", &evolve_master, py::call_guard<py::gil_scoped_release>());
}
