#include <doctest.h>

#include <complex>

#include "atomdiode/diode.hpp"

using namespace atomdiode;

namespace {

ScatteringResult free_result(int dim) {
    ScatteringResult res;
    res.v = 0.05;
    res.Rl = Eigen::MatrixXcd::Zero(dim, dim);
    res.Rr = Eigen::MatrixXcd::Zero(dim, dim);
    res.Tl = Eigen::MatrixXcd::Identity(dim, dim);
    res.Tr = Eigen::MatrixXcd::Identity(dim, dim);
    return res;
}

ScatteringResult perfect_diode() {
    ScatteringResult res;
    res.v = 0.05;
    res.Rl = Eigen::MatrixXcd::Zero(3, 3);
    res.Rr = Eigen::MatrixXcd::Zero(3, 3);
    res.Tl = Eigen::MatrixXcd::Zero(3, 3);
    res.Tr = Eigen::MatrixXcd::Zero(3, 3);
    res.Tl(2, 0) = 1.0;  // ground in from the left leaves in the upper channel
    res.Rr(0, 0) = 1.0;  // ground in from the right is reflected
    return res;
}

}  // namespace

TEST_CASE("diode quantities pick the paper's matrix elements") {
    const ScatteringResult free3 = free_result(3);
    const DiodePoint l = diode_quantities(free3, Side::left);
    CHECK(l.r2 == 0.0);
    CHECK(l.t2 == 0.0);  // T-hat is the upper-channel element, not the 1->1 one
    const DiodePoint r = diode_quantities(free3, Side::right);
    CHECK(r.r2 == 0.0);
    CHECK(r.t2 == 0.0);

    const ScatteringResult ideal = perfect_diode();
    CHECK(diode_quantities(ideal, Side::left).t2 == doctest::Approx(1.0));
    CHECK(diode_quantities(ideal, Side::left).r2 == doctest::Approx(0.0));
    CHECK(diode_quantities(ideal, Side::right).r2 == doctest::Approx(1.0));
    CHECK(diode_quantities(ideal, Side::right).t2 == doctest::Approx(0.0));
}

TEST_CASE("failure functional: analytic anchors") {
    CHECK(failure_functional(perfect_diode(), perfect_diode()) == doctest::Approx(0.0));
    // Free propagation: Tr_11 and Tl_11 each contribute 1, and both wanted
    // probabilities are missing entirely, so the value is exactly 4.
    const ScatteringResult free3 = free_result(3);
    CHECK(failure_functional(free3, free3) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("v_max grid construction") {
    const auto grid = default_vmax_grid(0.25 * cm_per_s, 1.0 * cm_per_s);
    REQUIRE(grid.size() == 4);
    CHECK(grid[0] == doctest::Approx(0.0025));
    CHECK(grid[3] == doctest::Approx(0.01));
}

TEST_CASE("reverse diode check picks excited-channel elements") {
    ScatteringResult res;
    res.v = 0.05;
    res.Rl = Eigen::MatrixXcd::Zero(2, 2);
    res.Rr = Eigen::MatrixXcd::Zero(2, 2);
    res.Tl = Eigen::MatrixXcd::Zero(2, 2);
    res.Tr = Eigen::MatrixXcd::Zero(2, 2);
    res.Tr(0, 1) = std::complex<double>(0.0, 1.0);
    res.Rr(1, 1) = 0.5;
    res.Tl(1, 0) = 0.25;
    res.Rl(1, 1) = 0.125;
    const ReverseDiodePoint p = reverse_diode_check(res);
    CHECK(p.tr_12_sq == doctest::Approx(1.0));
    CHECK(p.rr_22_sq == doctest::Approx(0.25));
    CHECK(p.tl_21_sq == doctest::Approx(0.0625));
    CHECK(p.rl_22_sq == doctest::Approx(0.015625));
}
