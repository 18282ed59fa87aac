// atomdiode: scattering scans, operating-window sweeps, and Monte Carlo
// wavepacket ensembles for the three-level atom-diode potential.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "atomdiode/config.hpp"
#include "atomdiode/csv.hpp"
#include "atomdiode/diode.hpp"
#include "atomdiode/dynamics.hpp"
#include "atomdiode/master_oracle.hpp"
#include "atomdiode/potential.hpp"
#include "atomdiode/scattering.hpp"
#include "atomdiode/units.hpp"

namespace {

using namespace atomdiode;

constexpr const char* kVersion = "atomdiode 1.0.0";

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::optional<uint64_t> seed;
    int threads = 0;
};

UnitSystem units_from(const Config& cfg) {
    return UnitSystem(cfg.number("units", "m_over_hbar", neon_m_over_hbar));
}

// [potential] section; amplitudes in Msi, lengths in um.
PotentialSpec potential_from(const Config& cfg) {
    const std::string type = cfg.get("potential", "type");
    if (type == "three-level") {
        ThreeLevelParams p;
        p.omega_hat = cfg.number("potential", "omega_hat") * msi;
        p.w_hat = cfg.number("potential", "w_hat") * msi;
        p.x_p = cfg.number("potential", "x_p", p.x_p);
        p.x_s = cfg.number("potential", "x_s", p.x_s);
        p.x_w = cfg.number("potential", "x_w", p.x_w);
        p.delta_x = cfg.number("potential", "delta_x", p.delta_x);
        return build_three_level(p);
    }
    if (type == "two-level") {
        TwoLevelParams p;
        p.f_hat_sq = cfg.number("potential", "f_hat_sq") * msi;
        p.x_p = cfg.number("potential", "x_p", p.x_p);
        p.x_s = cfg.number("potential", "x_s", p.x_s);
        p.delta_x = cfg.number("potential", "delta_x", p.delta_x);
        return build_two_level(p);
    }
    if (type == "square") {
        return build_square_barrier(cfg.number("potential", "height") * msi,
                                    cfg.number("potential", "a"), cfg.number("potential", "b"));
    }
    throw Config::Error("config field [potential] type: unknown value '" + type +
                        "' (expected three-level, two-level, or square)");
}

SolverConfig solver_from(const Config& cfg) {
    SolverConfig sc;
    sc.rel_tol = cfg.number("solver", "rel_tol", sc.rel_tol);
    sc.abs_tol = cfg.number("solver", "abs_tol", sc.abs_tol);
    sc.initial_step = cfg.number("solver", "initial_step", sc.initial_step);
    sc.max_slabs = cfg.integer("solver", "max_slabs", sc.max_slabs);
    if (!(sc.rel_tol > 0.0) || !(sc.abs_tol > 0.0))
        throw Config::Error("config field [solver] rel_tol/abs_tol: must be positive");
    return sc;
}

Grid grid_from(const Config& cfg) {
    Grid g;
    g.x_min = cfg.number("grid", "x_min");
    g.x_max = cfg.number("grid", "x_max");
    g.n = static_cast<int>(cfg.integer("grid", "n"));
    if (!(g.x_max > g.x_min) || g.n < 2)
        throw Config::Error("config section [grid]: need x_max > x_min and n >= 2");
    return g;
}

std::vector<std::string> provenance(const Config& cfg, const std::string& command,
                                    std::optional<uint64_t> seed) {
    std::vector<std::string> lines;
    lines.push_back("generator: " + std::string(kVersion));
    lines.push_back("command: " + command);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "config-hash: %016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    lines.push_back(hash);
    if (seed) lines.push_back("seed: " + std::to_string(*seed));
    return lines;
}

void emit(const ResultTable& table, const std::string& out_path) {
    if (out_path.empty() || out_path == "-")
        std::cout << table.to_csv();
    else
        table.write(out_path);
}

// ---------------------------------------------------------------------------

int cmd_scan(const Config& cfg, const CommonArgs& args) {
    const UnitSystem units = units_from(cfg);
    const PotentialSpec spec = potential_from(cfg);
    const SolverConfig sc = solver_from(cfg);

    std::vector<double> velocities;  // cm/s as configured
    if (cfg.has("scan", "v_list")) {
        velocities = cfg.number_list("scan", "v_list");
    } else {
        const double lo = cfg.number("scan", "v_min");
        const double hi = cfg.number("scan", "v_max");
        const long count = cfg.integer("scan", "v_count");
        if (count < 0 || (count > 1 && !(hi > lo)))
            throw Config::Error("config section [scan]: need v_count >= 0 and v_max > v_min");
        for (long i = 0; i < count; ++i)
            velocities.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }

    std::vector<double> v_internal;
    for (const double v : velocities) {
        if (!(v > 0.0)) throw Config::Error("config section [scan]: velocities must be positive");
        v_internal.push_back(v * cm_per_s);
    }

    const auto points = scan_velocities(spec, v_internal, units, sc, args.threads);

    ResultTable table;
    table.provenance = provenance(cfg, "scan", std::nullopt);
    table.columns = {"v_cm_s", "R2_forward", "T2_forward", "R2_backward", "T2_backward",
                     "failure"};
    for (size_t i = 0; i < points.size(); ++i) {
        if (!points[i].result) {
            std::cerr << "scan: v = " << velocities[i] << " cm/s: " << points[i].error << "\n";
            return 2;
        }
        const ScatteringResult& res = *points[i].result;
        const DiodePoint fwd = diode_quantities(res, Side::left);
        const DiodePoint bwd = diode_quantities(res, Side::right);
        table.add_row({format_number(velocities[i]), format_number(fwd.r2),
                       format_number(fwd.t2), format_number(bwd.r2), format_number(bwd.t2),
                       format_number(failure_functional(res, res))});
    }
    emit(table, args.out_path);
    return 0;
}

int cmd_vmax(const Config& cfg, const CommonArgs& args) {
    const UnitSystem units = units_from(cfg);
    const SolverConfig sc = solver_from(cfg);

    ThreeLevelParams geom;
    geom.x_p = cfg.number("potential", "x_p", geom.x_p);
    geom.x_s = cfg.number("potential", "x_s", geom.x_s);
    geom.x_w = cfg.number("potential", "x_w", geom.x_w);
    geom.delta_x = cfg.number("potential", "delta_x", geom.delta_x);

    auto axis = [&](const std::string& prefix) {
        if (cfg.has("vmax", prefix + "_list")) return cfg.number_list("vmax", prefix + "_list");
        const double lo = cfg.number("vmax", prefix + "_min");
        const double hi = cfg.number("vmax", prefix + "_max");
        const long count = cfg.integer("vmax", prefix + "_count");
        std::vector<double> out;
        for (long i = 0; i < count; ++i)
            out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
        return out;
    };
    std::vector<double> omega_msi = axis("omega");
    std::vector<double> w_msi = axis("w");
    std::vector<double> omega_grid, w_grid;
    for (const double o : omega_msi) omega_grid.push_back(o * msi);
    for (const double w : w_msi) w_grid.push_back(w * msi);

    const double eps = cfg.number("vmax", "epsilon", 0.01);
    const double v_min = cfg.number("vmax", "v_min", 0.25) * cm_per_s;
    const double v_top = cfg.number("vmax", "v_top", 30.0) * cm_per_s;
    const auto v_grid = default_vmax_grid(v_min, v_top);

    const auto points =
        sweep_vmax_surface(omega_grid, w_grid, geom, eps, v_grid, units, sc, args.threads);

    ResultTable table;
    table.provenance = provenance(cfg, "vmax", std::nullopt);
    table.columns = {"omega_hat_Msi", "w_hat_Msi", "v_max_cm_s", "limiting_side"};
    for (const auto& p : points) {
        if (!p.error.empty()) {
            std::cerr << "vmax: omega_hat = " << p.omega_hat << ", w_hat = " << p.w_hat << ": "
                      << p.error << "\n";
            return 2;
        }
        table.add_row({format_number(p.omega_hat / msi), format_number(p.w_hat / msi),
                       p.v_max ? format_number(*p.v_max / cm_per_s) : std::string(),
                       to_string(p.limiting)});
    }
    emit(table, args.out_path);
    return 0;
}

int cmd_ensemble(const Config& cfg, const CommonArgs& args) {
    const UnitSystem units = units_from(cfg);
    const PotentialSpec spec = potential_from(cfg);
    const Grid grid = grid_from(cfg);

    const std::vector<double> v0_cms = cfg.number_list("ensemble", "v0_list");
    const double dv0 = cfg.number("ensemble", "dv0") * cm_per_s;
    const double gamma = cfg.number("ensemble", "gamma") * per_s;
    const double v_rec = cfg.number("ensemble", "v_rec") * cm_per_s;
    const double x0_left = cfg.number("ensemble", "x0", 40.0);
    const double x0_right = cfg.number("ensemble", "x0_right", 360.0);
    const double span = cfg.number("ensemble", "span", 400.0);  // um, sets default t_max
    const long n = cfg.integer("ensemble", "n");
    const uint64_t seed = args.seed ? *args.seed
                                    : static_cast<uint64_t>(cfg.integer("ensemble", "seed", 0));

    ResultTable table;
    table.provenance = provenance(cfg, "ensemble", seed);
    table.provenance.push_back("trajectories: " + std::to_string(n));
    table.columns = {"v0_cm_s", "p_r", "error_bar", "mean_jumps", "failed"};

    const std::string density_out = cfg.get("ensemble", "density_out", "");

    for (const double v0_cm : v0_cms) {
        const double v0 = v0_cm * cm_per_s;
        if (v0 == 0.0) throw Config::Error("config field [ensemble] v0_list: v0 must be nonzero");
        const double sigma_v = std::sqrt(dv0 / (2.0 * units.m_over_hbar));

        OpenSystemParams params;
        params.gamma = gamma;
        params.v_rec = v_rec;
        params.dt = cfg.number("ensemble", "dt", 0.0);
        params.v_abs_max = std::abs(v0) + 4.0 * sigma_v + v_rec;
        params.t_max = cfg.number("ensemble", "t_max", span / std::abs(v0));

        const double x0 = v0 > 0.0 ? x0_left : x0_right;
        SplitStepPropagator prop(spec, grid, units, gamma, params.dt, params.v_abs_max);
        params.t_max = prop.dt() * std::max<long>(1, std::lround(params.t_max / prop.dt()));
        const WavePacket wp0 = initial_wavepacket(grid, spec.dim, x0, v0, dv0, units);

        EnsembleOptions opts;
        opts.n = static_cast<int>(n);
        opts.master_seed = seed;
        opts.threads = args.threads;
        opts.keep_density = !density_out.empty();
        const EnsembleResult res = run_ensemble(prop, params, wp0, opts);

        table.add_row({format_number(v0_cm), format_number(res.p_r_mean),
                       format_number(res.error_bar), format_number(res.mean_jumps),
                       std::to_string(res.failed)});

        if (!density_out.empty()) {
            ResultTable dens;
            dens.provenance = table.provenance;
            dens.provenance.push_back("v0_cm_s: " + format_number(v0_cm));
            dens.columns = {"k_per_um", "density_ch1", "density_ch2", "density_ch3"};
            const int nn = grid.n;
            for (int i = 0; i < nn; ++i) {
                const double k = 2.0 * M_PI * (i - nn / 2) / grid.length();
                dens.add_row({format_number(k), format_number(res.momentum_density[0][i]),
                              format_number(res.momentum_density[1][i]),
                              format_number(res.momentum_density[2][i])});
            }
            dens.write(density_out + "." + format_number(v0_cm) + ".csv");
        }
    }
    emit(table, args.out_path);
    return 0;
}

int cmd_oracle(const Config& cfg, const CommonArgs& args) {
    const UnitSystem units = units_from(cfg);
    const PotentialSpec spec = potential_from(cfg);
    const Grid grid = grid_from(cfg);
    if (grid.n > 256)
        throw Config::Error("config field [grid] n: the oracle is capped at 256 points");

    const double gamma = cfg.number("oracle", "gamma") * per_s;
    const double v_rec = cfg.number("oracle", "v_rec") * cm_per_s;
    const double t_max = cfg.number("oracle", "t_max");
    const double x0 = cfg.number("oracle", "x0");
    const double v0 = cfg.number("oracle", "v0") * cm_per_s;
    const double dv0 = cfg.number("oracle", "dv0") * cm_per_s;
    const long n = cfg.integer("oracle", "n");
    const long snapshots = cfg.integer("oracle", "snapshots", 4);
    const uint64_t seed = args.seed ? *args.seed
                                    : static_cast<uint64_t>(cfg.integer("oracle", "seed", 0));

    const double sigma_v = std::sqrt(dv0 / (2.0 * units.m_over_hbar));
    const double v_abs_max = std::abs(v0) + 4.0 * sigma_v + v_rec;
    const WavePacket wp0 = initial_wavepacket(grid, spec.dim, x0, v0, dv0, units);

    ResultTable table;
    table.provenance = provenance(cfg, "oracle", seed);
    table.columns = {"t_us",    "pop1_mc", "pop2_mc", "pop3_mc", "p_r_mc",
                     "err_mc",  "pop1_me", "pop2_me", "pop3_me", "p_r_me"};

    for (long s = 1; s <= snapshots; ++s) {
        const double t = t_max * s / snapshots;

        OpenSystemParams params;
        params.gamma = gamma;
        params.v_rec = v_rec;
        params.v_abs_max = v_abs_max;
        params.dt = cfg.number("oracle", "dt", 0.0);
        SplitStepPropagator prop(spec, grid, units, gamma, params.dt, v_abs_max);
        params.t_max = prop.dt() * std::max<long>(1, std::lround(t / prop.dt()));

        EnsembleOptions opts;
        opts.n = static_cast<int>(n);
        opts.master_seed = seed;
        opts.threads = args.threads;
        opts.keep_density = false;
        const EnsembleResult mc = run_ensemble(prop, params, wp0, opts);

        MasterParams mp;
        mp.spec = spec;
        mp.grid = grid;
        mp.units = units;
        mp.gamma = gamma;
        mp.v_rec = v_rec;
        mp.t_max = params.t_max;  // same rounded horizon as the trajectories
        mp.dt = cfg.number("oracle", "dt_master", 0.0);
        mp.v_abs_max = v_abs_max;
        const MasterResult me = evolve_master(mp, wp0);

        table.add_row({format_number(params.t_max), format_number(mc.channel_populations[0]),
                       format_number(mc.channel_populations[1]),
                       format_number(mc.channel_populations[2]), format_number(mc.p_r_mean),
                       format_number(mc.error_bar), format_number(me.channel_populations[0]),
                       format_number(me.channel_populations[1]),
                       format_number(me.channel_populations[2]), format_number(me.p_r)});
    }
    emit(table, args.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atom-diode scattering and open-system wavepacket simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    std::string command;
    for (const auto& [name, help] :
         std::vector<std::pair<std::string, std::string>>{
             {"scan", "Velocity scan of the diode reflection/transmission probabilities"},
             {"vmax", "Operating-window sweep over the laser-intensity plane"},
             {"ensemble", "Monte Carlo wavepacket ensemble with decay and recoil"},
             {"oracle", "Small-grid trajectory-vs-master-equation comparison"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config_path, "Configuration file")->required();
        sub->add_option("--seed", args.seed, "Master seed override");
        sub->add_option("--threads", args.threads, "Worker threads (speed only; 0 = auto)");
        sub->add_option("--out", args.out_path, "Output CSV path (default: stdout)");
        sub->callback([&command, name = name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const atomdiode::Config cfg = atomdiode::Config::parse_file(args.config_path);
        if (command == "scan") return cmd_scan(cfg, args);
        if (command == "vmax") return cmd_vmax(cfg, args);
        if (command == "ensemble") return cmd_ensemble(cfg, args);
        return cmd_oracle(cfg, args);
    } catch (const atomdiode::Config::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
