#include "swingid/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace swingid {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Neighbor coupling slice for `sub` out of the stacked global vector.
std::vector<double> neighbor_slice(const NetworkModel& model, int sub, const std::vector<double>& z_global) {
    std::vector<double> zn;
    zn.reserve(static_cast<size_t>(model.neighbor_coupling_dim(sub)));
    for (int j : model.subsystem(sub).neighbors) {
        const int off = model.coupling_offset(j);
        for (int c = 0; c < model.coupling_dim(j); ++c) zn.push_back(z_global[static_cast<size_t>(off + c)]);
    }
    return zn;
}

}  // namespace

SystemState initial_state(const NetworkModel& model) {
    SystemState x;
    x.theta.reserve(static_cast<size_t>(model.bus_count()));
    for (const Bus& b : model.buses()) x.theta.push_back(b.theta0);
    x.omega.assign(static_cast<size_t>(model.bus_count()), 0.0);
    return x;
}

SubsystemState<double> slice_state(const NetworkModel& model, int sub, const SystemState& x) {
    SubsystemState<double> xi;
    for (int m : model.subsystem(sub).members) {
        xi.theta.push_back(x.theta[static_cast<size_t>(m - 1)]);
        xi.omega.push_back(x.omega[static_cast<size_t>(m - 1)]);
    }
    return xi;
}

void unslice_state(const NetworkModel& model, int sub, const SubsystemState<double>& xi, SystemState& x) {
    const auto& members = model.subsystem(sub).members;
    for (size_t i = 0; i < members.size(); ++i) {
        x.theta[static_cast<size_t>(members[i] - 1)] = xi.theta[i];
        x.omega[static_cast<size_t>(members[i] - 1)] = xi.omega[i];
    }
}

std::pair<std::vector<double>, std::vector<double>> swing_rhs(const NetworkModel& model,
                                                              const std::vector<double>& theta,
                                                              const std::vector<double>& omega,
                                                              const std::vector<double>& u) {
    const int n = model.bus_count();
    if (static_cast<int>(theta.size()) != n || static_cast<int>(omega.size()) != n ||
        static_cast<int>(u.size()) != n)
        throw std::invalid_argument("swing_rhs: dimension mismatch");
    std::vector<double> dtheta(static_cast<size_t>(n)), domega(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Bus& bus = model.bus(i + 1);
        dtheta[static_cast<size_t>(i)] = omega[static_cast<size_t>(i)];
        double accel = u[static_cast<size_t>(i)] - bus.damping * omega[static_cast<size_t>(i)];
        for (const auto& ab : model.adjacent(i + 1))
            accel -= ab.stiffness * std::sin(theta[static_cast<size_t>(i)] - theta[static_cast<size_t>(ab.bus_id - 1)]);
        domega[static_cast<size_t>(i)] = accel / bus.inertia;
    }
    return {std::move(dtheta), std::move(domega)};
}

SubsystemState<double> step_subsystem(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> neighbor_z,
                                      double dt) {
    if (dt < 0.0) throw std::invalid_argument("step_subsystem: dt must be non-negative");
    return subsystem_step<double>(model, sub, x, inputs, neighbor_z, dt);
}

std::vector<double> couple(const NetworkModel& model, int sub, const SubsystemState<double>& x) {
    return couple_state<double>(model, sub, x);
}

std::vector<double> predict_nominal(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                    std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                    double dt) {
    return couple(model, sub, step_subsystem(model, sub, x, inputs, nominal_neighbor_z, dt));
}

std::vector<double> combine_neighbor_nominals(const NetworkModel& model, int sub,
                                              const std::map<int, std::vector<double>>& frames) {
    std::vector<double> zn;
    for (int j : model.subsystem(sub).neighbors) {
        auto it = frames.find(j);
        if (it == frames.end())
            throw std::invalid_argument("combine_neighbor_nominals: missing frame for subsystem " +
                                        model.subsystem(j).name);
        if (static_cast<int>(it->second.size()) != model.coupling_dim(j))
            throw std::invalid_argument("combine_neighbor_nominals: frame size mismatch for subsystem " +
                                        model.subsystem(j).name);
        zn.insert(zn.end(), it->second.begin(), it->second.end());
    }
    return zn;
}

SteadyStateInput steady_state_input(const NetworkModel& model, const std::vector<double>& theta0) {
    const int n = model.bus_count();
    if (static_cast<int>(theta0.size()) != n) throw std::invalid_argument("steady_state_input: dimension mismatch");
    SteadyStateInput out;
    out.u.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (const auto& ab : model.adjacent(i + 1))
            acc += ab.stiffness * std::sin(theta0[static_cast<size_t>(i)] - theta0[static_cast<size_t>(ab.bus_id - 1)]);
        out.u[static_cast<size_t>(i)] = acc;
        const Bus& bus = model.bus(i + 1);
        if (acc < bus.u_min - 1e-12 || acc > bus.u_max + 1e-12)
            out.warnings.push_back("bus " + std::to_string(bus.id) + ": balancing input " + fmt17(acc) +
                                   " outside box [" + fmt17(bus.u_min) + ", " + fmt17(bus.u_max) + "]");
    }
    return out;
}

std::vector<double> controller_step(const NetworkModel& model, const SystemState& x,
                                    const std::vector<double>& u_steady, double gain) {
    if (gain < 0.0) throw std::invalid_argument("controller_step: gain must be non-negative");
    const int n = model.bus_count();
    std::vector<double> u(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Bus& bus = model.bus(i + 1);
        const double raw = u_steady[static_cast<size_t>(i)] - gain * x.omega[static_cast<size_t>(i)];
        u[static_cast<size_t>(i)] = std::clamp(raw, bus.u_min, bus.u_max);
    }
    return u;
}

std::vector<double> stack_couplings(const NetworkModel& model, const SystemState& x) {
    std::vector<double> z(static_cast<size_t>(model.coupling_dim()));
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const auto& cb = model.subsystem(s).coupling_buses;
        const int off = model.coupling_offset(s);
        for (size_t c = 0; c < cb.size(); ++c)
            z[static_cast<size_t>(off) + c] = x.theta[static_cast<size_t>(cb[c] - 1)];
    }
    return z;
}

std::vector<std::vector<double>> split_couplings(const NetworkModel& model, const std::vector<double>& stacked) {
    if (static_cast<int>(stacked.size()) != model.coupling_dim())
        throw std::invalid_argument("split_couplings: size mismatch");
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<size_t>(model.subsystem_count()));
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const int off = model.coupling_offset(s);
        out.emplace_back(stacked.begin() + off, stacked.begin() + off + model.coupling_dim(s));
    }
    return out;
}

ClosedLoopStep closed_loop_step(const NetworkModel& model, const SystemState& x,
                                const std::vector<double>& z_nominal, const std::vector<double>& u_steady,
                                const AttackVector& attack, double dt, double controller_gain) {
    const int n = model.bus_count();
    ClosedLoopStep step;
    step.u = controller_step(model, x, u_steady, controller_gain);
    step.applied = step.u;
    for (const auto& [bus_id, delta] : attack) {
        if (bus_id < 1 || bus_id > n) throw std::invalid_argument("closed_loop_step: attack bus id out of range");
        const Bus& bus = model.bus(bus_id);
        step.applied[static_cast<size_t>(bus_id - 1)] =
            std::clamp(step.applied[static_cast<size_t>(bus_id - 1)] + delta, bus.u_min, bus.u_max);
    }

    const std::vector<double> z = stack_couplings(model, x);
    step.next = x;
    step.z_nominal_next.assign(z.size(), 0.0);
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const SubsystemState<double> xi = slice_state(model, s, x);
        std::vector<double> a_i, u_i;
        for (int m : model.subsystem(s).members) {
            a_i.push_back(step.applied[static_cast<size_t>(m - 1)]);
            u_i.push_back(step.u[static_cast<size_t>(m - 1)]);
        }
        // Plant: frozen measured neighbor couplings. Nominal: frozen
        // previously exchanged nominal frames, undisturbed input.
        const std::vector<double> zn_meas = neighbor_slice(model, s, z);
        const std::vector<double> zn_nom = neighbor_slice(model, s, z_nominal);
        unslice_state(model, s, step_subsystem(model, s, xi, a_i, zn_meas, dt), step.next);
        const std::vector<double> zbar = predict_nominal(model, s, xi, u_i, zn_nom, dt);
        const int off = model.coupling_offset(s);
        for (size_t c = 0; c < zbar.size(); ++c) step.z_nominal_next[static_cast<size_t>(off) + c] = zbar[c];
    }
    for (double v : step.next.theta)
        if (!std::isfinite(v)) throw NumericError("closed_loop_step: non-finite state");
    for (double v : step.next.omega)
        if (!std::isfinite(v)) throw NumericError("closed_loop_step: non-finite state");
    step.z_next = stack_couplings(model, step.next);
    step.dz_next.resize(z.size());
    for (size_t i = 0; i < z.size(); ++i) step.dz_next[i] = step.z_next[i] - step.z_nominal_next[i];
    return step;
}

Trajectory simulate(const NetworkModel& model, const SystemState& x0, const AttackSchedule& schedule,
                    const SimulationOptions& options) {
    const int n = model.bus_count();
    if (static_cast<int>(x0.theta.size()) != n || static_cast<int>(x0.omega.size()) != n)
        throw std::invalid_argument("simulate: state dimension mismatch");

    const SteadyStateInput ss = steady_state_input(model, x0.theta);

    SystemState x = x0;
    // Steady-state initialization: the first nominal frame equals the
    // measured couplings.
    std::vector<double> z = stack_couplings(model, x);
    std::vector<double> z_nominal = z;

    static const AttackVector kNoAttack;
    auto attack_at = [&](int step) -> const AttackVector& {
        auto it = schedule.find(step);
        return it == schedule.end() ? kNoAttack : it->second;
    };

    Trajectory traj;
    traj.points.reserve(static_cast<size_t>(options.steps) + 1);

    for (int step = 0; step <= options.steps; ++step) {
        ClosedLoopStep cls;
        try {
            cls = closed_loop_step(model, x, z_nominal, ss.u, attack_at(step), options.dt,
                                   options.controller_gain);
        } catch (const NumericError&) {
            throw NumericError("simulate: non-finite state at step " + std::to_string(step + 1));
        }
        TrajectoryPoint p;
        p.t = step * options.dt;
        p.state = x;
        p.u = cls.u;
        p.applied = cls.applied;
        p.z = z;
        p.z_nominal = z_nominal;
        p.dz.resize(z.size());
        for (size_t i = 0; i < z.size(); ++i) p.dz[i] = z[i] - z_nominal[i];
        traj.points.push_back(std::move(p));
        if (step == options.steps) break;

        x = std::move(cls.next);
        z = std::move(cls.z_next);
        z_nominal = std::move(cls.z_nominal_next);
    }
    return traj;
}

std::string trajectory_to_csv(const NetworkModel& model, const Trajectory& traj) {
    std::ostringstream out;
    out << "t";
    for (const Bus& b : model.buses()) out << ",theta_" << b.id;
    for (const Bus& b : model.buses()) out << ",omega_" << b.id;
    for (const Bus& b : model.buses()) out << ",u_" << b.id;
    for (const Bus& b : model.buses()) out << ",a_" << b.id;
    for (const char* prefix : {"z", "znom", "dz"}) {
        for (const Subsystem& s : model.subsystems())
            for (int cb : s.coupling_buses) out << "," << prefix << "_" << s.name << "_" << cb;
    }
    out << "\n";
    for (const TrajectoryPoint& p : traj.points) {
        out << fmt17(p.t);
        for (double v : p.state.theta) out << "," << fmt17(v);
        for (double v : p.state.omega) out << "," << fmt17(v);
        for (double v : p.u) out << "," << fmt17(v);
        for (double v : p.applied) out << "," << fmt17(v);
        for (double v : p.z) out << "," << fmt17(v);
        for (double v : p.z_nominal) out << "," << fmt17(v);
        for (double v : p.dz) out << "," << fmt17(v);
        out << "\n";
    }
    return out.str();
}

}  // namespace swingid
