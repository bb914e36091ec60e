#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swingid/model.hpp"
#include "swingid/subsystem_map.hpp"

namespace swingid {

/// Global plant state: one angle and one frequency per bus.
struct SystemState {
    std::vector<double> theta;  // rad
    std::vector<double> omega;  // rad/s

    bool operator==(const SystemState&) const = default;
};

/// Numeric failure during simulation (non-finite state etc.).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SystemState initial_state(const NetworkModel& model);

SubsystemState<double> slice_state(const NetworkModel& model, int sub, const SystemState& x);
void unslice_state(const NetworkModel& model, int sub, const SubsystemState<double>& xi, SystemState& x);

/// Continuous swing-equation right-hand side on the full network.
std::pair<std::vector<double>, std::vector<double>> swing_rhs(const NetworkModel& model,
                                                              const std::vector<double>& theta,
                                                              const std::vector<double>& omega,
                                                              const std::vector<double>& u);

/// Discrete subsystem map: one RK4 step with neighbor couplings frozen.
SubsystemState<double> step_subsystem(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> neighbor_z,
                                      double dt);

/// Coupling output of subsystem `sub`: angles at its coupling buses.
std::vector<double> couple(const NetworkModel& model, int sub, const SubsystemState<double>& x);

/// One-step-ahead nominal coupling value under undisturbed inputs and
/// nominal neighbor values.
std::vector<double> predict_nominal(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                    std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                    double dt);

/// Stacks the neighbors' nominal frames in ascending subsystem index.
/// `frames` maps subsystem index to that subsystem's nominal coupling value.
std::vector<double> combine_neighbor_nominals(const NetworkModel& model, int sub,
                                              const std::map<int, std::vector<double>>& frames);

struct SteadyStateInput {
    std::vector<double> u;              // per bus
    std::vector<std::string> warnings;  // buses whose balancing input falls outside its box
};

/// Input that makes (theta0, 0) an exact equilibrium of the swing dynamics.
SteadyStateInput steady_state_input(const NetworkModel& model, const std::vector<double>& theta0);

/// Decentralized proportional frequency damping around the steady input,
/// clipped to each bus's box.
std::vector<double> controller_step(const NetworkModel& model, const SystemState& x,
                                    const std::vector<double>& u_steady, double gain);

/// Sparse input disturbance: (bus id, additive delta) pairs.
using AttackVector = std::vector<std::pair<int, double>>;
/// Schedule: time index -> disturbance applied during that step.
using AttackSchedule = std::map<int, AttackVector>;

struct TrajectoryPoint {
    double t = 0.0;
    SystemState state;
    std::vector<double> u;        // controller output at t
    std::vector<double> applied;  // disturbed input a(u) at t
    std::vector<double> z;        // stacked couplings at t
    std::vector<double> z_nominal;
    std::vector<double> dz;  // z - z_nominal
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
};

struct SimulationOptions {
    double dt = 0.1;
    int steps = 100;
    double controller_gain = 0.10;
};

/// Stacked coupling angles over all subsystems (ascending subsystem index).
std::vector<double> stack_couplings(const NetworkModel& model, const SystemState& x);

/// Splits a stacked coupling vector into per-subsystem slices.
std::vector<std::vector<double>> split_couplings(const NetworkModel& model, const std::vector<double>& stacked);

/// One sampling interval of the closed loop: controller output, disturbed
/// input, per-subsystem plant step with frozen measured couplings, and the
/// nominal-value exchange for the next comparison.
struct ClosedLoopStep {
    SystemState next;
    std::vector<double> u;        // controller output at the step start
    std::vector<double> applied;  // disturbed input a(u), box-clamped
    std::vector<double> z_next;
    std::vector<double> z_nominal_next;
    std::vector<double> dz_next;  // z_next - z_nominal_next
};
ClosedLoopStep closed_loop_step(const NetworkModel& model, const SystemState& x,
                                const std::vector<double>& z_nominal, const std::vector<double>& u_steady,
                                const AttackVector& attack, double dt, double controller_gain);

/// Closed-loop simulation: at each sampling time the controller output is
/// disturbed by the schedule, every subsystem steps with frozen neighbor
/// couplings, and nominal values are exchanged for the next comparison.
Trajectory simulate(const NetworkModel& model, const SystemState& x0, const AttackSchedule& schedule,
                    const SimulationOptions& options);

/// Writes a trajectory as CSV: t, per-bus theta/omega/u/a, per-subsystem
/// z/znom/dz columns.
std::string trajectory_to_csv(const NetworkModel& model, const Trajectory& traj);

}  // namespace swingid
