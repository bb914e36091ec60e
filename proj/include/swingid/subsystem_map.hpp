#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "swingid/model.hpp"

namespace swingid {

/// Per-subsystem state slice: angles and frequencies of the member buses,
/// in ascending bus-id order.
template <typename T>
struct SubsystemState {
    std::vector<T> theta;
    std::vector<T> omega;
};

/// One classical explicit Runge-Kutta step of the subsystem swing
/// dynamics. Neighbor coupling angles are held constant over the step.
/// Works on plain doubles and on forward-mode duals.
template <typename T>
SubsystemState<T> subsystem_step(const NetworkModel& model, int sub, const SubsystemState<T>& x,
                                 std::span<const T> inputs, std::span<const T> neighbor_z, double dt) {
    const NetworkModel::SubsystemLayout& lay = model.layout(sub);
    const std::size_t n = lay.member_bus.size();
    if (x.theta.size() != n || x.omega.size() != n) throw std::invalid_argument("subsystem_step: state size mismatch");
    if (inputs.size() != n) throw std::invalid_argument("subsystem_step: input size mismatch");
    if (static_cast<int>(neighbor_z.size()) != model.neighbor_coupling_dim(sub))
        throw std::invalid_argument("subsystem_step: neighbor coupling size mismatch");

    auto rhs = [&](const std::vector<T>& theta, const std::vector<T>& omega, std::vector<T>& dtheta,
                   std::vector<T>& domega) {
        using std::sin;
        for (std::size_t i = 0; i < n; ++i) {
            const Bus& bus = model.bus(lay.member_bus[i]);
            dtheta[i] = omega[i];
            T accel = inputs[i] - bus.damping * omega[i];
            for (const auto& c : lay.per_member[i]) {
                if (c.local >= 0)
                    accel -= c.stiffness * sin(theta[i] - theta[static_cast<std::size_t>(c.local)]);
                else
                    accel -= c.stiffness * sin(theta[i] - neighbor_z[static_cast<std::size_t>(c.external)]);
            }
            domega[i] = accel * (1.0 / bus.inertia);
        }
    };

    std::vector<T> kth[4], kom[4];
    std::vector<T> th_stage(n), om_stage(n);
    for (int s = 0; s < 4; ++s) {
        kth[s].resize(n);
        kom[s].resize(n);
        const double c = (s == 1 || s == 2) ? 0.5 * dt : dt;
        if (s == 0) {
            rhs(x.theta, x.omega, kth[s], kom[s]);
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                th_stage[i] = x.theta[i] + c * kth[s - 1][i];
                om_stage[i] = x.omega[i] + c * kom[s - 1][i];
            }
            rhs(th_stage, om_stage, kth[s], kom[s]);
        }
    }

    SubsystemState<T> out;
    out.theta.resize(n);
    out.omega.resize(n);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.theta[i] = x.theta[i] + w * (kth[0][i] + 2.0 * kth[1][i] + 2.0 * kth[2][i] + kth[3][i]);
        out.omega[i] = x.omega[i] + w * (kom[0][i] + 2.0 * kom[1][i] + 2.0 * kom[2][i] + kom[3][i]);
    }
    return out;
}

/// Coupling output of a subsystem state: angles at the coupling buses,
/// ascending bus-id order regardless of storage.
template <typename T>
std::vector<T> couple_state(const NetworkModel& model, int sub, const SubsystemState<T>& x) {
    const NetworkModel::SubsystemLayout& lay = model.layout(sub);
    std::vector<T> z;
    z.reserve(lay.coupling_local.size());
    for (int local : lay.coupling_local) z.push_back(x.theta[static_cast<std::size_t>(local)]);
    return z;
}

}  // namespace swingid
