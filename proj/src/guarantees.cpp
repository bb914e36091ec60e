#include "swingid/guarantees.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace swingid {

using linalg::Matrix;

namespace {

constexpr double kInflation = 1.2;
constexpr double kLinearCurvatureTol = 1e-9;
constexpr std::uint64_t kSamplerSeed = 0x5eedc0de;
constexpr double kHessianStep = 1e-4;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Largest column 2-norm of the stacked second-partial matrix at one point:
// finite differences across the forward-mode Jacobian give one Hessian
// slice per direction.
double hessian_max_norm(const DualFn& fn, const std::vector<double>& point) {
    const std::size_t n = point.size();
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> plus = point, minus = point;
        plus[j] += kHessianStep;
        minus[j] -= kHessianStep;
        const Matrix jp = jacobian(fn, plus);
        const Matrix jm = jacobian(fn, minus);
        for (int i = 0; i < jp.cols(); ++i) {
            double norm = 0.0;
            for (int out = 0; out < jp.rows(); ++out) {
                const double second = (jp(out, i) - jm(out, i)) / (2.0 * kHessianStep);
                norm += second * second;
            }
            worst = std::max(worst, std::sqrt(norm));
        }
    }
    return worst;
}

DualFn subsystem_response_fn(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                             std::size_t n_inputs, double dt) {
    SubsystemState<double> state = x;
    return [&model, sub, state, n_inputs, dt](const std::vector<Dual>& v) {
        const std::size_t dirs = v.empty() ? 0 : v.front().dirs();
        SubsystemState<Dual> xd;
        for (double th : state.theta) xd.theta.push_back(Dual::constant(th, dirs));
        for (double om : state.omega) xd.omega.push_back(Dual::constant(om, dirs));
        const std::vector<Dual> a(v.begin(), v.begin() + static_cast<long>(n_inputs));
        const std::vector<Dual> zn(v.begin() + static_cast<long>(n_inputs), v.end());
        return couple_state<Dual>(model, sub, subsystem_step<Dual>(model, sub, xd, a, zn, dt));
    };
}

}  // namespace

CurvatureEstimate estimate_curvature(const DualFn& fn, const std::vector<double>& center, double box_radius,
                                     int n_samples) {
    if (!(box_radius > 0.0)) throw std::invalid_argument("estimate_curvature: box radius must be positive");
    if (n_samples < 1) throw std::invalid_argument("estimate_curvature: need at least one sample");
    const std::size_t n = center.size();

    CurvatureEstimate est;
    // Deterministic probes first: the center and both extremes of every axis.
    est.sample_max = hessian_max_norm(fn, center);
    for (std::size_t j = 0; j < n; ++j) {
        for (double sign : {-1.0, 1.0}) {
            std::vector<double> p = center;
            p[j] += sign * box_radius;
            est.sample_max = std::max(est.sample_max, hessian_max_norm(fn, p));
        }
    }
    // Random interior points from a fixed stream, so growing n_samples only
    // extends the sample set.
    std::mt19937_64 rng(kSamplerSeed);
    for (int s = 0; s < n_samples; ++s) {
        std::vector<double> p = center;
        for (std::size_t j = 0; j < n; ++j) p[j] += (2.0 * uniform01(rng) - 1.0) * box_radius;
        est.sample_max = std::max(est.sample_max, hessian_max_norm(fn, p));
    }
    est.inflated = est.sample_max * kInflation;
    return est;
}

CurvatureEstimate estimate_subsystem_curvature(const NetworkModel& model, int sub,
                                               const SubsystemState<double>& x, std::span<const double> inputs,
                                               std::span<const double> nominal_neighbor_z, double dt,
                                               double box_radius, int n_samples) {
    std::vector<double> center(inputs.begin(), inputs.end());
    center.insert(center.end(), nominal_neighbor_z.begin(), nominal_neighbor_z.end());
    return estimate_curvature(subsystem_response_fn(model, sub, x, inputs.size(), dt), center, box_radius,
                              n_samples);
}

double remainder_bound(double curvature, double input_dev_l1, double coupling_dev_l1) {
    if (curvature < 0.0) throw std::invalid_argument("remainder_bound: curvature must be non-negative");
    const double sum = input_dev_l1 + coupling_dev_l1;
    return 0.5 * curvature * sum * sum;
}

double global_remainder_bound(double curvature, double input_dev_l1, int max_degree, double coupling_dev_l1) {
    return remainder_bound(curvature, input_dev_l1, max_degree * coupling_dev_l1);
}

IdentificationMargins compute_margins(double epsilon, double sigma_min, double curvature) {
    if (!(epsilon > 0.0) || !(sigma_min > 0.0))
        throw std::invalid_argument("compute_margins: epsilon and sigma_min must be positive");
    if (curvature == 0.0)
        throw std::domain_error(
            "compute_margins: zero curvature (linear response): the conditions hold trivially, use the "
            "linear-case shortcut");
    if (curvature < 0.0) throw std::invalid_argument("compute_margins: curvature must be non-negative");
    IdentificationMargins m;
    m.margin = std::sqrt(2.0 * epsilon * sigma_min / curvature);
    m.margin_exact = std::sqrt(epsilon * sigma_min / curvature);
    return m;
}

const char* to_string(ConditionStatus s) {
    switch (s) {
        case ConditionStatus::Met: return "met";
        case ConditionStatus::NotMet: return "not_met";
        case ConditionStatus::NotApplicable: return "n_a";
    }
    return "unknown";
}

GuaranteeReport check_conditions(const AssembledSystem& system, const AttackVector& true_attack,
                                 const std::vector<std::vector<double>>& coupling_dev_in, double curvature,
                                 int max_degree, double epsilon_fraction) {
    if (!(epsilon_fraction > 0.0 && epsilon_fraction < 1.0))
        throw std::invalid_argument("check_conditions: epsilon fraction must lie in (0, 1)");
    GuaranteeReport rep;
    rep.curvature = curvature;
    rep.max_degree = max_degree;
    rep.sigma_min = system.sigma_min;

    double attack_l1 = 0.0;
    double min_scaled = -1.0;
    bool representable = true;
    int nonzero_entries = 0;
    for (const auto& [bus, delta] : true_attack) {
        if (delta == 0.0) continue;
        ++nonzero_entries;
        attack_l1 += std::abs(delta);
        // Scale into the solver's column coordinates; an attacked input
        // whose column was dropped cannot be expressed there.
        bool found = false;
        for (std::size_t c = 0; c < system.column_bus.size(); ++c) {
            if (system.column_bus[c] == bus) {
                const double scaled = std::abs(delta) * system.scales[c];
                min_scaled = (min_scaled < 0.0) ? scaled : std::min(min_scaled, scaled);
                found = true;
                break;
            }
        }
        representable = representable && found;
    }
    if (nonzero_entries == 0 || !representable) {
        rep.superset_condition = ConditionStatus::NotApplicable;
        rep.exact_condition = ConditionStatus::NotApplicable;
        return rep;
    }

    double dev_l1 = 0.0;
    for (const auto& dz : coupling_dev_in) dev_l1 += linalg::norm1(dz);
    rep.lhs = attack_l1 + max_degree * dev_l1;
    rep.epsilon = epsilon_fraction * min_scaled;

    if (curvature <= kLinearCurvatureTol) {
        rep.linear_case = true;
        rep.superset_condition = ConditionStatus::Met;
        rep.exact_condition = ConditionStatus::Met;
        return rep;
    }
    const IdentificationMargins margins = compute_margins(rep.epsilon, rep.sigma_min, curvature);
    rep.delta = margins.margin;
    rep.delta_tilde = margins.margin_exact;
    rep.superset_condition = rep.lhs <= rep.delta ? ConditionStatus::Met : ConditionStatus::NotMet;
    rep.exact_condition = rep.lhs <= rep.delta_tilde ? ConditionStatus::Met : ConditionStatus::NotMet;
    return rep;
}

std::pair<ConditionStatus, double> check_superset_condition(const AssembledSystem& system,
                                                            const AttackVector& true_attack,
                                                            const std::vector<std::vector<double>>& coupling_dev_in,
                                                            double curvature, int max_degree,
                                                            double epsilon_fraction) {
    const GuaranteeReport rep =
        check_conditions(system, true_attack, coupling_dev_in, curvature, max_degree, epsilon_fraction);
    return {rep.superset_condition, rep.epsilon};
}

std::pair<ConditionStatus, double> check_exact_condition(const AssembledSystem& system,
                                                         const AttackVector& true_attack,
                                                         const std::vector<std::vector<double>>& coupling_dev_in,
                                                         double curvature, int max_degree,
                                                         double epsilon_fraction) {
    const GuaranteeReport rep =
        check_conditions(system, true_attack, coupling_dev_in, curvature, max_degree, epsilon_fraction);
    return {rep.exact_condition, rep.epsilon};
}

RemainderProbe probe_remainder_bound(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                     std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                     double dt, double curvature, double box_radius, int trials,
                                     std::uint64_t seed) {
    const std::size_t n_u = inputs.size();
    const std::size_t n_z = nominal_neighbor_z.size();
    const std::vector<double> base_z = coupling_response(model, sub, x, inputs, nominal_neighbor_z, dt);
    const SubsystemJacobians jac = coupling_jacobians(model, sub, x, inputs, nominal_neighbor_z, dt);

    RemainderProbe probe;
    probe.trials = trials;
    std::mt19937_64 rng(seed);
    std::vector<double> a(n_u), zn(n_z);
    for (int t = 0; t < trials; ++t) {
        double da_l1 = 0.0, dz_l1 = 0.0;
        for (std::size_t i = 0; i < n_u; ++i) {
            const double d = (2.0 * uniform01(rng) - 1.0) * box_radius;
            a[i] = inputs[i] + d;
            da_l1 += std::abs(d);
        }
        for (std::size_t i = 0; i < n_z; ++i) {
            const double d = (2.0 * uniform01(rng) - 1.0) * box_radius;
            zn[i] = nominal_neighbor_z[i] + d;
            dz_l1 += std::abs(d);
        }
        const std::vector<double> z_pert = coupling_response(model, sub, x, a, zn, dt);
        double actual_sq = 0.0;
        for (std::size_t r = 0; r < z_pert.size(); ++r) {
            double lin = base_z[r];
            for (std::size_t i = 0; i < n_u; ++i)
                lin += jac.input_jacobian(static_cast<int>(r), static_cast<int>(i)) * (a[i] - inputs[i]);
            for (std::size_t i = 0; i < n_z; ++i)
                lin += jac.neighbor_jacobian(static_cast<int>(r), static_cast<int>(i)) *
                       (zn[i] - nominal_neighbor_z[i]);
            actual_sq += (z_pert[r] - lin) * (z_pert[r] - lin);
        }
        const double actual = std::sqrt(actual_sq);
        const double bound = remainder_bound(curvature, da_l1, dz_l1);
        const double ratio = bound > 0.0 ? actual / bound : (actual > 0.0 ? 1e300 : 0.0);
        if (ratio > probe.max_ratio) {
            probe.max_ratio = ratio;
            probe.worst_actual = actual;
            probe.worst_bound = bound;
        }
    }
    return probe;
}

}  // namespace swingid
