#pragma once

#include <cstdint>
#include <vector>

#include "swingid/dynamics.hpp"
#include "swingid/sensitivity.hpp"

namespace swingid {

/// Sampled bound on the largest second-order partial of a vector map over
/// a box around the center. `sample_max` is the raw sampled maximum,
/// `inflated` carries the 1.2 safety factor and is what the sufficient
/// conditions consume.
struct CurvatureEstimate {
    double sample_max = 0.0;
    double inflated = 0.0;
};

/// Generic estimator: center plus per-axis extreme probes plus `n_samples`
/// deterministic pseudo-random interior points; second partials by central
/// finite differences of the forward-mode first derivatives.
CurvatureEstimate estimate_curvature(const DualFn& fn, const std::vector<double>& center, double box_radius,
                                     int n_samples);

/// Curvature of one subsystem's one-step coupling response in the joint
/// (inputs, neighbor couplings) box around the nominal point.
CurvatureEstimate estimate_subsystem_curvature(const NetworkModel& model, int sub,
                                               const SubsystemState<double>& x, std::span<const double> inputs,
                                               std::span<const double> nominal_neighbor_z, double dt,
                                               double box_radius, int n_samples);

/// Second-order Taylor bound on the linearization error:
/// curvature/2 * (input_dev_l1 + coupling_dev_l1)^2.
double remainder_bound(double curvature, double input_dev_l1, double coupling_dev_l1);

/// Network-wide variant with the coupling term amplified by the maximum
/// subsystem degree.
double global_remainder_bound(double curvature, double input_dev_l1, int max_degree, double coupling_dev_l1);

/// Attack-size margins under which identification is certified: at most
/// `margin` for superset identification, at most `margin_exact` for exact
/// identification via the relaxed problem. margin_exact = margin / sqrt(2).
struct IdentificationMargins {
    double margin = 0.0;        // sqrt(2 * epsilon * sigma_min / curvature)
    double margin_exact = 0.0;  // sqrt(epsilon * sigma_min / curvature)
};
/// Throws std::domain_error for zero curvature: a linear response makes the
/// conditions hold trivially, handle that case explicitly.
IdentificationMargins compute_margins(double epsilon, double sigma_min, double curvature);

enum class ConditionStatus { Met, NotMet, NotApplicable };

const char* to_string(ConditionStatus s);

/// Everything the sufficient conditions are built from, evaluated for one
/// known (oracle-mode) attack. The margins live in the solver's column-
/// scaled coordinates; lhs and curvature are physical.
struct GuaranteeReport {
    std::vector<double> curvature_per_subsystem;
    double curvature = 0.0;  // max over subsystems
    int max_degree = 0;
    double sigma_min = 0.0;
    double epsilon = 0.0;  // fraction * smallest scaled true-attack entry
    double delta = 0.0;
    double delta_tilde = 0.0;
    double lhs = 0.0;  // ||true attack||_1 + max_degree * ||coupling devs||_1
    ConditionStatus superset_condition = ConditionStatus::NotApplicable;
    ConditionStatus exact_condition = ConditionStatus::NotApplicable;
    bool linear_case = false;  // curvature numerically zero; conditions trivially met
};

/// Evaluates both sufficient conditions for a known attack. `coupling_dev_in`
/// holds the per-subsystem coupling deviations that entered the step (the
/// quantity the remainder bound is built from). An attack touching a bus
/// without a surviving column is not representable and yields NotApplicable.
GuaranteeReport check_conditions(const AssembledSystem& system, const AttackVector& true_attack,
                                 const std::vector<std::vector<double>>& coupling_dev_in, double curvature,
                                 int max_degree, double epsilon_fraction = 0.9);

/// Single-condition wrappers.
std::pair<ConditionStatus, double> check_superset_condition(const AssembledSystem& system,
                                                            const AttackVector& true_attack,
                                                            const std::vector<std::vector<double>>& coupling_dev_in,
                                                            double curvature, int max_degree,
                                                            double epsilon_fraction = 0.9);
std::pair<ConditionStatus, double> check_exact_condition(const AssembledSystem& system,
                                                         const AttackVector& true_attack,
                                                         const std::vector<std::vector<double>>& coupling_dev_in,
                                                         double curvature, int max_degree,
                                                         double epsilon_fraction = 0.9);

/// Empirical probe of the remainder bound: random perturbations inside the
/// curvature box, comparing the true linearization error against the bound.
/// max_ratio <= 1 means no violation was observed.
struct RemainderProbe {
    double max_ratio = 0.0;
    double worst_actual = 0.0;
    double worst_bound = 0.0;
    int trials = 0;
};
RemainderProbe probe_remainder_bound(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                     std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                     double dt, double curvature, double box_radius, int trials,
                                     std::uint64_t seed);

}  // namespace swingid
