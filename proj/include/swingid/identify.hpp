#pragma once

#include <string>
#include <vector>

#include "swingid/sensitivity.hpp"

namespace swingid {

struct DetectionVerdict {
    bool alarm = false;
    std::vector<double> deviation_norms;  // per-subsystem max-norm of the coupling deviation
    double threshold = 0.0;
};

/// Alarm iff some subsystem's coupling deviation exceeds the threshold
/// (strictly) in the max-norm.
DetectionVerdict detect(const std::vector<std::vector<double>>& coupling_dev, double threshold);

enum class ProblemKind { Equality, Relaxed };

/// Sparsest-explanation solution. `delta_a` lives in original input
/// coordinates (one entry per bus, exact zeros off the solved support);
/// `support` lists the solved support as 1-based bus ids. Thresholded
/// attack sets come from extract_support.
struct IdentificationResult {
    std::vector<double> delta_a;
    std::vector<int> support;
    int cardinality = 0;
    double residual = 0.0;
    ProblemKind kind = ProblemKind::Equality;
    bool feasible = false;
    long supports_enumerated = 0;  // candidate supports visited
    long least_squares_solves = 0;
};

/// Equality-constrained sparse recovery: minimum support count subject to
/// the residual not exceeding tol_feas. Enumerates supports by increasing
/// cardinality; first feasible cardinality wins, ties broken by smallest
/// residual, then lexicographically smallest support.
IdentificationResult solve_l0_equality(const AssembledSystem& system, double tol_feas = 1e-8);

struct RelaxationBudget {
    double epsilon = 0.0;    // attack-distance target, solver coordinates
    double sigma_min = 0.0;  // of the assembled (normalized) system
    double radius() const { return 0.5 * epsilon * sigma_min; }
};

/// Ball-constrained variant: residual allowed up to epsilon*sigma_min/2.
IdentificationResult solve_l0_relaxed(const AssembledSystem& system, const RelaxationBudget& budget);

/// Indices (1-based) whose magnitude strictly exceeds the identification
/// threshold.
std::vector<int> extract_support(const std::vector<double>& delta_a, double threshold);

std::string result_to_json_text(const IdentificationResult& result);

}  // namespace swingid
