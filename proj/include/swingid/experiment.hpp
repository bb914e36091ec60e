#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swingid/guarantees.hpp"
#include "swingid/identify.hpp"

namespace swingid {

enum class AttackSeries { SingleNode, TripleNode };
AttackSeries series_from_string(const std::string& s);  // "attack_1" | "attack_3"
std::string to_string(AttackSeries s);

/// Which inputs the random attacker may touch.
enum class AttackPool {
    Identifiable,  // controllable inputs whose sensitivity column survives reduction (default)
    Controllable,  // every non-constant-load input
    All,
};
AttackPool pool_from_string(const std::string& s);
std::string to_string(AttackPool p);

struct ExperimentConfig {
    double dt = 0.1;
    int steps = 100;
    double controller_gain = 0.10;
    double detection_threshold = 1e-5;       // alarm when a coupling deviation exceeds this
    double identification_threshold = 1e-5;  // attack-set extraction cutoff
    double tol_feas = 1e-8;
    double tol_rank = 1e-10;
    double curvature_box_radius = 0.65;
    int curvature_samples = 200;
    double epsilon_fraction = 0.9;
    bool reset_between_steps = true;  // one-shot trials; false keeps the loop drifting
    AttackPool pool = AttackPool::Identifiable;
    std::optional<double> fixed_epsilon;  // user-supplied relaxation epsilon instead of oracle mode
};

/// Per-sampling-time outcome of the detection/identification pipeline.
struct StepRecord {
    double t = 0.0;
    bool detected = false;
    std::vector<int> true_support;       // attacked bus ids
    std::vector<int> support_equality;   // thresholded attack set from the equality problem
    std::vector<int> support_relaxed;    // thresholded attack set from the relaxed problem
    bool superset_correct = false;       // support_equality contains the true support
    bool exact_correct = false;          // support_relaxed equals the true support
    ConditionStatus cond_superset = ConditionStatus::NotApplicable;
    ConditionStatus cond_exact = ConditionStatus::NotApplicable;
    double lhs = 0.0;
    double delta = 0.0;
    double delta_tilde = 0.0;
    double sigma_min = 0.0;
    double curvature = 0.0;
    int excess = 0;  // |support_equality \ true_support|
    double max_deviation = 0.0;
    int cardinality_equality = 0;
    int cardinality_relaxed = 0;
    double residual_equality = 0.0;
    double residual_relaxed = 0.0;

    bool operator==(const StepRecord&) const = default;
};

/// 2x2 contingency table over detected steps: sufficient condition met
/// crossed with identification correct.
struct FourfoldTable {
    long met_correct = 0;
    long met_wrong = 0;
    long unmet_correct = 0;
    long unmet_wrong = 0;
    long denominator = 0;

    double pct_met_correct() const;
    double pct_met_wrong() const;
    double pct_unmet_correct() const;
    double pct_unmet_wrong() const;
};

enum class TableKind { Superset, Exact };

/// Aggregates detected steps into a fourfold table; NotApplicable conditions
/// count as not met.
FourfoldTable tabulate_fourfold(const std::vector<StepRecord>& records, TableKind kind);

/// Mean number of wrongly suspected inputs over detected steps.
double mean_excess(const std::vector<StepRecord>& records);

/// Random attack for one sampling time: `size` distinct buses from the
/// pool, each delta uniform over the input range reachable from the
/// current input. Deterministic in (seed, t).
AttackVector generate_attack(const NetworkModel& model, const std::vector<int>& pool_buses,
                             const std::vector<double>& current_u, int size, long seed, int t);

/// Buses the random attacker may touch under the configured pool.
std::vector<int> attack_pool_buses(const NetworkModel& model, AttackPool pool, double dt, double tol_rank);

struct SeriesResult {
    std::string series;
    long seed = 0;
    int steps = 0;
    int detected_count = 0;
    std::vector<StepRecord> records;
    FourfoldTable superset_table;
    FourfoldTable exact_table;
    double mean_excess = 0.0;
};

/// Full protocol: per step inject a fresh random attack, run detection,
/// and on alarm run both identification problems and the sufficient-
/// condition checks; aggregate the two fourfold tables.
SeriesResult run_series(const NetworkModel& model, AttackSeries series, long seed, const ExperimentConfig& config);

/// One sampling time of the full pipeline from a given (on-nominal) state:
/// closed-loop step with the injected attack, detection, both
/// identification problems and the guarantee report.
struct OneShotResult {
    DetectionVerdict verdict;
    AssembledSystem system;
    IdentificationResult equality;
    IdentificationResult relaxed;
    bool relaxed_solved = false;
    GuaranteeReport report;
    std::vector<int> identified_support;          // thresholded, equality problem
    std::vector<int> identified_support_relaxed;  // thresholded, relaxed problem
    std::vector<double> curvature_per_subsystem;
};
OneShotResult run_one_shot(const NetworkModel& model, const SystemState& x0, const AttackVector& attack,
                           const ExperimentConfig& config);

std::string records_to_csv(const std::vector<StepRecord>& records);
std::vector<StepRecord> records_from_csv(const std::string& csv);
std::string tables_to_json_text(const SeriesResult& result);

/// Writes records.csv and tables.json into `directory`.
void write_results(const SeriesResult& result, const std::string& directory);

}  // namespace swingid
