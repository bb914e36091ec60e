#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swingid/dual.hpp"
#include "swingid/dynamics.hpp"
#include "swingid/linalg.hpp"
#include "swingid/model.hpp"

namespace swingid {

/// Jacobian of an arbitrary vector map via forward-mode duals: one seeded
/// direction per input component, exact to machine precision.
using DualFn = std::function<std::vector<Dual>(const std::vector<Dual>&)>;
linalg::Matrix jacobian(const DualFn& fn, const std::vector<double>& at);

/// One-step coupling response of a subsystem: coupling output after one
/// discrete step. Shares the code path of the dynamics module.
std::vector<double> coupling_response(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> neighbor_z,
                                      double dt);

/// Jacobians of the one-step coupling response with respect to the local
/// inputs and the neighbor couplings, evaluated at the nominal point.
struct SubsystemJacobians {
    linalg::Matrix input_jacobian;     // coupling_dim(sub) x member count
    linalg::Matrix neighbor_jacobian;  // coupling_dim(sub) x neighbor_coupling_dim(sub)
};
SubsystemJacobians coupling_jacobians(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                      double dt);

/// Drops linearly dependent columns via a rank-revealing pivoted
/// factorization; `kept` lists surviving original column indices, ascending.
struct ColumnReduction {
    linalg::Matrix matrix;
    std::vector<int> kept;
};
ColumnReduction reduce_columns(const linalg::Matrix& s, double tol_rank = 1e-10);

/// Scales every column to unit Euclidean norm. Solutions on the scaled
/// system map back through delta_original = delta_scaled / scale.
struct ColumnNormalization {
    linalg::Matrix matrix;
    std::vector<double> scales;
};
ColumnNormalization normalize_columns(const linalg::Matrix& s);

/// Per-subsystem sensitivity data ready for assembly.
struct SensitivityBlock {
    SubsystemJacobians jacobians;
    ColumnReduction reduction;        // of jacobians.input_jacobian
    ColumnNormalization normalization;  // of reduction.matrix
};
SensitivityBlock build_sensitivity_block(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                         std::span<const double> inputs,
                                         std::span<const double> nominal_neighbor_z, double dt,
                                         double tol_rank = 1e-10);

/// Block-diagonal identification system. Column j of `s` corresponds to the
/// input at bus `column_bus[j]`; `scales[j]` maps normalized solutions back
/// to physical units. sigma_min refers to `s` itself (normalized columns).
struct AssembledSystem {
    linalg::Matrix s;             // coupling_dim x r, block diagonal, unit columns
    std::vector<double> rhs;      // measured deviations minus the neighbor-coupling term
    std::vector<int> column_bus;  // 1-based bus id per column
    std::vector<double> scales;
    std::vector<int> row_subsystem;  // owning subsystem per row
    double sigma_min = 0.0;
    int input_dim = 0;
};

/// Stacks the per-subsystem blocks into the global system. `coupling_dev`
/// holds the measured coupling deviations per subsystem; `coupling_dev_in`
/// the deviations that entered the step (zero when stepping from an
/// on-nominal state).
AssembledSystem assemble_system(const NetworkModel& model, const std::vector<SensitivityBlock>& blocks,
                                const std::vector<std::vector<double>>& coupling_dev,
                                const std::vector<std::vector<double>>& coupling_dev_in);

std::string system_to_json_text(const AssembledSystem& system);
AssembledSystem system_from_json_text(const std::string& text);

}  // namespace swingid
