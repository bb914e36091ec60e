#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swingid/experiment.hpp"

namespace py = pybind11;
using namespace swingid;

namespace {

std::vector<std::vector<double>> matrix_rows(const linalg::Matrix& m) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<size_t>(m.rows()));
    for (int i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<size_t>(m.cols()));
        for (int j = 0; j < m.cols(); ++j) row[static_cast<size_t>(j)] = m(i, j);
        rows.push_back(std::move(row));
    }
    return rows;
}

AssembledSystem system_from_rows(const std::vector<std::vector<double>>& s, const std::vector<double>& b,
                                 std::vector<int> column_bus, std::vector<double> scales, int input_dim) {
    AssembledSystem sys;
    const int rows = static_cast<int>(s.size());
    const int cols = rows > 0 ? static_cast<int>(s.front().size()) : 0;
    sys.s = linalg::Matrix(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (static_cast<int>(s[static_cast<size_t>(i)].size()) != cols)
            throw std::invalid_argument("system rows must have equal length");
        for (int j = 0; j < cols; ++j) sys.s(i, j) = s[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    sys.rhs = b;
    if (column_bus.empty())
        for (int j = 0; j < cols; ++j) column_bus.push_back(j + 1);
    if (scales.empty()) scales.assign(static_cast<size_t>(cols), 1.0);
    sys.column_bus = std::move(column_bus);
    sys.scales = std::move(scales);
    sys.input_dim = input_dim > 0 ? input_dim : cols;
    if (static_cast<int>(sys.rhs.size()) != rows) throw std::invalid_argument("rhs size mismatch");
    if (static_cast<int>(sys.column_bus.size()) != cols || static_cast<int>(sys.scales.size()) != cols)
        throw std::invalid_argument("column metadata size mismatch");
    sys.sigma_min = cols > 0 ? linalg::smallest_singular_value(sys.s) : 0.0;
    return sys;
}

ExperimentConfig make_config(double dt, int steps, double controller_gain, double detection_threshold,
                             double identification_threshold, double tol_feas, double tol_rank,
                             double curvature_box_radius, int curvature_samples, double epsilon_fraction,
                             bool reset_between_steps, const std::string& pool, double fixed_epsilon) {
    ExperimentConfig cfg;
    cfg.dt = dt;
    cfg.steps = steps;
    cfg.controller_gain = controller_gain;
    cfg.detection_threshold = detection_threshold;
    cfg.identification_threshold = identification_threshold;
    cfg.tol_feas = tol_feas;
    cfg.tol_rank = tol_rank;
    cfg.curvature_box_radius = curvature_box_radius;
    cfg.curvature_samples = curvature_samples;
    cfg.epsilon_fraction = epsilon_fraction;
    cfg.reset_between_steps = reset_between_steps;
    cfg.pool = pool_from_string(pool);
    if (fixed_epsilon > 0.0) cfg.fixed_epsilon = fixed_epsilon;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attack identification for networks of coupled swing-equation subsystems";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<NumericError>(m, "NumericError");

    py::enum_<BusKind>(m, "BusKind")
        .value("GENERATOR", BusKind::Generator)
        .value("CONTROLLABLE_LOAD", BusKind::ControllableLoad)
        .value("CONSTANT_LOAD", BusKind::ConstantLoad);

    py::class_<Bus>(m, "Bus")
        .def_readonly("id", &Bus::id)
        .def_readonly("m", &Bus::inertia)
        .def_readonly("d", &Bus::damping)
        .def_readonly("V", &Bus::voltage)
        .def_readonly("kind", &Bus::kind)
        .def_readonly("u_min", &Bus::u_min)
        .def_readonly("u_max", &Bus::u_max)
        .def_readonly("theta0", &Bus::theta0);

    py::class_<Subsystem>(m, "Subsystem")
        .def_readonly("name", &Subsystem::name)
        .def_readonly("members", &Subsystem::members)
        .def_readonly("coupling_buses", &Subsystem::coupling_buses)
        .def_readonly("neighbors", &Subsystem::neighbors);

    py::class_<NetworkModel>(m, "NetworkModel")
        .def_property_readonly("bus_count", &NetworkModel::bus_count)
        .def_property_readonly("input_dim", &NetworkModel::input_dim)
        .def_property_readonly("subsystem_count", &NetworkModel::subsystem_count)
        .def_property_readonly("coupling_dim", [](const NetworkModel& nm) { return nm.coupling_dim(); })
        .def_property_readonly("buses", &NetworkModel::buses)
        .def_property_readonly("subsystems", &NetworkModel::subsystems)
        .def("max_degree", [](const NetworkModel& nm) { return max_degree(nm); })
        .def("to_json", &network_to_json_text);

    m.def("load_network", &load_network_config, py::arg("path"), "Load and validate a model file");
    m.def("network_from_json", &network_from_json_text, py::arg("text"));

    py::class_<SystemState>(m, "SystemState")
        .def_readonly("theta", &SystemState::theta)
        .def_readonly("omega", &SystemState::omega);

    m.def("initial_state", &initial_state);
    m.def(
        "steady_state_input",
        [](const NetworkModel& model) {
            const SteadyStateInput ss = steady_state_input(model, initial_state(model).theta);
            return py::make_tuple(ss.u, ss.warnings);
        },
        py::arg("model"), "Balancing input at the stored initial angles, with box warnings");

    py::class_<TrajectoryPoint>(m, "TrajectoryPoint")
        .def_readonly("t", &TrajectoryPoint::t)
        .def_readonly("state", &TrajectoryPoint::state)
        .def_readonly("u", &TrajectoryPoint::u)
        .def_readonly("applied", &TrajectoryPoint::applied)
        .def_readonly("z", &TrajectoryPoint::z)
        .def_readonly("z_nominal", &TrajectoryPoint::z_nominal)
        .def_readonly("dz", &TrajectoryPoint::dz);

    py::class_<Trajectory>(m, "Trajectory").def_readonly("points", &Trajectory::points);

    m.def(
        "simulate",
        [](const NetworkModel& model, int steps, double dt, const std::map<int, AttackVector>& schedule,
           double controller_gain) {
            SimulationOptions opt;
            opt.steps = steps;
            opt.dt = dt;
            opt.controller_gain = controller_gain;
            return simulate(model, initial_state(model), schedule, opt);
        },
        py::arg("model"), py::arg("steps") = 100, py::arg("dt") = 0.1,
        py::arg("schedule") = std::map<int, AttackVector>{}, py::arg("controller_gain") = 0.10,
        "Closed-loop simulation from the steady state");
    m.def("trajectory_to_csv", &trajectory_to_csv);

    py::class_<DetectionVerdict>(m, "DetectionVerdict")
        .def_readonly("alarm", &DetectionVerdict::alarm)
        .def_readonly("deviation_norms", &DetectionVerdict::deviation_norms)
        .def_readonly("threshold", &DetectionVerdict::threshold);
    m.def("detect", &detect, py::arg("coupling_dev"), py::arg("threshold"));

    py::class_<AssembledSystem>(m, "AssembledSystem")
        .def(py::init(&system_from_rows), py::arg("s"), py::arg("b"),
             py::arg("column_bus") = std::vector<int>{}, py::arg("scales") = std::vector<double>{},
             py::arg("input_dim") = 0)
        .def_property_readonly("rows", [](const AssembledSystem& s) { return s.s.rows(); })
        .def_property_readonly("cols", [](const AssembledSystem& s) { return s.s.cols(); })
        .def_property_readonly("s", [](const AssembledSystem& s) { return matrix_rows(s.s); })
        .def_readonly("b", &AssembledSystem::rhs)
        .def_readonly("column_bus", &AssembledSystem::column_bus)
        .def_readonly("scales", &AssembledSystem::scales)
        .def_readonly("sigma_min", &AssembledSystem::sigma_min)
        .def_readonly("input_dim", &AssembledSystem::input_dim)
        .def("to_json", &system_to_json_text);
    m.def("system_from_json", &system_from_json_text, py::arg("text"));

    py::class_<IdentificationResult>(m, "IdentificationResult")
        .def_readonly("delta_a", &IdentificationResult::delta_a)
        .def_readonly("support", &IdentificationResult::support)
        .def_readonly("cardinality", &IdentificationResult::cardinality)
        .def_readonly("residual", &IdentificationResult::residual)
        .def_readonly("feasible", &IdentificationResult::feasible)
        .def_readonly("supports_enumerated", &IdentificationResult::supports_enumerated)
        .def("to_json", &result_to_json_text);

    m.def("solve_l0_equality", &solve_l0_equality, py::arg("system"), py::arg("tol_feas") = 1e-8);
    m.def(
        "solve_l0_relaxed",
        [](const AssembledSystem& system, double epsilon, double sigma_min) {
            return solve_l0_relaxed(system, {epsilon, sigma_min > 0.0 ? sigma_min : system.sigma_min});
        },
        py::arg("system"), py::arg("epsilon"), py::arg("sigma_min") = 0.0);
    m.def("extract_support", &extract_support, py::arg("delta_a"), py::arg("threshold") = 1e-5);

    m.def(
        "identification_margins",
        [](double epsilon, double sigma_min, double curvature) {
            const IdentificationMargins mg = compute_margins(epsilon, sigma_min, curvature);
            return py::make_tuple(mg.margin, mg.margin_exact);
        },
        py::arg("epsilon"), py::arg("sigma_min"), py::arg("curvature"),
        "Attack-size margins certifying superset and exact identification");
    m.def("remainder_bound", &remainder_bound, py::arg("curvature"), py::arg("input_dev_l1"),
          py::arg("coupling_dev_l1"));
    m.def("global_remainder_bound", &global_remainder_bound, py::arg("curvature"), py::arg("input_dev_l1"),
          py::arg("max_degree"), py::arg("coupling_dev_l1"));

    py::class_<FourfoldTable>(m, "FourfoldTable")
        .def_readonly("met_correct", &FourfoldTable::met_correct)
        .def_readonly("met_wrong", &FourfoldTable::met_wrong)
        .def_readonly("unmet_correct", &FourfoldTable::unmet_correct)
        .def_readonly("unmet_wrong", &FourfoldTable::unmet_wrong)
        .def_readonly("denominator", &FourfoldTable::denominator)
        .def("pct_met_correct", &FourfoldTable::pct_met_correct)
        .def("pct_met_wrong", &FourfoldTable::pct_met_wrong)
        .def("pct_unmet_correct", &FourfoldTable::pct_unmet_correct)
        .def("pct_unmet_wrong", &FourfoldTable::pct_unmet_wrong);

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("t", &StepRecord::t)
        .def_readonly("detected", &StepRecord::detected)
        .def_readonly("true_support", &StepRecord::true_support)
        .def_readonly("support_equality", &StepRecord::support_equality)
        .def_readonly("support_relaxed", &StepRecord::support_relaxed)
        .def_readonly("superset_correct", &StepRecord::superset_correct)
        .def_readonly("exact_correct", &StepRecord::exact_correct)
        .def_readonly("lhs", &StepRecord::lhs)
        .def_readonly("delta", &StepRecord::delta)
        .def_readonly("delta_tilde", &StepRecord::delta_tilde)
        .def_readonly("sigma_min", &StepRecord::sigma_min)
        .def_readonly("curvature", &StepRecord::curvature)
        .def_readonly("excess", &StepRecord::excess)
        .def_property_readonly("cond_superset_met",
                               [](const StepRecord& r) { return r.cond_superset == ConditionStatus::Met; })
        .def_property_readonly("cond_exact_met",
                               [](const StepRecord& r) { return r.cond_exact == ConditionStatus::Met; });

    py::class_<SeriesResult>(m, "SeriesResult")
        .def_readonly("series", &SeriesResult::series)
        .def_readonly("seed", &SeriesResult::seed)
        .def_readonly("steps", &SeriesResult::steps)
        .def_readonly("detected_count", &SeriesResult::detected_count)
        .def_readonly("records", &SeriesResult::records)
        .def_readonly("superset_table", &SeriesResult::superset_table)
        .def_readonly("exact_table", &SeriesResult::exact_table)
        .def_readonly("mean_excess", &SeriesResult::mean_excess)
        .def("records_csv", [](const SeriesResult& r) { return records_to_csv(r.records); })
        .def("tables_json", &tables_to_json_text);

    m.def(
        "run_series",
        [](const NetworkModel& model, const std::string& series, long seed, int steps, double dt,
           double controller_gain, double detection_threshold, double identification_threshold,
           double tol_feas, double tol_rank, double curvature_box_radius, int curvature_samples,
           double epsilon_fraction, bool reset_between_steps, const std::string& pool,
           double fixed_epsilon) {
            const ExperimentConfig cfg = make_config(
                dt, steps, controller_gain, detection_threshold, identification_threshold, tol_feas,
                tol_rank, curvature_box_radius, curvature_samples, epsilon_fraction, reset_between_steps,
                pool, fixed_epsilon);
            return run_series(model, series_from_string(series), seed, cfg);
        },
        py::arg("model"), py::arg("series"), py::arg("seed") = 1, py::arg("steps") = 100,
        py::arg("dt") = 0.1, py::arg("controller_gain") = 0.10, py::arg("detection_threshold") = 1e-5,
        py::arg("identification_threshold") = 1e-5, py::arg("tol_feas") = 1e-8, py::arg("tol_rank") = 1e-10,
        py::arg("curvature_box_radius") = 0.65, py::arg("curvature_samples") = 200,
        py::arg("epsilon_fraction") = 0.9, py::arg("reset_between_steps") = true,
        py::arg("pool") = "identifiable", py::arg("fixed_epsilon") = 0.0,
        "Random attack series with detection, identification and condition checks");

    py::class_<GuaranteeReport>(m, "GuaranteeReport")
        .def_readonly("curvature", &GuaranteeReport::curvature)
        .def_readonly("curvature_per_subsystem", &GuaranteeReport::curvature_per_subsystem)
        .def_readonly("max_degree", &GuaranteeReport::max_degree)
        .def_readonly("sigma_min", &GuaranteeReport::sigma_min)
        .def_readonly("epsilon", &GuaranteeReport::epsilon)
        .def_readonly("delta", &GuaranteeReport::delta)
        .def_readonly("delta_tilde", &GuaranteeReport::delta_tilde)
        .def_readonly("lhs", &GuaranteeReport::lhs)
        .def_readonly("linear_case", &GuaranteeReport::linear_case)
        .def_property_readonly(
            "superset_condition",
            [](const GuaranteeReport& r) { return std::string(to_string(r.superset_condition)); })
        .def_property_readonly("exact_condition", [](const GuaranteeReport& r) {
            return std::string(to_string(r.exact_condition));
        });

    py::class_<OneShotResult>(m, "OneShotResult")
        .def_readonly("verdict", &OneShotResult::verdict)
        .def_readonly("system", &OneShotResult::system)
        .def_readonly("equality", &OneShotResult::equality)
        .def_readonly("relaxed", &OneShotResult::relaxed)
        .def_readonly("relaxed_solved", &OneShotResult::relaxed_solved)
        .def_readonly("report", &OneShotResult::report)
        .def_readonly("identified_support", &OneShotResult::identified_support)
        .def_readonly("identified_support_relaxed", &OneShotResult::identified_support_relaxed);

    m.def(
        "check_attack",
        [](const NetworkModel& model, const AttackVector& attack, double dt, double controller_gain,
           int curvature_samples, double fixed_epsilon) {
            ExperimentConfig cfg;
            cfg.dt = dt;
            cfg.controller_gain = controller_gain;
            cfg.curvature_samples = curvature_samples;
            if (fixed_epsilon > 0.0) cfg.fixed_epsilon = fixed_epsilon;
            return run_one_shot(model, initial_state(model), attack, cfg);
        },
        py::arg("model"), py::arg("attack"), py::arg("dt") = 0.1, py::arg("controller_gain") = 0.10,
        py::arg("curvature_samples") = 200, py::arg("fixed_epsilon") = 0.0,
        "One-shot detection, identification and guarantee report from the steady state");
}
