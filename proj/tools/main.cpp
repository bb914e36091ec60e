#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "swingid/experiment.hpp"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw swingid::ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

swingid::AttackSchedule load_schedule(const std::string& path) {
    const json doc = json::parse(read_file(path));
    swingid::AttackSchedule schedule;
    if (!doc.contains("steps") || !doc["steps"].is_array())
        throw swingid::ConfigError(path + ": expected top-level array 'steps'");
    for (const json& js : doc["steps"]) {
        const int t = js.at("t").get<int>();
        swingid::AttackVector av;
        for (const json& je : js.at("entries"))
            av.emplace_back(je.at("bus").get<int>(), je.at("delta").get<double>());
        schedule[t] = std::move(av);
    }
    return schedule;
}

swingid::AttackVector load_attack_vector(const std::string& path, int n_buses) {
    const json doc = json::parse(read_file(path));
    swingid::AttackVector av;
    if (doc.contains("entries")) {
        for (const json& je : doc["entries"]) av.emplace_back(je.at("bus").get<int>(), je.at("delta").get<double>());
    } else if (doc.contains("delta_a")) {
        const auto dense = doc["delta_a"].get<std::vector<double>>();
        if (static_cast<int>(dense.size()) != n_buses)
            throw swingid::ConfigError(path + ": delta_a must have one entry per bus");
        for (int i = 0; i < n_buses; ++i)
            if (dense[static_cast<size_t>(i)] != 0.0) av.emplace_back(i + 1, dense[static_cast<size_t>(i)]);
    } else {
        throw swingid::ConfigError(path + ": expected 'entries' or 'delta_a'");
    }
    return av;
}

int run_simulate(const std::string& config, double dt, int steps, const std::string& attack_path,
                 const std::string& out_path, double gain) {
    const swingid::NetworkModel model = swingid::load_network_config(config);
    swingid::AttackSchedule schedule;
    if (!attack_path.empty()) schedule = load_schedule(attack_path);
    const swingid::SteadyStateInput ss = swingid::steady_state_input(model, swingid::initial_state(model).theta);
    for (const std::string& w : ss.warnings) std::cerr << "warning: " << w << "\n";
    swingid::SimulationOptions options;
    options.dt = dt;
    options.steps = steps;
    options.controller_gain = gain;
    const swingid::Trajectory traj = swingid::simulate(model, swingid::initial_state(model), schedule, options);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw swingid::ConfigError("cannot write '" + out_path + "'");
    out << swingid::trajectory_to_csv(model, traj);
    std::cout << "wrote " << traj.points.size() << " trajectory rows to " << out_path << "\n";
    return 0;
}

int run_experiment(const std::string& config, const std::string& series, long seed, int steps,
                   const std::string& out_dir, swingid::ExperimentConfig exp) {
    const swingid::NetworkModel model = swingid::load_network_config(config);
    exp.steps = steps;
    const swingid::SeriesResult result = swingid::run_series(model, swingid::series_from_string(series), seed, exp);
    swingid::write_results(result, out_dir);
    std::cout << swingid::tables_to_json_text(result) << "\n";
    return 0;
}

int run_check(const std::string& config, const std::string& state_path, const std::string& attack_path,
              const swingid::ExperimentConfig& exp) {
    const swingid::NetworkModel model = swingid::load_network_config(config);

    swingid::SystemState x = swingid::initial_state(model);
    if (!state_path.empty()) {
        const json doc = json::parse(read_file(state_path));
        x.theta = doc.at("theta").get<std::vector<double>>();
        x.omega = doc.at("omega").get<std::vector<double>>();
        if (static_cast<int>(x.theta.size()) != model.bus_count() ||
            static_cast<int>(x.omega.size()) != model.bus_count())
            throw swingid::ConfigError(state_path + ": state dimension mismatch");
    }
    const swingid::AttackVector attack = load_attack_vector(attack_path, model.bus_count());

    // The snapshot is treated as on-nominal: one closed-loop step from it,
    // then detection, identification and the sufficient-condition report.
    const swingid::OneShotResult shot = swingid::run_one_shot(model, x, attack, exp);

    json doc;
    doc["detected"] = shot.verdict.alarm;
    doc["deviation_norms"] = shot.verdict.deviation_norms;
    doc["detection_threshold"] = shot.verdict.threshold;

    if (shot.verdict.alarm) {
        doc["equality"] = json::parse(swingid::result_to_json_text(shot.equality));
        doc["identified_support"] = shot.identified_support;
        const swingid::GuaranteeReport& rep = shot.report;
        doc["guarantees"] = {{"curvature", rep.curvature},
                             {"curvature_per_subsystem", rep.curvature_per_subsystem},
                             {"max_degree", rep.max_degree},
                             {"sigma_min", rep.sigma_min},
                             {"epsilon", rep.epsilon},
                             {"delta", rep.delta},
                             {"delta_tilde", rep.delta_tilde},
                             {"lhs", rep.lhs},
                             {"superset_condition", swingid::to_string(rep.superset_condition)},
                             {"exact_condition", swingid::to_string(rep.exact_condition)},
                             {"linear_case", rep.linear_case}};
        if (shot.relaxed_solved) {
            doc["relaxed"] = json::parse(swingid::result_to_json_text(shot.relaxed));
            doc["identified_support_relaxed"] = shot.identified_support_relaxed;
        }
        doc["system_dump"] = json::parse(swingid::system_to_json_text(shot.system));
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int run_identify(const std::string& system_path, double tol_feas, double epsilon) {
    const swingid::AssembledSystem system = swingid::system_from_json_text(read_file(system_path));
    json doc;
    const swingid::IdentificationResult eq = swingid::solve_l0_equality(system, tol_feas);
    doc["equality"] = json::parse(swingid::result_to_json_text(eq));
    if (epsilon > 0.0) {
        const swingid::IdentificationResult rel = swingid::solve_l0_relaxed(system, {epsilon, system.sigma_min});
        doc["relaxed"] = json::parse(swingid::result_to_json_text(rel));
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attack identification for networks of coupled swing-equation subsystems"};
    app.require_subcommand(1);

    std::string config, out_path = "traj.csv", out_dir = "results", attack_path, state_path, system_path;
    std::string series = "attack_1", pool = "identifiable";
    double dt = 0.1;
    int steps = 100;
    long seed = 1;
    double tol_feas = 1e-8, epsilon = 0.0;
    bool continuous = false;
    swingid::ExperimentConfig exp;

    CLI::App* sim = app.add_subcommand("simulate", "Closed-loop simulation, trajectory to CSV");
    sim->add_option("--config", config, "model file (JSON)")->required();
    sim->add_option("--dt", dt, "sampling interval [s]");
    sim->add_option("--steps", steps, "number of sampling intervals");
    sim->add_option("--attack", attack_path, "attack schedule (JSON)");
    sim->add_option("--out", out_path, "output CSV path");
    sim->add_option("--gain", exp.controller_gain, "controller gain");

    CLI::App* ex = app.add_subcommand("experiment", "Random attack series with fourfold tables");
    ex->add_option("--config", config, "model file (JSON)")->required();
    ex->add_option("--series", series, "attack_1 | attack_3")->required();
    ex->add_option("--seed", seed, "random seed");
    ex->add_option("--steps", steps, "number of sampling times");
    ex->add_option("--out", out_dir, "output directory")->required();
    ex->add_option("--dt", exp.dt, "sampling interval [s]");
    ex->add_option("--tau-d", exp.detection_threshold, "detection threshold");
    ex->add_option("--eps-i", exp.identification_threshold, "identification threshold");
    ex->add_option("--pool", pool, "attack pool: identifiable | controllable | all");
    ex->add_option("--epsilon", epsilon, "fixed relaxation epsilon (default: oracle mode)");
    ex->add_option("--curvature-samples", exp.curvature_samples, "curvature sampling count");
    ex->add_flag("--continuous", continuous, "keep the loop drifting instead of per-step resets");

    CLI::App* chk = app.add_subcommand("check", "One-shot identification and guarantee report");
    chk->add_option("--config", config, "model file (JSON)")->required();
    chk->add_option("--state", state_path, "state snapshot (JSON), default steady state");
    chk->add_option("--attack", attack_path, "attack vector (JSON)")->required();
    chk->add_option("--dt", exp.dt, "sampling interval [s]");
    chk->add_option("--epsilon", epsilon, "fixed relaxation epsilon");
    chk->add_option("--curvature-samples", exp.curvature_samples, "curvature sampling count");

    CLI::App* idf = app.add_subcommand("identify", "Solve a dumped identification system");
    idf->add_option("--system", system_path, "system dump (JSON)")->required();
    idf->add_option("--tol-feas", tol_feas, "equality feasibility tolerance");
    idf->add_option("--epsilon", epsilon, "relaxation epsilon (also solves the relaxed problem)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(config, dt, steps, attack_path, out_path, exp.controller_gain);
        if (ex->parsed()) {
            exp.pool = swingid::pool_from_string(pool);
            exp.reset_between_steps = !continuous;
            if (epsilon > 0.0) exp.fixed_epsilon = epsilon;
            return run_experiment(config, series, seed, steps, out_dir, exp);
        }
        if (chk->parsed()) {
            if (epsilon > 0.0) exp.fixed_epsilon = epsilon;
            return run_check(config, state_path, attack_path, exp);
        }
        if (idf->parsed()) return run_identify(system_path, tol_feas, epsilon);
    } catch (const swingid::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const swingid::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
