#include "swingid/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace swingid {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string join_ids(const std::vector<int>& ids) {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

std::vector<int> split_ids(const std::string& field) {
    std::vector<int> out;
    std::stringstream ss(field);
    std::string tok;
    while (std::getline(ss, tok, ';'))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

bool contains_all(const std::vector<int>& outer, const std::vector<int>& inner) {
    return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

ConditionStatus condition_from_string(const std::string& s) {
    if (s == "met") return ConditionStatus::Met;
    if (s == "not_met") return ConditionStatus::NotMet;
    if (s == "n_a") return ConditionStatus::NotApplicable;
    throw std::invalid_argument("unknown condition status '" + s + "'");
}

double pct(long count, long denom) { return denom == 0 ? 0.0 : 100.0 * static_cast<double>(count) / denom; }

}  // namespace

AttackSeries series_from_string(const std::string& s) {
    if (s == "attack_1") return AttackSeries::SingleNode;
    if (s == "attack_3") return AttackSeries::TripleNode;
    throw std::invalid_argument("unknown series '" + s + "' (expected attack_1 or attack_3)");
}

std::string to_string(AttackSeries s) { return s == AttackSeries::SingleNode ? "attack_1" : "attack_3"; }

AttackPool pool_from_string(const std::string& s) {
    if (s == "identifiable") return AttackPool::Identifiable;
    if (s == "controllable") return AttackPool::Controllable;
    if (s == "all") return AttackPool::All;
    throw std::invalid_argument("unknown attack pool '" + s + "'");
}

std::string to_string(AttackPool p) {
    switch (p) {
        case AttackPool::Identifiable: return "identifiable";
        case AttackPool::Controllable: return "controllable";
        case AttackPool::All: return "all";
    }
    return "unknown";
}

double FourfoldTable::pct_met_correct() const { return pct(met_correct, denominator); }
double FourfoldTable::pct_met_wrong() const { return pct(met_wrong, denominator); }
double FourfoldTable::pct_unmet_correct() const { return pct(unmet_correct, denominator); }
double FourfoldTable::pct_unmet_wrong() const { return pct(unmet_wrong, denominator); }

FourfoldTable tabulate_fourfold(const std::vector<StepRecord>& records, TableKind kind) {
    FourfoldTable table;
    for (const StepRecord& rec : records) {
        if (!rec.detected) continue;
        ++table.denominator;
        const bool met = (kind == TableKind::Superset ? rec.cond_superset : rec.cond_exact) == ConditionStatus::Met;
        const bool correct = kind == TableKind::Superset ? rec.superset_correct : rec.exact_correct;
        if (met && correct) ++table.met_correct;
        else if (met && !correct) ++table.met_wrong;
        else if (!met && correct) ++table.unmet_correct;
        else ++table.unmet_wrong;
    }
    return table;
}

double mean_excess(const std::vector<StepRecord>& records) {
    long detected = 0;
    long total = 0;
    for (const StepRecord& rec : records) {
        if (!rec.detected) continue;
        ++detected;
        total += rec.excess;
    }
    if (detected == 0) throw std::invalid_argument("mean_excess: no detected steps");
    return static_cast<double>(total) / static_cast<double>(detected);
}

AttackVector generate_attack(const NetworkModel& model, const std::vector<int>& pool_buses,
                             const std::vector<double>& current_u, int size, long seed, int t) {
    if (size < 1 || size > static_cast<int>(pool_buses.size()))
        throw std::invalid_argument("generate_attack: attack size exceeds pool");
    std::seed_seq sseq{static_cast<unsigned>(seed), static_cast<unsigned>(seed >> 32),
                       static_cast<unsigned>(t), 0x9e3779b9u};
    std::mt19937_64 rng(sseq);

    // Partial Fisher-Yates over a copy of the pool: first `size` slots.
    std::vector<int> pool = pool_buses;
    AttackVector attack;
    for (int k = 0; k < size; ++k) {
        const size_t j = k + static_cast<size_t>(uniform01(rng) * static_cast<double>(pool.size() - k));
        std::swap(pool[static_cast<size_t>(k)], pool[std::min(j, pool.size() - 1)]);
        const int bus_id = pool[static_cast<size_t>(k)];
        const Bus& bus = model.bus(bus_id);
        const double u = current_u[static_cast<size_t>(bus_id - 1)];
        const double lo = bus.u_min - u;
        const double hi = bus.u_max - u;
        const double delta = lo + (hi - lo) * uniform01(rng);
        attack.emplace_back(bus_id, delta);
    }
    std::sort(attack.begin(), attack.end());
    return attack;
}

std::vector<int> attack_pool_buses(const NetworkModel& model, AttackPool pool, double dt, double tol_rank) {
    std::vector<int> buses;
    if (pool == AttackPool::Identifiable) {
        // Columns surviving reduction at the steady nominal point: these are
        // the inputs the identification problem can actually name.
        const SystemState x0 = initial_state(model);
        const std::vector<double> z = stack_couplings(model, x0);
        const SteadyStateInput ss = steady_state_input(model, x0.theta);
        for (int s = 0; s < model.subsystem_count(); ++s) {
            const SubsystemState<double> xi = slice_state(model, s, x0);
            std::vector<double> u_i;
            for (int m : model.subsystem(s).members) u_i.push_back(ss.u[static_cast<size_t>(m - 1)]);
            std::vector<double> zn;
            for (int nj : model.subsystem(s).neighbors) {
                const int off = model.coupling_offset(nj);
                for (int c = 0; c < model.coupling_dim(nj); ++c) zn.push_back(z[static_cast<size_t>(off + c)]);
            }
            const SubsystemJacobians jac = coupling_jacobians(model, s, xi, u_i, zn, dt);
            const ColumnReduction red = reduce_columns(jac.input_jacobian, tol_rank);
            for (int local : red.kept) {
                const int bus_id = model.subsystem(s).members[static_cast<size_t>(local)];
                if (model.bus(bus_id).kind != BusKind::ConstantLoad) buses.push_back(bus_id);
            }
        }
    } else {
        for (const Bus& b : model.buses())
            if (pool == AttackPool::All || b.kind != BusKind::ConstantLoad) buses.push_back(b.id);
    }
    std::sort(buses.begin(), buses.end());
    return buses;
}

SeriesResult run_series(const NetworkModel& model, AttackSeries series, long seed, const ExperimentConfig& config) {
    if (config.steps < 1) throw std::invalid_argument("run_series: steps must be positive");

    SeriesResult result;
    result.series = to_string(series);
    result.seed = seed;
    result.steps = config.steps;
    const int attack_size = series == AttackSeries::SingleNode ? 1 : 3;
    const int max_degree_m = max_degree(model);

    const SystemState steady = initial_state(model);
    const SteadyStateInput ss = steady_state_input(model, steady.theta);
    const std::vector<double> z_steady = stack_couplings(model, steady);
    const std::vector<int> pool = attack_pool_buses(model, config.pool, config.dt, config.tol_rank);

    // Sensitivity blocks follow the nominal point, so they are rebuilt
    // whenever it moves. The curvature is a box maximum around the steady
    // nominal whose radius dwarfs the loop's drift; one estimate per series
    // covers every step.
    std::vector<SensitivityBlock> blocks;
    bool blocks_valid = false;

    auto rebuild_blocks = [&](const SystemState& x, const std::vector<double>& u,
                              const std::vector<double>& z_nominal) {
        blocks.clear();
        for (int s = 0; s < model.subsystem_count(); ++s) {
            const SubsystemState<double> xi = slice_state(model, s, x);
            std::vector<double> u_i;
            for (int m : model.subsystem(s).members) u_i.push_back(u[static_cast<size_t>(m - 1)]);
            std::vector<double> zn;
            for (int nj : model.subsystem(s).neighbors) {
                const int off = model.coupling_offset(nj);
                for (int c = 0; c < model.coupling_dim(nj); ++c)
                    zn.push_back(z_nominal[static_cast<size_t>(off + c)]);
            }
            blocks.push_back(build_sensitivity_block(model, s, xi, u_i, zn, config.dt, config.tol_rank));
        }
    };

    double curvature = 0.0;
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const SubsystemState<double> xi = slice_state(model, s, steady);
        std::vector<double> u_i;
        for (int m : model.subsystem(s).members) u_i.push_back(ss.u[static_cast<size_t>(m - 1)]);
        std::vector<double> zn;
        for (int nj : model.subsystem(s).neighbors) {
            const int off = model.coupling_offset(nj);
            for (int c = 0; c < model.coupling_dim(nj); ++c) zn.push_back(z_steady[static_cast<size_t>(off + c)]);
        }
        const CurvatureEstimate est = estimate_subsystem_curvature(
            model, s, xi, u_i, zn, config.dt, config.curvature_box_radius, config.curvature_samples);
        curvature = std::max(curvature, est.inflated);
    }

    SystemState x = steady;
    std::vector<double> z_nominal = z_steady;
    std::vector<double> dz_in(z_steady.size(), 0.0);  // deviations that enter the next step

    for (int t = 0; t < config.steps; ++t) {
        if (config.reset_between_steps) {
            x = steady;
            z_nominal = z_steady;
            std::fill(dz_in.begin(), dz_in.end(), 0.0);
        }

        const std::vector<double> u_now = controller_step(model, x, ss.u, config.controller_gain);
        const AttackVector attack = generate_attack(model, pool, u_now, attack_size, seed, t);
        // True injected deviation after the physical box clamp.
        AttackVector applied_attack;
        for (const auto& [bus_id, delta] : attack) {
            const Bus& bus = model.bus(bus_id);
            const double u = u_now[static_cast<size_t>(bus_id - 1)];
            const double applied = std::clamp(u + delta, bus.u_min, bus.u_max) - u;
            if (applied != 0.0) applied_attack.emplace_back(bus_id, applied);
        }

        if (!blocks_valid || !config.reset_between_steps) {
            rebuild_blocks(x, u_now, z_nominal);
            blocks_valid = true;
        }

        const ClosedLoopStep cls =
            closed_loop_step(model, x, z_nominal, ss.u, attack, config.dt, config.controller_gain);

        StepRecord rec;
        rec.t = t * config.dt;
        for (const auto& [bus_id, delta] : applied_attack) rec.true_support.push_back(bus_id);
        std::sort(rec.true_support.begin(), rec.true_support.end());

        const std::vector<std::vector<double>> dz_out = split_couplings(model, cls.dz_next);
        const DetectionVerdict verdict = detect(dz_out, config.detection_threshold);
        rec.detected = verdict.alarm;
        rec.max_deviation = *std::max_element(verdict.deviation_norms.begin(), verdict.deviation_norms.end());

        if (verdict.alarm) {
            const std::vector<std::vector<double>> dz_in_split = split_couplings(model, dz_in);
            const AssembledSystem system = assemble_system(model, blocks, dz_out, dz_in_split);
            rec.sigma_min = system.sigma_min;
            rec.curvature = curvature;

            const IdentificationResult eq = solve_l0_equality(system, config.tol_feas);
            rec.support_equality = extract_support(eq.delta_a, config.identification_threshold);
            rec.cardinality_equality = eq.cardinality;
            rec.residual_equality = eq.residual;

            const GuaranteeReport rep = check_conditions(system, applied_attack, dz_in_split, curvature,
                                                         max_degree_m, config.epsilon_fraction);
            rec.cond_superset = rep.superset_condition;
            rec.cond_exact = rep.exact_condition;
            rec.lhs = rep.lhs;
            rec.delta = rep.delta;
            rec.delta_tilde = rep.delta_tilde;

            const double epsilon = config.fixed_epsilon ? *config.fixed_epsilon : rep.epsilon;
            if (epsilon > 0.0 && system.sigma_min > 0.0) {
                RelaxationBudget budget{epsilon, system.sigma_min};
                const IdentificationResult rel = solve_l0_relaxed(system, budget);
                rec.support_relaxed = extract_support(rel.delta_a, config.identification_threshold);
                rec.cardinality_relaxed = rel.cardinality;
                rec.residual_relaxed = rel.residual;
            }

            rec.superset_correct = contains_all(rec.support_equality, rec.true_support);
            rec.exact_correct = rec.support_relaxed == rec.true_support;
            std::vector<int> extra;
            std::set_difference(rec.support_equality.begin(), rec.support_equality.end(),
                                rec.true_support.begin(), rec.true_support.end(), std::back_inserter(extra));
            rec.excess = static_cast<int>(extra.size());
            ++result.detected_count;
        }
        result.records.push_back(std::move(rec));

        if (!config.reset_between_steps) {
            x = cls.next;
            z_nominal = cls.z_nominal_next;
            dz_in = cls.dz_next;
        }
    }

    result.superset_table = tabulate_fourfold(result.records, TableKind::Superset);
    result.exact_table = tabulate_fourfold(result.records, TableKind::Exact);
    result.mean_excess = result.detected_count > 0 ? mean_excess(result.records) : 0.0;
    return result;
}

OneShotResult run_one_shot(const NetworkModel& model, const SystemState& x0, const AttackVector& attack,
                           const ExperimentConfig& config) {
    OneShotResult out;
    const SteadyStateInput ss = steady_state_input(model, initial_state(model).theta);
    const std::vector<double> z_nominal = stack_couplings(model, x0);
    const std::vector<double> u_now = controller_step(model, x0, ss.u, config.controller_gain);

    const ClosedLoopStep cls =
        closed_loop_step(model, x0, z_nominal, ss.u, attack, config.dt, config.controller_gain);
    const std::vector<std::vector<double>> dz_out = split_couplings(model, cls.dz_next);
    const std::vector<std::vector<double>> dz_in =
        split_couplings(model, std::vector<double>(cls.dz_next.size(), 0.0));
    out.verdict = detect(dz_out, config.detection_threshold);
    if (!out.verdict.alarm) return out;

    std::vector<SensitivityBlock> blocks;
    double curvature = 0.0;
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const SubsystemState<double> xi = slice_state(model, s, x0);
        std::vector<double> u_i;
        for (int m : model.subsystem(s).members) u_i.push_back(u_now[static_cast<size_t>(m - 1)]);
        std::vector<double> zn;
        for (int nj : model.subsystem(s).neighbors) {
            const int off = model.coupling_offset(nj);
            for (int c = 0; c < model.coupling_dim(nj); ++c)
                zn.push_back(z_nominal[static_cast<size_t>(off + c)]);
        }
        blocks.push_back(build_sensitivity_block(model, s, xi, u_i, zn, config.dt, config.tol_rank));
        const CurvatureEstimate est = estimate_subsystem_curvature(
            model, s, xi, u_i, zn, config.dt, config.curvature_box_radius, config.curvature_samples);
        out.curvature_per_subsystem.push_back(est.inflated);
        curvature = std::max(curvature, est.inflated);
    }
    out.system = assemble_system(model, blocks, dz_out, dz_in);
    out.equality = solve_l0_equality(out.system, config.tol_feas);
    out.identified_support = extract_support(out.equality.delta_a, config.identification_threshold);
    out.report = check_conditions(out.system, attack, dz_in, curvature, max_degree(model),
                                  config.epsilon_fraction);
    out.report.curvature_per_subsystem = out.curvature_per_subsystem;

    const double epsilon = config.fixed_epsilon ? *config.fixed_epsilon : out.report.epsilon;
    if (epsilon > 0.0 && out.system.sigma_min > 0.0) {
        out.relaxed = solve_l0_relaxed(out.system, {epsilon, out.system.sigma_min});
        out.relaxed_solved = true;
        out.identified_support_relaxed =
            extract_support(out.relaxed.delta_a, config.identification_threshold);
    }
    return out;
}

std::string records_to_csv(const std::vector<StepRecord>& records) {
    std::ostringstream out;
    out << "t,detected,true_support,support_equality,support_relaxed,superset_correct,exact_correct,"
           "cond_superset,cond_exact,lhs,delta,delta_tilde,sigma_min,curvature,excess,max_deviation,"
           "cardinality_equality,cardinality_relaxed,residual_equality,residual_relaxed\n";
    for (const StepRecord& r : records) {
        out << fmt17(r.t) << ',' << (r.detected ? 1 : 0) << ',' << join_ids(r.true_support) << ','
            << join_ids(r.support_equality) << ',' << join_ids(r.support_relaxed) << ','
            << (r.superset_correct ? 1 : 0) << ',' << (r.exact_correct ? 1 : 0) << ','
            << to_string(r.cond_superset) << ',' << to_string(r.cond_exact) << ',' << fmt17(r.lhs) << ','
            << fmt17(r.delta) << ',' << fmt17(r.delta_tilde) << ',' << fmt17(r.sigma_min) << ','
            << fmt17(r.curvature) << ',' << r.excess << ',' << fmt17(r.max_deviation) << ','
            << r.cardinality_equality << ',' << r.cardinality_relaxed << ',' << fmt17(r.residual_equality)
            << ',' << fmt17(r.residual_relaxed) << '\n';
    }
    return out.str();
}

std::vector<StepRecord> records_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("records_from_csv: empty document");
    std::vector<StepRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        if (fields.size() != 20) throw std::invalid_argument("records_from_csv: malformed row");
        StepRecord r;
        int f = 0;
        r.t = std::stod(fields[f++]);
        r.detected = fields[f++] == "1";
        r.true_support = split_ids(fields[f++]);
        r.support_equality = split_ids(fields[f++]);
        r.support_relaxed = split_ids(fields[f++]);
        r.superset_correct = fields[f++] == "1";
        r.exact_correct = fields[f++] == "1";
        r.cond_superset = condition_from_string(fields[f++]);
        r.cond_exact = condition_from_string(fields[f++]);
        r.lhs = std::stod(fields[f++]);
        r.delta = std::stod(fields[f++]);
        r.delta_tilde = std::stod(fields[f++]);
        r.sigma_min = std::stod(fields[f++]);
        r.curvature = std::stod(fields[f++]);
        r.excess = std::stoi(fields[f++]);
        r.max_deviation = std::stod(fields[f++]);
        r.cardinality_equality = std::stoi(fields[f++]);
        r.cardinality_relaxed = std::stoi(fields[f++]);
        r.residual_equality = std::stod(fields[f++]);
        r.residual_relaxed = std::stod(fields[f++]);
        records.push_back(std::move(r));
    }
    return records;
}

namespace {

json table_to_json(const FourfoldTable& t) {
    json j;
    j["denominator"] = t.denominator;
    j["counts"] = {{"met_correct", t.met_correct},
                   {"met_wrong", t.met_wrong},
                   {"unmet_correct", t.unmet_correct},
                   {"unmet_wrong", t.unmet_wrong}};
    j["percent"] = {{"met_correct", t.pct_met_correct()},
                    {"met_wrong", t.pct_met_wrong()},
                    {"unmet_correct", t.pct_unmet_correct()},
                    {"unmet_wrong", t.pct_unmet_wrong()}};
    return j;
}

}  // namespace

std::string tables_to_json_text(const SeriesResult& result) {
    json doc;
    doc["series"] = result.series;
    doc["seed"] = result.seed;
    doc["steps"] = result.steps;
    doc["detected_steps"] = result.detected_count;
    doc["superset"] = table_to_json(result.superset_table);
    doc["exact"] = table_to_json(result.exact_table);
    doc["mean_excess"] = result.mean_excess;
    return doc.dump(2);
}

void write_results(const SeriesResult& result, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    {
        std::ofstream out(fs::path(directory) / "records.csv", std::ios::binary);
        if (!out) throw std::runtime_error("write_results: cannot write records.csv in " + directory);
        out << records_to_csv(result.records);
    }
    {
        std::ofstream out(fs::path(directory) / "tables.json", std::ios::binary);
        if (!out) throw std::runtime_error("write_results: cannot write tables.json in " + directory);
        out << tables_to_json_text(result) << "\n";
    }
}

}  // namespace swingid
