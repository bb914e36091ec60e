#include "swingid/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace swingid {

using linalg::Matrix;
using nlohmann::json;

Matrix jacobian(const DualFn& fn, const std::vector<double>& at) {
    const std::size_t n = at.size();
    std::vector<Dual> seeded;
    seeded.reserve(n);
    for (std::size_t i = 0; i < n; ++i) seeded.push_back(Dual::seeded(at[i], n, i));
    const std::vector<Dual> out = fn(seeded);
    Matrix j(static_cast<int>(out.size()), static_cast<int>(n));
    for (std::size_t r = 0; r < out.size(); ++r)
        for (std::size_t c = 0; c < n; ++c) j(static_cast<int>(r), static_cast<int>(c)) = out[r].deriv(c);
    return j;
}

std::vector<double> coupling_response(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> neighbor_z,
                                      double dt) {
    return couple(model, sub, step_subsystem(model, sub, x, inputs, neighbor_z, dt));
}

SubsystemJacobians coupling_jacobians(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                      std::span<const double> inputs, std::span<const double> nominal_neighbor_z,
                                      double dt) {
    const std::size_t n_u = inputs.size();
    const std::size_t n_z = nominal_neighbor_z.size();
    const std::size_t dirs = n_u + n_z;

    // Seed inputs and neighbor couplings; the state is a constant of the map.
    SubsystemState<Dual> xd;
    xd.theta.reserve(x.theta.size());
    xd.omega.reserve(x.omega.size());
    for (double v : x.theta) xd.theta.push_back(Dual::constant(v, dirs));
    for (double v : x.omega) xd.omega.push_back(Dual::constant(v, dirs));
    std::vector<Dual> a;
    a.reserve(n_u);
    for (std::size_t i = 0; i < n_u; ++i) a.push_back(Dual::seeded(inputs[i], dirs, i));
    std::vector<Dual> zn;
    zn.reserve(n_z);
    for (std::size_t i = 0; i < n_z; ++i) zn.push_back(Dual::seeded(nominal_neighbor_z[i], dirs, n_u + i));

    const SubsystemState<Dual> stepped = subsystem_step<Dual>(model, sub, xd, a, zn, dt);
    const std::vector<Dual> z_out = couple_state<Dual>(model, sub, stepped);

    SubsystemJacobians jac;
    jac.input_jacobian = Matrix(static_cast<int>(z_out.size()), static_cast<int>(n_u));
    jac.neighbor_jacobian = Matrix(static_cast<int>(z_out.size()), static_cast<int>(n_z));
    for (std::size_t r = 0; r < z_out.size(); ++r) {
        for (std::size_t c = 0; c < n_u; ++c)
            jac.input_jacobian(static_cast<int>(r), static_cast<int>(c)) = z_out[r].deriv(c);
        for (std::size_t c = 0; c < n_z; ++c)
            jac.neighbor_jacobian(static_cast<int>(r), static_cast<int>(c)) = z_out[r].deriv(n_u + c);
    }
    return jac;
}

ColumnReduction reduce_columns(const Matrix& s, double tol_rank) {
    linalg::RankRevealResult rr = linalg::rank_revealing_columns(s, tol_rank);
    ColumnReduction out;
    out.kept = rr.kept;
    out.matrix = s.select_columns(out.kept);
    return out;
}

ColumnNormalization normalize_columns(const Matrix& s) {
    ColumnNormalization out;
    out.matrix = s;
    out.scales.assign(static_cast<size_t>(s.cols()), 0.0);
    for (int j = 0; j < s.cols(); ++j) {
        double norm = 0.0;
        for (int i = 0; i < s.rows(); ++i) norm += s(i, j) * s(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0)
            throw std::invalid_argument("normalize_columns: zero column " + std::to_string(j) +
                                        " (column reduction should have removed it)");
        out.scales[static_cast<size_t>(j)] = norm;
        for (int i = 0; i < s.rows(); ++i) out.matrix(i, j) /= norm;
    }
    return out;
}

SensitivityBlock build_sensitivity_block(const NetworkModel& model, int sub, const SubsystemState<double>& x,
                                         std::span<const double> inputs,
                                         std::span<const double> nominal_neighbor_z, double dt,
                                         double tol_rank) {
    SensitivityBlock block;
    block.jacobians = coupling_jacobians(model, sub, x, inputs, nominal_neighbor_z, dt);
    block.reduction = reduce_columns(block.jacobians.input_jacobian, tol_rank);
    block.normalization = normalize_columns(block.reduction.matrix);
    return block;
}

AssembledSystem assemble_system(const NetworkModel& model, const std::vector<SensitivityBlock>& blocks,
                                const std::vector<std::vector<double>>& coupling_dev,
                                const std::vector<std::vector<double>>& coupling_dev_in) {
    const int n_sub = model.subsystem_count();
    if (static_cast<int>(blocks.size()) != n_sub || static_cast<int>(coupling_dev.size()) != n_sub ||
        static_cast<int>(coupling_dev_in.size()) != n_sub)
        throw std::invalid_argument("assemble_system: one block and one deviation per subsystem required");

    AssembledSystem sys;
    sys.input_dim = model.input_dim();
    int r = 0;
    for (int s = 0; s < n_sub; ++s) {
        if (static_cast<int>(coupling_dev[static_cast<size_t>(s)].size()) != model.coupling_dim(s))
            throw std::invalid_argument("assemble_system: coupling deviation size mismatch in subsystem " +
                                        model.subsystem(s).name);
        r += blocks[static_cast<size_t>(s)].normalization.matrix.cols();
    }

    sys.s = Matrix(model.coupling_dim(), r);
    sys.rhs.assign(static_cast<size_t>(model.coupling_dim()), 0.0);
    sys.row_subsystem.assign(static_cast<size_t>(model.coupling_dim()), 0);

    int col0 = 0;
    for (int s = 0; s < n_sub; ++s) {
        const SensitivityBlock& block = blocks[static_cast<size_t>(s)];
        const Matrix& m = block.normalization.matrix;
        const int row0 = model.coupling_offset(s);
        if (m.rows() != model.coupling_dim(s))
            throw std::invalid_argument("assemble_system: block row count mismatch in subsystem " +
                                        model.subsystem(s).name);
        for (int i = 0; i < m.rows(); ++i) {
            sys.row_subsystem[static_cast<size_t>(row0 + i)] = s;
            for (int j = 0; j < m.cols(); ++j) sys.s(row0 + i, col0 + j) = m(i, j);
        }
        const auto& members = model.subsystem(s).members;
        for (int j = 0; j < m.cols(); ++j) {
            sys.column_bus.push_back(members[static_cast<size_t>(block.reduction.kept[static_cast<size_t>(j)])]);
            sys.scales.push_back(block.normalization.scales[static_cast<size_t>(j)]);
        }

        // rhs block: measured deviation minus the propagated effect of the
        // neighbor deviations that entered the step.
        std::vector<double> zn_in;
        for (int nj : model.subsystem(s).neighbors) {
            const auto& dv = coupling_dev_in[static_cast<size_t>(nj)];
            if (static_cast<int>(dv.size()) != model.coupling_dim(nj))
                throw std::invalid_argument("assemble_system: neighbor deviation size mismatch");
            zn_in.insert(zn_in.end(), dv.begin(), dv.end());
        }
        const std::vector<double> propagated = linalg::matvec(block.jacobians.neighbor_jacobian, zn_in);
        for (int i = 0; i < m.rows(); ++i)
            sys.rhs[static_cast<size_t>(row0 + i)] =
                coupling_dev[static_cast<size_t>(s)][static_cast<size_t>(i)] - propagated[static_cast<size_t>(i)];
        col0 += m.cols();
    }

    sys.sigma_min = (r == 0) ? 0.0 : linalg::smallest_singular_value(sys.s);
    return sys;
}

std::string system_to_json_text(const AssembledSystem& system) {
    json doc;
    doc["rows"] = system.s.rows();
    doc["cols"] = system.s.cols();
    json rows = json::array();
    for (int i = 0; i < system.s.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < system.s.cols(); ++j) row.push_back(system.s(i, j));
        rows.push_back(std::move(row));
    }
    doc["S"] = std::move(rows);
    doc["b"] = system.rhs;
    doc["column_bus"] = system.column_bus;
    doc["scales"] = system.scales;
    doc["row_subsystem"] = system.row_subsystem;
    doc["sigma_min"] = system.sigma_min;
    doc["d_u"] = system.input_dim;
    return doc.dump(2);
}

AssembledSystem system_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("system dump parse error: ") + e.what());
    }
    AssembledSystem sys;
    try {
        const int rows = doc.at("rows").get<int>();
        const int cols = doc.at("cols").get<int>();
        sys.s = Matrix(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) sys.s(i, j) = doc.at("S").at(static_cast<size_t>(i)).at(static_cast<size_t>(j)).get<double>();
        sys.rhs = doc.at("b").get<std::vector<double>>();
        sys.column_bus = doc.at("column_bus").get<std::vector<int>>();
        sys.scales = doc.at("scales").get<std::vector<double>>();
        if (doc.contains("row_subsystem")) sys.row_subsystem = doc.at("row_subsystem").get<std::vector<int>>();
        sys.input_dim = doc.at("d_u").get<int>();
        sys.sigma_min = doc.contains("sigma_min") ? doc.at("sigma_min").get<double>()
                                                  : linalg::smallest_singular_value(sys.s);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("system dump: ") + e.what());
    }
    if (static_cast<int>(sys.rhs.size()) != sys.s.rows()) throw ConfigError("system dump: rhs size mismatch");
    if (static_cast<int>(sys.column_bus.size()) != sys.s.cols() ||
        static_cast<int>(sys.scales.size()) != sys.s.cols())
        throw ConfigError("system dump: column metadata size mismatch");
    return sys;
}

}  // namespace swingid
