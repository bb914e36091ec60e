#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "swingid/sensitivity.hpp"

using namespace swingid;
using linalg::Matrix;

namespace {

struct NominalPoint {
    SubsystemState<double> x;
    std::vector<double> u;
    std::vector<double> zn;
};

NominalPoint nominal_point(const NetworkModel& model, int sub) {
    const SystemState x0 = initial_state(model);
    const SteadyStateInput ss = steady_state_input(model, x0.theta);
    const std::vector<double> z = stack_couplings(model, x0);
    NominalPoint p;
    p.x = slice_state(model, sub, x0);
    for (int m : model.subsystem(sub).members) p.u.push_back(ss.u[static_cast<size_t>(m - 1)]);
    for (int nj : model.subsystem(sub).neighbors) {
        const int off = model.coupling_offset(nj);
        for (int c = 0; c < model.coupling_dim(nj); ++c) p.zn.push_back(z[static_cast<size_t>(off + c)]);
    }
    return p;
}

// Central finite differences through the one-step coupling response.
Matrix fd_input_jacobian(const NetworkModel& model, int sub, const NominalPoint& p, double dt, double h) {
    const int rows = model.coupling_dim(sub);
    const int cols = static_cast<int>(p.u.size());
    Matrix j(rows, cols);
    for (int c = 0; c < cols; ++c) {
        std::vector<double> up = p.u, um = p.u;
        up[static_cast<size_t>(c)] += h;
        um[static_cast<size_t>(c)] -= h;
        const auto zp = coupling_response(model, sub, p.x, up, p.zn, dt);
        const auto zm = coupling_response(model, sub, p.x, um, p.zn, dt);
        for (int r = 0; r < rows; ++r)
            j(r, c) = (zp[static_cast<size_t>(r)] - zm[static_cast<size_t>(r)]) / (2.0 * h);
    }
    return j;
}

Matrix fd_neighbor_jacobian(const NetworkModel& model, int sub, const NominalPoint& p, double dt, double h) {
    const int rows = model.coupling_dim(sub);
    const int cols = static_cast<int>(p.zn.size());
    Matrix j(rows, cols);
    for (int c = 0; c < cols; ++c) {
        std::vector<double> zp_in = p.zn, zm_in = p.zn;
        zp_in[static_cast<size_t>(c)] += h;
        zm_in[static_cast<size_t>(c)] -= h;
        const auto zp = coupling_response(model, sub, p.x, p.u, zp_in, dt);
        const auto zm = coupling_response(model, sub, p.x, p.u, zm_in, dt);
        for (int r = 0; r < rows; ++r)
            j(r, c) = (zp[static_cast<size_t>(r)] - zm[static_cast<size_t>(r)]) / (2.0 * h);
    }
    return j;
}

double rel_matrix_error(const Matrix& a, const Matrix& b) {
    double scale = 0.0, err = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            scale = std::max(scale, std::abs(a(i, j)));
            err = std::max(err, std::abs(a(i, j) - b(i, j)));
        }
    return err / std::max(scale, 1e-300);
}

}  // namespace

TEST_CASE("dual arithmetic derivative rules") {
    const std::size_t dirs = 2;
    const Dual x = Dual::seeded(0.7, dirs, 0);
    const Dual y = Dual::seeded(-0.3, dirs, 1);
    const Dual f = x * y + sin(x) / y;
    CHECK(f.value() == doctest::Approx(0.7 * -0.3 + std::sin(0.7) / -0.3));
    CHECK(f.deriv(0) == doctest::Approx(-0.3 + std::cos(0.7) / -0.3));
    CHECK(f.deriv(1) == doctest::Approx(0.7 - std::sin(0.7) / 0.09));
    const Dual g = cos(2.0 * x - 1.0);
    CHECK(g.deriv(0) == doctest::Approx(-2.0 * std::sin(0.4)));
}

TEST_CASE("generic jacobian of a linear map is exact") {
    // f(v) = A v with A = [[2, -1], [0.5, 3], [1, 1]]
    const DualFn fn = [](const std::vector<Dual>& v) {
        std::vector<Dual> out;
        out.push_back(2.0 * v[0] - 1.0 * v[1]);
        out.push_back(0.5 * v[0] + 3.0 * v[1]);
        out.push_back(v[0] + v[1]);
        return out;
    };
    const Matrix j = jacobian(fn, {0.37, -1.2});
    CHECK(j(0, 0) == 2.0);
    CHECK(j(0, 1) == -1.0);
    CHECK(j(1, 0) == 0.5);
    CHECK(j(1, 1) == 3.0);
    CHECK(j(2, 0) == 1.0);
    CHECK(j(2, 1) == 1.0);
}

TEST_CASE("coupling response equals couple after step bitwise") {
    const NetworkModel model = testutil::load_ieee30();
    std::mt19937_64 rng(3);
    for (int s = 0; s < model.subsystem_count(); ++s) {
        NominalPoint p = nominal_point(model, s);
        for (double& v : p.u) v += 0.2 * (testutil::uniform01(rng) - 0.5);
        for (double& v : p.zn) v += 0.1 * (testutil::uniform01(rng) - 0.5);
        const auto direct = coupling_response(model, s, p.x, p.u, p.zn, 0.1);
        const auto composed = couple(model, s, step_subsystem(model, s, p.x, p.u, p.zn, 0.1));
        CHECK(direct == composed);
    }
}

TEST_CASE("coupling response at steady state returns the current couplings") {
    const NetworkModel model = testutil::load_ieee30();
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const NominalPoint p = nominal_point(model, s);
        const auto z_now = couple(model, s, p.x);
        const auto z_next = coupling_response(model, s, p.x, p.u, p.zn, 0.1);
        for (size_t i = 0; i < z_now.size(); ++i) CHECK(z_next[i] == doctest::Approx(z_now[i]).epsilon(1e-14));
    }
}

TEST_CASE("isolated machine coupling response matches the analytic decay") {
    // one coupled pair where bus 1 is its own subsystem: theta evolves as
    // the integral of the decaying frequency when no lines act
    const NetworkModel solo = testutil::single_bus_model(1.0, 1.0);
    SubsystemState<double> x{{0.0}, {1.0}};
    const auto next = step_subsystem(solo, 0, x, std::vector<double>{0.0}, {}, 0.1);
    // analytic: omega(t) = e^{-t}, theta(t) = 1 - e^{-t}
    CHECK(std::abs(next.theta[0] - (1.0 - std::exp(-0.1))) < 1e-7);
    CHECK(std::abs(next.omega[0] - std::exp(-0.1)) < 1e-7);
}

TEST_CASE("forward-mode jacobians agree with central differences") {
    const NetworkModel model = testutil::load_ieee30();
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int s = static_cast<int>(rng() % 6);
        NominalPoint p = nominal_point(model, s);
        for (double& v : p.u) v += 0.3 * (testutil::uniform01(rng) - 0.5);
        for (double& v : p.zn) v += 0.2 * (testutil::uniform01(rng) - 0.5);
        for (double& v : p.x.omega) v += 0.1 * (testutil::uniform01(rng) - 0.5);
        const SubsystemJacobians jac = coupling_jacobians(model, s, p.x, p.u, p.zn, 0.1);
        worst = std::max(worst, rel_matrix_error(jac.input_jacobian, fd_input_jacobian(model, s, p, 0.1, 1e-6)));
        worst = std::max(worst, rel_matrix_error(jac.neighbor_jacobian, fd_neighbor_jacobian(model, s, p, 0.1, 1e-6)));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("input sensitivity vanishes as dt goes to zero") {
    const NetworkModel model = testutil::load_ieee30();
    const NominalPoint p = nominal_point(model, 0);
    const SubsystemJacobians jac = coupling_jacobians(model, 0, p.x, p.u, p.zn, 0.0);
    for (int i = 0; i < jac.input_jacobian.rows(); ++i)
        for (int j = 0; j < jac.input_jacobian.cols(); ++j) CHECK(jac.input_jacobian(i, j) == 0.0);
}

TEST_CASE("reduce_columns keeps one of two identical columns") {
    Matrix s(3, 2);
    for (int i = 0; i < 3; ++i) {
        s(i, 0) = i + 1.0;
        s(i, 1) = i + 1.0;
    }
    const ColumnReduction red = reduce_columns(s);
    REQUIRE(red.kept.size() == 1);
    CHECK((red.kept[0] == 0 || red.kept[0] == 1));
    CHECK(red.matrix.cols() == 1);
}

TEST_CASE("reduce_columns keeps everything on a full-rank square matrix") {
    std::mt19937_64 rng(7);
    Matrix s(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) s(i, j) = testutil::uniform01(rng) - 0.5;
    const ColumnReduction red = reduce_columns(s);
    CHECK(red.kept == std::vector<int>{0, 1, 2, 3});
    CHECK(red.matrix == s);
}

TEST_CASE("reduce_columns on a rank-2 wide matrix spans the original") {
    std::mt19937_64 rng(11);
    // two independent generator columns and three combinations
    std::vector<double> g1(3), g2(3);
    for (int i = 0; i < 3; ++i) {
        g1[static_cast<size_t>(i)] = testutil::uniform01(rng) - 0.5;
        g2[static_cast<size_t>(i)] = testutil::uniform01(rng) - 0.5;
    }
    Matrix s(3, 5);
    const double coeffs[5][2] = {{1.0, 0.0}, {0.3, -0.7}, {0.0, 1.0}, {1.1, 0.4}, {-0.5, 0.25}};
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 3; ++i)
            s(i, j) = coeffs[j][0] * g1[static_cast<size_t>(i)] + coeffs[j][1] * g2[static_cast<size_t>(i)];
    const ColumnReduction red = reduce_columns(s);
    REQUIRE(red.kept.size() == 2);
    // every dropped column projects onto the kept span with tiny residual
    for (int j = 0; j < 5; ++j) {
        if (std::find(red.kept.begin(), red.kept.end(), j) != red.kept.end()) continue;
        const auto ls = linalg::least_squares(red.matrix, s.column(j));
        CHECK(ls.residual < 1e-9);
    }
}

TEST_CASE("reduce_columns is idempotent") {
    const NetworkModel model = testutil::load_ieee30();
    const NominalPoint p = nominal_point(model, 2);
    const SubsystemJacobians jac = coupling_jacobians(model, 2, p.x, p.u, p.zn, 0.1);
    const ColumnReduction first = reduce_columns(jac.input_jacobian);
    const ColumnReduction second = reduce_columns(first.matrix);
    CHECK(static_cast<int>(second.kept.size()) == first.matrix.cols());
}

TEST_CASE("normalize_columns scales and records") {
    Matrix s(2, 1, {3.0, 4.0});
    const ColumnNormalization norm = normalize_columns(s);
    CHECK(norm.matrix(0, 0) == doctest::Approx(0.6));
    CHECK(norm.matrix(1, 0) == doctest::Approx(0.8));
    CHECK(norm.scales[0] == doctest::Approx(5.0));

    const ColumnNormalization twice = normalize_columns(norm.matrix);
    CHECK(twice.scales[0] == doctest::Approx(1.0));
    CHECK(twice.matrix(0, 0) == doctest::Approx(0.6));

    Matrix zero(2, 1);
    CHECK_THROWS_AS(normalize_columns(zero), std::invalid_argument);
}

TEST_CASE("assembled system is block diagonal with unit columns") {
    const NetworkModel model = testutil::load_ieee30();
    std::vector<SensitivityBlock> blocks;
    std::vector<std::vector<double>> dz_out, dz_in;
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const NominalPoint p = nominal_point(model, s);
        blocks.push_back(build_sensitivity_block(model, s, p.x, p.u, p.zn, 0.1));
        dz_out.emplace_back(static_cast<size_t>(model.coupling_dim(s)), 0.0);
        dz_in.emplace_back(static_cast<size_t>(model.coupling_dim(s)), 0.0);
    }
    const AssembledSystem sys = assemble_system(model, blocks, dz_out, dz_in);

    CHECK(sys.s.rows() == 18);
    CHECK(sys.s.cols() <= 18);
    CHECK(sys.s.cols() == 18);  // every block has full coupling rank here
    CHECK(sys.sigma_min > 0.0);

    // off-block entries are exactly zero
    for (int i = 0; i < sys.s.rows(); ++i)
        for (int j = 0; j < sys.s.cols(); ++j) {
            const int row_sub = sys.row_subsystem[static_cast<size_t>(i)];
            const int col_sub = model.subsystem_of(sys.column_bus[static_cast<size_t>(j)]);
            if (row_sub != col_sub) CHECK(sys.s(i, j) == 0.0);
        }

    // unit columns
    for (int j = 0; j < sys.s.cols(); ++j) {
        double norm = 0.0;
        for (int i = 0; i < sys.s.rows(); ++i) norm += sys.s(i, j) * sys.s(i, j);
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    }

    // zero deviations produce a zero right-hand side
    for (double v : sys.rhs) CHECK(v == 0.0);

    // column map is injective into the bus ids
    std::vector<int> cols = sys.column_bus;
    std::sort(cols.begin(), cols.end());
    CHECK(std::adjacent_find(cols.begin(), cols.end()) == cols.end());
}

TEST_CASE("assembly of a single uncoupled subsystem") {
    const NetworkModel solo = testutil::two_bus_model();
    // use subsystem A only via a single-subsystem network
    std::vector<Bus> buses;
    for (int id = 1; id <= 2; ++id) {
        Bus b;
        b.id = id;
        b.inertia = 1.0;
        b.damping = 1.0;
        b.voltage = 1.0;
        b.kind = BusKind::Generator;
        b.u_min = -5.0;
        b.u_max = 5.0;
        b.theta0 = 0.0;
        buses.push_back(b);
    }
    const NetworkModel model({buses}, {{1, 2, 1.0}}, {{"only", {1, 2}}});
    CHECK(model.coupling_dim() == 0);
    const SubsystemState<double> x{{0.0, 0.0}, {0.0, 0.0}};
    SensitivityBlock block;
    block.jacobians = coupling_jacobians(model, 0, x, std::vector<double>{0.0, 0.0}, {}, 0.1);
    CHECK(block.jacobians.input_jacobian.rows() == 0);
    block.reduction = reduce_columns(block.jacobians.input_jacobian);
    CHECK(block.reduction.kept.empty());
}

TEST_CASE("neighbor term enters the right-hand side") {
    const NetworkModel model = testutil::two_bus_model(1.0);
    std::vector<SensitivityBlock> blocks;
    std::vector<std::vector<double>> dz_out{{2e-3}, {1e-3}};
    std::vector<std::vector<double>> dz_in{{5e-4}, {-2e-4}};
    for (int s = 0; s < 2; ++s) {
        const NominalPoint p = nominal_point(model, s);
        blocks.push_back(build_sensitivity_block(model, s, p.x, p.u, p.zn, 0.1));
    }
    const AssembledSystem sys = assemble_system(model, blocks, dz_out, dz_in);
    // b_A = dz_A - S^N_A * dz_B(in), with the scalar neighbor jacobian
    const double expected0 = 2e-3 - blocks[0].jacobians.neighbor_jacobian(0, 0) * (-2e-4);
    const double expected1 = 1e-3 - blocks[1].jacobians.neighbor_jacobian(0, 0) * 5e-4;
    CHECK(sys.rhs[0] == doctest::Approx(expected0).epsilon(1e-14));
    CHECK(sys.rhs[1] == doctest::Approx(expected1).epsilon(1e-14));
}

TEST_CASE("system dump round-trips through json") {
    const NetworkModel model = testutil::load_ieee30();
    std::vector<SensitivityBlock> blocks;
    std::vector<std::vector<double>> dz_out, dz_in;
    std::mt19937_64 rng(13);
    for (int s = 0; s < model.subsystem_count(); ++s) {
        const NominalPoint p = nominal_point(model, s);
        blocks.push_back(build_sensitivity_block(model, s, p.x, p.u, p.zn, 0.1));
        std::vector<double> dv(static_cast<size_t>(model.coupling_dim(s)));
        for (double& v : dv) v = 1e-3 * (testutil::uniform01(rng) - 0.5);
        dz_out.push_back(dv);
        dz_in.emplace_back(static_cast<size_t>(model.coupling_dim(s)), 0.0);
    }
    const AssembledSystem sys = assemble_system(model, blocks, dz_out, dz_in);
    const AssembledSystem again = system_from_json_text(system_to_json_text(sys));
    CHECK(again.s == sys.s);
    CHECK(again.rhs == sys.rhs);
    CHECK(again.column_bus == sys.column_bus);
    CHECK(again.scales == sys.scales);
    CHECK(again.input_dim == sys.input_dim);
}

TEST_CASE("linear response makes the one-step prediction exact") {
    // With a linear map the first-order propagation has no remainder: build
    // synthetic per-subsystem linear responses and check the predicted
    // deviation equals the true one to machine precision.
    std::mt19937_64 rng(17);
    Matrix a(2, 3);
    Matrix b(2, 2);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) = testutil::uniform01(rng) - 0.5;
        for (int j = 0; j < 2; ++j) b(i, j) = testutil::uniform01(rng) - 0.5;
    }
    const DualFn fn = [&](const std::vector<Dual>& v) {
        std::vector<Dual> out;
        for (int i = 0; i < 2; ++i) {
            Dual acc = Dual::constant(0.0, v.front().dirs());
            for (int j = 0; j < 3; ++j) acc += a(i, j) * v[static_cast<size_t>(j)];
            for (int j = 0; j < 2; ++j) acc += b(i, j) * v[static_cast<size_t>(3 + j)];
            out.push_back(acc);
        }
        return out;
    };
    const std::vector<double> nominal{0.1, -0.2, 0.3, 0.05, -0.07};
    const Matrix jac = jacobian(fn, nominal);
    std::vector<double> perturbed = nominal;
    const std::vector<double> dv{0.02, -0.01, 0.005, 0.03, -0.04};
    for (int i = 0; i < 5; ++i) perturbed[static_cast<size_t>(i)] += dv[static_cast<size_t>(i)];

    auto eval = [&](const std::vector<double>& at) {
        std::vector<Dual> in;
        for (double v : at) in.push_back(Dual::constant(v, 0));
        const auto out = fn(in);
        std::vector<double> vals;
        for (const Dual& d : out) vals.push_back(d.value());
        return vals;
    };
    const auto base = eval(nominal);
    const auto pert = eval(perturbed);
    const auto lin = linalg::matvec(jac, dv);
    for (int i = 0; i < 2; ++i)
        CHECK(pert[static_cast<size_t>(i)] - base[static_cast<size_t>(i)] ==
              doctest::Approx(lin[static_cast<size_t>(i)]).epsilon(1e-14));
}
