#include "swingid/identify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace swingid {

using linalg::Matrix;
using nlohmann::json;

DetectionVerdict detect(const std::vector<std::vector<double>>& coupling_dev, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("detect: threshold must be positive");
    DetectionVerdict v;
    v.threshold = threshold;
    for (const auto& dz : coupling_dev) {
        const double norm = linalg::norm_inf(dz);
        v.deviation_norms.push_back(norm);
        if (norm > threshold) v.alarm = true;
    }
    return v;
}

namespace {

// Shared support-enumeration core. `radius` is the feasibility bound on the
// residual (the equality problem uses its floating-point tolerance here).
//
// Pruning: with x* the unconstrained least-squares solution and any
// candidate support T, the restricted residual satisfies
//   residual(T)^2 >= residual(x*)^2 + sigma_min^2 * || x* off T ||^2,
// because b - S x* is orthogonal to the range of S. Whole cardinality
// levels are skipped when even the largest-|x*| support violates this
// bound, which is exact, so no feasible support is ever skipped.
IdentificationResult solve_core(const AssembledSystem& system, double radius, ProblemKind kind) {
    if (radius < 0.0) throw std::invalid_argument("solve: negative feasibility radius");
    const Matrix& s = system.s;
    const int r = s.cols();
    const int m = s.rows();
    if (static_cast<int>(system.rhs.size()) != m) throw std::invalid_argument("solve: rhs size mismatch");

    IdentificationResult result;
    result.kind = kind;
    result.delta_a.assign(static_cast<size_t>(system.input_dim), 0.0);

    const double rhs_norm = linalg::norm2(system.rhs);
    if (rhs_norm <= radius) {  // zero solution feasible
        result.feasible = true;
        result.residual = rhs_norm;
        return result;
    }
    if (r == 0) {
        result.feasible = false;
        result.residual = rhs_norm;
        return result;
    }

    // Recomputed (not trusted from the dump) and shaved a hair so rounding
    // can never prune a support that is feasible right at the boundary.
    // A rank-deficient system disables pruning instead of failing: sigma 0
    // and zero reference entries make every bound vacuous.
    double sigma = 0.0;
    double base_sq = 0.0;
    std::vector<double> sq(static_cast<size_t>(r), 0.0);
    try {
        const linalg::LeastSquaresResult full = linalg::least_squares(s, system.rhs);
        result.least_squares_solves += 1;
        sigma = linalg::smallest_singular_value(s) * (1.0 - 1e-12);
        base_sq = full.residual * full.residual;
        for (int j = 0; j < r; ++j)
            sq[static_cast<size_t>(j)] = full.x[static_cast<size_t>(j)] * full.x[static_cast<size_t>(j)];
    } catch (const std::runtime_error&) {
    }

    std::vector<double> sq_sorted = sq;
    std::sort(sq_sorted.begin(), sq_sorted.end());
    // tail_sq[k] = sum of the (r - k) smallest squared entries of x*.
    std::vector<double> tail_sq(static_cast<size_t>(r) + 1, 0.0);
    for (int k = r - 1; k >= 0; --k)
        tail_sq[static_cast<size_t>(k)] = tail_sq[static_cast<size_t>(k) + 1] + sq_sorted[static_cast<size_t>(r - 1 - k)];

    auto level_bound = [&](int k) {
        return std::sqrt(base_sq + sigma * sigma * tail_sq[static_cast<size_t>(k)]);
    };

    std::vector<int> best_support;
    double best_residual = 0.0;
    std::vector<double> best_x;

    for (int k = 1; k <= r; ++k) {
        if (level_bound(k) > radius) continue;  // no support of this size can be feasible

        bool found = false;
        std::vector<int> comb(static_cast<size_t>(k));
        std::iota(comb.begin(), comb.end(), 0);
        while (true) {
            result.supports_enumerated += 1;
            // Sum the complement directly: subtracting kept from the total
            // cancels catastrophically right at tolerance scale.
            double off_sq = 0.0;
            {
                size_t c = 0;
                for (int j = 0; j < r; ++j) {
                    if (c < comb.size() && comb[c] == j) {
                        ++c;
                        continue;
                    }
                    off_sq += sq[static_cast<size_t>(j)];
                }
            }
            const double bound = std::sqrt(base_sq + sigma * sigma * off_sq);
            if (bound <= radius) {
                const Matrix sub = s.select_columns(comb);
                try {
                    const linalg::LeastSquaresResult ls = linalg::least_squares(sub, system.rhs);
                    result.least_squares_solves += 1;
                    if (ls.residual <= radius && (!found || ls.residual < best_residual)) {
                        found = true;
                        best_residual = ls.residual;
                        best_support = comb;
                        best_x = ls.x;
                    }
                } catch (const std::runtime_error&) {
                    // Dependent columns within the support: any residual it
                    // reaches is reached by a strict subset at a lower level.
                }
            }
            // next lexicographic combination
            int i = k - 1;
            while (i >= 0 && comb[static_cast<size_t>(i)] == r - k + i) --i;
            if (i < 0) break;
            ++comb[static_cast<size_t>(i)];
            for (int j = i + 1; j < k; ++j) comb[static_cast<size_t>(j)] = comb[static_cast<size_t>(j - 1)] + 1;
        }
        if (found) {
            result.feasible = true;
            result.cardinality = k;
            result.residual = best_residual;
            for (int j = 0; j < k; ++j) {
                const int col = best_support[static_cast<size_t>(j)];
                const int bus = system.column_bus[static_cast<size_t>(col)];
                // unscale back to physical input units
                result.delta_a[static_cast<size_t>(bus - 1)] =
                    best_x[static_cast<size_t>(j)] / system.scales[static_cast<size_t>(col)];
                result.support.push_back(bus);
            }
            std::sort(result.support.begin(), result.support.end());
            return result;
        }
    }

    result.feasible = false;  // inconsistent system even with every column active
    result.residual = sigma > 0.0 ? std::sqrt(base_sq) : rhs_norm;
    return result;
}

}  // namespace

IdentificationResult solve_l0_equality(const AssembledSystem& system, double tol_feas) {
    if (!(tol_feas > 0.0)) throw std::invalid_argument("solve_l0_equality: tol_feas must be positive");
    return solve_core(system, tol_feas, ProblemKind::Equality);
}

IdentificationResult solve_l0_relaxed(const AssembledSystem& system, const RelaxationBudget& budget) {
    if (!(budget.radius() > 0.0)) throw std::invalid_argument("solve_l0_relaxed: radius must be positive");
    return solve_core(system, budget.radius(), ProblemKind::Relaxed);
}

std::vector<int> extract_support(const std::vector<double>& delta_a, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("extract_support: threshold must be positive");
    std::vector<int> support;
    for (size_t i = 0; i < delta_a.size(); ++i)
        if (std::abs(delta_a[i]) > threshold) support.push_back(static_cast<int>(i) + 1);
    return support;
}

std::string result_to_json_text(const IdentificationResult& result) {
    json doc;
    doc["support"] = result.support;
    json values = json::object();
    for (int bus : result.support) values[std::to_string(bus)] = result.delta_a[static_cast<size_t>(bus - 1)];
    doc["values"] = std::move(values);
    doc["residual"] = result.residual;
    doc["cardinality"] = result.cardinality;
    doc["kind"] = result.kind == ProblemKind::Equality ? "equality" : "relaxed";
    doc["feasible"] = result.feasible;
    doc["enumerated_count"] = result.supports_enumerated;
    doc["least_squares_solves"] = result.least_squares_solves;
    return doc.dump(2);
}

}  // namespace swingid
