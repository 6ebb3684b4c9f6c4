#include "prefmod/losses.hpp"

#include <cmath>
#include <cstdio>

#include "prefmod/errors.hpp"

namespace prefmod::losses {

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw NumericalError(std::string("non-finite ") + what);
}

// The corpus domain is {1, 2, 3}; m = 0 is allowed so the margin variant
// degenerates to the plain loss.
void require_magnitude(double m) {
    require_finite(m, "magnitude");
    if (m < 0.0) throw DataError("magnitude must be >= 0");
}

}  // namespace

double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

LossGrad loss_regular_bt(double delta_r) {
    require_finite(delta_r, "reward gap");
    return {softplus(-delta_r), -sigmoid(-delta_r)};
}

LossGrad loss_margin_bt(double delta_r, double m) {
    require_finite(delta_r, "reward gap");
    require_magnitude(m);
    const double z = delta_r - m;
    return {softplus(-z), -sigmoid(-z)};
}

LossGrad loss_scaled_bt(double delta_r, double m) {
    require_finite(delta_r, "reward gap");
    require_magnitude(m);
    return {m * softplus(-delta_r), -m * sigmoid(-delta_r)};
}

MseLossGrad loss_regression_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    if (pred.size() == 0 || pred.size() != target.size())
        throw DataError("prediction/target size mismatch");
    if (!pred.allFinite() || !target.allFinite()) throw NumericalError("non-finite mse input");
    const Eigen::VectorXd diff = pred - target;
    const double n = static_cast<double>(pred.size());
    MseLossGrad out;
    out.loss = diff.squaredNorm() / n;
    out.dloss_dpred = (2.0 / n) * diff;
    return out;
}

const std::vector<Scenario>& table5_scenarios() {
    static const std::vector<Scenario> s = {{3, 1}, {3, 3},  {1, 1},  {1, 3},
                                            {-1, 1}, {-1, 3}, {-3, 1}, {-3, 3}};
    return s;
}

Table5 table5(const std::vector<Scenario>& scenarios) {
    if (scenarios.empty()) throw ConfigError("no scenarios");
    Table5 t;
    t.scenarios = scenarios;
    t.cells.resize(3, static_cast<Eigen::Index>(scenarios.size()));
    for (Eigen::Index j = 0; j < t.cells.cols(); ++j) {
        const auto [dr, m] = scenarios[static_cast<std::size_t>(j)];
        t.cells(0, j) = loss_regular_bt(dr).loss;
        t.cells(1, j) = loss_margin_bt(dr, m).loss;
        t.cells(2, j) = loss_scaled_bt(dr, m).loss;
    }
    t.averages = t.cells.rowwise().mean();
    return t;
}

std::string render_table5(const Table5& t) {
    static const char* row_names[3] = {"Regular", "Margin ", "Scaled "};
    std::string out;
    char buf[64];
    out += "variant ";
    for (const auto& [dr, m] : t.scenarios) {
        std::snprintf(buf, sizeof buf, " (%+.0f,%.0f)", dr, m);
        out += buf;
    }
    out += "     avg\n";
    for (int r = 0; r < 3; ++r) {
        out += row_names[r];
        for (Eigen::Index j = 0; j < t.cells.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "  %6.4f", t.cells(r, j));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "  %6.4f\n", t.averages(r));
        out += buf;
    }
    return out;
}

}  // namespace prefmod::losses
