#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace prefmod::losses {

// Numerically stable softplus: ln(1 + e^z), accurate for |z| well past 700.
double softplus(double z);

// Numerically stable logistic sigmoid.
double sigmoid(double z);

struct LossGrad {
    double loss = 0.0;
    double dloss_ddelta = 0.0;
};

// Pairwise losses over the reward gap delta_r = r(chosen) - r(rejected).
// Magnitude m comes from aggregated preference strength; its domain in the
// preference corpus is {1, 2, 3}, but any finite m >= 0 is accepted so the
// margin variant can degenerate to the plain loss at m = 0.
//
//   regular: -ln sigmoid(delta_r)
//   margin:  -ln sigmoid(delta_r - m)
//   scaled:  m * (-ln sigmoid(delta_r))
LossGrad loss_regular_bt(double delta_r);
LossGrad loss_margin_bt(double delta_r, double m);
LossGrad loss_scaled_bt(double delta_r, double m);

struct MseLossGrad {
    double loss = 0.0;
    Eigen::VectorXd dloss_dpred;
};

// Mean squared error over an attribute vector; gradient w.r.t. predictions.
MseLossGrad loss_regression_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

// One worked scenario per column: (delta_r, m).
using Scenario = std::pair<double, double>;

// The eight canonical gap/margin scenarios, column order
// (3,1) (3,3) (1,1) (1,3) (-1,1) (-1,3) (-3,1) (-3,3).
const std::vector<Scenario>& table5_scenarios();

struct Table5 {
    std::vector<Scenario> scenarios;
    // Row 0 regular, row 1 margin, row 2 scaled; one column per scenario.
    Eigen::MatrixXd cells;
    Eigen::Vector3d averages;
};

Table5 table5(const std::vector<Scenario>& scenarios = table5_scenarios());

// Fixed-layout text rendering (4 decimals), used by the CLI and golden file.
std::string render_table5(const Table5& t);

}  // namespace prefmod::losses
