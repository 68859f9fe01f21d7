#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "fdemle/fbm.hpp"
#include "fdemle/model.hpp"
#include "fdemle/pathwise.hpp"

namespace fdemle {

// Discrete Malliavin derivatives are taken with respect to the cell increments δB^j_c:
// D^j_c Y_k = ∂Y_k / ∂δB^j_c, which vanishes for k <= c and equals σ^{·j}(Y_c) at k = c + 1.

// First-order array over cells c and nodes k: data[((j*M + c)*(M+1) + k)*m + i].
struct FirstDerivative {
    TimeGrid grid;
    int m;
    int d;
    std::vector<double> data;

    std::size_t index(int i, int j, int c, int k) const {
        return ((static_cast<std::size_t>(j) * grid.steps + c) * (grid.steps + 1) + k) * m + i;
    }
    double operator()(int i, int j, int c, int k) const { return data[index(i, j, c, k)]; }
    // D^j_c Y^i_t for c = 0..t-1.
    std::vector<double> column(int i, int j, int t) const;
};

FirstDerivative derivative_first(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                 const SolutionPath& y);

// Second-order array at a target node t: data[(((j1*M + c1)*d + j2)*M + c2)*m + i]
// holds D^{j1}_{c1} D^{j2}_{c2} Y^i_t.
struct SecondDerivative {
    TimeGrid grid;
    int m;
    int d;
    int target;
    std::vector<double> data;

    std::size_t index(int i, int j1, int c1, int j2, int c2) const {
        const std::size_t mm = grid.steps;
        return (((static_cast<std::size_t>(j1) * mm + c1) * d + j2) * mm + c2) * m + i;
    }
    double operator()(int i, int j1, int c1, int j2, int c2) const { return data[index(i, j1, c1, j2, c2)]; }
};

SecondDerivative derivative_second(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                                   const SolutionPath& y, const FirstDerivative& d1, int target);

// ∇_l Y^i_k stored as data[(l*(M+1) + k)*m + i].
struct ThetaGradient {
    TimeGrid grid;
    int m;
    int q;
    std::vector<double> data;

    double operator()(int i, int l, int k) const {
        return data[(static_cast<std::size_t>(l) * (grid.steps + 1) + k) * m + i];
    }
    SolutionPath path(int l) const;
};

ThetaGradient theta_gradient(const ModelSpec& model, std::span<const double> theta, const FbmPath& fbm,
                             const SolutionPath& y);

// ∇_l D^j_c Y_k, one array per parameter.
std::vector<FirstDerivative> grad_derivative_first(const ModelSpec& model, std::span<const double> theta,
                                                   const FbmPath& fbm, const SolutionPath& y,
                                                   const ThetaGradient& grad_y, const FirstDerivative& d1);

// γ_t^{ab} = Σ_j Σ_{c,c'<t} D^j_c Y^a_t D^j_{c'} Y^b_t r_{|c-c'|}.
Eigen::MatrixXd malliavin_matrix(const FirstDerivative& d1, std::span<const double> r, int t);

// ∇_l γ_t for each parameter.
std::vector<Eigen::MatrixXd> grad_malliavin_matrix(const FirstDerivative& d1,
                                                   const std::vector<FirstDerivative>& grad_d1,
                                                   std::span<const double> r, int t);

// Inverse with a conditioning guard; throws SingularityError naming the node.
Eigen::MatrixXd invert_checked(const Eigen::MatrixXd& gamma, int node, double max_condition = 1e12);

struct MalliavinMatrixPath {
    std::vector<Eigen::MatrixXd> gamma;  // nodes 0..M
    std::vector<Eigen::MatrixXd> eta;    // empty matrix at node 0
    int sde_start = 0;
    std::vector<Eigen::MatrixXd> eta_sde;  // valid from sde_start on
};

MalliavinMatrixPath malliavin_matrix_path(const FirstDerivative& d1, HurstParam h);

// Fills η by direct inversion and η̃ by the Euler scheme of the inverse equation started at
// node sde_start from the direct inverse. sde_start <= 0 selects max(1, M/8).
void inverse_matrix_path(MalliavinMatrixPath& path, const ModelSpec& model, std::span<const double> theta,
                         const FbmPath& fbm, const SolutionPath& y, const FirstDerivative& d1,
                         int sde_start = 0);

// ∇_l η_t = -η_t (∇_l γ_t) η_t at every node t >= 1.
std::vector<std::vector<Eigen::MatrixXd>> grad_eta(const MalliavinMatrixPath& path, const FirstDerivative& d1,
                                                   const std::vector<FirstDerivative>& grad_d1, HurstParam h);

// θ-derivative of the η̃ recursion, started from the exact ∇η at sde_start.
std::vector<std::vector<Eigen::MatrixXd>> grad_eta_sde(const MalliavinMatrixPath& path,
                                                       const std::vector<std::vector<Eigen::MatrixXd>>& grad_eta_direct,
                                                       const ModelSpec& model, std::span<const double> theta,
                                                       const FbmPath& fbm, const SolutionPath& y,
                                                       const ThetaGradient& grad_y, const FirstDerivative& d1,
                                                       const std::vector<FirstDerivative>& grad_d1);

}  // namespace fdemle
