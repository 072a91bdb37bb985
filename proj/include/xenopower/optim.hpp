#pragma once

#include <functional>
#include <span>
#include <vector>

namespace xenopower {

using Objective = std::function<double(std::span<const double>)>;

/// Dense row-major square matrix, sized for the handful of model parameters.
struct SquareMatrix {
    int dim = 0;
    std::vector<double> data;

    explicit SquareMatrix(int n = 0) : dim(n), data(static_cast<std::size_t>(n * n), 0.0) {}
    double& operator()(int i, int j) { return data[static_cast<std::size_t>(i * dim + j)]; }
    double operator()(int i, int j) const { return data[static_cast<std::size_t>(i * dim + j)]; }
};

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double step);

SquareMatrix central_hessian(const Objective& f, std::span<const double> x, double step);

/// Inverse of a symmetric positive definite matrix via Cholesky; empty
/// optional-like result (dim == 0) when the matrix is not positive definite.
SquareMatrix spd_inverse(const SquareMatrix& a);

struct BfgsOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-6;
    double gradient_step = 1e-5;
    double max_step = 4.0; // largest coordinate move per line search
};

struct BfgsResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Quasi-Newton minimization with central-difference gradients and an Armijo
/// backtracking line search. Non-finite objective values are treated as
/// infeasible and backtracked away from.
BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options = {});

} // namespace xenopower
