#pragma once

#include <vector>

namespace xenopower {

/// Nodes and weights for  integral f(x) exp(-x^2) dx  ~=  sum w_k f(x_k).
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    /// log(w_k) + x_k^2, the weights used when integrating f(x) dx directly.
    std::vector<double> log_scaled_weights;
};

/// Cached, thread-safe. Nodes ascend. Throws std::invalid_argument for n < 1.
const GaussHermiteRule& gauss_hermite(int n);

} // namespace xenopower
