#include "xenopower/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xenopower {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

SquareMatrix identity(int n) {
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

} // namespace

std::vector<double> central_gradient(const Objective& f, std::span<const double> x, double step) {
    std::vector<double> g(x.size());
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t k = 0; k < x.size(); ++k) {
        probe[k] = x[k] + step;
        const double up = f(probe);
        probe[k] = x[k] - step;
        const double down = f(probe);
        probe[k] = x[k];
        g[k] = (up - down) / (2.0 * step);
    }
    return g;
}

SquareMatrix central_hessian(const Objective& f, std::span<const double> x, double step) {
    const int n = static_cast<int>(x.size());
    SquareMatrix h(n);
    std::vector<double> p(x.begin(), x.end());
    const double f0 = f(p);
    for (int i = 0; i < n; ++i) {
        p[i] = x[i] + step;
        const double up = f(p);
        p[i] = x[i] - step;
        const double down = f(p);
        p[i] = x[i];
        h(i, i) = (up - 2.0 * f0 + down) / (step * step);
        for (int j = 0; j < i; ++j) {
            double acc = 0.0;
            for (int si : {1, -1}) {
                for (int sj : {1, -1}) {
                    p[i] = x[i] + si * step;
                    p[j] = x[j] + sj * step;
                    acc += si * sj * f(p);
                }
            }
            p[i] = x[i];
            p[j] = x[j];
            h(i, j) = h(j, i) = acc / (4.0 * step * step);
        }
    }
    return h;
}

SquareMatrix spd_inverse(const SquareMatrix& a) {
    const int n = a.dim;
    SquareMatrix l(n);
    for (int j = 0; j < n; ++j) {
        double d = a(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0) || !std::isfinite(d)) return SquareMatrix{};
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    // Invert L, then form inv(A) = inv(L)^T inv(L).
    SquareMatrix li(n);
    for (int i = 0; i < n; ++i) {
        li(i, i) = 1.0 / l(i, i);
        for (int j = 0; j < i; ++j) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s -= l(i, k) * li(k, j);
            li(i, j) = s / l(i, i);
        }
    }
    SquareMatrix inv(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = 0.0;
            for (int k = i; k < n; ++k) s += li(k, i) * li(k, j);
            inv(i, j) = inv(j, i) = s;
        }
    }
    return inv;
}

BfgsResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options) {
    const int n = static_cast<int>(x0.size());
    BfgsResult result;
    result.x = std::move(x0);
    result.value = f(result.x);
    if (!std::isfinite(result.value)) return result;

    auto grad = [&](std::span<const double> x) { return central_gradient(f, x, options.gradient_step); };
    std::vector<double> g = grad(result.x);
    SquareMatrix h = identity(n);
    bool fresh = true; // h is the identity
    std::vector<double> d(n), x_new(n), s(n), y(n);

    for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
        if (max_abs(g) < options.gradient_tolerance) {
            result.converged = true;
            return result;
        }
        for (int i = 0; i < n; ++i) {
            d[i] = 0.0;
            for (int j = 0; j < n; ++j) d[i] -= h(i, j) * g[j];
        }
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            h = identity(n);
            fresh = true;
            for (int i = 0; i < n; ++i) d[i] = -g[i];
            slope = dot(g, d);
        }

        double t = std::min(1.0, options.max_step / std::max(max_abs(d), 1e-300));
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            for (int i = 0; i < n; ++i) x_new[i] = result.x[i] + t * d[i];
            f_new = f(x_new);
            if (std::isfinite(f_new) && f_new <= result.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!fresh) {
                h = identity(n);
                fresh = true;
                continue;
            }
            // No descent possible along -g: we are at numerical noise level.
            result.converged = max_abs(g) < 100.0 * options.gradient_tolerance;
            return result;
        }

        if (result.value - f_new <= 1e-15 * (1.0 + std::fabs(result.value))) {
            // Step accepted without measurable progress.
            if (max_abs(g) < 100.0 * options.gradient_tolerance) {
                result.converged = true;
                return result;
            }
            if (!fresh) {
                h = identity(n);
                fresh = true;
                continue;
            }
        }

        std::vector<double> g_new = grad(x_new);
        for (int i = 0; i < n; ++i) {
            s[i] = x_new[i] - result.x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (fresh) {
                // Scale the initial inverse Hessian before the first update.
                const double scale = sy / dot(y, y);
                for (auto& v : h.data) v *= scale;
            }
            std::vector<double> hy(n);
            for (int i = 0; i < n; ++i) {
                hy[i] = 0.0;
                for (int j = 0; j < n; ++j) hy[i] += h(i, j) * y[j];
            }
            const double yhy = dot(y, hy);
            const double rho = 1.0 / sy;
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    h(i, j) += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        result.x = x_new;
        result.value = f_new;
        g = std::move(g_new);
    }
    result.converged = max_abs(g) < options.gradient_tolerance;
    return result;
}

} // namespace xenopower
