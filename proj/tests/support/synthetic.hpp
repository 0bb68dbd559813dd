// Synthetic inputs with known answers for calibrating the estimators.

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <utility>
#include <vector>

namespace synthetic {

/// Koch prefractal polyline on [0, 1] after `level` refinements.
inline std::vector<std::pair<double, double>> koch(int level) {
    using C = std::complex<double>;
    std::vector<C> pts{{0, 0}, {1, 0}};
    const C turn = std::polar(1.0, M_PI / 3);
    for (int l = 0; l < level; ++l) {
        std::vector<C> next;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            const C a = pts[i], d = (pts[i + 1] - pts[i]) / 3.0;
            next.insert(next.end(), {a, a + d, a + d + d * turn, a + 2.0 * d});
        }
        next.push_back(pts.back());
        pts = std::move(next);
    }
    std::vector<std::pair<double, double>> out;
    for (const C& p : pts) out.emplace_back(p.real(), p.imag());
    return out;
}

/// Ballistic ensemble x = x0 + v t with Gaussian velocities.
inline std::vector<std::vector<double>> ballistic(const std::vector<double>& times, std::size_t count,
                                                  unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> v(0.0, 1.0), x0(0.0, 0.1);
    std::vector<std::vector<double>> out(count);
    for (auto& traj : out) {
        const double a = x0(rng), b = v(rng);
        for (double t : times) traj.push_back(a + b * t);
    }
    return out;
}

/// Unbiased +-1 walk sampled at every integer step; times must be 0, 1, 2, ...
inline std::vector<std::vector<double>> random_walk(std::size_t steps, std::size_t count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::vector<double>> out(count);
    for (auto& traj : out) {
        double x = 0.0;
        traj.push_back(x);
        for (std::size_t i = 0; i < steps; ++i) traj.push_back(x += coin(rng) ? 1.0 : -1.0);
    }
    return out;
}

/// Samples with density proportional to t^-gamma above t_min.
inline std::vector<double> pareto(std::size_t n, double gamma, double t_min, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& t : out) t = t_min * std::pow(1.0 - U(rng), -1.0 / (gamma - 1.0));
    return out;
}

inline std::vector<double> exponential(std::size_t n, double rate, double t_min, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> E(rate);
    std::vector<double> out(n);
    for (auto& t : out) t = t_min + E(rng);
    return out;
}

}  // namespace synthetic
