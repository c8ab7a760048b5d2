#pragma once

// Classical outer loops: L-BFGS with a strong-Wolfe line search, and
// rand/1/bin differential evolution for derivative-free runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qsc/control.hpp"
#include "qsc/error.hpp"

namespace qsc {

enum class TerminationReason { chemical_accuracy, max_iterations, line_search_failure, converged };

inline std::string to_string(TerminationReason r) {
    switch (r) {
    case TerminationReason::chemical_accuracy: return "chemical_accuracy";
    case TerminationReason::max_iterations: return "max_iterations";
    case TerminationReason::line_search_failure: return "line_search_failure";
    case TerminationReason::converged: return "converged";
    }
    return "unknown";
}

/// Chemical accuracy thresholds in hartree.
inline constexpr double kChemicalAccuracy = 1e-3;
inline constexpr double kChemicalAccuracyKcal = 1.6e-3;

struct IterateRecord {
    std::size_t iteration = 0;
    double value = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN(); // |J - E_ref| when a reference is known
    double gradient_norm = std::numeric_limits<double>::quiet_NaN();
    std::size_t evaluations = 0; // cumulative objective evaluations
};

struct OptimizationReport {
    std::string optimizer;
    std::vector<IterateRecord> iterates;
    std::vector<double> best_parameters;
    double best_value = std::numeric_limits<double>::infinity();
    std::size_t n_iterations = 0;
    std::size_t n_evaluations = 0;
    TerminationReason termination_reason = TerminationReason::max_iterations;
    std::uint64_t seed = 0;
    double wall_time = 0.0; // seconds

    [[nodiscard]] double final_error() const {
        return iterates.empty() ? std::numeric_limits<double>::quiet_NaN() : iterates.back().error;
    }
};

/// Value and gradient; writes the gradient into the second argument.
using ValueGradient = std::function<double(std::span<const double>, std::span<double>)>;
using ValueOnly = std::function<double(std::span<const double>)>;

struct LbfgsOptions {
    std::size_t memory = 10;
    std::size_t max_iterations = 500;
    double c1 = 1e-4;
    double c2 = 0.9;
    std::size_t max_line_search = 40;
    /// Largest allowed |step|_inf per iteration (0 disables). Controls enter the
    /// Hamiltonian bilinearly, so unbounded quasi-Newton steps can blow up the
    /// slot phases and with them the cost of a single evaluation.
    double max_step = 10.0;
    /// Stop once |J - reference| < threshold (only when a reference is set).
    std::optional<double> reference_value;
    double threshold = kChemicalAccuracy;
    /// Stop when ||g||_inf falls to or below this (0 disables).
    double gradient_tolerance = 0.0;
    std::uint64_t seed = 0; // recorded in the report
    /// Called after every accepted iterate.
    std::function<void(const IterateRecord &)> on_iterate;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double inf_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

/// Minimizer of the cubic interpolating f and f' at a and b, safeguarded to
/// the interior of [lo, hi].
inline double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc < 0.0) {
        return 0.5 * (a + b);
    }
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) {
        return 0.5 * (a + b);
    }
    return t;
}

struct LinePoint {
    double alpha;
    double f;
    double g; // directional derivative
};

} // namespace detail

/// L-BFGS (two-loop recursion) with a strong-Wolfe line search.
inline OptimizationReport run_lbfgs(const ValueGradient &fg, std::vector<double> x, const LbfgsOptions &opts = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t n = x.size();
    OptimizationReport rep;
    rep.optimizer = "lbfgs";
    rep.seed = opts.seed;

    std::vector<double> g(n), d(n), x_new(n), g_new(n);
    auto eval = [&](std::span<const double> at, std::span<double> grad) {
        ++rep.n_evaluations;
        const double v = fg(at, grad);
        if (!std::isfinite(v)) {
            return std::numeric_limits<double>::infinity();
        }
        return v;
    };
    double f = eval(x, g);
    rep.best_value = f;
    rep.best_parameters = x;

    auto record = [&](std::size_t it, double value, std::span<const double> grad) {
        IterateRecord r;
        r.iteration = it;
        r.value = value;
        if (opts.reference_value) {
            r.error = std::abs(value - *opts.reference_value);
        }
        r.gradient_norm = std::sqrt(detail::dot(grad, grad));
        r.evaluations = rep.n_evaluations;
        rep.iterates.push_back(r);
        if (opts.on_iterate) {
            opts.on_iterate(r);
        }
    };
    auto reached = [&](double value) {
        return opts.reference_value && std::abs(value - *opts.reference_value) < opts.threshold;
    };
    auto finish = [&](TerminationReason why) {
        rep.termination_reason = why;
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return rep;
    };

    record(0, f, g);
    if (reached(f)) {
        return finish(TerminationReason::chemical_accuracy);
    }
    if (opts.gradient_tolerance > 0 && detail::inf_norm(g) <= opts.gradient_tolerance) {
        return finish(TerminationReason::converged);
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
        // Two-loop recursion: d = -H g.
        std::vector<double> q = g;
        std::vector<double> alpha_hist(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha_hist[i] = rho_hist[i] * detail::dot(s_hist[i], q);
            for (std::size_t k = 0; k < n; ++k) {
                q[k] -= alpha_hist[i] * y_hist[i][k];
            }
        }
        double gamma = 1.0;
        if (!s_hist.empty()) {
            gamma = detail::dot(s_hist.back(), y_hist.back()) / detail::dot(y_hist.back(), y_hist.back());
        } else {
            // First step of unit length, as in the reference L-BFGS-B driver.
            const double gn = std::sqrt(detail::dot(g, g));
            gamma = gn > 0 ? 1.0 / gn : 1.0;
        }
        for (auto &v : q) {
            v *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * detail::dot(y_hist[i], q);
            for (std::size_t k = 0; k < n; ++k) {
                q[k] += s_hist[i][k] * (alpha_hist[i] - beta);
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            d[k] = -q[k];
        }
        double dg0 = detail::dot(d, g);
        if (!(dg0 < 0.0)) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            const double gn = std::sqrt(detail::dot(g, g));
            for (std::size_t k = 0; k < n; ++k) {
                d[k] = -g[k] / gn;
            }
            dg0 = detail::dot(d, g);
            if (!(dg0 < 0.0)) {
                return finish(TerminationReason::line_search_failure);
            }
        }

        // Strong-Wolfe line search (bracketing + zoom).
        detail::LinePoint last{0.0, f, dg0};
        auto try_step = [&](double a) {
            for (std::size_t k = 0; k < n; ++k) {
                x_new[k] = x[k] + a * d[k];
            }
            const double fv = eval(x_new, g_new);
            last = detail::LinePoint{a, fv, std::isfinite(fv) ? detail::dot(g_new, d) : 0.0};
            return last;
        };
        const detail::LinePoint p0{0.0, f, dg0};
        detail::LinePoint prev = p0;
        const double d_inf = detail::inf_norm(d);
        const double a_max = opts.max_step > 0.0 ? opts.max_step / d_inf : std::numeric_limits<double>::infinity();
        double a = std::min(1.0, a_max);
        bool found = false;
        std::size_t evals = 0;
        std::optional<detail::LinePoint> lo, hi;
        for (; evals < opts.max_line_search; ++evals) {
            const auto cur = try_step(a);
            if (!std::isfinite(cur.f) || cur.f > f + opts.c1 * a * dg0 || (evals > 0 && cur.f >= prev.f)) {
                if (!std::isfinite(cur.f)) {
                    a = 0.5 * (prev.alpha + a);
                    continue;
                }
                lo = prev;
                hi = cur;
                break;
            }
            if (std::abs(cur.g) <= -opts.c2 * dg0) {
                found = true;
                break;
            }
            if (cur.g >= 0.0) {
                lo = cur;
                hi = prev;
                break;
            }
            if (a >= a_max) {
                // Sufficient decrease at the step bound: take it.
                found = true;
                break;
            }
            prev = cur;
            a = std::min(2.0 * a, a_max);
        }
        if (!found && lo && hi) {
            for (; evals < opts.max_line_search; ++evals) {
                double at = detail::cubic_minimizer(lo->alpha, lo->f, lo->g, hi->alpha, hi->f, hi->g);
                if (std::abs(hi->alpha - lo->alpha) < 1e-16 * std::max(1.0, std::abs(lo->alpha))) {
                    break;
                }
                const auto cur = try_step(at);
                if (!std::isfinite(cur.f) || cur.f > f + opts.c1 * at * dg0 || cur.f >= lo->f) {
                    hi = cur;
                    continue;
                }
                if (std::abs(cur.g) <= -opts.c2 * dg0) {
                    found = true;
                    break;
                }
                if (cur.g * (hi->alpha - lo->alpha) >= 0.0) {
                    hi = lo;
                }
                lo = cur;
            }
            if (!found && lo->alpha > 0.0 && lo->f < f) {
                // Accept the best sufficient-decrease point even without the curvature condition.
                try_step(lo->alpha);
                found = true;
            }
        }
        if (!found) {
            return finish(TerminationReason::line_search_failure);
        }

        // Accept: x_new, g_new hold the last evaluated point.
        std::vector<double> s(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            s[k] = x_new[k] - x[k];
            y[k] = g_new[k] - g[k];
        }
        x = x_new;
        g = g_new;
        f = last.f;
        const double sy = detail::dot(s, y);
        if (sy > 1e-16 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        rep.n_iterations = iter;
        if (f < rep.best_value) {
            rep.best_value = f;
            rep.best_parameters = x;
        }
        record(iter, f, g);
        if (reached(f)) {
            return finish(TerminationReason::chemical_accuracy);
        }
        if (opts.gradient_tolerance > 0 && detail::inf_norm(g) <= opts.gradient_tolerance) {
            return finish(TerminationReason::converged);
        }
    }
    return finish(TerminationReason::max_iterations);
}

struct DiffEvoOptions {
    std::size_t population = 0; // 0: 15 * dim, capped at max_population
    std::size_t max_population = 120;
    std::size_t max_generations = 200;
    double mutation = 0.8;  // F
    double crossover = 0.9; // CR
    std::uint64_t seed = 0;
    std::optional<double> reference_value;
    double threshold = kChemicalAccuracy;
    std::function<void(const IterateRecord &)> on_iterate;
};

/// Box constraints for differential evolution.
struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

/// rand/1/bin differential evolution with greedy selection. Mutants leaving
/// the box are clipped to it. Seeded runs are bitwise reproducible.
inline OptimizationReport run_diffevo(const ValueOnly &f, const Bounds &bounds, const DiffEvoOptions &opts = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t dim = bounds.lower.size();
    if (dim == 0 || bounds.upper.size() != dim) {
        throw DimensionError("run_diffevo: bounds must be non-empty and of equal length");
    }
    for (std::size_t i = 0; i < dim; ++i) {
        if (!(bounds.lower[i] < bounds.upper[i])) {
            throw DataError("run_diffevo: lower bound must be below upper bound");
        }
    }
    const std::size_t np =
        std::max<std::size_t>(5, opts.population ? opts.population : std::min(15 * dim, opts.max_population));
    std::mt19937_64 rng(opts.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)); };

    OptimizationReport rep;
    rep.optimizer = "diffevo";
    rep.seed = opts.seed;
    auto evaluate = [&](std::span<const double> x) {
        ++rep.n_evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
    std::vector<double> fit(np);
    for (auto &member : pop) {
        for (std::size_t i = 0; i < dim; ++i) {
            member[i] = bounds.lower[i] + uniform01(rng) * (bounds.upper[i] - bounds.lower[i]);
        }
    }
    for (std::size_t m = 0; m < np; ++m) {
        fit[m] = evaluate(pop[m]);
    }
    auto record = [&](std::size_t gen) {
        const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
        rep.best_value = fit[best];
        rep.best_parameters = pop[best];
        IterateRecord r;
        r.iteration = gen;
        r.value = fit[best];
        if (opts.reference_value) {
            r.error = std::abs(fit[best] - *opts.reference_value);
        }
        r.evaluations = rep.n_evaluations;
        rep.iterates.push_back(r);
        if (opts.on_iterate) {
            opts.on_iterate(r);
        }
        return opts.reference_value && std::abs(fit[best] - *opts.reference_value) < opts.threshold;
    };
    auto finish = [&](TerminationReason why) {
        rep.termination_reason = why;
        rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return rep;
    };
    if (record(0)) {
        return finish(TerminationReason::chemical_accuracy);
    }

    std::vector<double> trial(dim);
    for (std::size_t gen = 1; gen <= opts.max_generations; ++gen) {
        for (std::size_t m = 0; m < np; ++m) {
            std::size_t r1, r2, r3;
            do { r1 = pick(np); } while (r1 == m);
            do { r2 = pick(np); } while (r2 == m || r2 == r1);
            do { r3 = pick(np); } while (r3 == m || r3 == r1 || r3 == r2);
            const std::size_t forced = pick(dim);
            for (std::size_t i = 0; i < dim; ++i) {
                if (i == forced || uniform01(rng) < opts.crossover) {
                    const double v = pop[r1][i] + opts.mutation * (pop[r2][i] - pop[r3][i]);
                    trial[i] = std::clamp(v, bounds.lower[i], bounds.upper[i]);
                } else {
                    trial[i] = pop[m][i];
                }
            }
            const double ft = evaluate(trial);
            if (ft <= fit[m]) {
                pop[m] = trial;
                fit[m] = ft;
            }
        }
        rep.n_iterations = gen;
        if (record(gen)) {
            return finish(TerminationReason::chemical_accuracy);
        }
    }
    return finish(TerminationReason::max_iterations);
}

} // namespace qsc
