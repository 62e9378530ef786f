#include "gradmrf/mle.hpp"

#include <cmath>
#include <limits>

#include "gradmrf/gmrf.hpp"
#include "gradmrf/kvfile.hpp"
#include "gradmrf/rng.hpp"

namespace gradmrf {

GradientSampleSet collect_samples(LossOracle& oracle, const std::vector<TensorGrid>& images,
                                  const std::vector<int>& labels, int directions, double delta,
                                  std::uint64_t seed) {
    if (images.empty()) throw std::invalid_argument("collect_samples: no images");
    if (images.size() != labels.size())
        throw std::invalid_argument("collect_samples: images/labels length mismatch");
    if (directions < 1) throw std::invalid_argument("collect_samples: directions must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("collect_samples: delta must be > 0");

    const Shape3 shape = images.front().shape();
    Rng rng(seed);
    std::vector<TensorGrid> dirs;
    dirs.reserve(static_cast<std::size_t>(directions));
    for (int j = 0; j < directions; ++j) {
        TensorGrid u(shape);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.normal();
        dirs.push_back(std::move(u));
    }

    GradientSampleSet out;
    out.shape = shape;
    out.source_count = static_cast<int>(images.size());
    out.directions_per_source = directions;
    out.delta = delta;
    out.samples.reserve(images.size() * static_cast<std::size_t>(directions));

    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!(images[i].shape() == shape))
            throw ShapeError("collect_samples: inhomogeneous image shapes");
        const double base = oracle.query(images[i], labels[i]);
        for (int j = 0; j < directions; ++j) {
            TensorGrid perturbed = images[i];
            perturbed.axpy(delta, dirs[static_cast<std::size_t>(j)]);
            const double shifted = oracle.query(perturbed, labels[i]);
            if (!std::isfinite(base) || !std::isfinite(shifted)) {
                ++out.rejected;
                out.diagnostics.push_back("non-finite loss for image " + std::to_string(i) +
                                          " direction " + std::to_string(j));
                continue;
            }
            TensorGrid g = dirs[static_cast<std::size_t>(j)];
            g *= (shifted - base) / delta;
            out.samples.push_back(std::move(g));
        }
    }
    return out;
}

GradientSampleSet wrap_samples(std::vector<TensorGrid> samples, int source_count,
                               int directions_per_source, double delta) {
    if (samples.empty()) throw std::invalid_argument("wrap_samples: empty sample list");
    GradientSampleSet out;
    out.shape = samples.front().shape();
    for (const auto& s : samples)
        if (!(s.shape() == out.shape))
            throw ShapeError("wrap_samples: inhomogeneous sample shapes");
    out.samples = std::move(samples);
    out.source_count = source_count;
    out.directions_per_source = directions_per_source;
    out.delta = delta;
    return out;
}

namespace detail {

std::vector<double> data_coefficients(const GradientSampleSet& samples, const StencilSpec& spec) {
    const Shape3 shape = samples.shape;
    const auto& entries = spec.entries();
    const std::size_t ne = entries.size();

    // wrapped index tables shared by all samples
    std::vector<std::vector<int>> map_c(ne), map_h(ne), map_w(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        map_c[e].resize(static_cast<std::size_t>(shape.c));
        map_h[e].resize(static_cast<std::size_t>(shape.h));
        map_w[e].resize(static_cast<std::size_t>(shape.w));
        for (int i = 0; i < shape.c; ++i) map_c[e][static_cast<std::size_t>(i)] = wrap_index(i + entries[e].offset.dc, shape.c);
        for (int i = 0; i < shape.h; ++i) map_h[e][static_cast<std::size_t>(i)] = wrap_index(i + entries[e].offset.dh, shape.h);
        for (int i = 0; i < shape.w; ++i) map_w[e][static_cast<std::size_t>(i)] = wrap_index(i + entries[e].offset.dw, shape.w);
    }

    std::vector<double> coeff(static_cast<std::size_t>(spec.param_count()), 0.0);
    const long long nsamples = static_cast<long long>(samples.samples.size());
#pragma omp parallel
    {
        std::vector<double> local(coeff.size(), 0.0);
#pragma omp for schedule(static)
        for (long long s = 0; s < nsamples; ++s) {
            const TensorGrid& g = samples.samples[static_cast<std::size_t>(s)];
            for (std::size_t e = 0; e < ne; ++e) {
                double acc = 0.0;
                for (int ic = 0; ic < shape.c; ++ic)
                    for (int ih = 0; ih < shape.h; ++ih)
                        for (int iw = 0; iw < shape.w; ++iw)
                            acc += g.at(ic, ih, iw) *
                                   g.at(map_c[e][static_cast<std::size_t>(ic)],
                                        map_h[e][static_cast<std::size_t>(ih)],
                                        map_w[e][static_cast<std::size_t>(iw)]);
                local[static_cast<std::size_t>(entries[e].param)] += acc;
            }
        }
#pragma omp critical
        for (std::size_t p = 0; p < coeff.size(); ++p) coeff[p] += local[p];
    }
    const double inv_m = 1.0 / static_cast<double>(samples.samples.size());
    for (double& c : coeff) c *= inv_m;
    return coeff;
}

std::vector<TensorGrid> basis_symbol_grids(const StencilSpec& spec, Shape3 shape) {
    std::vector<TensorGrid> grids;
    grids.reserve(static_cast<std::size_t>(spec.param_count()));
    for (int p = 0; p < spec.param_count(); ++p) {
        ParamVector indicator(static_cast<std::size_t>(spec.param_count()), 0.0);
        indicator[static_cast<std::size_t>(p)] = 1.0;
        grids.push_back(symbol_grid(spec, indicator, shape));
    }
    return grids;
}

namespace {

/// d(omega; theta) = sum_p theta_p b_p(omega); returns min/max over the grid.
void eval_symbol(const std::vector<TensorGrid>& basis, const ParamVector& theta, TensorGrid& d,
                 double& dmin, double& dmax) {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < basis.size(); ++p) acc += theta[p] * basis[p][i];
        d[i] = acc;
    }
    dmin = d[0];
    dmax = d[0];
    for (std::size_t i = 1; i < n; ++i) {
        dmin = std::min(dmin, d[i]);
        dmax = std::max(dmax, d[i]);
    }
}

bool feasible(double dmin, double dmax) { return dmax > 0.0 && dmin > 1e-12 * dmax; }

/// Solve the small symmetric system H x = b in place via Cholesky.
/// Returns false if H is not (numerically) positive definite.
bool solve_spd(std::vector<double> h, std::vector<double>& x, const std::vector<double>& b,
               std::size_t p) {
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = h[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= h[i * p + k] * h[j * p + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                h[i * p + i] = std::sqrt(s);
            } else {
                h[i * p + j] = s / h[j * p + j];
            }
        }
    }
    x.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= h[i * p + k] * x[k];
        x[i] = s / h[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = x[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= h[k * p + ii] * x[k];
        x[ii] = s / h[ii * p + ii];
    }
    return true;
}

}  // namespace
}  // namespace detail

double nll_objective(const GradientSampleSet& samples, const StencilSpec& spec,
                     const ParamVector& theta) {
    if (samples.samples.empty()) throw std::invalid_argument("nll_objective: empty sample set");
    const TensorGrid d = symbol_grid(spec, theta, samples.shape);
    if (!symbol_is_feasible(d))
        throw NotPositiveDefiniteError("nll_objective: theta is outside the PD cone for shape " +
                                       samples.shape.str());
    double trace_term = 0.0;
    for (const auto& g : samples.samples) trace_term += g.dot(circular_convolve(g, spec, theta));
    trace_term /= static_cast<double>(samples.samples.size());
    double logdet = 0.0;
    for (double v : d.data()) logdet += std::log(v);
    return trace_term - logdet;
}

FitReport fit(const GradientSampleSet& samples, const StencilSpec& spec, const FitOptions& opts) {
    if (samples.samples.empty()) throw std::invalid_argument("fit: empty sample set");
    const Shape3 shape = samples.shape;
    const std::size_t np = static_cast<std::size_t>(spec.param_count());
    const std::size_t n = shape.total();

    const std::vector<double> coeff = detail::data_coefficients(samples, spec);
    const std::vector<TensorGrid> basis = detail::basis_symbol_grids(spec, shape);

    // identity-model MLE for the diagonal, zero off-diagonal: always feasible
    double sum_sq = 0.0;
    for (const auto& g : samples.samples) sum_sq += g.squared_norm();
    ParamVector theta(np, 0.0);
    theta[0] = static_cast<double>(n) * static_cast<double>(samples.samples.size()) / sum_sq;
    if (!std::isfinite(theta[0]) || theta[0] <= 0.0)
        throw std::runtime_error("fit: cannot derive a feasible starting point (all-zero samples?)");

    TensorGrid d(shape);
    double dmin = 0.0, dmax = 0.0;
    detail::eval_symbol(basis, theta, d, dmin, dmax);

    auto objective = [&](const TensorGrid& dd) {
        double f = 0.0;
        for (std::size_t p = 0; p < np; ++p) f += theta[p] * coeff[p];
        for (double v : dd.data()) f -= std::log(v);
        return f;
    };
    // objective for a trial theta without clobbering the current state
    auto trial_objective = [&](const ParamVector& t, TensorGrid& dd, double& mn, double& mx) {
        detail::eval_symbol(basis, t, dd, mn, mx);
        if (!detail::feasible(mn, mx)) return std::numeric_limits<double>::infinity();
        double f = 0.0;
        for (std::size_t p = 0; p < np; ++p) f += t[p] * coeff[p];
        for (double v : dd.data()) f -= std::log(v);
        return f;
    };

    FitReport report;
    double f = objective(d);
    report.objective_trace.push_back(f);

    std::vector<double> grad(np), step(np);
    std::vector<double> hess(np * np);
    TensorGrid d_trial(shape);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // grad_p = c_p - sum_omega b_p/d ; H_pq = sum_omega b_p b_q / d^2
        for (std::size_t p = 0; p < np; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += basis[p][i] / d[i];
            grad[p] = coeff[p] - s;
        }
        for (std::size_t p = 0; p < np; ++p)
            for (std::size_t q = p; q < np; ++q) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    s += basis[p][i] * basis[q][i] / (d[i] * d[i]);
                hess[p * np + q] = s;
                hess[q * np + p] = s;
            }

        if (!detail::solve_spd(hess, step, grad, np)) {
            // convex objective, so a PD Hessian is expected; a tiny ridge
            // recovers from roundoff near-singularity
            double trace = 0.0;
            for (std::size_t p = 0; p < np; ++p) trace += hess[p * np + p];
            std::vector<double> ridged = hess;
            for (std::size_t p = 0; p < np; ++p) ridged[p * np + p] += 1e-12 * trace + 1e-300;
            report.hessian_regularized = true;
            if (!detail::solve_spd(ridged, step, grad, np))
                throw NumericalConditioningError("fit: Hessian factorization failed", trace);
        }
        double decrement = 0.0;  // lambda^2 = grad^T H^{-1} grad
        for (std::size_t p = 0; p < np; ++p) decrement += grad[p] * step[p];
        for (double& s : step) s = -s;  // descent direction
        report.newton_decrements.push_back(decrement);
        report.iterations = iter + 1;
        if (decrement / 2.0 < opts.tol) {
            report.converged = true;
            break;
        }

        // backtracking; reject any step leaving the PD cone
        const double slope = -decrement;  // grad^T step
        double t = 1.0;
        bool accepted = false;
        ParamVector trial(np);
        while (t > 1e-14) {
            for (std::size_t p = 0; p < np; ++p) trial[p] = theta[p] + t * step[p];
            double mn, mx;
            const double f_trial = trial_objective(trial, d_trial, mn, mx);
            if (f_trial <= f + opts.armijo * t * slope) {
                theta = trial;
                d = d_trial;
                dmin = mn;
                dmax = mx;
                f = f_trial;
                accepted = true;
                break;
            }
            t *= opts.backtrack;
        }
        if (!accepted) {
            report.converged = true;  // no descent within line-search resolution
            break;
        }
        report.objective_trace.push_back(f);
    }

    report.theta = theta;
    return report;
}

void save_fit_report(const std::string& path, const FitReport& report, const StencilSpec& spec) {
    KvFile kv;
    write_stencil(kv, spec);
    kv.add_doubles("theta", report.theta);
    kv.add_int("fit.iterations", report.iterations);
    kv.add_int("fit.converged", report.converged ? 1 : 0);
    kv.add_int("fit.hessian_regularized", report.hessian_regularized ? 1 : 0);
    kv.add_doubles("fit.objective_trace", report.objective_trace);
    kv.add_doubles("fit.newton_decrements", report.newton_decrements);
    kv.save(path);
}

}  // namespace gradmrf
