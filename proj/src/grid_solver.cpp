#include "clines/grid_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clines/error.hpp"

namespace clines {

namespace {

constexpr double kMinReciprocalCondition = 1e-13;

void check_values(const ProblemSpec& spec, const Grid& grid, std::span<const double> values) {
    if (values.size() != grid.points() * spec.size()) {
        throw InvalidInput("grid values: expected " + std::to_string(grid.points() * spec.size()) + " entries");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidInput("grid values: must be finite");
    }
}

// Average of a against the hat function of node j (half hats at the ends).
// Equals a(x_j) wherever a is linear on the node's cells.
double hat_average(const SpatialProfile& a, const Grid& grid, std::size_t j) {
    const double xj = grid.node(j);
    const double lo = j == 0 ? xj : grid.node(j - 1);
    const double hi = j == grid.intervals ? xj : grid.node(j + 1);
    std::vector<double> cuts{lo, xj, hi};
    const auto nodes = a.nodes();
    for (auto it = std::upper_bound(nodes.begin(), nodes.end(), lo); it != nodes.end() && *it < hi; ++it) {
        cuts.push_back(*it);
    }
    std::sort(cuts.begin(), cuts.end());
    auto hat = [&](double x) { return x <= xj ? (xj == lo ? 1.0 : (x - lo) / (xj - lo)) : (hi - x) / (hi - xj); };
    double weighted = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double u = cuts[k];
        const double v = cuts[k + 1];
        if (!(v > u)) continue;
        const double mid = 0.5 * (u + v);
        weighted += (v - u) / 6.0 * (hat(u) * a(u) + 4.0 * hat(mid) * a(mid) + hat(v) * a(v));
        mass += (v - u) / 6.0 * (hat(u) + 4.0 * hat(mid) + hat(v));
    }
    return weighted / mass;
}

SpatialProfile project(const SpatialProfile& a, const Grid& grid) {
    std::vector<double> values(grid.points());
    for (std::size_t j = 0; j < values.size(); ++j) values[j] = hat_average(a, grid, j);
    return SpatialProfile(grid.nodes(), std::move(values));
}

void residual_into(const CompiledSystem& system, const Grid& grid, std::span<const double> P, std::span<double> F) {
    const std::size_t n = system.size();
    const std::size_t m = grid.intervals;
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    for (std::size_t j = 0; j <= m; ++j) {
        system.rhs(grid.node(j), P.subspan(j * n, n), F.subspan(j * n, n));
        const std::size_t lo = (j == 0) ? 1 : j - 1;
        const std::size_t hi = (j == m) ? m - 1 : j + 1;
        for (std::size_t i = 0; i < n; ++i) {
            F[j * n + i] += (P[lo * n + i] - 2.0 * P[j * n + i] + P[hi * n + i]) * inv_h2;
        }
    }
}

// Solves J d = r for the block-tridiagonal Jacobian of the residual. Off-diagonal
// blocks are multiples of the identity. Returns false when a pivot block is
// numerically singular.
bool solve_block_tridiagonal(const CompiledSystem& system, const Grid& grid, std::span<const double> P,
                             std::span<const double> r, std::span<double> d) {
    const std::size_t n = system.size();
    const std::size_t m = grid.intervals;
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    auto lower = [&](std::size_t j) { return j == m ? 2.0 * inv_h2 : inv_h2; };
    auto upper = [&](std::size_t j) { return j == 0 ? 2.0 * inv_h2 : inv_h2; };

    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> pivots;
    pivots.reserve(m + 1);
    std::vector<Eigen::VectorXd> y(m + 1);
    Eigen::MatrixXd block(n, n);
    Eigen::MatrixXd prev_inv_upper;  // D'_{j-1}^{-1} * c_{j-1}
    std::vector<double> jac(n * n);

    for (std::size_t j = 0; j <= m; ++j) {
        system.jacobian(grid.node(j), P.subspan(j * n, n), jac);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) block(a, b) = jac[a * n + b];
            block(a, a) -= 2.0 * inv_h2;
        }
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data() + j * n, n);
        if (j > 0) {
            block -= lower(j) * prev_inv_upper;
            rhs -= lower(j) * pivots.back().solve(y[j - 1]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(block);
        if (!(lu.rcond() >= kMinReciprocalCondition)) return false;
        if (j < m) prev_inv_upper = lu.solve(Eigen::MatrixXd::Identity(n, n)) * upper(j);
        y[j] = rhs;
        pivots.push_back(std::move(lu));
    }

    // Back substitution: D'_j d_j = y_j - c_j d_{j+1}.
    Eigen::VectorXd next = pivots[m].solve(y[m]);
    std::copy(next.data(), next.data() + n, d.begin() + static_cast<std::ptrdiff_t>(m * n));
    for (std::size_t j = m; j-- > 0;) {
        Eigen::VectorXd cur = pivots[j].solve(y[j] - upper(j) * next);
        std::copy(cur.data(), cur.data() + n, d.begin() + static_cast<std::ptrdiff_t>(j * n));
        next = std::move(cur);
    }
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (!std::isfinite(d[k])) return false;
    }
    return true;
}

// Second differences of O(1) values cannot resolve residuals below a few
// ulps divided by the squared spacing.
double rounding_floor(double h2, std::span<const double> P) {
    return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, sup_norm(P)) / h2;
}

double merit(std::span<const double> F) {
    double s = 0.0;
    for (double v : F) s += v * v;
    return s;
}

// Thomas algorithm for (I - dt L) x = b on one component with mirrored ends.
void implicit_diffusion(std::size_t m, double r, std::vector<double>& b) {
    std::vector<double> c(m + 1);
    const double diag = 1.0 + 2.0 * r;
    double denom = diag;
    c[0] = -2.0 * r / denom;
    b[0] /= denom;
    for (std::size_t j = 1; j <= m; ++j) {
        const double low = (j == m) ? -2.0 * r : -r;
        denom = diag - low * c[j - 1];
        c[j] = (j == m) ? 0.0 : -r / denom;
        b[j] = (b[j] - low * b[j - 1]) / denom;
    }
    for (std::size_t j = m; j-- > 0;) b[j] -= c[j] * b[j + 1];
}

}  // namespace

Grid Grid::uniform(Interval domain, std::size_t intervals) {
    if (intervals < 8) throw InvalidInput("grid: need at least 8 intervals");
    if (!(domain.lower < domain.upper)) throw InvalidInput("grid: empty interval");
    return {domain, intervals};
}

double Grid::node(std::size_t j) const noexcept {
    if (j == intervals) return domain.upper;
    return domain.lower + static_cast<double>(j) * spacing();
}

std::vector<double> Grid::nodes() const {
    std::vector<double> x(points());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = node(j);
    return x;
}

std::vector<double> fd_residual(const ProblemSpec& spec, const Grid& grid, std::span<const double> values) {
    check_values(spec, grid, values);
    const CompiledSystem system(grid_projected(spec, grid));
    std::vector<double> F(values.size());
    residual_into(system, grid, values, F);
    return F;
}

ProblemSpec grid_projected(const ProblemSpec& spec, const Grid& grid) {
    ProblemSpec out = spec;
    for (Equation& e : out.equations) {
        std::vector<WeightTerm> terms = e.weight.terms();
        for (WeightTerm& t : terms) t.profile = project(t.profile, grid);
        e.weight = WeightFunction(std::move(terms));
        if (!e.forcing.empty()) e.forcing = project(e.forcing, grid);
    }
    return out;
}

double sup_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

std::vector<double> sample_on_grid(const SolutionProfile& solution, const Grid& grid) {
    const std::size_t n = solution.size();
    std::vector<double> out(grid.points() * n);
    std::vector<double> p(n);
    for (std::size_t j = 0; j < grid.points(); ++j) {
        solution.evaluate(grid.node(j), p, {});
        std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(j * n));
    }
    return out;
}

SolutionProfile profile_from_grid(const ProblemSpec& spec, const Grid& grid, std::vector<double> values) {
    check_values(spec, grid, values);
    const CompiledSystem system(spec);
    const std::size_t n = spec.size();
    const std::size_t m = grid.intervals;
    std::vector<double> slopes(values.size(), 0.0);
    const double inv_2h = 0.5 / grid.spacing();
    for (std::size_t j = 1; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            slopes[j * n + i] = (values[(j + 1) * n + i] - values[(j - 1) * n + i]) * inv_2h;
        }
    }
    return make_profile(spec, system, grid.nodes(), std::move(values), std::move(slopes));
}

const char* to_string(FdStatus status) {
    switch (status) {
        case FdStatus::converged: return "converged";
        case FdStatus::singular: return "singular-jacobian";
        case FdStatus::diverged: return "diverged";
        case FdStatus::max_iterations: return "max-iterations";
    }
    return "unknown";
}

const char* to_string(RelaxStatus status) {
    switch (status) {
        case RelaxStatus::steady: return "steady";
        case RelaxStatus::timeout: return "timeout";
        case RelaxStatus::blow_up: return "blow-up";
    }
    return "unknown";
}

FdOutcome fd_newton(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial, double tol,
                    int max_iter) {
    if (!(tol > 0.0)) throw InvalidInput("tol: must be positive");
    spec.validate();
    check_values(spec, grid, initial);
    const CompiledSystem system(grid_projected(spec, grid));

    FdOutcome out;
    std::vector<double> P(initial.begin(), initial.end());
    std::vector<double> F(P.size()), step(P.size()), trial(P.size()), Ft(P.size());
    residual_into(system, grid, P, F);
    double phi = merit(F);

    const double h2 = grid.spacing() * grid.spacing();
    for (int it = 0;; ++it) {
        out.iterations = it;
        out.residual = sup_norm(F);
        out.tolerance = std::max(tol, rounding_floor(h2, P));
        if (out.residual <= out.tolerance) {
            out.status = FdStatus::converged;
            break;
        }
        if (it >= max_iter) {
            out.status = FdStatus::max_iterations;
            break;
        }
        for (std::size_t k = 0; k < F.size(); ++k) F[k] = -F[k];
        if (!solve_block_tridiagonal(system, grid, P, F, step)) {
            out.status = FdStatus::singular;
            out.message = "block pivot below reciprocal condition 1e-13";
            for (std::size_t k = 0; k < F.size(); ++k) F[k] = -F[k];
            break;
        }
        bool accepted = false;
        double t = 1.0;
        for (int halving = 0; halving <= 20; ++halving, t *= 0.5) {
            for (std::size_t k = 0; k < P.size(); ++k) trial[k] = P[k] + t * step[k];
            residual_into(system, grid, trial, Ft);
            const double phi_t = merit(Ft);
            if (std::isfinite(phi_t) && phi_t <= (1.0 - 1e-4 * t) * phi) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.status = FdStatus::diverged;
            out.message = "no decrease of the residual along the Newton direction";
            for (std::size_t k = 0; k < F.size(); ++k) F[k] = -F[k];
            break;
        }
        P.swap(trial);
        F.swap(Ft);
        phi = merit(F);
        const auto [lo, hi] = std::minmax_element(P.begin(), P.end());
        if (*lo < -1.0 || *hi > 2.0) {
            out.status = FdStatus::diverged;
            out.message = "iterate left the box [-1, 2]";
            out.residual = sup_norm(F);
            break;
        }
    }
    out.values = P;
    if (out.ok()) out.solution = profile_from_grid(spec, grid, std::move(P));
    return out;
}

double grid_mean(const Grid& grid, std::span<const double> values, std::size_t n, std::size_t i) {
    const std::size_t m = grid.intervals;
    double s = 0.5 * (values[i] + values[m * n + i]);
    for (std::size_t j = 1; j < m; ++j) s += values[j * n + i];
    return s / static_cast<double>(m);
}

RelaxOutcome relax(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial,
                   const RelaxOptions& options) {
    if (!(options.dt > 0.0)) throw InvalidInput("dt: must be positive");
    if (!(options.t_end > 0.0)) throw InvalidInput("t_end: must be positive");
    spec.validate();
    check_values(spec, grid, initial);
    const CompiledSystem system(grid_projected(spec, grid));
    const std::size_t n = spec.size();
    const std::size_t m = grid.intervals;
    const double r = options.dt / (grid.spacing() * grid.spacing());

    RelaxOutcome out;
    std::vector<double> P(initial.begin(), initial.end());
    std::vector<double> next(P.size()), h(n), column(m + 1);
    while (true) {
        if (out.time >= options.t_end) {
            out.status = RelaxStatus::timeout;
            break;
        }
        next = P;
        if (options.reaction) {
            for (std::size_t j = 0; j <= m; ++j) {
                system.rhs(grid.node(j), std::span<const double>(P).subspan(j * n, n), h);
                for (std::size_t i = 0; i < n; ++i) next[j * n + i] += options.dt * h[i];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= m; ++j) column[j] = next[j * n + i];
            implicit_diffusion(m, r, column);
            for (std::size_t j = 0; j <= m; ++j) next[j * n + i] = column[j];
        }
        double change = 0.0;
        bool escaped = false;
        for (std::size_t k = 0; k < P.size(); ++k) {
            change = std::max(change, std::abs(next[k] - P[k]));
            if (!(next[k] >= -1.0 && next[k] <= 2.0)) escaped = true;
        }
        P.swap(next);
        out.time += options.dt;
        ++out.steps;
        out.rate = change / options.dt;
        if (escaped) {
            out.status = RelaxStatus::blow_up;
            break;
        }
        if (out.rate <= options.steady_tol) {
            out.status = RelaxStatus::steady;
            break;
        }
    }
    out.values = P;
    if (out.status == RelaxStatus::steady) out.solution = profile_from_grid(spec, grid, std::move(P));
    return out;
}

RelaxOutcome relax(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial, double dt,
                   double t_end, double steady_tol) {
    return relax(spec, grid, initial, RelaxOptions{dt, t_end, steady_tol, true});
}

}  // namespace clines
