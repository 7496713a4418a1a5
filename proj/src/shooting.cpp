#include "clines/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <map>
#include <cmath>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "clines/error.hpp"

namespace clines {

namespace {

constexpr double kBoxLower = -1.0;
constexpr double kBoxUpper = 2.0;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 20;

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double deflation_factor(std::span<const double> c, std::span<const std::vector<double>> roots) {
    double factor = 1.0;
    for (const auto& r : roots) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) d2 += (c[i] - r[i]) * (c[i] - r[i]);
        factor *= (d2 > 0.0 ? 1.0 / d2 : std::numeric_limits<double>::infinity()) + 1.0;
    }
    return factor;
}

bool inside_box(std::span<const double> c) {
    return std::all_of(c.begin(), c.end(), [](double v) { return v >= kBoxLower && v <= kBoxUpper; });
}

bool forcing_vanishes(const ProblemSpec& spec, std::size_t i) {
    const Equation& e = spec.equations[i];
    return spec.mu == 0.0 || e.forcing.empty() || e.forcing.is_zero();
}

// Residual evaluation with an integration tolerance tied to the current
// residual level: loose far from a root, tight near one.
class ResidualMap {
public:
    ResidualMap(const CompiledSystem& system, double tol)
        : system_(system), tight_(std::max(1e-4 * tol, 1e-14)) {}

    std::vector<double> operator()(std::span<const double> c, double level) const {
        const double itol = tight_only_ ? tight_ : std::clamp(1e-6 * level, tight_, 1e-8);
        return shoot(system_, c, itol, false).residual;
    }

    bool tight_only() const noexcept { return tight_only_; }
    void set_tight_only() noexcept { tight_only_ = true; }

    /// Same integration as the stored profile, so the two agree exactly.
    std::vector<double> tight(std::span<const double> c) const;

private:
    const CompiledSystem& system_;
    double tight_;
    bool tight_only_ = false;
};

IntegrationOptions profile_options(const CompiledSystem& system) {
    IntegrationOptions opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-13;
    opt.max_step = system.domain().length() / 2048.0;
    return opt;
}

Trajectory profile_trajectory(const CompiledSystem& system, std::span<const double> c, bool dense) {
    const std::size_t n = system.size();
    const ExtendedSystem ext(system);
    IvpState start{system.domain().lower, std::vector<double>(2 * n, 0.0)};
    std::copy(c.begin(), c.end(), start.y.begin());
    IntegrationOptions opt = profile_options(system);
    opt.dense = dense;
    return integrate(ext, start, system.domain().upper, opt);
}

std::vector<double> ResidualMap::tight(std::span<const double> c) const {
    const IvpState end = profile_trajectory(system_, c, false).back();
    return {end.y.begin() + static_cast<std::ptrdiff_t>(system_.size()), end.y.end()};
}

}  // namespace

const char* to_string(NewtonStatus status) {
    switch (status) {
        case NewtonStatus::converged: return "converged";
        case NewtonStatus::max_iterations: return "max-iterations";
        case NewtonStatus::singular_jacobian: return "singular-jacobian";
        case NewtonStatus::diverged: return "diverged";
        case NewtonStatus::no_descent: return "no-descent";
        case NewtonStatus::integration_failed: return "integration-failed";
        case NewtonStatus::rejected: return "rejected";
    }
    return "unknown";
}

ShootResult shoot(const CompiledSystem& system, std::span<const double> c, double tol, bool dense) {
    const std::size_t n = system.size();
    if (c.size() != n) throw InvalidInput("shoot: initial value has wrong dimension");
    for (double v : c) {
        if (!std::isfinite(v)) throw InvalidInput("shoot: initial value must be finite");
    }
    const ExtendedSystem ext(system);
    IvpState start{system.domain().lower, std::vector<double>(2 * n, 0.0)};
    std::copy(c.begin(), c.end(), start.y.begin());
    IntegrationOptions opt;
    opt.rel_tol = tol;
    opt.abs_tol = tol;
    opt.dense = dense;
    ShootResult out{integrate(ext, start, system.domain().upper, opt), {}};
    const IvpState end = out.trajectory.back();
    out.residual.assign(end.y.begin() + static_cast<std::ptrdiff_t>(n), end.y.end());
    return out;
}

ShootResult shoot(const ProblemSpec& spec, std::span<const double> c, double tol) {
    const CompiledSystem system(spec);
    return shoot(system, c, tol, true);
}

SolutionProfile solution_from_initial_value(const ProblemSpec& spec, const CompiledSystem& system,
                                            std::span<const double> c) {
    return make_profile(spec, system, profile_trajectory(system, c, true));
}

NewtonOutcome newton_shoot(const ProblemSpec& spec, std::span<const double> c0, const NewtonOptions& options,
                           std::span<const std::vector<double>> deflation) {
    if (!(options.tol > 0.0)) throw InvalidInput("newton_shoot: tol must be positive");
    spec.validate();
    const std::size_t n = spec.size();
    if (c0.size() != n) throw InvalidInput("newton_shoot: initial guess has wrong dimension");
    const CompiledSystem system(spec);
    ResidualMap residual(system, options.tol);

    NewtonOutcome out;
    out.c.assign(c0.begin(), c0.end());

    // Components starting exactly at 0 or 1 stay there (unique Cauchy solution).
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i) {
        const bool pinned = (c0[i] == 0.0 || c0[i] == 1.0) && forcing_vanishes(spec, i);
        if (!pinned) active.push_back(i);
    }
    const std::size_t m = active.size();

    auto fail = [&](NewtonStatus status, std::string message) {
        out.status = status;
        out.message = std::move(message);
        return out;
    };

    try {
        std::vector<double> r = residual(out.c, 1.0);
        double level = sup_norm(r);
        std::vector<double> g(n), trial(n), rt;
        Eigen::MatrixXd jac(m, m);
        Eigen::VectorXd rhs(m);

        for (;;) {
            if (level <= options.tol || m == 0) {
                r = residual.tight(out.c);
                level = sup_norm(r);
                if (level <= options.tol || m == 0) break;
            }
            if (out.iterations >= options.max_iter) {
                out.residual = r;
                return fail(NewtonStatus::max_iterations, "maximum number of Newton iterations reached");
            }
            ++out.iterations;

            const double dfac = deflation_factor(out.c, deflation);
            for (std::size_t i = 0; i < n; ++i) g[i] = dfac * r[i];
            const double phi = [&] {
                double s = 0.0;
                for (double v : g) s += v * v;
                return s;
            }();

            for (std::size_t a = 0; a < m; ++a) {
                trial = out.c;
                trial[active[a]] += options.fd_step;
                rt = residual(trial, level);
                const double dt = deflation_factor(trial, deflation);
                for (std::size_t b = 0; b < m; ++b) {
                    jac(b, a) = (dt * rt[active[b]] - g[active[b]]) / options.fd_step;
                }
            }
            for (std::size_t b = 0; b < m; ++b) rhs(b) = -g[active[b]];

            Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& sv = svd.singularValues();
            const double smax = sv(0), smin = sv(m - 1);
            out.jacobian_det = jac.determinant() / std::pow(dfac, static_cast<double>(m));
            if (!(smax > 0.0) || !(smin > 0.0) || smax / smin > options.max_condition) {
                out.residual = r;
                std::ostringstream msg;
                msg << "Jacobian condition estimate " << (smin > 0.0 ? smax / smin : INFINITY) << " exceeds "
                    << options.max_condition;
                return fail(NewtonStatus::singular_jacobian, msg.str());
            }
            const Eigen::VectorXd delta = svd.solve(rhs);

            double t = 1.0;
            bool accepted = false;
            bool any_inside = false;
            for (int halving = 0; halving <= kMaxHalvings; ++halving, t *= 0.5) {
                trial = out.c;
                for (std::size_t a = 0; a < m; ++a) trial[active[a]] += t * delta(static_cast<Eigen::Index>(a));
                if (!inside_box(trial)) continue;
                any_inside = true;
                rt = residual(trial, level);
                const double dt = deflation_factor(trial, deflation);
                double phit = 0.0;
                for (double v : rt) phit += dt * dt * v * v;
                if (phit <= (1.0 - 2.0 * kArmijo * t) * phi) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted && any_inside && !residual.tight_only()) {
                // The failure may be integration noise: retry at full accuracy.
                residual.set_tight_only();
                r = residual.tight(out.c);
                level = sup_norm(r);
                continue;
            }
            if (!accepted) {
                out.residual = r;
                if (!any_inside) return fail(NewtonStatus::diverged, "iterate left the box [-1, 2]^N");
                return fail(NewtonStatus::no_descent, "line search found no sufficient decrease");
            }
            out.c = trial;
            r = rt;
            level = sup_norm(r);
        }
        out.residual = r;

        // Snap near-constant components onto the exact constants.
        std::vector<double> snapped = out.c;
        bool changed = false;
        for (std::size_t i : active) {
            if (!forcing_vanishes(spec, i)) continue;
            for (double target : {0.0, 1.0}) {
                if (snapped[i] != target && std::abs(snapped[i] - target) <= options.snap_tol) {
                    snapped[i] = target;
                    changed = true;
                }
            }
        }
        if (changed) {
            const std::vector<double> rs = residual.tight(snapped);
            if (sup_norm(rs) <= options.tol) {
                out.c = snapped;
                out.residual = rs;
            }
        }

        SolutionProfile sol = solution_from_initial_value(spec, system, out.c);
        const double box = 10.0 * options.tol;
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = sol.min_on(i, spec.domain.lower, spec.domain.upper);
            const double hi = sol.max_on(i, spec.domain.lower, spec.domain.upper);
            if (lo < -box || hi > 1.0 + box) {
                std::ostringstream msg;
                msg << "component " << i << " leaves the box: range [" << lo << ", " << hi << "]";
                return fail(NewtonStatus::rejected, msg.str());
            }
        }
        if (sol.residual_sup > 10.0 * options.tol) {
            std::ostringstream msg;
            msg << "recomputed residual " << sol.residual_sup << " exceeds " << 10.0 * options.tol;
            return fail(NewtonStatus::rejected, msg.str());
        }
        out.status = NewtonStatus::converged;
        out.solution = std::move(sol);
        return out;
    } catch (const IntegrationError& e) {
        return fail(NewtonStatus::integration_failed, e.what());
    }
}

std::vector<SolutionProfile> deduplicate(std::vector<SolutionProfile> solutions, double dedup_tol) {
    std::stable_sort(solutions.begin(), solutions.end(), [](const SolutionProfile& a, const SolutionProfile& b) {
        return a.initial_value < b.initial_value;
    });
    std::vector<SolutionProfile> kept;
    for (auto& s : solutions) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const SolutionProfile& k) {
            return sup_distance(k.initial_value, s.initial_value) <= dedup_tol;
        });
        if (!duplicate) kept.push_back(std::move(s));
    }
    return kept;
}

namespace {

std::vector<std::vector<double>> grid_starts(std::size_t n, int per_axis) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= static_cast<std::size_t>(per_axis);
    std::vector<std::vector<double>> starts(total, std::vector<double>(n));
    for (std::size_t s = 0; s < total; ++s) {
        std::size_t rest = s;
        for (std::size_t i = n; i-- > 0;) {
            const std::size_t j = rest % static_cast<std::size_t>(per_axis);
            rest /= static_cast<std::size_t>(per_axis);
            starts[s][i] = static_cast<double>(j) / static_cast<double>(per_axis - 1);
        }
    }
    return starts;
}

bool known(std::span<const std::vector<double>> roots, std::span<const double> c, double tol) {
    return std::any_of(roots.begin(), roots.end(),
                       [&](const std::vector<double>& r) { return sup_distance(r, c) <= tol; });
}

// Residual for screening: tight absolute tolerance so the sign of tiny
// residuals near the constant solutions is reliable.
std::vector<double> screening_residual(const CompiledSystem& system, std::span<const double> c) {
    const std::size_t n = system.size();
    const ExtendedSystem ext(system);
    IvpState start{system.domain().lower, std::vector<double>(2 * n, 0.0)};
    std::copy(c.begin(), c.end(), start.y.begin());
    IntegrationOptions opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-14;
    opt.dense = false;
    const IvpState end = integrate(ext, start, system.domain().upper, opt).back();
    return {end.y.begin() + static_cast<std::ptrdiff_t>(n), end.y.end()};
}

std::vector<double> screening_axis(int per_axis, bool with_geometric) {
    std::vector<double> axis;
    for (int j = 1; j + 1 < per_axis; ++j) axis.push_back(static_cast<double>(j) / (per_axis - 1));
    if (with_geometric) {
        const int g = std::max(2, per_axis / 2);
        for (int k = 0; k < g; ++k) {
            const double d = std::pow(10.0, -6.0 + 5.0 * k / (g - 1));
            axis.push_back(d);
            axis.push_back(1.0 - d);
        }
    }
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    return axis;
}

class BracketSearch {
public:
    BracketSearch(const ProblemSpec& spec, const CompiledSystem& system, const MultistartOptions& options,
                  const NewtonOptions& nopt, std::vector<std::vector<double>>& roots,
                  std::vector<SolutionProfile>& found, MultistartResult& result)
        : spec_(spec), system_(system), options_(options), nopt_(nopt), roots_(roots), found_(found),
          result_(result), n_(spec.size()) {}

    void run() {
        // Every face of the box: each component free, pinned at 0 or pinned at 1.
        std::size_t patterns = 1;
        for (std::size_t i = 0; i < n_; ++i) patterns *= 3;
        for (std::size_t code = 0; code < patterns; ++code) {
            std::vector<int> pattern(n_);
            std::size_t rest = code;
            bool valid = true, any_free = false;
            for (std::size_t i = 0; i < n_; ++i) {
                pattern[i] = static_cast<int>(rest % 3);
                rest /= 3;
                if (pattern[i] == 0) any_free = true;
                if (pattern[i] != 0 && !forcing_vanishes(spec_, i)) valid = false;
            }
            if (valid && any_free) search_face(pattern);
            if (cells_ >= options_.max_cells) return;
        }
    }

private:
    struct Cell {
        std::vector<double> lo, hi;
        int depth;
    };

    const std::vector<double>& residual_at(const std::vector<double>& c) {
        auto it = cache_.find(c);
        if (it != cache_.end()) return it->second;
        std::vector<double> r;
        try {
            r = screening_residual(system_, c);
        } catch (const IntegrationError&) {
            r.assign(n_, std::numeric_limits<double>::quiet_NaN());
        }
        return cache_.emplace(c, std::move(r)).first->second;
    }

    std::vector<double> point(const std::vector<int>& pattern, std::span<const double> free_values) const {
        std::vector<double> c(n_);
        std::size_t j = 0;
        for (std::size_t i = 0; i < n_; ++i) c[i] = pattern[i] == 0 ? free_values[j++] : (pattern[i] == 1 ? 0.0 : 1.0);
        return c;
    }

    // True when every free component takes both strict signs over the corners.
    bool flagged(const std::vector<int>& pattern, const Cell& cell) {
        const std::size_t m = cell.lo.size();
        std::vector<double> lo(n_, INFINITY), hi(n_, -INFINITY), v(m);
        for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
            for (std::size_t j = 0; j < m; ++j) v[j] = (mask >> j) & 1 ? cell.hi[j] : cell.lo[j];
            const std::vector<double>& r = residual_at(point(pattern, v));
            for (std::size_t i = 0; i < n_; ++i) {
                if (std::isnan(r[i])) return false;
                lo[i] = std::min(lo[i], r[i]);
                hi[i] = std::max(hi[i], r[i]);
            }
        }
        for (std::size_t i = 0; i < n_; ++i) {
            if (pattern[i] == 0 && !(lo[i] < 0.0 && hi[i] > 0.0)) return false;
        }
        return true;
    }

    bool contains_root(const std::vector<int>& pattern, const Cell& cell) const {
        const double pad = options_.dedup_tol;
        for (const auto& r : roots_) {
            bool inside = true;
            std::size_t j = 0;
            for (std::size_t i = 0; i < n_ && inside; ++i) {
                if (pattern[i] == 0) {
                    inside = r[i] >= cell.lo[j] - pad && r[i] <= cell.hi[j] + pad;
                    ++j;
                } else {
                    inside = r[i] == (pattern[i] == 1 ? 0.0 : 1.0);
                }
            }
            if (inside) return true;
        }
        return false;
    }

    void search_face(const std::vector<int>& pattern) {
        std::size_t m = 0;
        for (int p : pattern) m += p == 0 ? 1 : 0;
        constexpr double kLatticeBudget = 50000.0;
        std::vector<double> axis = screening_axis(options_.grid_per_axis, true);
        if (std::pow(static_cast<double>(axis.size()), static_cast<double>(m)) > kLatticeBudget) {
            axis = screening_axis(options_.grid_per_axis, false);
        }
        if (axis.size() < 2 ||
            std::pow(static_cast<double>(axis.size()), static_cast<double>(m)) > kLatticeBudget) {
            return;
        }

        std::deque<Cell> queue;
        const std::size_t cells_per_axis = axis.size() - 1;
        std::size_t total = 1;
        for (std::size_t j = 0; j < m; ++j) total *= cells_per_axis;
        for (std::size_t idx = 0; idx < total; ++idx) {
            Cell cell{std::vector<double>(m), std::vector<double>(m), 0};
            std::size_t rest = idx;
            for (std::size_t j = m; j-- > 0;) {
                const std::size_t k = rest % cells_per_axis;
                rest /= cells_per_axis;
                cell.lo[j] = axis[k];
                cell.hi[j] = axis[k + 1];
            }
            if (flagged(pattern, cell)) queue.push_back(std::move(cell));
        }

        while (!queue.empty() && cells_ < options_.max_cells) {
            Cell cell = std::move(queue.front());
            queue.pop_front();
            ++cells_;
            ++result_.bracketed_cells;
            constexpr int kKnownRootDepth = 12;
            bool resolved = false;
            if (contains_root(pattern, cell)) {
                if (cell.depth >= kKnownRootDepth) continue;
            } else {
                std::vector<double> mid(m);
                for (std::size_t j = 0; j < m; ++j) mid[j] = 0.5 * (cell.lo[j] + cell.hi[j]);
                const std::vector<double> c0 = point(pattern, mid);
                NewtonOutcome o = newton_shoot(spec_, c0, nopt_);
                if (o.ok() && !known(roots_, o.c, options_.dedup_tol)) {
                    roots_.push_back(o.c);
                    found_.push_back(std::move(*o.solution));
                    resolved = contains_root(pattern, cell);
                }
            }
            if (resolved || cell.depth >= options_.max_bisection_depth) continue;
            for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
                Cell sub{cell.lo, cell.hi, cell.depth + 1};
                for (std::size_t j = 0; j < m; ++j) {
                    const double mid = 0.5 * (cell.lo[j] + cell.hi[j]);
                    if ((mask >> j) & 1) {
                        sub.lo[j] = mid;
                    } else {
                        sub.hi[j] = mid;
                    }
                }
                if (flagged(pattern, sub)) queue.push_back(std::move(sub));
            }
        }
    }

    const ProblemSpec& spec_;
    const CompiledSystem& system_;
    const MultistartOptions& options_;
    const NewtonOptions& nopt_;
    std::vector<std::vector<double>>& roots_;
    std::vector<SolutionProfile>& found_;
    MultistartResult& result_;
    std::size_t n_;
    std::size_t cells_ = 0;
    std::map<std::vector<double>, std::vector<double>> cache_;
};

}  // namespace

MultistartResult multistart(const ProblemSpec& spec, const MultistartOptions& options) {
    if (options.grid_per_axis < 2) throw InvalidInput("multistart: grid_per_axis must be at least 2");
    spec.validate();
    const std::size_t n = spec.size();
    MultistartResult result;

    const bool degenerate =
        spec.mu == 0.0 && std::all_of(spec.equations.begin(), spec.equations.end(),
                                      [](const Equation& e) { return e.weight.is_identically_zero(); });
    if (degenerate) {
        const CompiledSystem system(spec);
        result.degenerate = true;
        for (const auto& c : grid_starts(n, 2)) {
            result.solutions.push_back(solution_from_initial_value(spec, system, c));
        }
        return result;
    }

    const auto starts = grid_starts(n, options.grid_per_axis);
    result.starts = starts.size();
    NewtonOptions nopt;
    nopt.tol = options.tol;
    nopt.max_iter = options.max_iter;

    std::vector<std::vector<double>> roots;
    std::vector<SolutionProfile> found;

    if (options.jobs <= 1) {
        for (const auto& c0 : starts) {
            if (known(roots, c0, options.dedup_tol)) continue;
            NewtonOutcome o = newton_shoot(spec, c0, nopt, roots);
            if (!o.ok()) {
                result.failures.push_back({c0, o.status, o.message});
                continue;
            }
            if (known(roots, o.c, options.dedup_tol)) continue;
            roots.push_back(o.c);
            found.push_back(std::move(*o.solution));
        }
    } else {
        std::vector<NewtonOutcome> outcomes(starts.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t s = next++; s < starts.size(); s = next++) {
                outcomes[s] = newton_shoot(spec, starts[s], nopt);
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < options.jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (std::size_t s = 0; s < starts.size(); ++s) {
            NewtonOutcome& o = outcomes[s];
            if (!o.ok()) {
                result.failures.push_back({starts[s], o.status, o.message});
                continue;
            }
            if (known(roots, o.c, options.dedup_tol)) continue;
            roots.push_back(o.c);
            found.push_back(std::move(*o.solution));
        }
    }
    if (options.bracketing) {
        const CompiledSystem system(spec);
        BracketSearch(spec, system, options, nopt, roots, found, result).run();
    }
    result.solutions = deduplicate(std::move(found), options.dedup_tol);
    return result;
}

}  // namespace clines
