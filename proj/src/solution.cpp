#include "clines/solution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "clines/error.hpp"

namespace clines {

namespace {

constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                            0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665,
                                              0.5688888888888889, 0.4786286704993665,
                                              0.2369268850561891};

struct HermiteValue {
    double p, dp, ddp;
};

// Quintic through (p, p', p'') at both ends of an interval of width dx.
HermiteValue quintic(double t, double dx, double p0, double d0, double c0, double p1, double d1,
                     double c1) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    const double h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    const double h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    const double h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    const double h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;

    const double g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    const double g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    const double g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    const double g3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    const double g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;

    const double k0 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
    const double k1 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
    const double k2 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3);
    const double k3 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3);
    const double k4 = -24.0 * t + 84.0 * t2 - 60.0 * t3;

    const double dx2 = dx * dx;
    HermiteValue v;
    v.p = p0 * h0 + dx * d0 * h1 + dx2 * c0 * h2 + dx2 * c1 * h3 + dx * d1 * h4 + p1 * (1.0 - h0);
    v.dp = (p0 * g0 + dx * d0 * g1 + dx2 * c0 * g2 + dx2 * c1 * g3 + dx * d1 * g4 - p1 * g0) / dx;
    v.ddp = (p0 * k0 + dx * d0 * k1 + dx2 * c0 * k2 + dx2 * c1 * k3 + dx * d1 * k4 - p1 * k0) / dx2;
    return v;
}

// Cubic Hermite in t on [0, 1]: A t^3 + B t^2 + C t + D.
struct Cubic {
    double a, b, c, d;
    double operator()(double t) const { return ((a * t + b) * t + c) * t + d; }
};

Cubic cubic_hermite(double dx, double p0, double d0, double p1, double d1) {
    return {2.0 * (p0 - p1) + dx * (d0 + d1), 3.0 * (p1 - p0) - dx * (2.0 * d0 + d1), dx * d0, p0};
}

// Extreme values of a cubic over [t0, t1] (sign = +1 for max, -1 for min).
double cubic_extreme(const Cubic& q, double t0, double t1, double sign) {
    double best = std::max(sign * q(t0), sign * q(t1));
    auto consider = [&](double t) {
        if (t > t0 && t < t1) best = std::max(best, sign * q(t));
    };
    const double qa = 3.0 * q.a, qb = 2.0 * q.b, qc = q.c;
    if (std::abs(qa) < 1e-300) {
        if (qb != 0.0) consider(-qc / qb);
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double r = -0.5 * (qb + std::copysign(sq, qb));
            if (r != 0.0) {
                consider(r / qa);
                consider(qc / r);
            } else {
                consider(0.0);
            }
        }
    }
    return sign * best;
}

}  // namespace

SolutionProfile::SolutionProfile(std::size_t components, std::vector<double> mesh,
                                 std::vector<double> values, std::vector<double> derivatives,
                                 std::vector<double> curvatures)
    : n_(components),
      mesh_(std::move(mesh)),
      values_(std::move(values)),
      derivatives_(std::move(derivatives)),
      curvatures_(std::move(curvatures)) {
    if (n_ == 0) throw InvalidInput("solution profile needs at least one component");
    if (mesh_.size() < 2) throw InvalidInput("solution profile needs at least two mesh points");
    const std::size_t expected = mesh_.size() * n_;
    if (values_.size() != expected || derivatives_.size() != expected || curvatures_.size() != expected) {
        throw InvalidInput("solution profile: node data does not match mesh size");
    }
    for (std::size_t k = 1; k < mesh_.size(); ++k) {
        if (!(mesh_[k] > mesh_[k - 1])) throw InvalidInput("solution profile: mesh must be strictly increasing");
    }
}

std::vector<double> SolutionProfile::component(std::size_t i) const {
    std::vector<double> out(points());
    for (std::size_t k = 0; k < points(); ++k) out[k] = value(k, i);
    return out;
}

std::size_t SolutionProfile::locate(double x) const {
    const double slack = 1e-12 * (mesh_.back() - mesh_.front());
    if (x < mesh_.front() - slack || x > mesh_.back() + slack) {
        throw DomainError("solution profile evaluated outside its mesh");
    }
    auto it = std::upper_bound(mesh_.begin() + 1, mesh_.end() - 1, x);
    return static_cast<std::size_t>(it - mesh_.begin()) - 1;
}

void SolutionProfile::evaluate(double x, std::span<double> p, std::span<double> dp) const {
    const std::size_t k = locate(x);
    const double dx = mesh_[k + 1] - mesh_[k];
    const double t = std::clamp((x - mesh_[k]) / dx, 0.0, 1.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const HermiteValue v = quintic(t, dx, value(k, i), derivative(k, i), curvature(k, i),
                                       value(k + 1, i), derivative(k + 1, i), curvature(k + 1, i));
        p[i] = v.p;
        if (!dp.empty()) dp[i] = v.dp;
    }
}

std::vector<double> SolutionProfile::evaluate(double x) const {
    std::vector<double> p(n_);
    evaluate(x, p, {});
    return p;
}

double SolutionProfile::max_on(std::size_t i, double a, double b) const {
    a = std::max(a, mesh_.front());
    b = std::min(b, mesh_.back());
    if (b < a) throw InvalidInput("max_on: empty interval");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < points(); ++k) {
        const double x0 = mesh_[k], x1 = mesh_[k + 1];
        if (x1 < a || x0 > b) continue;
        const double dx = x1 - x0;
        const Cubic q = cubic_hermite(dx, value(k, i), derivative(k, i), value(k + 1, i), derivative(k + 1, i));
        const double t0 = std::clamp((a - x0) / dx, 0.0, 1.0);
        const double t1 = std::clamp((b - x0) / dx, 0.0, 1.0);
        best = std::max(best, cubic_extreme(q, t0, t1, 1.0));
    }
    return best;
}

double SolutionProfile::min_on(std::size_t i, double a, double b) const {
    a = std::max(a, mesh_.front());
    b = std::min(b, mesh_.back());
    if (b < a) throw InvalidInput("min_on: empty interval");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < points(); ++k) {
        const double x0 = mesh_[k], x1 = mesh_[k + 1];
        if (x1 < a || x0 > b) continue;
        const double dx = x1 - x0;
        const Cubic q = cubic_hermite(dx, value(k, i), derivative(k, i), value(k + 1, i), derivative(k + 1, i));
        const double t0 = std::clamp((a - x0) / dx, 0.0, 1.0);
        const double t1 = std::clamp((b - x0) / dx, 0.0, 1.0);
        best = std::min(best, cubic_extreme(q, t0, t1, -1.0));
    }
    return best;
}

double SolutionProfile::sup_norm(std::size_t i) const {
    return std::max(std::abs(max_on(i, mesh_.front(), mesh_.back())),
                    std::abs(min_on(i, mesh_.front(), mesh_.back())));
}

double SolutionProfile::sup_distance_to_one(std::size_t i) const {
    return std::max(std::abs(1.0 - min_on(i, mesh_.front(), mesh_.back())),
                    std::abs(max_on(i, mesh_.front(), mesh_.back()) - 1.0));
}

double SolutionProfile::max_spacing() const {
    double h = 0.0;
    for (std::size_t k = 0; k + 1 < points(); ++k) h = std::max(h, mesh_[k + 1] - mesh_[k]);
    return h;
}

SolutionProfile SolutionProfile::refined(std::size_t factor) const {
    if (factor < 1) throw InvalidInput("refined: factor must be positive");
    std::vector<double> mesh, values, derivs, curvs;
    const std::size_t total = (points() - 1) * factor + 1;
    mesh.reserve(total);
    values.reserve(total * n_);
    derivs.reserve(total * n_);
    curvs.reserve(total * n_);
    for (std::size_t k = 0; k + 1 < points(); ++k) {
        const double dx = mesh_[k + 1] - mesh_[k];
        for (std::size_t s = 0; s < factor; ++s) {
            const double t = static_cast<double>(s) / static_cast<double>(factor);
            mesh.push_back(s == 0 ? mesh_[k] : mesh_[k] + t * dx);
            for (std::size_t i = 0; i < n_; ++i) {
                const HermiteValue v = quintic(t, dx, value(k, i), derivative(k, i), curvature(k, i),
                                               value(k + 1, i), derivative(k + 1, i), curvature(k + 1, i));
                values.push_back(s == 0 ? value(k, i) : v.p);
                derivs.push_back(s == 0 ? derivative(k, i) : v.dp);
                curvs.push_back(s == 0 ? curvature(k, i) : v.ddp);
            }
        }
    }
    mesh.push_back(mesh_.back());
    const std::size_t last = points() - 1;
    for (std::size_t i = 0; i < n_; ++i) {
        values.push_back(value(last, i));
        derivs.push_back(derivative(last, i));
        curvs.push_back(curvature(last, i));
    }
    SolutionProfile out(n_, std::move(mesh), std::move(values), std::move(derivs), std::move(curvs));
    out.lambdas = lambdas;
    out.mu = mu;
    out.residual_sup = residual_sup;
    out.neumann_left = neumann_left;
    out.neumann_right = neumann_right;
    out.initial_value = initial_value;
    return out;
}

namespace {

// Integral of h over [x0, x1] (one mesh interval), split at breakpoints.
void integrate_rhs_on_interval(const CompiledSystem& system, const SolutionProfile& s, std::size_t k,
                               std::span<double> acc, std::span<double> p, std::span<double> h) {
    const std::size_t n = s.size();
    const double x0 = s.mesh()[k], x1 = s.mesh()[k + 1];
    const double dx = x1 - x0;
    std::fill(acc.begin(), acc.end(), 0.0);

    const auto breaks = system.breakpoints();
    std::array<double, 16> cuts_local{};
    std::vector<double> cuts_heap;
    std::size_t ncuts = 0;
    auto push_cut = [&](double v) {
        if (ncuts < cuts_local.size()) {
            cuts_local[ncuts++] = v;
        } else {
            if (cuts_heap.empty()) cuts_heap.assign(cuts_local.begin(), cuts_local.end());
            cuts_heap.push_back(v);
            ++ncuts;
        }
    };
    push_cut(x0);
    auto it = std::upper_bound(breaks.begin(), breaks.end(), x0);
    const double eps = 1e-13 * std::max(1.0, std::abs(x1));
    for (; it != breaks.end() && *it < x1 - eps; ++it) {
        if (*it > x0 + eps) push_cut(*it);
    }
    push_cut(x1);
    const double* cuts = cuts_heap.empty() ? cuts_local.data() : cuts_heap.data();

    for (std::size_t c = 0; c + 1 < ncuts; ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t g = 0; g < kGaussNodes.size(); ++g) {
            const double x = mid + half * kGaussNodes[g];
            const double t = std::clamp((x - x0) / dx, 0.0, 1.0);
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = quintic(t, dx, s.value(k, i), s.derivative(k, i), s.curvature(k, i), s.value(k + 1, i),
                               s.derivative(k + 1, i), s.curvature(k + 1, i))
                           .p;
            }
            system.rhs(x, p, h);
            for (std::size_t i = 0; i < n; ++i) acc[i] += half * kGaussWeights[g] * h[i];
        }
    }
}

}  // namespace

std::vector<double> interval_residuals(const CompiledSystem& system, const SolutionProfile& s) {
    const std::size_t n = s.size();
    if (n != system.size()) throw InvalidInput("residual: solution and problem differ in size");
    std::vector<double> out(n, 0.0), acc(n), p(n), h(n);
    for (std::size_t k = 0; k + 1 < s.points(); ++k) {
        const double dx = s.mesh()[k + 1] - s.mesh()[k];
        integrate_rhs_on_interval(system, s, k, acc, p, h);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = (s.derivative(k + 1, i) - s.derivative(k, i) + acc[i]) / dx;
            out[i] = std::max(out[i], std::abs(r));
        }
    }
    return out;
}

double residual_sup(const CompiledSystem& system, const SolutionProfile& s) {
    const std::vector<double> r = interval_residuals(system, s);
    return *std::max_element(r.begin(), r.end());
}

std::vector<double> rhs_integrals(const CompiledSystem& system, const SolutionProfile& s) {
    const std::size_t n = s.size();
    std::vector<double> total(n, 0.0), acc(n), p(n), h(n);
    for (std::size_t k = 0; k + 1 < s.points(); ++k) {
        integrate_rhs_on_interval(system, s, k, acc, p, h);
        for (std::size_t i = 0; i < n; ++i) total[i] += acc[i];
    }
    return total;
}

void refresh_metadata(SolutionProfile& s, const ProblemSpec& spec, const CompiledSystem& system) {
    const std::size_t n = s.size();
    s.lambdas = spec.lambdas();
    s.mu = spec.mu;
    s.residual_sup = residual_sup(system, s);
    s.neumann_left.assign(n, 0.0);
    s.neumann_right.assign(n, 0.0);
    s.initial_value.assign(n, 0.0);
    const std::size_t last = s.points() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        s.neumann_left[i] = std::abs(s.derivative(0, i));
        s.neumann_right[i] = std::abs(s.derivative(last, i));
        s.initial_value[i] = s.value(0, i);
    }
}

SolutionProfile make_profile(const ProblemSpec& spec, const CompiledSystem& system, std::vector<double> mesh,
                             std::vector<double> values, std::vector<double> derivatives) {
    const std::size_t n = system.size();
    if (mesh.empty() || values.size() != mesh.size() * n) {
        throw InvalidInput("make_profile: node data does not match mesh size");
    }
    std::vector<double> curv(values.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        system.rhs(mesh[k], std::span<const double>(values).subspan(k * n, n),
                   std::span<double>(curv).subspan(k * n, n));
    }
    for (double& c : curv) c = -c;
    SolutionProfile s(n, std::move(mesh), std::move(values), std::move(derivatives), std::move(curv));
    refresh_metadata(s, spec, system);
    return s;
}

SolutionProfile make_profile(const ProblemSpec& spec, const CompiledSystem& system, const Trajectory& traj) {
    const std::size_t n = system.size();
    if (traj.dimension() != 2 * n) throw InvalidInput("make_profile: trajectory dimension mismatch");
    const auto xs = traj.positions();
    std::vector<double> mesh(xs.begin(), xs.end());
    std::vector<double> values(mesh.size() * n), derivs(mesh.size() * n);
    for (std::size_t k = 0; k < mesh.size(); ++k) {
        const auto y = traj.state(k);
        std::copy_n(y.begin(), n, values.begin() + static_cast<std::ptrdiff_t>(k * n));
        std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(n), n, derivs.begin() + static_cast<std::ptrdiff_t>(k * n));
    }
    return make_profile(spec, system, std::move(mesh), std::move(values), std::move(derivs));
}

}  // namespace clines
