#include "clines/ivp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clines/error.hpp"

namespace clines {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

double scaled_norm(std::span<const double> v, std::span<const double> y0, std::span<const double> y1,
                   const IntegrationOptions& opt) {
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = v[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(v.size()));
}

}  // namespace

void ExtendedSystem::evaluate(double x, std::span<const double> y, std::span<double> dydx) const {
    const std::size_t n = system_.size();
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(n), y.end(), dydx.begin());
    system_.rhs(x, y.first(n), dydx.subspan(n));
    for (std::size_t i = n; i < 2 * n; ++i) dydx[i] = -dydx[i];
}

IvpState Trajectory::front() const {
    return {xs_.front(), std::vector<double>(ys_.begin(), ys_.begin() + static_cast<std::ptrdiff_t>(dim_))};
}

IvpState Trajectory::back() const {
    return {xs_.back(), std::vector<double>(ys_.end() - static_cast<std::ptrdiff_t>(dim_), ys_.end())};
}

void Trajectory::evaluate(double x, std::span<double> out) const {
    const double span = xs_.back() - xs_.front();
    const double slack = 1e-12 * std::max(1.0, std::abs(span));
    if (x < xs_.front() - slack || x > xs_.back() + slack) {
        std::ostringstream msg;
        msg << "trajectory evaluation at " << x << " outside [" << xs_.front() << ", " << xs_.back() << "]";
        throw DomainError(msg.str());
    }
    if (xs_.size() == 1) {
        std::copy_n(ys_.begin(), dim_, out.begin());
        return;
    }
    if (!has_dense_output()) throw InvalidInput("trajectory was integrated without dense output");
    auto it = std::upper_bound(xs_.begin() + 1, xs_.end() - 1, x);
    const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double h = xs_[k + 1] - xs_[k];
    const double theta = std::clamp((x - xs_[k]) / h, 0.0, 1.0);
    const double theta1 = 1.0 - theta;
    const double* r = dense_.data() + k * 5 * dim_;
    for (std::size_t i = 0; i < dim_; ++i) {
        out[i] = r[i] + theta * (r[dim_ + i] +
                                 theta1 * (r[2 * dim_ + i] +
                                           theta * (r[3 * dim_ + i] + theta1 * r[4 * dim_ + i])));
    }
}

std::vector<double> Trajectory::evaluate(double x) const {
    std::vector<double> out(dim_);
    evaluate(x, out);
    return out;
}

Trajectory integrate(const OdeSystem& system, const IvpState& start, double x_end,
                     const IntegrationOptions& opt) {
    const std::size_t n = system.dimension();
    if (start.y.size() != n) throw InvalidInput("integrate: start state has wrong dimension");
    if (!(start.x <= x_end)) throw InvalidInput("integrate: start position must not exceed the end");
    if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0)) throw InvalidInput("integrate: tolerances must be positive");
    for (double v : start.y) {
        if (!std::isfinite(v)) throw IntegrationError("integrate: non-finite initial state", start.x);
    }

    Trajectory traj;
    traj.dim_ = n;
    traj.xs_.push_back(start.x);
    traj.ys_.insert(traj.ys_.end(), start.y.begin(), start.y.end());
    if (x_end == start.x) return traj;

    const std::span<const double> breaks = system.breakpoints();
    std::vector<double> y(start.y), ynew(n), ytmp(n), err(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    double x = start.x;
    const double span = x_end - start.x;

    system.evaluate(x, y, k1);
    traj.evaluations_ = 1;

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        // Initial step from the scaled sizes of y and y'.
        const double d0 = scaled_norm(y, y, y, opt);
        const double d1n = scaled_norm(k1, y, y, opt);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1n;
        h0 = std::min(h0, span);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h0 * k1[i];
        system.evaluate(x + h0, ytmp, k2);
        ++traj.evaluations_;
        for (std::size_t i = 0; i < n; ++i) err[i] = (k2[i] - k1[i]) / h0;
        const double d2 = scaled_norm(err, y, y, opt);
        const double dmax = std::max(d1n, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6 * span, 1e-3 * h0) : std::pow(0.01 / dmax, 0.2);
        h = std::min({100.0 * h0, h1, span});
    }

    bool last_rejected = false;
    std::size_t steps = 0;
    while (x < x_end) {
        if (++steps > opt.max_steps) {
            throw IntegrationError("integrate: maximum number of steps exceeded", x);
        }
        // Next point where the right-hand side may lose smoothness.
        double barrier = x_end;
        auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
        while (it != breaks.end() && *it <= x + 1e-14 * std::max(1.0, std::abs(x))) ++it;
        if (it != breaks.end() && *it < x_end) barrier = *it;

        if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
        bool hits_barrier = false;
        if (x + h >= barrier - 1e-14 * std::max(1.0, std::abs(barrier))) {
            h = barrier - x;
            hits_barrier = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(x))) {
            std::ostringstream msg;
            msg << "integrate: step size underflow at x = " << x;
            throw IntegrationError(msg.str(), x);
        }

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
        system.evaluate(x + c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        system.evaluate(x + c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        system.evaluate(x + c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        }
        system.evaluate(x + c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i) {
            ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        }
        const double xnew = hits_barrier ? barrier : x + h;
        system.evaluate(xnew, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i) {
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        }
        system.evaluate(xnew, ynew, k7);
        traj.evaluations_ += 6;

        for (std::size_t i = 0; i < n; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }
        const double enorm = scaled_norm(err, y, ynew, opt);

        if (!std::isfinite(enorm) || enorm > 1.0) {
            const double factor =
                std::isfinite(enorm) ? std::max(kMinFactor, kSafety * std::pow(enorm, -0.2)) : kMinFactor;
            h *= factor;
            last_rejected = true;
            ++traj.rejected_;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(ynew[i])) throw IntegrationError("integrate: non-finite state", xnew);
        }

        if (opt.dense) {
            const std::size_t base = traj.dense_.size();
            traj.dense_.resize(base + 5 * n);
            double* r = traj.dense_.data() + base;
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                r[i] = y[i];
                r[n + i] = ydiff;
                r[2 * n + i] = bspl;
                r[3 * n + i] = ydiff - h * k7[i] - bspl;
                r[4 * n + i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            traj.xs_.push_back(xnew);
            traj.ys_.insert(traj.ys_.end(), ynew.begin(), ynew.end());
        }

        double factor = enorm == 0.0 ? kMaxFactor : kSafety * std::pow(enorm, -0.2);
        factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
        last_rejected = false;

        x = xnew;
        y.swap(ynew);
        k1.swap(k7);
        h *= factor;
    }

    if (!opt.dense) {
        traj.xs_.push_back(x);
        traj.ys_.insert(traj.ys_.end(), y.begin(), y.end());
    }
    return traj;
}

Trajectory integrate(const ProblemSpec& spec, const IvpState& start, double x_end, double rel_tol,
                     double abs_tol) {
    if (!spec.domain.contains(start.x) || !spec.domain.contains(x_end)) {
        throw DomainError("integrate: start and end must lie in the problem interval");
    }
    const CompiledSystem compiled(spec);
    const ExtendedSystem system(compiled);
    IntegrationOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    return integrate(system, start, x_end, opt);
}

}  // namespace clines
