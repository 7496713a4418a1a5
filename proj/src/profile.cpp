#include "clines/profile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clines/error.hpp"

namespace clines {

namespace {

constexpr double kEndpointSlack = 1e-12;

double lerp_segment(double x0, double x1, double v0, double v1, double x) {
    const double t = (x - x0) / (x1 - x0);
    return v0 + t * (v1 - v0);
}

// Integral of max(l(t), 0) for l linear on [0, width] with end values v0, v1.
double positive_trapezoid(double v0, double v1, double width) {
    if (v0 >= 0.0 && v1 >= 0.0) return 0.5 * (v0 + v1) * width;
    if (v0 <= 0.0 && v1 <= 0.0) return 0.0;
    const double t = v0 / (v0 - v1);
    return v0 > 0.0 ? 0.5 * v0 * t * width : 0.5 * v1 * (1.0 - t) * width;
}

}  // namespace

SpatialProfile::SpatialProfile(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() < 2) throw InvalidInput("spatial profile needs at least two nodes");
    if (nodes_.size() != values_.size()) {
        throw InvalidInput("spatial profile: nodes and values differ in length");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (!std::isfinite(nodes_[k]) || !std::isfinite(values_[k])) {
            throw InvalidInput("spatial profile: non-finite entry at index " + std::to_string(k));
        }
        if (k > 0 && !(nodes_[k] > nodes_[k - 1])) {
            throw InvalidInput("spatial profile: nodes must be strictly increasing (index " +
                               std::to_string(k) + ")");
        }
    }
}

SpatialProfile SpatialProfile::constant(Interval domain, double value) {
    return SpatialProfile({domain.lower, domain.upper}, {value, value});
}

SpatialProfile SpatialProfile::step(Interval domain, double a, double b, double inside,
                                    double outside, double ramp) {
    const double h = 0.5 * ramp;
    if (!(ramp > 0.0) || !(domain.lower < a - h) || !(a + h < b - h) || !(b + h < domain.upper)) {
        throw InvalidInput("step profile: ramps must fit strictly inside the domain");
    }
    return SpatialProfile({domain.lower, a - h, a + h, b - h, b + h, domain.upper},
                          {outside, outside, inside, inside, outside, outside});
}

SpatialProfile SpatialProfile::sample(std::vector<double> nodes,
                                      const std::function<double(double)>& fn) {
    std::vector<double> values(nodes.size());
    std::transform(nodes.begin(), nodes.end(), values.begin(), fn);
    return SpatialProfile(std::move(nodes), std::move(values));
}

double SpatialProfile::checked_position(double x) const {
    if (empty()) throw InvalidInput("evaluation of an empty spatial profile");
    const double slack = kEndpointSlack * (upper() - lower());
    if (!(x >= lower() - slack && x <= upper() + slack)) {
        std::ostringstream msg;
        msg << "position " << x << " outside [" << lower() << ", " << upper() << "]";
        throw DomainError(msg.str());
    }
    return std::clamp(x, lower(), upper());
}

std::size_t SpatialProfile::segment(double x) const {
    auto it = std::upper_bound(nodes_.begin() + 1, nodes_.end() - 1, x);
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

double SpatialProfile::operator()(double x) const {
    x = checked_position(x);
    const std::size_t k = segment(x);
    return lerp_segment(nodes_[k], nodes_[k + 1], values_[k], values_[k + 1], x);
}

double SpatialProfile::integral() const {
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        sum += 0.5 * (values_[k] + values_[k + 1]) * (nodes_[k + 1] - nodes_[k]);
    }
    return sum;
}

double SpatialProfile::integral(double a, double b) const {
    if (b < a) return -integral(b, a);
    a = checked_position(a);
    b = checked_position(b);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
        const double lo = std::max(a, nodes_[k]);
        const double hi = std::min(b, nodes_[k + 1]);
        if (hi <= lo) continue;
        const double vlo = lerp_segment(nodes_[k], nodes_[k + 1], values_[k], values_[k + 1], lo);
        const double vhi = lerp_segment(nodes_[k], nodes_[k + 1], values_[k], values_[k + 1], hi);
        sum += 0.5 * (vlo + vhi) * (hi - lo);
    }
    return sum;
}

double SpatialProfile::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double SpatialProfile::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

bool SpatialProfile::is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

SpatialProfile SpatialProfile::resampled(std::span<const double> nodes) const {
    std::vector<double> n(nodes.begin(), nodes.end());
    std::vector<double> v(n.size());
    for (std::size_t k = 0; k < n.size(); ++k) v[k] = (*this)(n[k]);
    return SpatialProfile(std::move(n), std::move(v));
}

SpatialProfile SpatialProfile::scaled(double factor) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return SpatialProfile(nodes_, std::move(v));
}

std::vector<double> merge_nodes(std::span<const double> a, std::span<const double> b) {
    std::vector<double> all;
    all.reserve(a.size() + b.size());
    all.insert(all.end(), a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    std::vector<double> merged;
    for (double x : all) {
        if (merged.empty()) {
            merged.push_back(x);
            continue;
        }
        const double scale = std::max({1.0, std::abs(x), std::abs(merged.back())});
        if (x - merged.back() > 1e-14 * scale) merged.push_back(x);
    }
    return merged;
}

std::vector<double> merge_nodes(std::span<const SpatialProfile* const> profiles) {
    std::vector<double> merged;
    for (const SpatialProfile* p : profiles) merged = merge_nodes(merged, p->nodes());
    return merged;
}

SpatialProfile combine(std::span<const SpatialProfile* const> profiles,
                       const std::function<double(std::span<const double>)>& op) {
    if (profiles.empty()) throw InvalidInput("combine: no profiles");
    const Interval dom = profiles.front()->domain();
    for (const SpatialProfile* p : profiles) {
        if (!(p->domain() == dom)) throw InvalidInput("combine: profiles must share the interval");
    }
    std::vector<double> nodes = merge_nodes(profiles);
    nodes.front() = dom.lower;
    nodes.back() = dom.upper;
    std::vector<double> values(nodes.size());
    std::vector<double> args(profiles.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        for (std::size_t j = 0; j < profiles.size(); ++j) args[j] = (*profiles[j])(nodes[k]);
        values[k] = op(args);
    }
    return SpatialProfile(std::move(nodes), std::move(values));
}

double integral_of_positive_part(const SpatialProfile& f, double a, double b) {
    if (b <= a) return 0.0;
    const auto nodes = f.nodes();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double lo = std::max(a, nodes[k]);
        const double hi = std::min(b, nodes[k + 1]);
        if (hi <= lo) continue;
        sum += positive_trapezoid(f(lo), f(hi), hi - lo);
    }
    return sum;
}

double integral_of_abs_max(const SpatialProfile& f, const SpatialProfile& g) {
    if (!(f.domain() == g.domain())) {
        throw InvalidInput("integral_of_abs_max: profiles must share the interval");
    }
    const std::vector<double> nodes = merge_nodes(f.nodes(), g.nodes());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double x0 = nodes[k], x1 = nodes[k + 1];
        const double f0 = f(x0), f1 = f(x1), g0 = g(x0), g1 = g(x1);
        // |f| and |g| are linear between zeros of f, g, f - g and f + g.
        std::vector<double> cuts{0.0, 1.0};
        auto add_root = [&](double u0, double u1) {
            if ((u0 < 0.0 && u1 > 0.0) || (u0 > 0.0 && u1 < 0.0)) cuts.push_back(u0 / (u0 - u1));
        };
        add_root(f0, f1);
        add_root(g0, g1);
        add_root(f0 - g0, f1 - g1);
        add_root(f0 + g0, f1 + g1);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double ta = cuts[c], tb = cuts[c + 1];
            auto m = [&](double t) {
                return std::max(std::abs(f0 + t * (f1 - f0)), std::abs(g0 + t * (g1 - g0)));
            };
            sum += 0.5 * (m(ta) + m(tb)) * (tb - ta) * (x1 - x0);
        }
    }
    return sum;
}

}  // namespace clines
