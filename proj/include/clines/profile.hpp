#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace clines {

/// Closed interval [lower, upper] with lower < upper.
struct Interval {
    double lower = 0.0;
    double upper = 1.0;

    double length() const noexcept { return upper - lower; }
    bool contains(double x) const noexcept { return x >= lower && x <= upper; }
    bool operator==(const Interval&) const = default;
};

/// Continuous piecewise-linear function on [nodes.front(), nodes.back()].
///
/// Houses every spatial coefficient of the model: the x-dependent factors of
/// the weights, fitness profiles, dispersal and forcing terms. Evaluation
/// outside the node range throws DomainError (a relative slack of 1e-12 of
/// the interval length absorbs round-off at the end points).
class SpatialProfile {
public:
    SpatialProfile() = default;
    SpatialProfile(std::vector<double> nodes, std::vector<double> values);

    static SpatialProfile constant(Interval domain, double value);

    /// Plateau `inside` on [a, b] and `outside` elsewhere, joined by linear
    /// ramps of width `ramp` centred on a and b.
    static SpatialProfile step(Interval domain, double a, double b, double inside,
                               double outside, double ramp);

    static SpatialProfile sample(std::vector<double> nodes,
                                 const std::function<double(double)>& fn);

    bool empty() const noexcept { return nodes_.empty(); }
    double lower() const { return nodes_.front(); }
    double upper() const { return nodes_.back(); }
    Interval domain() const { return {lower(), upper()}; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> values() const noexcept { return values_; }

    double operator()(double x) const;

    /// Index k of the segment [nodes[k], nodes[k+1]] containing x (x already validated).
    std::size_t segment(double x) const;

    double integral() const;
    double integral(double a, double b) const;
    double min_value() const;
    double max_value() const;
    bool is_zero() const;

    SpatialProfile resampled(std::span<const double> nodes) const;
    SpatialProfile scaled(double factor) const;

    bool operator==(const SpatialProfile&) const = default;

private:
    double checked_position(double x) const;

    std::vector<double> nodes_;
    std::vector<double> values_;
};

/// Sorted union of the node sets, with near-duplicates (relative 1e-14) merged.
std::vector<double> merge_nodes(std::span<const SpatialProfile* const> profiles);
std::vector<double> merge_nodes(std::span<const double> a, std::span<const double> b);

/// Pointwise combination of profiles evaluated on the union mesh.
SpatialProfile combine(std::span<const SpatialProfile* const> profiles,
                       const std::function<double(std::span<const double>)>& op);

/// Exact integral over [a, b] of max(f, 0) for a piecewise-linear f.
double integral_of_positive_part(const SpatialProfile& f, double a, double b);

/// Exact integral of max(|f|, |g|) over the common domain of two
/// piecewise-linear functions sharing the same interval.
double integral_of_abs_max(const SpatialProfile& f, const SpatialProfile& g);

}  // namespace clines
