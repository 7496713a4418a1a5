#include "clines/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "clines/error.hpp"

namespace clines {

namespace {

std::vector<SpatialProfile> default_forcing(const ProblemSpec& spec) {
    std::vector<SpatialProfile> v(spec.size());
    v[0] = SpatialProfile::constant(spec.domain, 1.0);
    return v;
}

double max_jump(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

struct Step {
    std::optional<BranchPoint> point;
    std::string message;
};

Step attempt(const ProblemSpec& base, ContinuationParameter parameter, double value,
             const std::vector<SpatialProfile>& forcing, const BranchPoint& from, const ContinuationOptions& options) {
    const ProblemSpec spec = family_member(base, parameter, value, forcing);
    NewtonOutcome o = newton_shoot(spec, from.solution.initial_value, options.newton);
    std::ostringstream msg;
    msg << to_string(parameter) << " = " << value << ": ";
    if (!o.ok()) {
        msg << to_string(o.status);
        if (!o.message.empty()) msg << " (" << o.message << ")";
        return {std::nullopt, msg.str()};
    }
    const double jump = max_jump(o.c, from.solution.initial_value);
    if (jump > options.max_jump) {
        msg << "initial value jumped by " << jump;
        return {std::nullopt, msg.str()};
    }
    return {BranchPoint{value, std::move(*o.solution), o.jacobian_det}, {}};
}

}  // namespace

const char* to_string(ContinuationParameter parameter) {
    switch (parameter) {
        case ContinuationParameter::lambda_scale: return "lambda_scale";
        case ContinuationParameter::theta: return "theta";
        case ContinuationParameter::mu: return "mu";
    }
    return "unknown";
}

ContinuationParameter parse_parameter(const std::string& name) {
    if (name == "lambda_scale") return ContinuationParameter::lambda_scale;
    if (name == "theta") return ContinuationParameter::theta;
    if (name == "mu") return ContinuationParameter::mu;
    throw InvalidInput("parameter_name: expected lambda_scale, theta or mu, got '" + name + "'");
}

const char* to_string(BranchTermination termination) {
    switch (termination) {
        case BranchTermination::converged_at_end: return "converged-at-end";
        case BranchTermination::fold_detected: return "fold-detected";
        case BranchTermination::newton_failure: return "newton-failure";
    }
    return "unknown";
}

ProblemSpec family_member(const ProblemSpec& base, ContinuationParameter parameter, double value,
                          const std::vector<SpatialProfile>& forcing) {
    switch (parameter) {
        case ContinuationParameter::lambda_scale:
            if (!(value > 0.0)) throw InvalidInput("lambda_scale: must be positive");
            return base.with_lambda_scale(value);
        case ContinuationParameter::theta:
            if (!(value > 0.0 && value <= 1.0)) throw InvalidInput("theta: must lie in (0, 1]");
            return base.with_lambda_scale(value);
        case ContinuationParameter::mu:
            return base.with_forcing(value, forcing.empty() ? default_forcing(base) : forcing);
    }
    throw InvalidInput("unknown continuation parameter");
}

Branch continue_branch(const ProblemSpec& base, const SolutionProfile& seed, ContinuationParameter parameter,
                       std::span<const double> values, const ContinuationOptions& options) {
    if (values.empty()) throw InvalidInput("values: at least one parameter value required");
    if (seed.size() != base.size()) throw InvalidInput("seed: component count does not match the problem");
    const bool increasing = values.size() < 2 || values[1] > values[0];
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (increasing ? !(values[k] > values[k - 1]) : !(values[k] < values[k - 1])) {
            throw InvalidInput("values: must be strictly monotone");
        }
    }

    const ProblemSpec first = family_member(base, parameter, values[0], options.forcing);
    NewtonOutcome start = newton_shoot(first, seed.initial_value, options.newton);
    if (!start.ok() || max_jump(start.c, seed.initial_value) > 1e-6) {
        std::ostringstream msg;
        msg << "seed: does not solve the problem at " << to_string(parameter) << " = " << values[0] << " ("
            << to_string(start.status) << ")";
        throw InvalidInput(msg.str());
    }

    Branch branch;
    branch.parameter = parameter;
    branch.points.push_back({values[0], std::move(*start.solution), start.jacobian_det});

    for (std::size_t k = 1; k < values.size(); ++k) {
        Step step = attempt(base, parameter, values[k], options.forcing, branch.points.back(), options);
        if (!step.point) {
            const double mid = 0.5 * (branch.points.back().parameter + values[k]);
            Step half = attempt(base, parameter, mid, options.forcing, branch.points.back(), options);
            if (half.point) {
                branch.points.push_back(std::move(*half.point));
                step = attempt(base, parameter, values[k], options.forcing, branch.points.back(), options);
            } else {
                step = std::move(half);
            }
        }
        if (!step.point) {
            branch.message = step.message;
            branch.termination = BranchTermination::newton_failure;
            const std::size_t m = branch.points.size();
            if (m >= 2) {
                const double d1 = branch.points[m - 2].jacobian_det;
                const double d2 = branch.points[m - 1].jacobian_det;
                if (d1 * d2 < 0.0 || std::abs(d2) < 0.25 * std::abs(d1)) {
                    branch.termination = BranchTermination::fold_detected;
                }
            }
            return branch;
        }
        branch.points.push_back(std::move(*step.point));
    }
    branch.termination = BranchTermination::converged_at_end;
    return branch;
}

LambdaStarEstimate lambda_star_at(const ProblemSpec& spec, std::size_t k, double rho, double epsilon,
                                  int resolution) {
    spec.validate();
    if (k >= spec.size()) throw InvalidInput("k: equation index out of range");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidInput("rho: must lie in (0, 1)");
    const Equation& e = spec.equations[k];
    const Interval I = e.positivity;
    if (!(epsilon > 0.0 && epsilon < 0.5 * I.length())) {
        throw InvalidInput("epsilon: must lie in (0, |I_k| / 2)");
    }
    const SpatialProfile alpha = weight_envelopes(e.weight, resolution).alpha;
    LambdaStarEstimate est;
    est.k = k;
    est.rho = rho;
    est.epsilon = epsilon;
    est.eta = e.nonlinearity.min_on(epsilon * rho / I.length(), rho);
    est.alpha_integral = integral_of_positive_part(alpha, I.lower + epsilon, I.upper - epsilon);
    if (!(est.eta > 0.0) || !(est.alpha_integral > 0.0)) {
        std::ostringstream msg;
        msg << "lambda_star: margin " << epsilon << " is not admissible (eta " << est.eta << ", alpha integral "
            << est.alpha_integral << ")";
        throw DomainError(msg.str());
    }
    est.lambda_star = 2.0 * rho / (epsilon * est.eta * est.alpha_integral);
    return est;
}

LambdaStarEstimate lambda_star_estimate(const ProblemSpec& spec, std::size_t k, double rho, int epsilon_grid,
                                        int resolution) {
    spec.validate();
    if (k >= spec.size()) throw InvalidInput("k: equation index out of range");
    if (epsilon_grid < 1) throw InvalidInput("epsilon_grid: must be positive");
    const double half = 0.5 * spec.equations[k].positivity.length();
    std::optional<LambdaStarEstimate> best;
    for (int j = 0; j < epsilon_grid; ++j) {
        const double eps = half * std::pow(10.0, -3.0 * (1.0 - static_cast<double>(j) / epsilon_grid));
        try {
            LambdaStarEstimate est = lambda_star_at(spec, k, rho, eps, resolution);
            if (!best || est.lambda_star < best->lambda_star) best = est;
        } catch (const DomainError&) {
        }
    }
    if (!best) {
        throw DomainError("lambda_star: no admissible margin; alpha envelope is not positive on I_" +
                          std::to_string(k + 1));
    }
    return *best;
}

double mu_bound(const ProblemSpec& spec, int resolution) {
    spec.validate();
    double bound = 0.0;
    for (const Equation& e : spec.equations) {
        const Envelopes env = weight_envelopes(e.weight, resolution);
        const double gamma_l1 = e.lambda * integral_of_abs_max(env.alpha, env.beta);
        bound = std::max(bound, gamma_l1 * e.nonlinearity.max_value() / spec.domain.length());
    }
    return bound;
}

}  // namespace clines
