#include "clines/genetics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace clines {

namespace {

void require_same_domain(std::span<const SpatialProfile* const> profiles, const char* what) {
    for (const SpatialProfile* p : profiles) {
        if (p->empty()) throw InvalidInput(std::string(what) + ": empty fitness profile");
        if (!(p->domain() == profiles.front()->domain())) {
            throw InvalidInput(std::string(what) + ": all profiles must share the interval");
        }
    }
}

void require_positive_kappa(const SpatialProfile& kappa, double kappa_min) {
    const double lo = kappa.min_value();
    if (!(lo > 0.0)) throw InvalidInput("kappa: must be positive (min " + std::to_string(lo) + ")");
    if (kappa_min > 0.0 && lo < kappa_min) {
        throw InvalidInput("kappa: falls below the declared lower bound " + std::to_string(kappa_min));
    }
}

SpatialProfile difference(const SpatialProfile& a, const SpatialProfile& b) {
    const SpatialProfile* ps[] = {&a, &b};
    return combine(ps, [](std::span<const double> v) { return v[0] - v[1]; });
}

// Expansion of prod_{m in S} t_m * prod_{m in rest} (1 - t_m), t_m = xi_m^2,
// as monomials over the `arity` coupled variables.
std::vector<Monomial> expand_coupling(std::size_t arity, unsigned in_set, unsigned rest) {
    std::vector<Monomial> out;
    for (unsigned sub = rest;; sub = (sub - 1) & rest) {
        Monomial m;
        m.coefficient = (std::popcount(sub) % 2 == 0) ? 1.0 : -1.0;
        m.exponents.assign(arity, 0);
        const unsigned squared = in_set | sub;
        for (std::size_t j = 0; j < arity; ++j) {
            if (squared & (1u << j)) m.exponents[j] = 2;
        }
        out.push_back(std::move(m));
        if (sub == 0) break;
    }
    std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) { return a.exponents < b.exponents; });
    return out;
}

}  // namespace

void FitnessSet::validate() const {
    const SpatialProfile* ps[] = {&r_ab, &r_Ab, &r_aB, &r_AB, &kappa};
    require_same_domain(ps, "fitness");
    require_positive_kappa(kappa, kappa_min);
}

OmegaDifferences omega_differences(const FitnessSet& fit) {
    return {difference(fit.r_ab, fit.r_Ab), difference(fit.r_aB, fit.r_AB), difference(fit.r_ab, fit.r_aB),
            difference(fit.r_Ab, fit.r_AB)};
}

std::vector<SpatialProfile> phenotypes_by_mask(const FitnessSet& fit) {
    return {fit.r_AB, fit.r_aB, fit.r_Ab, fit.r_ab};
}

std::optional<Interval> detect_positivity_interval(const SpatialProfile& alpha, double relative_margin) {
    const auto x = alpha.nodes();
    const auto a = alpha.values();
    const double scale = std::max(std::abs(alpha.min_value()), std::abs(alpha.max_value()));
    if (!(scale > 0.0)) return std::nullopt;
    const double threshold = relative_margin * scale;

    auto left_end = [&](std::size_t k) {
        if (k == 0) return x[0];
        if (a[k - 1] >= 0.0) return x[k - 1];
        return x[k - 1] + (0.0 - a[k - 1]) / (a[k] - a[k - 1]) * (x[k] - x[k - 1]);
    };
    auto right_end = [&](std::size_t k) {
        if (k + 1 == x.size()) return x[k];
        if (a[k + 1] >= 0.0) return x[k + 1];
        return x[k] + (a[k] - 0.0) / (a[k] - a[k + 1]) * (x[k + 1] - x[k]);
    };

    std::optional<Interval> best;
    std::size_t k = 0;
    while (k < x.size()) {
        if (!(a[k] > threshold)) {
            ++k;
            continue;
        }
        std::size_t j = k;
        while (j + 1 < x.size() && a[j + 1] > threshold) ++j;
        const Interval run{left_end(k), right_end(j)};
        if (run.upper > run.lower && (!best || run.length() > best->length())) best = run;
        k = j + 1;
    }
    return best;
}

ProblemSpec build_n_locus(std::span<const SpatialProfile> phenotypes, const SpatialProfile& kappa,
                          const GeneticsOptions& options, double kappa_min) {
    const std::size_t count = phenotypes.size();
    if (count < 2 || !std::has_single_bit(count)) {
        throw InvalidInput("phenotypes: need 2^N fitness profiles, got " + std::to_string(count));
    }
    const auto n = static_cast<std::size_t>(std::countr_zero(count));
    if (n > 16) throw InvalidInput("phenotypes: too many loci");

    std::vector<const SpatialProfile*> all;
    for (const SpatialProfile& p : phenotypes) all.push_back(&p);
    all.push_back(&kappa);
    require_same_domain(all, "phenotypes");
    require_positive_kappa(kappa, kappa_min);

    if (options.lambdas.size() != 1 && options.lambdas.size() != n) {
        throw InvalidInput("lambdas: expected 1 or " + std::to_string(n) + " values");
    }
    if (!options.positivity.empty() && options.positivity.size() != n) {
        throw InvalidInput("positivity: expected " + std::to_string(n) + " intervals");
    }

    const std::vector<double> mesh = merge_nodes(all);
    std::vector<double> inv_kappa(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) inv_kappa[k] = 1.0 / kappa(mesh[k]);

    ProblemSpec spec;
    spec.domain = kappa.domain();
    const std::size_t arity = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        // Position j of a coupled variable is its locus index with i removed.
        const unsigned others_all = (arity == 0) ? 0u : ((1u << arity) - 1u);
        auto to_locus_mask = [&](unsigned local) {
            unsigned mask = 0;
            for (std::size_t j = 0; j < arity; ++j) {
                if (local & (1u << j)) mask |= 1u << (j < i ? j : j + 1);
            }
            return mask;
        };

        std::vector<WeightTerm> terms;
        for (unsigned s = others_all + 1; s-- > 0;) {
            const unsigned mask = to_locus_mask(s);
            const SpatialProfile& with_i = phenotypes[mask | (1u << i)];
            const SpatialProfile& without_i = phenotypes[mask];
            std::vector<double> values(mesh.size());
            for (std::size_t k = 0; k < mesh.size(); ++k) {
                values[k] = (with_i(mesh[k]) - without_i(mesh[k])) * inv_kappa[k];
            }
            terms.push_back({CouplingPolynomial(arity, expand_coupling(arity, s, others_all & ~s)),
                             SpatialProfile(mesh, std::move(values))});
        }

        Equation eq{WeightFunction(std::move(terms)), Nonlinearity::dominance(),
                    options.lambdas.size() == 1 ? options.lambdas[0] : options.lambdas[i], spec.domain, {}};

        spec.equations.push_back(std::move(eq));
    }

    std::vector<std::size_t> unmet;
    for (std::size_t i = 0; i < n; ++i) {
        Equation& eq = spec.equations[i];
        if (!options.positivity.empty() && options.positivity[i]) {
            eq.positivity = *options.positivity[i];
        } else if (!eq.weight.is_identically_zero()) {
            const auto found = detect_positivity_interval(weight_envelopes(eq.weight, options.resolution).alpha);
            if (found) {
                eq.positivity = *found;
            } else {
                unmet.push_back(i);
            }
        }
    }
    if (!unmet.empty()) {
        std::ostringstream msg;
        msg << "lower weight envelope is nowhere positive for locus";
        for (std::size_t i : unmet) msg << ' ' << i;
        throw ModelConditionError(msg.str(), check_admissibility(spec, options.resolution));
    }
    spec.validate();
    return spec;
}

ProblemSpec build_two_locus(const FitnessSet& fit, const GeneticsOptions& options) {
    fit.validate();
    const std::vector<SpatialProfile> ph = phenotypes_by_mask(fit);
    return build_n_locus(ph, fit.kappa, options, fit.kappa_min);
}

double selection_term_a(const FitnessSet& fit, double x, double p, double q) {
    const double epistasis = fit.r_ab(x) - fit.r_Ab(x) - fit.r_aB(x) + fit.r_AB(x);
    return 2.0 * (q * q * epistasis + fit.r_aB(x) - fit.r_AB(x)) * p * p * (1.0 - p);
}

double selection_term_b(const FitnessSet& fit, double x, double p, double q) {
    const double epistasis = fit.r_ab(x) - fit.r_Ab(x) - fit.r_aB(x) + fit.r_AB(x);
    return 2.0 * (p * p * epistasis + fit.r_Ab(x) - fit.r_AB(x)) * q * q * (1.0 - q);
}

std::array<std::array<double, 3>, 3> hardy_weinberg(double p, double q) {
    const std::array<double, 3> a{p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)};
    const std::array<double, 3> b{q * q, 2.0 * q * (1.0 - q), (1.0 - q) * (1.0 - q)};
    std::array<std::array<double, 3>, 3> table{};
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) table[r][c] = b[r] * a[c];
    }
    return table;
}

double one_locus_selection(const SpatialProfile& r_aa, const SpatialProfile& r_Aa, const SpatialProfile& r_AA,
                           double x, double p) {
    const double aa = r_aa(x);
    const double Aa = r_Aa(x);
    const double AA = r_AA(x);
    const double mean = p * p * aa + 2.0 * p * (1.0 - p) * Aa + (1.0 - p) * (1.0 - p) * AA;
    return 2.0 * p * p * (aa - mean) + 2.0 * p * (1.0 - p) * (Aa - mean);
}

double dominance_parameterized_f(double h, double p) { return p * (1.0 - p) * (1.0 + h - 2.0 * h * p); }

SelectionIdentityReport check_selection_identities(const FitnessSet& fit, const ProblemSpec& spec,
                                                   std::size_t samples, std::uint64_t seed) {
    if (spec.size() != 2) throw InvalidInput("check_selection_identities: expected a two-locus system");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> pos(spec.domain.lower, spec.domain.upper);
    const Equation& ea = spec.equations[0];
    const Equation& eb = spec.equations[1];

    SelectionIdentityReport report;
    report.samples = samples;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = pos(rng);
        const double p = unit(rng);
        const double q = unit(rng);
        const double kappa = fit.kappa(x);
        const double wa = ea.weight(x, std::span<const double>(&q, 1));
        const double wb = eb.weight(x, std::span<const double>(&p, 1));
        const double fa = kappa * wa * ea.nonlinearity(p);
        const double fb = kappa * wb * eb.nonlinearity(q);
        report.max_error_a = std::max(report.max_error_a, std::abs(fa - selection_term_a(fit, x, p, q)));
        report.max_error_b = std::max(report.max_error_b, std::abs(fb - selection_term_b(fit, x, p, q)));
    }
    return report;
}

}  // namespace clines
