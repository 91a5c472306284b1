#include "paudit/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace paudit {

double ThresholdOracle::predict(const std::vector<double>& x) const {
    if (x.size() != w.size()) throw UsageError("input arity mismatch");
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
    return z > 0.0 ? 1.0 : 0.0;
}

std::vector<double> ThresholdOracle::gradient(const std::vector<double>&) const {
    throw UsageError("an indicator oracle is not differentiable; use a fixed "
                     "importance order for masking");
}

SumSignScenario gen_sum_sign(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw UsageError("scenario needs at least one sample");
    SumSignScenario sc;
    sc.data.n = n;
    sc.data.t = 2;
    sc.data.k = 1;
    sc.data.task = Task::Classification;
    sc.data.x.resize(n * 2);
    sc.data.s.resize(n);
    sc.data.y.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double x1 = rng.uniform(-0.5, 0.5);
        double x2 = rng.uniform(-0.5, 0.5);
        std::uint8_t s = (x1 + x2 > 0.0) ? 1 : 0;
        sc.data.x[i * 2] = x1;
        sc.data.x[i * 2 + 1] = x2;
        sc.data.s[i] = s;
        sc.data.y[i] = static_cast<double>(s);
    }
    // Fixed analytic importance: the generic oracle leans on X1 first; the
    // personalized one on the group bit (input index 2) first.
    sc.policy_generic.fixed_order = {0, 1};
    sc.policy_personalized.fixed_order = {2, 0, 1};
    return sc;
}

void AdditiveScenario::validate() const {
    if (alphas_x.size() != var_x.size())
        throw UsageError("alphas_x and var_x must have equal length");
    if (alphas_s.size() != var_s.size())
        throw UsageError("alphas_s and var_s must have equal length");
    if (alphas_x.empty()) throw UsageError("at least one ordinary feature is required");
    if (alphas_s.empty()) throw UsageError("at least one group attribute is required");
    for (double v : var_x)
        if (!(v >= 0.0)) throw UsageError("feature variances must be non-negative");
    for (double v : var_s)
        if (!(v >= 0.0)) throw UsageError("group-term variances must be non-negative");
    if (!(var_eps >= 0.0)) throw UsageError("noise variance must be non-negative");
}

AuditDataset gen_additive(const AdditiveScenario& scenario, std::size_t n,
                          std::uint64_t seed) {
    scenario.validate();
    if (n == 0) throw UsageError("scenario needs at least one sample");
    std::size_t t = scenario.alphas_x.size();
    std::size_t k = scenario.alphas_s.size();
    AuditDataset d;
    d.n = n;
    d.t = t;
    d.k = k;
    d.task = Task::Regression;
    d.x.resize(n * t);
    d.s.resize(n * k);
    d.y.resize(n);
    Rng rng(seed);
    double noise_sd = std::sqrt(scenario.var_eps);
    for (std::size_t i = 0; i < n; ++i) {
        double y = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
            double x = rng.normal(0.0, std::sqrt(scenario.var_x[j]));
            d.x[i * t + j] = x;
            y += scenario.alphas_x[j] * x;
        }
        for (std::size_t j = 0; j < k; ++j) {
            std::uint8_t s = rng.bernoulli(0.5) ? 1 : 0;
            d.s[i * k + j] = s;
            y += scenario.alphas_s[j] * (2.0 * s - 1.0) * std::sqrt(scenario.var_s[j]);
        }
        d.y[i] = y + rng.normal(0.0, noise_sd);
    }
    return d;
}

AdditiveAnalytics additive_mse_analytics(const AdditiveScenario& scenario) {
    scenario.validate();
    AdditiveAnalytics a;
    double s_term = 0.0;
    for (std::size_t j = 0; j < scenario.alphas_s.size(); ++j)
        s_term += scenario.alphas_s[j] * scenario.alphas_s[j] * scenario.var_s[j];
    double x_term = 0.0;
    for (std::size_t j = 0; j < scenario.alphas_x.size(); ++j)
        x_term += scenario.alphas_x[j] * scenario.alphas_x[j] * scenario.var_x[j];
    a.mse_generic = s_term + scenario.var_eps;
    a.mse_personalized = scenario.var_eps;
    a.bop_prediction = s_term;
    a.var_y = x_term + s_term + scenario.var_eps;
    return a;
}

// ---------------------------------------------------------------------------
// Worst-case pair.
// ---------------------------------------------------------------------------

void WorstCasePair::validate() const {
    if (m.empty()) throw UsageError("at least one group is required");
    if (!(eps > 0.0)) throw UsageError("epsilon must be positive");
    if (family == BopFamily::Categorical3) {
        if (!(eps < 0.5))
            throw UsageError("categorical benefits admit effect sizes below 1/2 only");
    } else {
        if (scales.size() != m.size())
            throw UsageError("scales must have one entry per group");
        for (double s : scales)
            if (!(s > 0.0)) throw UsageError("scales must be positive");
    }
    for (std::size_t mj : m)
        if (mj < 1) throw UsageError("every group needs at least one sample");
}

namespace {

// One benefit draw with the requested mean shift.
double draw_value(BopFamily family, double shift, double scale, Rng& rng) {
    switch (family) {
        case BopFamily::Categorical3:
            // Support {-1, +1} with masses (1 +- shift)/2: mean exactly `shift`.
            return rng.bernoulli(0.5 * (1.0 + shift)) ? 1.0 : -1.0;
        case BopFamily::Gaussian:
            return rng.normal(shift, scale);
        case BopFamily::Laplace:
            return rng.laplace(shift, scale);
    }
    throw UsageError("unsupported family");
}

GroupSamples draw_with_means(const WorstCasePair& pair, Rng& rng,
                             double designated_shift, double other_shift) {
    GroupSamples out;
    std::size_t d = pair.m.size();
    out.designated = static_cast<std::size_t>(rng.next_u64() % d);
    out.values.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        double shift = j == out.designated ? designated_shift : other_shift;
        double scale = pair.family == BopFamily::Categorical3 ? 0.0 : pair.scales[j];
        out.values[j].resize(pair.m[j]);
        for (auto& v : out.values[j]) v = draw_value(pair.family, shift, scale, rng);
    }
    return out;
}

}  // namespace

GroupSamples WorstCasePair::draw_p(Rng& rng) const {
    return draw_with_means(*this, rng, -eps, 0.0);
}

GroupSamples WorstCasePair::draw_q(Rng& rng) const {
    return draw_with_means(*this, rng, 0.0, 0.0);
}

GroupSamples WorstCasePair::draw_null_world(Rng& rng) const {
    return draw_with_means(*this, rng, 0.0, eps);
}

GroupSamples WorstCasePair::draw_alternative_world(Rng& rng) const {
    return draw_with_means(*this, rng, eps, eps);
}

WorstCasePair build_worst_case_pair(BopFamily family, double eps, std::size_t d,
                                    const std::vector<std::size_t>& m,
                                    const std::vector<double>& scales,
                                    std::uint64_t seed) {
    WorstCasePair pair;
    pair.family = family;
    pair.eps = eps;
    pair.seed = seed;
    if (m.size() == 1 && d > 1)
        pair.m = std::vector<std::size_t>(d, m[0]);
    else
        pair.m = m;
    if (pair.m.size() != d) throw UsageError("group sizes must match the group count");
    if (family != BopFamily::Categorical3) {
        if (scales.size() == 1 && d > 1)
            pair.scales = std::vector<double>(d, scales[0]);
        else
            pair.scales = scales;
    }
    pair.validate();
    return pair;
}

SimulationResult simulate_pe(const WorstCasePair& pair, std::size_t trials,
                             std::uint64_t seed) {
    pair.validate();
    if (trials < 100) throw UsageError("at least 100 trials are required");

    auto minimal_mean = [&](const GroupSamples& gs) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& group : gs.values)
            worst = std::min(worst, mean(group));
        return worst;
    };

    std::size_t type_i_count = 0, type_ii_count = 0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        // Independent child streams per trial and per world: the totals do
        // not depend on evaluation order.
        Rng rng_null(derive_seed(seed, 2 * trial));
        Rng rng_alt(derive_seed(seed, 2 * trial + 1));
        // Null world: the designated group gains nothing. Rejecting is a
        // type I error.
        if (minimal_mean(pair.draw_null_world(rng_null)) >= pair.eps) ++type_i_count;
        // Alternative world: every group gains eps. Failing to reject is a
        // type II error.
        if (minimal_mean(pair.draw_alternative_world(rng_alt)) < pair.eps)
            ++type_ii_count;
    }

    SimulationResult res;
    res.trials = trials;
    double t = static_cast<double>(trials);
    res.type_i = static_cast<double>(type_i_count) / t;
    res.type_ii = static_cast<double>(type_ii_count) / t;
    res.empirical_pe = res.type_i + res.type_ii;
    double var = res.type_i * (1.0 - res.type_i) / t +
                 res.type_ii * (1.0 - res.type_ii) / t;
    res.ci_half_width = 1.959963984540054 * std::sqrt(var);

    BoundSpec spec;
    spec.family = pair.family;
    spec.epsilon = pair.eps;
    spec.m = pair.m;
    spec.scales = pair.scales;
    PeBound pb = pe_bound(spec);
    res.bound_raw = pb.raw;
    res.bound_clamped = pb.clamped;
    res.dominance_ok = res.empirical_pe + res.ci_half_width >= res.bound_clamped;
    return res;
}

}  // namespace paudit
