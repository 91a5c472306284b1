#pragma once

#include <cstdint>
#include <vector>

#include "paudit/explain.hpp"
#include "paudit/models.hpp"
#include "paudit/stats.hpp"

namespace paudit {

// Deterministic 0/1 classifier of the form 1(w . x > 0). Used as an analytic
// oracle in synthetic scenarios: it has no gradient, so explanation masks for
// it must come from a fixed importance order.
class ThresholdOracle final : public PredictiveModel {
public:
    std::vector<double> w;

    explicit ThresholdOracle(std::vector<double> weights) : w(std::move(weights)) {}

    double predict(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    std::size_t arity() const override { return w.size(); }
    Task task() const override { return Task::Classification; }
    std::string kind() const override { return "threshold_oracle"; }
};

// ---------------------------------------------------------------------------
// "sumsign" scenario: X1, X2 ~ Unif(-1/2, 1/2), S = 1(X1 + X2 > 0), Y = S.
// Both oracles predict perfectly (zero benefit on prediction quality), yet
// their explanations differ by construction, so the explanation-quality
// benefit is strictly positive.
// ---------------------------------------------------------------------------
struct SumSignAnalytics {
    double bop_prediction = 0.0;
    // Population decision-change probabilities under the analytic masks.
    double sufficiency_change_generic = 0.25;       // keep {X1} on h0
    double sufficiency_change_personalized = 0.0;   // keep {S} on hp
    double removal_change_generic = 0.25;           // remove {X1} from h0
    double removal_change_personalized = 0.5;       // remove {S} from hp
    double sufficiency_gap = 0.25;
    double incomprehensiveness_gap = 0.25;
};

struct SumSignScenario {
    AuditDataset data;
    ThresholdOracle generic{{1.0, 1.0}};             // 1(x1 + x2 > 0)
    ThresholdOracle personalized{{0.0, 0.0, 1.0}};   // 1(s > 0)
    // Analytic importance orders; the length-1 prefixes are the proof masks.
    MaskingPolicy policy_generic;
    MaskingPolicy policy_personalized;
    SumSignAnalytics analytics;
};

SumSignScenario gen_sum_sign(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Additive scenario: Y = sum_i ax_i X_i + sum_j as_j (2 S_j - 1) sqrt(vs_j) + e
// with X_i ~ N(0, vx_i), S_j ~ Bernoulli(1/2), e ~ N(0, ve). The group term
// is independent of X, so its variance is exactly the personalization gain.
// ---------------------------------------------------------------------------
struct AdditiveScenario {
    std::vector<double> alphas_x;
    std::vector<double> alphas_s;
    std::vector<double> var_x;
    std::vector<double> var_s;
    double var_eps = 0.25;

    void validate() const;
};

struct AdditiveAnalytics {
    double mse_generic = 0.0;       // sum as_j^2 vs_j + ve
    double mse_personalized = 0.0;  // ve
    double bop_prediction = 0.0;    // the difference
    double var_y = 0.0;             // total label variance
};

AuditDataset gen_additive(const AdditiveScenario& scenario, std::size_t n,
                          std::uint64_t seed);
AdditiveAnalytics additive_mse_analytics(const AdditiveScenario& scenario);

// ---------------------------------------------------------------------------
// Worst-case benefit distributions behind the error-probability bound.
// P mixes over a uniformly chosen disadvantaged group (mean -eps, others 0);
// Q gives every group mean 0.
// ---------------------------------------------------------------------------
struct GroupSamples {
    std::vector<std::vector<double>> values;  // d groups of m_j draws
    std::size_t designated = 0;               // the group with the shifted mean
};

struct WorstCasePair {
    BopFamily family = BopFamily::Gaussian;
    double eps = 0.0;
    std::vector<std::size_t> m;
    std::vector<double> scales;  // ignored for the categorical family
    std::uint64_t seed = 0;

    // Raw least-favorable pair: H0-side mixture P (one group at -eps) and
    // null Q centered at zero.
    GroupSamples draw_p(Rng& rng) const;
    GroupSamples draw_q(Rng& rng) const;

    // Simulation worlds in the user-facing orientation: under the null, one
    // uniformly chosen group gains nothing while the rest gain eps; under the
    // alternative every group gains eps. This is the same pair translated by
    // +eps, so the divergence (and hence the bound) is unchanged.
    GroupSamples draw_null_world(Rng& rng) const;
    GroupSamples draw_alternative_world(Rng& rng) const;

    void validate() const;
};

WorstCasePair build_worst_case_pair(BopFamily family, double eps, std::size_t d,
                                    const std::vector<std::size_t>& m,
                                    const std::vector<double>& scales,
                                    std::uint64_t seed);

struct SimulationResult {
    std::size_t trials = 0;
    double type_i = 0.0;
    double type_ii = 0.0;
    double empirical_pe = 0.0;
    double ci_half_width = 0.0;  // 95% normal approximation on the sum
    double bound_raw = 0.0;
    double bound_clamped = 0.0;
    bool dominance_ok = false;  // empirical_pe + ci_half_width >= bound_clamped
};

// Monte Carlo error of the threshold test (reject when the minimal group mean
// reaches eps) against the analytic lower bound. Per-trial child seeds make
// the result independent of evaluation order.
SimulationResult simulate_pe(const WorstCasePair& pair, std::size_t trials,
                             std::uint64_t seed);

}  // namespace paudit
