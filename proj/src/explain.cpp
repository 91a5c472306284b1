#include "paudit/explain.hpp"

#include <algorithm>
#include <cmath>

namespace paudit {

double Attribution::completeness_gap() const {
    return std::abs(pairwise_sum(values) -
                    (prediction_at_input - prediction_at_baseline));
}

Attribution integrated_gradients(const PredictiveModel& model,
                                 const std::vector<double>& x,
                                 const std::vector<double>& baseline, int steps) {
    if (steps < 1) throw UsageError("integrated gradients needs at least one step");
    if (x.size() != model.arity() || baseline.size() != model.arity())
        throw UsageError("input arity mismatch");
    std::size_t p = x.size();
    Attribution attr;
    attr.values.assign(p, 0.0);
    std::vector<double> point(p);
    for (int q = 1; q <= steps; ++q) {
        double alpha = static_cast<double>(q) / static_cast<double>(steps);
        for (std::size_t i = 0; i < p; ++i)
            point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
        std::vector<double> g = model.gradient(point);
        for (std::size_t i = 0; i < p; ++i) attr.values[i] += g[i];
    }
    double inv_steps = 1.0 / static_cast<double>(steps);
    for (std::size_t i = 0; i < p; ++i)
        attr.values[i] *= (x[i] - baseline[i]) * inv_steps;
    attr.prediction_at_input = model.predict(x);
    attr.prediction_at_baseline = model.predict(baseline);
    return attr;
}

std::vector<std::size_t> top_r_mask(const std::vector<double>& attributions,
                                    std::size_t r) {
    r = std::min(r, attributions.size());
    std::vector<std::size_t> order(attributions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Stable sort on descending |attr| keeps the lowest index among ties.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(attributions[a]) > std::abs(attributions[b]);
    });
    order.resize(r);
    return order;
}

std::vector<double> masked_input(const std::vector<double>& x,
                                 const std::vector<double>& baseline,
                                 const std::vector<std::size_t>& mask, MaskMode mode) {
    if (x.size() != baseline.size()) throw UsageError("baseline arity mismatch");
    std::vector<bool> in_mask(x.size(), false);
    for (std::size_t i : mask) {
        if (i >= x.size()) throw UsageError("mask index out of range");
        in_mask[i] = true;
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool keep_original = mode == MaskMode::KeepJ ? in_mask[i] : !in_mask[i];
        out[i] = keep_original ? x[i] : baseline[i];
    }
    return out;
}

namespace {

std::vector<std::size_t> mask_for_sample(const PredictiveModel& model,
                                         const std::vector<double>& x,
                                         const std::vector<double>& baseline,
                                         std::size_t r, const MaskingPolicy& policy) {
    if (!policy.fixed_order.empty()) {
        std::vector<std::size_t> m = policy.fixed_order;
        if (m.size() != model.arity())
            throw UsageError("fixed importance order must cover every input");
        m.resize(std::min(r, m.size()));
        return m;
    }
    Attribution attr = integrated_gradients(model, x, baseline, policy.steps);
    return top_r_mask(attr.values, r);
}

CostVector masking_costs(const PredictiveModel& model,
                         const std::vector<std::vector<double>>& inputs,
                         const std::vector<double>& baseline, std::size_t r,
                         const MaskingPolicy& policy, ModelTag tag, MaskMode mode,
                         MetricTag metric) {
    bool classification = model.task() == Task::Classification;
    // Negate the change for incomprehensiveness: a mask that captures the
    // decisive coordinates makes removal change the prediction a lot, which
    // is the *good* (low-cost) outcome.
    double sign = metric == MetricTag::Incomprehensiveness ? -1.0 : 1.0;
    CostVector cv;
    cv.kind = classification ? CostKind::ZeroOne : CostKind::SquaredError;
    cv.metric = metric;
    cv.model_tag = tag;
    cv.decomposable = true;
    cv.values.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& x = inputs[i];
        std::vector<std::size_t> mask = mask_for_sample(model, x, baseline, r, policy);
        std::vector<double> xm = masked_input(x, baseline, mask, mode);
        double full = model.predict(x);
        double masked = model.predict(xm);
        double change;
        if (classification) {
            change = threshold_label(full) == threshold_label(masked) ? 0.0 : 1.0;
        } else {
            double diff = masked - full;
            change = diff * diff;
        }
        cv.values[i] = sign * change;
    }
    return cv;
}

}  // namespace

CostVector sufficiency_costs(const PredictiveModel& model,
                             const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& baseline, std::size_t r,
                             const MaskingPolicy& policy, ModelTag tag) {
    return masking_costs(model, inputs, baseline, r, policy, tag, MaskMode::KeepJ,
                         MetricTag::Sufficiency);
}

CostVector incomprehensiveness_costs(const PredictiveModel& model,
                                     const std::vector<std::vector<double>>& inputs,
                                     const std::vector<double>& baseline, std::size_t r,
                                     const MaskingPolicy& policy, ModelTag tag) {
    return masking_costs(model, inputs, baseline, r, policy, tag, MaskMode::RemoveJ,
                         MetricTag::Incomprehensiveness);
}

std::vector<RSweepRow> r_sweep(const PredictiveModel& generic,
                               const PredictiveModel& personalized,
                               const AuditDataset& data,
                               const std::vector<double>& baseline_generic,
                               const std::vector<double>& baseline_personalized,
                               const MaskingPolicy& policy_generic,
                               const MaskingPolicy& policy_personalized) {
    auto inputs_g = model_inputs(data, ModelTag::Generic);
    auto inputs_p = model_inputs(data, ModelTag::Personalized);
    std::size_t max_r = std::max(generic.arity(), personalized.arity());
    std::vector<RSweepRow> rows;
    rows.reserve(max_r + 1);
    for (std::size_t r = 0; r <= max_r; ++r) {
        RSweepRow row;
        row.r = r;
        std::size_t rg = std::min(r, generic.arity());
        std::size_t rp = std::min(r, personalized.arity());
        row.sufficiency_generic =
            mean(sufficiency_costs(generic, inputs_g, baseline_generic, rg,
                                   policy_generic, ModelTag::Generic)
                     .values);
        row.sufficiency_personalized =
            mean(sufficiency_costs(personalized, inputs_p, baseline_personalized, rp,
                                   policy_personalized, ModelTag::Personalized)
                     .values);
        row.incomprehensiveness_generic =
            mean(incomprehensiveness_costs(generic, inputs_g, baseline_generic, rg,
                                           policy_generic, ModelTag::Generic)
                     .values);
        row.incomprehensiveness_personalized =
            mean(incomprehensiveness_costs(personalized, inputs_p,
                                           baseline_personalized, rp,
                                           policy_personalized, ModelTag::Personalized)
                     .values);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace paudit
