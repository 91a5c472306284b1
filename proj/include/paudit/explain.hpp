#pragma once

#include <vector>

#include "paudit/models.hpp"

namespace paudit {

// Path-integral attribution of a prediction to the input coordinates.
struct Attribution {
    std::vector<double> values;
    double prediction_at_input = 0.0;
    double prediction_at_baseline = 0.0;

    // Residual of the completeness identity: sum of attributions should equal
    // the prediction difference along the path.
    double completeness_gap() const;
};

// Right-endpoint Riemann approximation of the path integral from `baseline`
// to `x`:
//   attr_i = (x_i - baseline_i) * (1/steps) * sum_{q=1..steps}
//            grad(baseline + (q/steps) * (x - baseline))_i
Attribution integrated_gradients(const PredictiveModel& model,
                                 const std::vector<double>& x,
                                 const std::vector<double>& baseline, int steps);

// Indices of the r largest attributions by absolute value; ties keep the
// lowest feature index. r is clamped to the attribution length.
std::vector<std::size_t> top_r_mask(const std::vector<double>& attributions,
                                    std::size_t r);

enum class MaskMode {
    KeepJ,    // coordinates outside the mask are replaced by the baseline
    RemoveJ,  // coordinates inside the mask are replaced by the baseline
};

std::vector<double> masked_input(const std::vector<double>& x,
                                 const std::vector<double>& baseline,
                                 const std::vector<std::size_t>& mask, MaskMode mode);

// How the per-sample mask is chosen. With an empty fixed_order the mask is the
// top-r attribution set recomputed per sample; a fixed_order (importance,
// descending) makes the mask its length-r prefix, which is how analytic
// oracle models pin their masks.
struct MaskingPolicy {
    int steps = 64;
    std::vector<std::size_t> fixed_order;
};

// Per-sample explanation-quality costs for one model.
//
// Sufficiency keeps only the masked coordinates: the cost is the prediction
// change that masking everything else causes (decision-flip indicator for
// classification, squared difference for regression). Incomprehensiveness
// removes the masked coordinates and NEGATES the change, so that a large
// prediction change (evidence the mask captured what matters) shows up as a
// low cost.
CostVector sufficiency_costs(const PredictiveModel& model,
                             const std::vector<std::vector<double>>& inputs,
                             const std::vector<double>& baseline, std::size_t r,
                             const MaskingPolicy& policy, ModelTag tag);

CostVector incomprehensiveness_costs(const PredictiveModel& model,
                                     const std::vector<std::vector<double>>& inputs,
                                     const std::vector<double>& baseline, std::size_t r,
                                     const MaskingPolicy& policy, ModelTag tag);

struct RSweepRow {
    std::size_t r = 0;
    double sufficiency_generic = 0.0;
    double sufficiency_personalized = 0.0;
    double incomprehensiveness_generic = 0.0;
    double incomprehensiveness_personalized = 0.0;
};

// Population explanation costs for every mask size r = 0..max arity (one row
// per r; models with smaller arity are evaluated at min(r, arity)).
std::vector<RSweepRow> r_sweep(const PredictiveModel& generic,
                               const PredictiveModel& personalized,
                               const AuditDataset& data,
                               const std::vector<double>& baseline_generic,
                               const std::vector<double>& baseline_personalized,
                               const MaskingPolicy& policy_generic,
                               const MaskingPolicy& policy_personalized);

}  // namespace paudit
