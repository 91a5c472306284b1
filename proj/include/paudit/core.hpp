#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "paudit/common.hpp"

namespace paudit {

enum class Task { Classification, Regression };

enum class ModelTag { Generic, Personalized };

// Per-sample cost functions. ZeroOne / NegAuc apply to classification,
// SquaredError / NegR2 to regression. NegAuc / NegR2 are rank statistics and
// only exist at group granularity (no per-sample decomposition).
enum class CostKind { ZeroOne, SquaredError, NegAuc, NegR2 };

// Metric under audit: prediction quality or one of the explanation-quality
// metrics derived from masking.
enum class MetricTag { Prediction, Sufficiency, Incomprehensiveness };

std::string to_string(Task t);
std::string to_string(ModelTag t);
std::string to_string(CostKind k);
std::string to_string(MetricTag m);

bool cost_kind_matches_task(CostKind kind, Task task);
bool cost_kind_decomposable(CostKind kind);

// ---------------------------------------------------------------------------
// Dataset: N samples, t ordinary features, k binary group attributes.
// ---------------------------------------------------------------------------
struct AuditDataset {
    std::size_t n = 0;
    std::size_t t = 0;
    std::size_t k = 0;
    std::vector<double> x;        // row-major, n * t
    std::vector<std::uint8_t> s;  // row-major, n * k, each entry 0 or 1
    std::vector<double> y;        // n labels; {0,1} for classification
    Task task = Task::Regression;

    double xat(std::size_t i, std::size_t j) const { return x[i * t + j]; }
    std::uint8_t sat(std::size_t i, std::size_t j) const { return s[i * k + j]; }

    // Model input for the generic (t) or personalized (t+k) model.
    std::vector<double> model_input(std::size_t i, ModelTag tag) const;

    // Throws DataError on shape mismatch, non-finite values, non-binary S,
    // or labels outside {0,1} for classification.
    void validate() const;
};

// Little-endian group encoding: bits (s_0, ..., s_{k-1}) -> sum s_i * 2^i.
std::size_t encode_group(const std::uint8_t* bits, std::size_t k);
std::vector<std::uint8_t> decode_group(std::size_t index, std::size_t k);
std::string group_bits_string(std::size_t index, std::size_t k);

// ---------------------------------------------------------------------------
// Group table: the partition of samples by their group-attribute pattern.
// Empty groups are kept (m_j = 0) and flagged so reports can surface them.
// ---------------------------------------------------------------------------
struct GroupTable {
    std::size_t k = 0;
    std::size_t d = 0;                              // 2^k
    std::vector<std::vector<std::size_t>> members;  // d lists of sample indices
    std::vector<std::size_t> counts;                // d sizes, summing to N
    std::vector<std::size_t> empty_groups;          // indices with m_j = 0
};

GroupTable index_groups(const AuditDataset& data);

// ---------------------------------------------------------------------------
// Cost vectors and group-level aggregation.
// ---------------------------------------------------------------------------
struct CostVector {
    std::vector<double> values;  // per-sample costs; empty when !decomposable
    CostKind kind = CostKind::ZeroOne;
    MetricTag metric = MetricTag::Prediction;
    ModelTag model_tag = ModelTag::Generic;
    bool decomposable = true;
};

// Classification decisions threshold the class-1 probability; ties go to 1.
inline double threshold_label(double probability) {
    return probability >= 0.5 ? 1.0 : 0.0;
}

// Per-sample costs from predictions. `predictions` are regression values or
// class-1 probabilities (thresholded at 0.5, ties to class 1).
// Throws UsageError for NegAuc/NegR2 (not decomposable) and DataError for
// size mismatch or task-incompatible kind.
CostVector individual_costs(const std::vector<double>& predictions,
                            const AuditDataset& data, CostKind kind, ModelTag tag);

// Mean cost of one group; NaN for an empty group.
double group_cost(const CostVector& costs, const GroupTable& groups, std::size_t j);

// Rank-statistic group costs (NegAuc = -AUC, NegR2 = -R^2), evaluated directly
// on (prediction, label) pairs within each group. Throws DataError when a
// group is degenerate for the statistic (single-class for AUC, zero label
// variance for R^2) unless the group is empty (NaN like group_cost).
std::vector<double> group_cost_rank(const std::vector<double>& predictions,
                                    const AuditDataset& data, const GroupTable& groups,
                                    CostKind kind);

// ---------------------------------------------------------------------------
// Benefit report: cost(generic) - cost(personalized), per group and overall.
// ---------------------------------------------------------------------------
struct GroupBenefit {
    std::size_t group = 0;
    std::string bits;
    std::size_t m = 0;
    double cost_generic = 0.0;
    double cost_personalized = 0.0;
    double bop = 0.0;
    bool empty = false;
};

struct BopReport {
    std::vector<GroupBenefit> per_group;  // d rows, group order
    double population_generic = 0.0;
    double population_personalized = 0.0;
    double population_bop = 0.0;
    double minimal_bop = 0.0;        // min over non-empty groups
    std::size_t minimal_group = 0;   // lowest index on ties
    MetricTag metric = MetricTag::Prediction;
    CostKind cost_kind = CostKind::ZeroOne;
    bool has_empty_groups = false;   // warning flag: some groups excluded
};

// Requires both vectors decomposable, same kind, generic/personalized tags.
BopReport bop_report(const CostVector& generic_costs, const CostVector& personalized_costs,
                     const GroupTable& groups, MetricTag metric);

}  // namespace paudit
