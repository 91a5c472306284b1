#include "paudit/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace paudit {

std::string to_string(Task t) {
    return t == Task::Classification ? "classification" : "regression";
}

std::string to_string(ModelTag t) {
    return t == ModelTag::Generic ? "generic" : "personalized";
}

std::string to_string(CostKind k) {
    switch (k) {
        case CostKind::ZeroOne: return "zero_one";
        case CostKind::SquaredError: return "squared_error";
        case CostKind::NegAuc: return "neg_auc";
        case CostKind::NegR2: return "neg_r2";
    }
    return "?";
}

std::string to_string(MetricTag m) {
    switch (m) {
        case MetricTag::Prediction: return "prediction";
        case MetricTag::Sufficiency: return "sufficiency";
        case MetricTag::Incomprehensiveness: return "incomprehensiveness";
    }
    return "?";
}

bool cost_kind_matches_task(CostKind kind, Task task) {
    switch (kind) {
        case CostKind::ZeroOne:
        case CostKind::NegAuc: return task == Task::Classification;
        case CostKind::SquaredError:
        case CostKind::NegR2: return task == Task::Regression;
    }
    return false;
}

bool cost_kind_decomposable(CostKind kind) {
    return kind == CostKind::ZeroOne || kind == CostKind::SquaredError;
}

std::vector<double> AuditDataset::model_input(std::size_t i, ModelTag tag) const {
    std::vector<double> v(x.begin() + static_cast<std::ptrdiff_t>(i * t),
                          x.begin() + static_cast<std::ptrdiff_t>((i + 1) * t));
    if (tag == ModelTag::Personalized) {
        v.reserve(t + k);
        for (std::size_t j = 0; j < k; ++j) v.push_back(static_cast<double>(sat(i, j)));
    }
    return v;
}

void AuditDataset::validate() const {
    if (x.size() != n * t) throw DataError("feature matrix size mismatch");
    if (s.size() != n * k) throw DataError("group attribute matrix size mismatch");
    if (y.size() != n) throw DataError("label vector size mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("non-finite label");
    for (std::uint8_t b : s)
        if (b != 0 && b != 1) throw DataError("group attributes must be 0 or 1");
    if (task == Task::Classification) {
        for (double v : y)
            if (v != 0.0 && v != 1.0)
                throw DataError("classification labels must be 0 or 1");
    }
}

std::size_t encode_group(const std::uint8_t* bits, std::size_t k) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (bits[i]) idx |= (std::size_t{1} << i);
    return idx;
}

std::vector<std::uint8_t> decode_group(std::size_t index, std::size_t k) {
    std::vector<std::uint8_t> bits(k);
    for (std::size_t i = 0; i < k; ++i)
        bits[i] = static_cast<std::uint8_t>((index >> i) & 1u);
    return bits;
}

std::string group_bits_string(std::size_t index, std::size_t k) {
    std::string s(k, '0');
    for (std::size_t i = 0; i < k; ++i)
        if ((index >> i) & 1u) s[i] = '1';
    return s;
}

GroupTable index_groups(const AuditDataset& data) {
    if (data.k > 16) throw DataError("at most 16 group attributes supported");
    GroupTable table;
    table.k = data.k;
    table.d = std::size_t{1} << data.k;
    table.members.resize(table.d);
    table.counts.assign(table.d, 0);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::size_t j = encode_group(data.s.data() + i * data.k, data.k);
        table.members[j].push_back(i);
        ++table.counts[j];
    }
    for (std::size_t j = 0; j < table.d; ++j)
        if (table.counts[j] == 0) table.empty_groups.push_back(j);
    return table;
}

CostVector individual_costs(const std::vector<double>& predictions,
                            const AuditDataset& data, CostKind kind, ModelTag tag) {
    if (!cost_kind_decomposable(kind))
        throw UsageError("rank-based costs have no per-sample decomposition");
    if (predictions.size() != data.n)
        throw DataError("prediction vector length does not match dataset");
    if (!cost_kind_matches_task(kind, data.task))
        throw DataError("cost kind incompatible with dataset task");
    CostVector cv;
    cv.kind = kind;
    cv.model_tag = tag;
    cv.decomposable = true;
    cv.values.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        if (kind == CostKind::ZeroOne) {
            cv.values[i] = threshold_label(predictions[i]) == data.y[i] ? 0.0 : 1.0;
        } else {
            double diff = predictions[i] - data.y[i];
            cv.values[i] = diff * diff;
        }
    }
    return cv;
}

double group_cost(const CostVector& costs, const GroupTable& groups, std::size_t j) {
    if (j >= groups.d) throw UsageError("group index out of range");
    if (!costs.decomposable)
        throw UsageError("group_cost requires per-sample costs");
    const auto& members = groups.members[j];
    if (members.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> vals;
    vals.reserve(members.size());
    for (std::size_t i : members) vals.push_back(costs.values[i]);
    return pairwise_sum(vals) / static_cast<double>(vals.size());
}

namespace {

// Mann-Whitney AUC with half credit for tied scores.
double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double n_pos = 0, n_neg = 0;
    for (double l : labels) (l == 1.0 ? n_pos : n_neg) += 1.0;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("AUC undefined: group contains a single class");
    // Sum of positive ranks with midranks for ties.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (std::size_t q = i; q <= j; ++q)
            if (labels[order[q]] == 1.0) rank_sum += midrank;
        i = j + 1;
    }
    return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double r_squared(const std::vector<double>& predictions, const std::vector<double>& labels) {
    double mu = mean(labels);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double r = labels[i] - predictions[i];
        double c = labels[i] - mu;
        ss_res += r * r;
        ss_tot += c * c;
    }
    if (ss_tot == 0.0)
        throw DataError("R^2 undefined: group labels have zero variance");
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

std::vector<double> group_cost_rank(const std::vector<double>& predictions,
                                    const AuditDataset& data, const GroupTable& groups,
                                    CostKind kind) {
    if (cost_kind_decomposable(kind))
        throw UsageError("group_cost_rank is for rank-based costs only");
    if (predictions.size() != data.n)
        throw DataError("prediction vector length does not match dataset");
    if (!cost_kind_matches_task(kind, data.task))
        throw DataError("cost kind incompatible with dataset task");
    std::vector<double> out(groups.d, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t j = 0; j < groups.d; ++j) {
        const auto& members = groups.members[j];
        if (members.empty()) continue;
        std::vector<double> p, y;
        p.reserve(members.size());
        y.reserve(members.size());
        for (std::size_t i : members) {
            p.push_back(predictions[i]);
            y.push_back(data.y[i]);
        }
        out[j] = kind == CostKind::NegAuc ? -auc(p, y) : -r_squared(p, y);
    }
    return out;
}

BopReport bop_report(const CostVector& generic_costs, const CostVector& personalized_costs,
                     const GroupTable& groups, MetricTag metric) {
    if (!generic_costs.decomposable || !personalized_costs.decomposable)
        throw UsageError("bop_report requires per-sample costs");
    if (generic_costs.kind != personalized_costs.kind)
        throw UsageError("cost vectors must share a cost kind");
    if (generic_costs.metric != metric || personalized_costs.metric != metric)
        throw UsageError("cost vector metric tags do not match the report metric");
    if (generic_costs.values.size() != personalized_costs.values.size())
        throw DataError("cost vectors must have equal length");
    if (generic_costs.model_tag != ModelTag::Generic ||
        personalized_costs.model_tag != ModelTag::Personalized)
        throw UsageError("bop_report expects (generic, personalized) cost vectors");

    BopReport rep;
    rep.metric = metric;
    rep.cost_kind = generic_costs.kind;
    rep.per_group.resize(groups.d);
    bool found = false;
    for (std::size_t j = 0; j < groups.d; ++j) {
        GroupBenefit& g = rep.per_group[j];
        g.group = j;
        g.bits = group_bits_string(j, groups.k);
        g.m = groups.counts[j];
        g.empty = groups.counts[j] == 0;
        if (g.empty) {
            rep.has_empty_groups = true;
            g.cost_generic = g.cost_personalized = g.bop =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        g.cost_generic = group_cost(generic_costs, groups, j);
        g.cost_personalized = group_cost(personalized_costs, groups, j);
        g.bop = g.cost_generic - g.cost_personalized;
        // Strict < keeps the lowest group index on ties.
        if (!found || g.bop < rep.minimal_bop) {
            rep.minimal_bop = g.bop;
            rep.minimal_group = j;
            found = true;
        }
    }
    if (!found) throw DataError("benefit report requires at least one non-empty group");
    double n = static_cast<double>(generic_costs.values.size());
    rep.population_generic = pairwise_sum(generic_costs.values) / n;
    rep.population_personalized = pairwise_sum(personalized_costs.values) / n;
    rep.population_bop = rep.population_generic - rep.population_personalized;
    return rep;
}

}  // namespace paudit
