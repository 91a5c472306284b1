#include "paudit/cli_support.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace paudit {

namespace {

// Locale-independent shortest round-trip formatting.
std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& field, std::size_t line,
                          const std::string& column) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (first == last)
        throw DataError("line " + std::to_string(line) + ": missing value in column " +
                        column);
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw DataError("line " + std::to_string(line) + ": cannot parse '" + field +
                        "' in column " + column);
    if (!std::isfinite(v))
        throw DataError("line " + std::to_string(line) + ": non-finite value in column " +
                        column);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

void write_dataset_csv(const std::string& path, const AuditDataset& data) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (std::size_t j = 0; j < data.t; ++j) out << "x_" << j << ',';
    for (std::size_t j = 0; j < data.k; ++j) out << "s_" << j << ',';
    out << "y\n";
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t j = 0; j < data.t; ++j)
            out << format_double(data.xat(i, j)) << ',';
        for (std::size_t j = 0; j < data.k; ++j)
            out << static_cast<int>(data.sat(i, j)) << ',';
        out << format_double(data.y[i]) << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

AuditDataset read_dataset_csv(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    line = strip_cr(line);
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);  // UTF-8 BOM

    auto header = split_csv_line(line);
    std::size_t pos = 0, t = 0, k = 0;
    while (pos < header.size() && header[pos] == "x_" + std::to_string(t)) {
        ++t;
        ++pos;
    }
    while (pos < header.size() && header[pos] == "s_" + std::to_string(k)) {
        ++k;
        ++pos;
    }
    if (t == 0 || pos + 1 != header.size() || header[pos] != "y")
        throw DataError("line 1: expected header x_0,..,x_{t-1},s_0,..,s_{k-1},y; got '" +
                        line + "'");

    AuditDataset data;
    data.t = t;
    data.k = k;
    data.task = task;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != t + k + 1)
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(t + k + 1) + " fields, found " +
                            std::to_string(fields.size()));
        for (std::size_t j = 0; j < t; ++j)
            data.x.push_back(
                parse_double_field(fields[j], line_no, "x_" + std::to_string(j)));
        for (std::size_t j = 0; j < k; ++j) {
            double v = parse_double_field(fields[t + j], line_no,
                                          "s_" + std::to_string(j));
            if (v != 0.0 && v != 1.0)
                throw DataError("line " + std::to_string(line_no) +
                                ": group attribute s_" + std::to_string(j) +
                                " must be 0 or 1, got '" + fields[t + j] + "'");
            data.s.push_back(static_cast<std::uint8_t>(v));
        }
        double y = parse_double_field(fields[t + k], line_no, "y");
        if (task == Task::Classification && y != 0.0 && y != 1.0)
            throw DataError("line " + std::to_string(line_no) +
                            ": classification label must be 0 or 1, got '" +
                            fields[t + k] + "'");
        data.y.push_back(y);
        ++data.n;
    }
    if (data.n == 0) throw DataError("no data rows in: " + path);
    data.validate();
    return data;
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

SplitIndices stratified_split(const AuditDataset& data, const GroupTable& groups,
                              double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw UsageError("test fraction must lie strictly between 0 and 1");
    (void)data;
    SplitIndices out;
    Rng rng(derive_seed(seed, 0x51C));
    for (std::size_t j = 0; j < groups.d; ++j) {
        std::vector<std::size_t> rows = groups.members[j];
        const std::size_t m = rows.size();
        if (m == 0) continue;
        auto n_test = static_cast<std::size_t>(
            std::llround(test_fraction * static_cast<double>(m)));
        if (n_test == 0 && m >= 4) n_test = 1;
        if (n_test >= m) n_test = m - 1;  // keep at least one training row
        // Partial Fisher-Yates: the first n_test slots become the test rows.
        for (std::size_t i = 0; i < n_test; ++i) {
            std::size_t pick = i + static_cast<std::size_t>(
                                       rng.next_u64() % static_cast<std::uint64_t>(m - i));
            std::swap(rows[i], rows[pick]);
        }
        out.test.insert(out.test.end(), rows.begin(), rows.begin() + n_test);
        out.train.insert(out.train.end(), rows.begin() + n_test, rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

AuditDataset subset(const AuditDataset& data, const std::vector<std::size_t>& rows) {
    AuditDataset out;
    out.t = data.t;
    out.k = data.k;
    out.task = data.task;
    out.n = rows.size();
    out.x.reserve(rows.size() * data.t);
    out.s.reserve(rows.size() * data.k);
    out.y.reserve(rows.size());
    for (std::size_t i : rows) {
        if (i >= data.n) throw UsageError("subset row index out of range");
        for (std::size_t j = 0; j < data.t; ++j) out.x.push_back(data.xat(i, j));
        for (std::size_t j = 0; j < data.k; ++j) out.s.push_back(data.sat(i, j));
        out.y.push_back(data.y[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report helpers
// ---------------------------------------------------------------------------

json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

Histogram histogram_fd(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return !std::isfinite(v); }),
                 values.end());
    Histogram h;
    if (values.empty()) return h;
    std::sort(values.begin(), values.end());
    const double lo = values.front(), hi = values.back();
    const auto n = static_cast<double>(values.size());
    if (lo == hi) {
        h.edges = {lo - 0.5, lo + 0.5};
        h.counts = {values.size()};
        return h;
    }
    auto quantile = [&](double q) {
        double idx = q * (n - 1.0);
        auto base = static_cast<std::size_t>(idx);
        double frac = idx - static_cast<double>(base);
        if (base + 1 >= values.size()) return values.back();
        return values[base] * (1.0 - frac) + values[base + 1] * frac;
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double width = 2.0 * iqr / std::cbrt(n);
    std::size_t bins;
    if (width > 0.0) {
        bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    } else {
        bins = static_cast<std::size_t>(std::ceil(std::sqrt(n)));
    }
    bins = std::clamp<std::size_t>(bins, 1, 128);
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        ++h.counts[b];
    }
    return h;
}

json histogram_json(const Histogram& h) {
    json edges = json::array();
    for (double e : h.edges) edges.push_back(json_number(e));
    return json{{"edges", std::move(edges)}, {"counts", h.counts}};
}

// ---------------------------------------------------------------------------
// Audit pipeline
// ---------------------------------------------------------------------------

void AuditConfig::validate() const {
    if (model != "linear" && model != "logistic" && model != "mlp")
        throw UsageError("unknown model type: " + model);
    if (model == "linear" && task != Task::Regression)
        throw UsageError("linear models require a regression task");
    if (model == "logistic" && task != Task::Classification)
        throw UsageError("logistic models require a classification task");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw UsageError("test fraction must lie strictly between 0 and 1");
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
    if (steps < 1) throw UsageError("attribution steps must be >= 1");
    if (r < -1) throw UsageError("mask size must be -1 (auto) or >= 0");
    if (oracle && *oracle != "sumsign")
        throw UsageError("unknown oracle scenario: " + *oracle);
    train.validate();
}

namespace {

std::vector<double> column_means(const std::vector<std::vector<double>>& rows,
                                 std::size_t width) {
    std::vector<double> means(width, 0.0);
    if (rows.empty()) return means;
    for (const auto& row : rows)
        for (std::size_t j = 0; j < width; ++j) means[j] += row[j];
    for (double& v : means) v /= static_cast<double>(rows.size());
    return means;
}

json fit_json(const BopDistributionFit& fit) {
    json per_group = json::array();
    for (std::size_t j = 0; j < fit.per_group.size(); ++j) {
        const auto& g = fit.per_group[j];
        per_group.push_back(json{{"group", j},
                                 {"mu", json_number(g.mu)},
                                 {"scale", json_number(g.scale)},
                                 {"degenerate", g.degenerate}});
    }
    json loglik = json::object();
    loglik["gaussian"] = json_number(fit.loglik_gaussian);
    loglik["laplace"] = json_number(fit.loglik_laplace);
    loglik["categorical"] = fit.loglik_categorical
                                ? json_number(*fit.loglik_categorical)
                                : json(nullptr);
    return json{{"family", to_string(fit.family)},
                {"chosen_by", fit.chosen_by == FitChoice::Support ? "support"
                                                                  : "log_likelihood"},
                {"log_likelihood", std::move(loglik)},
                {"per_group", std::move(per_group)}};
}

json test_json(const TestOutcome& out) {
    return json{{"gamma_hat", json_number(out.gamma_hat)},
                {"epsilon", out.epsilon},
                {"verdict", to_string(out.verdict)},
                {"pe_lower_bound_raw", json_number(out.pe_lower_bound_raw)},
                {"pe_lower_bound", json_number(out.pe_lower_bound)},
                {"reliable", out.reliable},
                {"min_reliable_epsilon", out.min_reliable_eps
                                             ? json_number(*out.min_reliable_eps)
                                             : json(nullptr)}};
}

json report_json(const BopReport& rep) {
    json per_group = json::array();
    for (const auto& g : rep.per_group) {
        per_group.push_back(json{{"group", g.group},
                                 {"bits", g.bits},
                                 {"n", g.m},
                                 {"cost_generic", json_number(g.cost_generic)},
                                 {"cost_personalized", json_number(g.cost_personalized)},
                                 {"bop", json_number(g.bop)},
                                 {"empty", g.empty}});
    }
    return json{{"cost_kind", to_string(rep.cost_kind)},
                {"population",
                 json{{"cost_generic", json_number(rep.population_generic)},
                      {"cost_personalized", json_number(rep.population_personalized)},
                      {"bop", json_number(rep.population_bop)}}},
                {"minimal",
                 json{{"group", rep.minimal_group},
                      {"bits", group_bits_string(rep.minimal_group,
                                                 rep.per_group.empty()
                                                     ? 0
                                                     : rep.per_group[0].bits.size())},
                      {"bop", json_number(rep.minimal_bop)}}},
                {"per_group", std::move(per_group)}};
}

// One audited metric: benefit report, distribution fit, reliability-aware
// hypothesis test, and histogram data.
json metric_json(const BopReport& rep, const CostVector& generic,
                 const CostVector& personalized, const GroupTable& groups,
                 const AuditConfig& config) {
    std::vector<std::vector<double>> values_per_group(groups.d);
    std::vector<double> pooled;
    pooled.reserve(generic.values.size());
    for (std::size_t j = 0; j < groups.d; ++j) {
        values_per_group[j].reserve(groups.counts[j]);
        for (std::size_t i : groups.members[j]) {
            double b = generic.values[i] - personalized.values[i];
            values_per_group[j].push_back(b);
            pooled.push_back(b);
        }
    }
    BopDistributionFit fit = fit_bop_distribution(values_per_group);

    BoundSpec spec;
    spec.family = fit.family;
    spec.epsilon = config.epsilon;
    for (std::size_t j = 0; j < groups.d; ++j) {
        if (groups.counts[j] == 0) continue;  // no evidence, no bound term
        spec.m.push_back(groups.counts[j]);
        spec.scales.push_back(fit.per_group[j].scale);
    }
    if (config.pooled_scale && fit.family != BopFamily::Categorical3) {
        // One scale estimated from all benefit samples together.
        double mu;
        double scale;
        if (fit.family == BopFamily::Laplace) {
            std::vector<double> sorted = pooled;
            std::sort(sorted.begin(), sorted.end());
            mu = sorted[sorted.size() / 2];
            double acc = 0.0;
            for (double v : sorted) acc += std::abs(v - mu);
            scale = acc / static_cast<double>(sorted.size());
        } else {
            mu = mean(pooled);
            double acc = 0.0;
            for (double v : pooled) acc += (v - mu) * (v - mu);
            scale = std::sqrt(acc / static_cast<double>(pooled.size()));
        }
        scale = std::max(scale, 1e-9);
        std::fill(spec.scales.begin(), spec.scales.end(), scale);
    }
    TestOutcome outcome = hypothesis_test(rep.minimal_bop, spec);

    json per_group_hist = json::array();
    for (std::size_t j = 0; j < groups.d; ++j) {
        json h = histogram_json(histogram_fd(values_per_group[j]));
        h["group"] = j;
        per_group_hist.push_back(std::move(h));
    }

    json out = report_json(rep);
    out["fit"] = fit_json(fit);
    out["test"] = test_json(outcome);
    out["histograms"] = json{{"population", histogram_json(histogram_fd(pooled))},
                             {"per_group", std::move(per_group_hist)}};
    return out;
}

}  // namespace

AuditOutputs run_audit(const AuditDataset& data, const AuditConfig& config,
                       LoadedModels* preloaded) {
    config.validate();
    data.validate();
    if (data.task != config.task)
        throw UsageError("configured task does not match the dataset task");
    if (data.k == 0)
        throw DataError("a personalized audit needs at least one group attribute");
    if (preloaded && config.oracle)
        throw UsageError("loaded models and an oracle scenario are mutually exclusive");

    GroupTable full_groups = index_groups(data);
    std::vector<std::string> warnings;
    for (std::size_t j : full_groups.empty_groups)
        warnings.push_back("group " + group_bits_string(j, data.k) +
                           " has no samples");

    std::unique_ptr<PredictiveModel> h0;
    std::unique_ptr<PredictiveModel> hp;
    AuditDataset eval;
    std::size_t n_train = 0;
    MaskingPolicy policy_g;
    MaskingPolicy policy_p;
    policy_g.steps = config.steps;
    policy_p.steps = config.steps;
    std::vector<double> baseline_g;
    std::vector<double> baseline_p;
    bool trained = false;

    if (config.oracle) {
        // Analytic oracle pair; audited on the full file, no training split.
        if (data.task != Task::Classification || data.t != 2 || data.k != 1)
            throw DataError(
                "the sumsign oracle needs a classification dataset with t=2, k=1");
        h0 = std::make_unique<ThresholdOracle>(std::vector<double>{1.0, 1.0});
        hp = std::make_unique<ThresholdOracle>(std::vector<double>{0.0, 0.0, 1.0});
        policy_g.fixed_order = {0, 1};
        policy_p.fixed_order = {2, 0, 1};
        eval = data;
        baseline_g = column_means(model_inputs(data, ModelTag::Generic), data.t);
        baseline_p = baseline_g;
        baseline_p.resize(data.t + data.k, 0.0);  // group bits absent at baseline
    } else {
        SplitIndices split =
            stratified_split(data, full_groups, config.test_fraction, config.seed);
        AuditDataset train = subset(data, split.train);
        eval = subset(data, split.test);
        n_train = train.n;

        auto train_inputs_g = model_inputs(train, ModelTag::Generic);
        auto train_inputs_p = model_inputs(train, ModelTag::Personalized);
        baseline_g = column_means(train_inputs_g, train.t);
        baseline_p = column_means(train_inputs_p, train.t + train.k);
        for (std::size_t j = train.t; j < train.t + train.k; ++j)
            baseline_p[j] = 0.0;  // group bits absent at baseline

        if (preloaded) {
            if (preloaded->task != data.task)
                throw DataError("loaded models were trained for a different task");
            h0 = std::move(preloaded->generic);
            hp = std::move(preloaded->personalized);
        } else {
            trained = true;
            TrainConfig cfg_g = config.train;
            cfg_g.seed = derive_seed(config.seed, 0xA);
            TrainConfig cfg_p = config.train;
            cfg_p.seed = derive_seed(config.seed, 0xB);
            if (config.model == "linear") {
                h0 = std::make_unique<LinearModel>(
                    fit_linear_regression(train_inputs_g, train.y, cfg_g));
                hp = std::make_unique<LinearModel>(
                    fit_linear_regression(train_inputs_p, train.y, cfg_p));
            } else if (config.model == "logistic") {
                h0 = std::make_unique<LogisticModel>(
                    fit_logistic(train_inputs_g, train.y, cfg_g));
                hp = std::make_unique<LogisticModel>(
                    fit_logistic(train_inputs_p, train.y, cfg_p));
            } else {
                h0 = std::make_unique<Mlp1Model>(
                    fit_mlp(train_inputs_g, train.y, data.task, cfg_g));
                hp = std::make_unique<Mlp1Model>(
                    fit_mlp(train_inputs_p, train.y, data.task, cfg_p));
            }
        }
    }

    if (h0->arity() != data.t)
        throw DataError("generic model arity does not match the dataset");
    if (hp->arity() != data.t + data.k)
        throw DataError("personalized model arity does not match the dataset");

    GroupTable eval_groups = index_groups(eval);
    for (std::size_t j : eval_groups.empty_groups) {
        std::string msg =
            "group " + group_bits_string(j, data.k) + " has no evaluation samples";
        if (std::find(warnings.begin(), warnings.end(), msg) == warnings.end() &&
            full_groups.counts[j] > 0)
            warnings.push_back(msg);
    }

    // Effective mask sizes. Auto (-1) means the proof-mask size 1 for the
    // analytic oracle and half the inputs (rounded up) for trained models.
    auto effective_r = [&](std::size_t arity) -> std::size_t {
        if (config.r >= 0)
            return std::min<std::size_t>(static_cast<std::size_t>(config.r), arity);
        if (config.oracle) return 1;
        return (arity + 1) / 2;
    };
    std::size_t r_g = effective_r(h0->arity());
    std::size_t r_p = effective_r(hp->arity());

    auto eval_inputs_g = model_inputs(eval, ModelTag::Generic);
    auto eval_inputs_p = model_inputs(eval, ModelTag::Personalized);

    CostKind pred_kind =
        data.task == Task::Classification ? CostKind::ZeroOne : CostKind::SquaredError;
    CostVector pred_g = individual_costs(predict_all(*h0, eval_inputs_g), eval,
                                         pred_kind, ModelTag::Generic);
    CostVector pred_p = individual_costs(predict_all(*hp, eval_inputs_p), eval,
                                         pred_kind, ModelTag::Personalized);
    BopReport rep_pred = bop_report(pred_g, pred_p, eval_groups, MetricTag::Prediction);

    CostVector suff_g = sufficiency_costs(*h0, eval_inputs_g, baseline_g, r_g,
                                          policy_g, ModelTag::Generic);
    CostVector suff_p = sufficiency_costs(*hp, eval_inputs_p, baseline_p, r_p,
                                          policy_p, ModelTag::Personalized);
    BopReport rep_suff = bop_report(suff_g, suff_p, eval_groups, MetricTag::Sufficiency);

    CostVector inc_g = incomprehensiveness_costs(*h0, eval_inputs_g, baseline_g, r_g,
                                                 policy_g, ModelTag::Generic);
    CostVector inc_p = incomprehensiveness_costs(*hp, eval_inputs_p, baseline_p, r_p,
                                                 policy_p, ModelTag::Personalized);
    BopReport rep_inc =
        bop_report(inc_g, inc_p, eval_groups, MetricTag::Incomprehensiveness);

    json groups_summary = json::array();
    for (std::size_t j = 0; j < full_groups.d; ++j)
        groups_summary.push_back(json{{"group", j},
                                      {"bits", group_bits_string(j, data.k)},
                                      {"n", full_groups.counts[j]},
                                      {"n_eval", eval_groups.counts[j]}});

    json config_echo{{"task", to_string(config.task)},
                     {"model", config.oracle ? ("oracle:" + *config.oracle)
                                             : config.model},
                     {"models_loaded", preloaded != nullptr},
                     {"trained", trained},
                     {"test_fraction", config.oracle ? json(nullptr)
                                                     : json(config.test_fraction)},
                     {"epsilon", config.epsilon},
                     {"mask_size", json{{"generic", r_g}, {"personalized", r_p}}},
                     {"attribution_steps", config.steps},
                     {"pooled_scale", config.pooled_scale},
                     {"seed", config.seed}};
    if (trained) {
        config_echo["train"] = json{{"lr", config.train.lr},
                                    {"epochs", config.train.epochs},
                                    {"hidden", config.train.hidden},
                                    {"l2", config.train.l2}};
    }

    AuditOutputs out;
    out.report = json{
        {"schema_version", kSchemaVersion},
        {"tool_version", kVersion},
        {"command", "audit"},
        {"seed", config.seed},
        {"config", std::move(config_echo)},
        {"dataset", json{{"n", data.n},
                         {"t", data.t},
                         {"k", data.k},
                         {"d", full_groups.d},
                         {"task", to_string(data.task)},
                         {"n_train", n_train},
                         {"n_eval", eval.n},
                         {"groups", std::move(groups_summary)},
                         {"warnings", warnings}}},
        {"metrics", json{{"prediction", metric_json(rep_pred, pred_g, pred_p,
                                                    eval_groups, config)},
                         {"sufficiency", metric_json(rep_suff, suff_g, suff_p,
                                                     eval_groups, config)},
                         {"incomprehensiveness",
                          metric_json(rep_inc, inc_g, inc_p, eval_groups, config)}}}};

    if (config.run_r_sweep) {
        auto rows = r_sweep(*h0, *hp, eval, baseline_g, baseline_p, policy_g, policy_p);
        json sweep = json::array();
        for (const auto& row : rows)
            sweep.push_back(json{
                {"r", row.r},
                {"sufficiency_generic", json_number(row.sufficiency_generic)},
                {"sufficiency_personalized", json_number(row.sufficiency_personalized)},
                {"incomprehensiveness_generic",
                 json_number(row.incomprehensiveness_generic)},
                {"incomprehensiveness_personalized",
                 json_number(row.incomprehensiveness_personalized)}});
        out.report["r_sweep"] = std::move(sweep);
    }

    std::ostringstream csv;
    csv << "group,n,prediction,incomprehensiveness,sufficiency\n";
    for (std::size_t j = 0; j < eval_groups.d; ++j) {
        csv << group_bits_string(j, data.k) << ',' << eval_groups.counts[j] << ','
            << format_double(rep_pred.per_group[j].bop) << ','
            << format_double(rep_inc.per_group[j].bop) << ','
            << format_double(rep_suff.per_group[j].bop) << '\n';
    }
    out.groups_csv = csv.str();
    out.generic = std::move(h0);
    out.personalized = std::move(hp);
    return out;
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

json model_to_json(const PredictiveModel& model) {
    const std::string kind = model.kind();
    if (kind == "linear") {
        const auto& m = dynamic_cast<const LinearModel&>(model);
        return json{{"kind", kind}, {"w", m.w},        {"b", m.b},
                    {"y_mean", m.y_mean}, {"y_std", m.y_std}};
    }
    if (kind == "logistic") {
        const auto& m = dynamic_cast<const LogisticModel&>(model);
        return json{{"kind", kind}, {"w", m.w}, {"b", m.b}};
    }
    if (kind == "mlp1") {
        const auto& m = dynamic_cast<const Mlp1Model&>(model);
        return json{{"kind", kind},
                    {"task", to_string(m.task_kind)},
                    {"in", m.in},
                    {"hidden", m.hidden},
                    {"w1", m.w1},
                    {"b1", m.b1},
                    {"w2", m.w2},
                    {"b2", m.b2},
                    {"y_mean", m.y_mean},
                    {"y_std", m.y_std}};
    }
    if (kind == "threshold_oracle") {
        const auto& m = dynamic_cast<const ThresholdOracle&>(model);
        return json{{"kind", kind}, {"w", m.w}};
    }
    throw UsageError("cannot serialize model kind: " + kind);
}

namespace {

Task task_from_string(const std::string& s) {
    if (s == "classification") return Task::Classification;
    if (s == "regression") return Task::Regression;
    throw DataError("unknown task: " + s);
}

}  // namespace

std::unique_ptr<PredictiveModel> model_from_json(const json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "linear") {
            auto m = std::make_unique<LinearModel>();
            m->w = j.at("w").get<std::vector<double>>();
            m->b = j.at("b").get<double>();
            m->y_mean = j.at("y_mean").get<double>();
            m->y_std = j.at("y_std").get<double>();
            return m;
        }
        if (kind == "logistic") {
            auto m = std::make_unique<LogisticModel>();
            m->w = j.at("w").get<std::vector<double>>();
            m->b = j.at("b").get<double>();
            return m;
        }
        if (kind == "mlp1") {
            auto m = std::make_unique<Mlp1Model>();
            m->task_kind = task_from_string(j.at("task").get<std::string>());
            m->in = j.at("in").get<std::size_t>();
            m->hidden = j.at("hidden").get<std::size_t>();
            m->w1 = j.at("w1").get<std::vector<double>>();
            m->b1 = j.at("b1").get<std::vector<double>>();
            m->w2 = j.at("w2").get<std::vector<double>>();
            m->b2 = j.at("b2").get<double>();
            m->y_mean = j.at("y_mean").get<double>();
            m->y_std = j.at("y_std").get<double>();
            if (m->w1.size() != m->in * m->hidden || m->b1.size() != m->hidden ||
                m->w2.size() != m->hidden)
                throw DataError("inconsistent network shape in model file");
            return m;
        }
        if (kind == "threshold_oracle")
            return std::make_unique<ThresholdOracle>(
                j.at("w").get<std::vector<double>>());
        throw DataError("unknown model kind: " + kind);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
}

void save_model_pair(const std::string& path, const PredictiveModel& generic,
                     const PredictiveModel& personalized, Task task) {
    json doc{{"schema_version", kSchemaVersion},
             {"tool_version", kVersion},
             {"task", to_string(task)},
             {"generic", model_to_json(generic)},
             {"personalized", model_to_json(personalized)}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failed: " + path);
}

LoadedModels load_model_pair(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    LoadedModels out;
    try {
        out.task = task_from_string(doc.at("task").get<std::string>());
        out.generic = model_from_json(doc.at("generic"));
        out.personalized = model_from_json(doc.at("personalized"));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model JSON: ") + e.what());
    }
    return out;
}

}  // namespace paudit
