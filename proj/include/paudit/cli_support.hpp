#pragma once

// Glue between the library and the command-line tool: CSV datasets,
// stratified splits, the end-to-end audit pipeline, JSON reports, and
// model persistence.  Kept out of the lower-level modules so they stay
// free of I/O concerns.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paudit/core.hpp"
#include "paudit/explain.hpp"
#include "paudit/models.hpp"
#include "paudit/scenarios.hpp"
#include "paudit/stats.hpp"

namespace paudit {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV datasets.  Column layout: x_0..x_{t-1}, s_0..s_{k-1}, y.

void write_dataset_csv(const std::string& path, const AuditDataset& data);

// Parses and validates; throws DataError with a line number on bad rows.
AuditDataset read_dataset_csv(const std::string& path, Task task);

// ---------------------------------------------------------------------------
// Stratified train/test split.

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Samples round(test_fraction * m_j) test rows from every non-empty group
// (at least one whenever the group has >= 4 rows), without replacement.
SplitIndices stratified_split(const AuditDataset& data, const GroupTable& groups,
                              double test_fraction, std::uint64_t seed);

AuditDataset subset(const AuditDataset& data, const std::vector<std::size_t>& rows);

// ---------------------------------------------------------------------------
// Audit pipeline.

struct AuditConfig {
    Task task = Task::Classification;
    std::string model = "logistic";  // linear | logistic | mlp
    // When set, skip training and audit the named built-in oracle pair on the
    // full dataset (no split).  Currently: "sumsign".
    std::optional<std::string> oracle;
    TrainConfig train;
    double test_fraction = 0.3;
    double epsilon = 0.01;
    int r = -1;              // mask size; -1 means ceil(arity / 2) per model
    int steps = 128;         // integration steps for attributions
    bool pooled_scale = false;
    bool run_r_sweep = false;
    std::uint64_t seed = 1;

    void validate() const;
};

struct LoadedModels {
    std::unique_ptr<PredictiveModel> generic;
    std::unique_ptr<PredictiveModel> personalized;
    Task task = Task::Classification;
};

struct AuditOutputs {
    json report;
    std::string groups_csv;  // group,n,prediction,incomprehensiveness,sufficiency
    std::unique_ptr<PredictiveModel> generic;       // the audited models, owned,
    std::unique_ptr<PredictiveModel> personalized;  // available for persistence
};

// Runs the full pipeline: split (unless an oracle scenario), train (unless
// models are preloaded), evaluate the three benefit metrics on the test rows,
// fit benefit distributions, and attach reliability-aware test outcomes.
// `preloaded` hands over externally loaded models (consumed when non-null).
AuditOutputs run_audit(const AuditDataset& data, const AuditConfig& config,
                       LoadedModels* preloaded = nullptr);

// ---------------------------------------------------------------------------
// Report helpers (exposed for testing).

struct Histogram {
    std::vector<double> edges;   // size bins + 1
    std::vector<std::size_t> counts;
};

// Freedman-Diaconis bin width, clamped to [1, 128] bins; degenerate samples
// collapse to a single bin.
Histogram histogram_fd(std::vector<double> values);

json histogram_json(const Histogram& h);

// NaN/inf-safe JSON number (non-finite becomes null).
json json_number(double v);

// ---------------------------------------------------------------------------
// Model persistence.

json model_to_json(const PredictiveModel& model);
std::unique_ptr<PredictiveModel> model_from_json(const json& j);

void save_model_pair(const std::string& path, const PredictiveModel& generic,
                     const PredictiveModel& personalized, Task task);
LoadedModels load_model_pair(const std::string& path);

}  // namespace paudit
