#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "paudit/core.hpp"

namespace paudit {

struct TrainConfig {
    double lr = 0.5;
    int epochs = 500;
    int hidden = 8;
    double l2 = 0.0;
    std::uint64_t seed = 1;

    // lr > 0, hidden >= 1, l2 >= 0, epochs >= 0 (zero epochs = seeded init only).
    void validate() const;
};

// A trained predictor. predict() returns the regression value in original
// label units, or the class-1 probability for classification. gradient() is
// the analytic derivative of that output with respect to the input.
class PredictiveModel {
public:
    virtual ~PredictiveModel() = default;
    virtual double predict(const std::vector<double>& x) const = 0;
    virtual std::vector<double> gradient(const std::vector<double>& x) const = 0;
    virtual std::size_t arity() const = 0;
    virtual Task task() const = 0;
    virtual std::string kind() const = 0;
};

class LinearModel final : public PredictiveModel {
public:
    std::vector<double> w;  // original-unit weights (standardizer folded in)
    double b = 0.0;
    double y_mean = 0.0;  // target standardizer used during training
    double y_std = 1.0;

    double predict(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    std::size_t arity() const override { return w.size(); }
    Task task() const override { return Task::Regression; }
    std::string kind() const override { return "linear"; }
};

class LogisticModel final : public PredictiveModel {
public:
    std::vector<double> w;
    double b = 0.0;

    double predict(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    std::size_t arity() const override { return w.size(); }
    Task task() const override { return Task::Classification; }
    std::string kind() const override { return "logistic"; }
};

// One hidden layer with tanh activation. Regression output is affine in the
// hidden units (rescaled to original label units); classification applies a
// logistic output unit and trains on cross-entropy.
class Mlp1Model final : public PredictiveModel {
public:
    Task task_kind = Task::Regression;
    std::size_t in = 0;
    std::size_t hidden = 0;
    std::vector<double> w1;  // hidden x in, row-major
    std::vector<double> b1;  // hidden
    std::vector<double> w2;  // hidden
    double b2 = 0.0;
    double y_mean = 0.0;
    double y_std = 1.0;

    double predict(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    std::size_t arity() const override { return in; }
    Task task() const override { return task_kind; }
    std::string kind() const override { return "mlp1"; }
};

// Exact least squares via the normal equations (closed form; lr/epochs
// ignored). Throws NumericError when the system is rank deficient and the
// ridge penalty is zero.
LinearModel fit_linear_regression(const std::vector<std::vector<double>>& inputs,
                                  const std::vector<double>& targets,
                                  const TrainConfig& cfg);

// Full-batch gradient descent on mean cross-entropy. Each step that would
// increase the loss halves the rate; exhausting the halvings is divergence.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& inputs,
                           const std::vector<double>& targets, const TrainConfig& cfg);

// Full-batch gradient descent; squared loss for regression targets,
// cross-entropy for classification. Non-finite loss aborts with NumericError.
Mlp1Model fit_mlp(const std::vector<std::vector<double>>& inputs,
                  const std::vector<double>& targets, Task task, const TrainConfig& cfg);

// Rows for the generic (t columns) or personalized (t+k columns) model.
std::vector<std::vector<double>> model_inputs(const AuditDataset& data, ModelTag tag);

std::vector<double> predict_all(const PredictiveModel& model,
                                const std::vector<std::vector<double>>& inputs);

}  // namespace paudit
