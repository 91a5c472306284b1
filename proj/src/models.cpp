#include "paudit/models.hpp"

#include <algorithm>
#include <cmath>

namespace paudit {

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
    if (epochs < 0) throw UsageError("epochs must be non-negative");
    if (hidden < 1) throw UsageError("hidden width must be at least 1");
    if (l2 < 0.0) throw UsageError("L2 penalty must be non-negative");
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sigmoid(double z) {
    // Split by sign to avoid overflow in exp().
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

void check_inputs(const std::vector<std::vector<double>>& inputs,
                  const std::vector<double>& targets) {
    if (inputs.empty()) throw DataError("cannot fit a model on zero samples");
    if (inputs.size() != targets.size())
        throw DataError("inputs and targets must have equal length");
    std::size_t p = inputs[0].size();
    if (p == 0) throw DataError("cannot fit a model with zero input features");
    for (const auto& row : inputs)
        if (row.size() != p) throw DataError("ragged input rows");
}

struct Standardizer {
    double mu = 0.0;
    double sigma = 1.0;
};

Standardizer fit_standardizer(const std::vector<double>& y) {
    Standardizer st;
    st.mu = mean(y);
    double var = 0.0;
    for (double v : y) var += (v - st.mu) * (v - st.mu);
    var /= static_cast<double>(y.size());
    st.sigma = std::sqrt(var);
    if (st.sigma == 0.0) st.sigma = 1.0;  // constant targets: identity scale
    return st;
}

// Cholesky solve for a symmetric positive definite system. Returns false if a
// pivot collapses (rank deficiency).
bool solve_spd(std::vector<double>& a, std::vector<double>& rhs, std::size_t p) {
    double scale = 0.0;
    for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, std::abs(a[i * p + i]));
    double tol = 1e-12 * std::max(scale, 1.0);
    for (std::size_t j = 0; j < p; ++j) {
        double diag = a[j * p + j];
        for (std::size_t q = 0; q < j; ++q) diag -= a[j * p + q] * a[j * p + q];
        if (diag <= tol) return false;
        diag = std::sqrt(diag);
        a[j * p + j] = diag;
        for (std::size_t i = j + 1; i < p; ++i) {
            double v = a[i * p + j];
            for (std::size_t q = 0; q < j; ++q) v -= a[i * p + q] * a[j * p + q];
            a[i * p + j] = v / diag;
        }
    }
    // Forward then backward substitution against the lower factor.
    for (std::size_t i = 0; i < p; ++i) {
        double v = rhs[i];
        for (std::size_t q = 0; q < i; ++q) v -= a[i * p + q] * rhs[q];
        rhs[i] = v / a[i * p + i];
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t q = ii + 1; q < p; ++q) v -= a[q * p + ii] * rhs[q];
        rhs[ii] = v / a[ii * p + ii];
    }
    return true;
}

}  // namespace

double LinearModel::predict(const std::vector<double>& x) const {
    if (x.size() != w.size()) throw UsageError("input arity mismatch");
    return dot(w, x) + b;
}

std::vector<double> LinearModel::gradient(const std::vector<double>& x) const {
    if (x.size() != w.size()) throw UsageError("input arity mismatch");
    return w;
}

double LogisticModel::predict(const std::vector<double>& x) const {
    if (x.size() != w.size()) throw UsageError("input arity mismatch");
    return sigmoid(dot(w, x) + b);
}

std::vector<double> LogisticModel::gradient(const std::vector<double>& x) const {
    double p = predict(x);
    std::vector<double> g(w.size());
    double scale = p * (1.0 - p);
    for (std::size_t i = 0; i < w.size(); ++i) g[i] = scale * w[i];
    return g;
}

double Mlp1Model::predict(const std::vector<double>& x) const {
    if (x.size() != in) throw UsageError("input arity mismatch");
    double out = b2;
    for (std::size_t h = 0; h < hidden; ++h) {
        double z = b1[h];
        for (std::size_t i = 0; i < in; ++i) z += w1[h * in + i] * x[i];
        out += w2[h] * std::tanh(z);
    }
    if (task_kind == Task::Classification) return sigmoid(out);
    return y_mean + y_std * out;
}

std::vector<double> Mlp1Model::gradient(const std::vector<double>& x) const {
    if (x.size() != in) throw UsageError("input arity mismatch");
    std::vector<double> g(in, 0.0);
    double out = b2;
    std::vector<double> th(hidden);
    for (std::size_t h = 0; h < hidden; ++h) {
        double z = b1[h];
        for (std::size_t i = 0; i < in; ++i) z += w1[h * in + i] * x[i];
        th[h] = std::tanh(z);
        out += w2[h] * th[h];
    }
    double outer = task_kind == Task::Classification
                       ? [&] {
                             double p = sigmoid(out);
                             return p * (1.0 - p);
                         }()
                       : y_std;
    for (std::size_t h = 0; h < hidden; ++h) {
        double back = outer * w2[h] * (1.0 - th[h] * th[h]);
        for (std::size_t i = 0; i < in; ++i) g[i] += back * w1[h * in + i];
    }
    return g;
}

LinearModel fit_linear_regression(const std::vector<std::vector<double>>& inputs,
                                  const std::vector<double>& targets,
                                  const TrainConfig& cfg) {
    cfg.validate();
    check_inputs(inputs, targets);
    std::size_t n = inputs.size();
    std::size_t p = inputs[0].size();
    Standardizer st = fit_standardizer(targets);

    // Augmented design with a trailing intercept column; the ridge penalty
    // applies to the weights only.
    std::size_t q = p + 1;
    std::vector<double> a(q * q, 0.0), rhs(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = (targets[i] - st.mu) / st.sigma;
        for (std::size_t r = 0; r < q; ++r) {
            double xr = r < p ? inputs[i][r] : 1.0;
            rhs[r] += xr * z;
            for (std::size_t c = 0; c <= r; ++c) {
                double xc = c < p ? inputs[i][c] : 1.0;
                a[r * q + c] += xr * xc;
            }
        }
    }
    for (std::size_t r = 0; r < q; ++r)
        for (std::size_t c = r + 1; c < q; ++c) a[r * q + c] = a[c * q + r];
    for (std::size_t r = 0; r < p; ++r) a[r * q + r] += cfg.l2 * static_cast<double>(n);

    if (!solve_spd(a, rhs, q)) {
        if (cfg.l2 > 0.0)
            throw NumericError("normal equations not positive definite");
        throw NumericError(
            "design matrix is rank deficient; add an L2 penalty or drop collinear "
            "features");
    }

    LinearModel m;
    m.y_mean = st.mu;
    m.y_std = st.sigma;
    m.w.resize(p);
    for (std::size_t r = 0; r < p; ++r) m.w[r] = st.sigma * rhs[r];
    m.b = st.sigma * rhs[p] + st.mu;
    return m;
}

LogisticModel fit_logistic(const std::vector<std::vector<double>>& inputs,
                           const std::vector<double>& targets, const TrainConfig& cfg) {
    cfg.validate();
    check_inputs(inputs, targets);
    for (double y : targets)
        if (y != 0.0 && y != 1.0)
            throw DataError("logistic regression requires 0/1 targets");
    std::size_t n = inputs.size();
    std::size_t p = inputs[0].size();
    double inv_n = 1.0 / static_cast<double>(n);

    LogisticModel m;
    m.w.assign(p, 0.0);
    m.b = 0.0;

    auto loss_of = [&](const std::vector<double>& w, double b) {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = dot(w, inputs[i]) + b;
            // log(1 + exp(-|z|)) form keeps the loss finite for large |z|.
            double soft = std::log1p(std::exp(-std::abs(z)));
            loss += targets[i] == 1.0 ? (z >= 0.0 ? soft : soft - z)
                                      : (z >= 0.0 ? soft + z : soft);
        }
        loss *= inv_n;
        loss += 0.5 * cfg.l2 * dot(w, w);
        return loss;
    };

    constexpr int kMaxHalvings = 40;
    double lr = cfg.lr;
    double loss = loss_of(m.w, m.b);
    std::vector<double> gw(p);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = sigmoid(dot(m.w, inputs[i]) + m.b) - targets[i];
            for (std::size_t j = 0; j < p; ++j) gw[j] += r * inputs[i][j];
            gb += r;
        }
        for (std::size_t j = 0; j < p; ++j) gw[j] = gw[j] * inv_n + cfg.l2 * m.w[j];
        gb *= inv_n;

        // Backtracking: shrink the step until the loss does not increase.
        int halvings = 0;
        for (;; ++halvings) {
            if (halvings > kMaxHalvings)
                throw NumericError("logistic regression diverged: step size collapsed");
            std::vector<double> wt(p);
            for (std::size_t j = 0; j < p; ++j) wt[j] = m.w[j] - lr * gw[j];
            double bt = m.b - lr * gb;
            double cand = loss_of(wt, bt);
            if (cand <= loss) {
                m.w = std::move(wt);
                m.b = bt;
                loss = cand;
                break;
            }
            lr *= 0.5;
        }
    }
    return m;
}

Mlp1Model fit_mlp(const std::vector<std::vector<double>>& inputs,
                  const std::vector<double>& targets, Task task, const TrainConfig& cfg) {
    cfg.validate();
    check_inputs(inputs, targets);
    if (task == Task::Classification)
        for (double y : targets)
            if (y != 0.0 && y != 1.0)
                throw DataError("classification requires 0/1 targets");
    std::size_t n = inputs.size();
    std::size_t p = inputs[0].size();
    std::size_t h = static_cast<std::size_t>(cfg.hidden);
    double inv_n = 1.0 / static_cast<double>(n);

    Mlp1Model m;
    m.task_kind = task;
    m.in = p;
    m.hidden = h;
    if (task == Task::Regression) {
        Standardizer st = fit_standardizer(targets);
        m.y_mean = st.mu;
        m.y_std = st.sigma;
    }
    std::vector<double> z(n);  // standardized regression targets / 0-1 labels
    for (std::size_t i = 0; i < n; ++i)
        z[i] = task == Task::Regression ? (targets[i] - m.y_mean) / m.y_std : targets[i];

    Rng rng(cfg.seed);
    double bound1 = 1.0 / std::sqrt(static_cast<double>(p));
    double bound2 = 1.0 / std::sqrt(static_cast<double>(h));
    m.w1.resize(h * p);
    m.b1.assign(h, 0.0);
    m.w2.resize(h);
    for (auto& v : m.w1) v = rng.uniform(-bound1, bound1);
    for (auto& v : m.w2) v = rng.uniform(-bound2, bound2);
    m.b2 = 0.0;

    std::vector<double> th(h), gw1(h * p), gb1(h), gw2(h);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::fill(gw1.begin(), gw1.end(), 0.0);
        std::fill(gb1.begin(), gb1.end(), 0.0);
        std::fill(gw2.begin(), gw2.end(), 0.0);
        double gb2 = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = inputs[i];
            double out = m.b2;
            for (std::size_t u = 0; u < h; ++u) {
                double a = m.b1[u];
                for (std::size_t j = 0; j < p; ++j) a += m.w1[u * p + j] * x[j];
                th[u] = std::tanh(a);
                out += m.w2[u] * th[u];
            }
            double delta;  // d(loss_i)/d(out)
            if (task == Task::Regression) {
                double r = out - z[i];
                loss += r * r;
                delta = 2.0 * r;
            } else {
                double prob = sigmoid(out);
                loss += z[i] == 1.0 ? -std::log(std::max(prob, 1e-300))
                                    : -std::log(std::max(1.0 - prob, 1e-300));
                delta = prob - z[i];
            }
            for (std::size_t u = 0; u < h; ++u) {
                gw2[u] += delta * th[u];
                double back = delta * m.w2[u] * (1.0 - th[u] * th[u]);
                gb1[u] += back;
                for (std::size_t j = 0; j < p; ++j) gw1[u * p + j] += back * x[j];
            }
            gb2 += delta;
        }
        loss *= inv_n;
        if (!std::isfinite(loss))
            throw NumericError("network training produced a non-finite loss");
        for (std::size_t q = 0; q < h * p; ++q)
            m.w1[q] -= cfg.lr * (gw1[q] * inv_n + cfg.l2 * m.w1[q]);
        for (std::size_t u = 0; u < h; ++u) {
            m.b1[u] -= cfg.lr * gb1[u] * inv_n;
            m.w2[u] -= cfg.lr * (gw2[u] * inv_n + cfg.l2 * m.w2[u]);
        }
        m.b2 -= cfg.lr * gb2 * inv_n;
    }
    // A final forward pass guards zero-epoch fits as well.
    double check = m.predict(inputs[0]);
    if (!std::isfinite(check))
        throw NumericError("network produced a non-finite prediction");
    return m;
}

std::vector<std::vector<double>> model_inputs(const AuditDataset& data, ModelTag tag) {
    std::vector<std::vector<double>> rows(data.n);
    for (std::size_t i = 0; i < data.n; ++i) rows[i] = data.model_input(i, tag);
    return rows;
}

std::vector<double> predict_all(const PredictiveModel& model,
                                const std::vector<std::vector<double>>& inputs) {
    std::vector<double> out(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = model.predict(inputs[i]);
    return out;
}

}  // namespace paudit
