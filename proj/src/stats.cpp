#include "paudit/stats.hpp"

#include <algorithm>
#include <cmath>

namespace paudit {

std::string to_string(BopFamily f) {
    switch (f) {
        case BopFamily::Categorical3: return "categorical";
        case BopFamily::Gaussian: return "gaussian";
        case BopFamily::Laplace: return "laplace";
    }
    return "?";
}

BopFamily bop_family_from_string(const std::string& name) {
    if (name == "categorical") return BopFamily::Categorical3;
    if (name == "gaussian") return BopFamily::Gaussian;
    if (name == "laplace") return BopFamily::Laplace;
    throw UsageError("unknown distribution family: " + name);
}

std::string to_string(Verdict v) {
    return v == Verdict::RejectH0 ? "reject_h0" : "fail_to_reject_h0";
}

double lambert_w0(double x) {
    if (!(x >= 0.0)) throw UsageError("lambert_w0 requires x >= 0");
    if (x == 0.0) return 0.0;
    // Seed Halley iteration with the small-x series or the asymptotic form.
    double w;
    if (x < 2.718281828459045) {
        w = x / (1.0 + x);
    } else {
        double l1 = std::log(x);
        double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    }
    for (int it = 0; it < 100; ++it) {
        double ew = std::exp(w);
        double f = w * ew - x;
        if (std::abs(f) <= 1e-13 * std::max(1.0, x)) break;
        double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        w -= f / denom;
    }
    return w;
}

namespace {

// Assemble 1 - (1/(2 sqrt(d))) * sqrt(exp(l_mix) - 1) where
// l_mix = log((1/d) sum_j K_j^{m_j}), entirely in log space so huge
// exponents degrade to raw = -inf instead of NaN.
PeBound assemble_from_lmix(double l_mix, double log_d) {
    // Kernels are >= 1, so l_mix >= 0 with equality exactly at eps = 0.
    PeBound out;
    if (l_mix <= 0.0) {
        out.raw = 1.0;
        out.clamped = 1.0;
        return out;
    }
    double half_log_bracket;
    if (l_mix < 700.0) {
        half_log_bracket = 0.5 * std::log(std::expm1(l_mix));
    } else {
        half_log_bracket = 0.5 * l_mix;  // e^l dominates the -1
    }
    out.raw = 1.0 - std::exp(half_log_bracket - std::log(2.0) - 0.5 * log_d);
    out.clamped = std::min(1.0, std::max(0.0, out.raw));
    return out;
}

PeBound assemble_bound(const std::vector<double>& m_log_kernel) {
    std::size_t d = m_log_kernel.size();
    double mx = 0.0;
    for (double t : m_log_kernel) mx = std::max(mx, t);
    double acc = 0.0;
    for (double t : m_log_kernel) acc += std::exp(t - mx);
    double l_mix = mx + std::log(acc) - std::log(static_cast<double>(d));
    return assemble_from_lmix(l_mix, std::log(static_cast<double>(d)));
}

void check_eps(double eps) {
    if (!(eps >= 0.0)) throw UsageError("epsilon must be non-negative");
}

void check_scales(const std::vector<std::size_t>& m, const std::vector<double>& s,
                  const char* what) {
    if (m.empty()) throw UsageError("at least one group is required");
    if (s.size() != m.size())
        throw UsageError(std::string(what) + " must have one entry per group");
    for (double v : s)
        if (!(v > 0.0)) throw UsageError(std::string(what) + " must be positive");
}

}  // namespace

PeBound pe_bound_categorical(double eps, const std::vector<std::size_t>& m) {
    check_eps(eps);
    if (m.empty()) throw UsageError("at least one group is required");
    if (!(eps < 0.5))
        throw UsageError("categorical benefits admit effect sizes below 1/2 only");
    double log_kernel = std::log1p(4.0 * eps * eps);
    std::vector<double> terms(m.size());
    for (std::size_t j = 0; j < m.size(); ++j)
        terms[j] = static_cast<double>(m[j]) * log_kernel;
    return assemble_bound(terms);
}

PeBound pe_bound_gaussian(double eps, const std::vector<std::size_t>& m,
                          const std::vector<double>& sigma) {
    check_eps(eps);
    check_scales(m, sigma, "sigma");
    std::vector<double> terms(m.size());
    for (std::size_t j = 0; j < m.size(); ++j)
        terms[j] = static_cast<double>(m[j]) * eps * eps / (sigma[j] * sigma[j]);
    return assemble_bound(terms);
}

PeBound pe_bound_laplace(double eps, const std::vector<std::size_t>& m,
                         const std::vector<double>& b) {
    check_eps(eps);
    check_scales(m, b, "b");
    std::vector<double> terms(m.size());
    for (std::size_t j = 0; j < m.size(); ++j)
        terms[j] = static_cast<double>(m[j]) * eps / b[j];
    return assemble_bound(terms);
}

namespace {

// Adaptive Simpson quadrature with an absolute tolerance.
struct SimpsonState {
    int max_depth = 60;
    bool converged = true;
};

template <typename F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth, SimpsonState& st) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= st.max_depth) {
        st.converged = false;
        return left + right;
    }
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, st) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, st);
}

template <typename F>
double simpson(const F& f, double a, double b, double tol, SimpsonState& st) {
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 0, st);
}

}  // namespace

double gen_gaussian_kernel_quadrature(double eps, double alpha, double beta) {
    if (!(alpha > 0.0)) throw UsageError("alpha must be positive");
    if (!(beta > 0.0)) throw UsageError("beta must be positive");
    check_eps(eps);
    // In units of alpha: K = c * Int exp(-(2|u - e|^beta - |u|^beta)) du with
    // c = beta / (2 Gamma(1/beta)); kinks at u = 0 and u = e split the panels.
    double e = eps / alpha;
    double c = beta / (2.0 * std::tgamma(1.0 / beta));
    auto integrand = [&](double u) {
        double expo = 2.0 * std::pow(std::abs(u - e), beta) - std::pow(std::abs(u), beta);
        if (expo > 745.0) return 0.0;
        return c * std::exp(-expo);
    };
    // Truncate where 2|u-e|^beta - |u|^beta certainly exceeds 745:
    // for |u| >= R with R large, the exponent grows like |u|^beta.
    double reach = std::pow(800.0, 1.0 / beta);
    double lo = -(2.0 * reach + e);
    double hi = e + 2.0 * reach;
    SimpsonState st;
    double tol = 1e-11;
    double total = simpson(integrand, lo, 0.0, tol, st) +
                   simpson(integrand, 0.0, e, tol, st) +
                   simpson(integrand, e, hi, tol, st);
    if (!st.converged)
        throw NumericError("kernel quadrature failed to converge");
    return total;
}

PeBound pe_bound_gen_gaussian(double eps, const std::vector<std::size_t>& m,
                              double alpha, double beta) {
    check_eps(eps);
    if (m.empty()) throw UsageError("at least one group is required");
    if (eps == 0.0) {
        std::vector<double> zero(m.size(), 0.0);
        return assemble_bound(zero);
    }
    double k_quad = gen_gaussian_kernel_quadrature(eps, alpha, beta);
    double log_floor = std::pow(eps / alpha, beta);
    double log_kernel = std::max(std::log(k_quad), log_floor);
    std::vector<double> terms(m.size());
    for (std::size_t j = 0; j < m.size(); ++j)
        terms[j] = static_cast<double>(m[j]) * log_kernel;
    return assemble_bound(terms);
}

namespace {

double equal_group_log_kernel(BopFamily family, double eps, double scale) {
    switch (family) {
        case BopFamily::Categorical3:
            if (!(eps < 0.5))
                throw UsageError(
                    "categorical benefits admit effect sizes below 1/2 only");
            return std::log1p(4.0 * eps * eps);
        case BopFamily::Gaussian:
            if (!(scale > 0.0)) throw UsageError("sigma must be positive");
            return eps * eps / (scale * scale);
        case BopFamily::Laplace:
            if (!(scale > 0.0)) throw UsageError("b must be positive");
            return eps / scale;
    }
    throw UsageError("unsupported family");
}

void check_equal_group_shape(std::size_t k, std::size_t m_each) {
    if (k > 62) throw UsageError("attribute count must be at most 62");
    if (m_each < 1) throw UsageError("group size must be at least 1");
}

constexpr double kLn2 = 0.6931471805599453;

}  // namespace

PeBound pe_bound_equal_groups(BopFamily family, double eps, std::size_t k,
                              std::size_t m_each, double scale) {
    check_eps(eps);
    check_equal_group_shape(k, m_each);
    double log_kernel = equal_group_log_kernel(family, eps, scale);
    return assemble_from_lmix(static_cast<double>(m_each) * log_kernel,
                              static_cast<double>(k) * kLn2);
}

PeBound pe_bound_gen_gaussian_equal_groups(double eps, std::size_t k,
                                           std::size_t m_each, double alpha,
                                           double beta) {
    check_eps(eps);
    check_equal_group_shape(k, m_each);
    if (!(alpha > 0.0)) throw UsageError("alpha must be positive");
    if (!(beta > 0.0)) throw UsageError("beta must be positive");
    if (eps == 0.0)
        return assemble_from_lmix(0.0, static_cast<double>(k) * kLn2);
    double k_quad = gen_gaussian_kernel_quadrature(eps, alpha, beta);
    double log_kernel = std::max(std::log(k_quad), std::pow(eps / alpha, beta));
    return assemble_from_lmix(static_cast<double>(m_each) * log_kernel,
                              static_cast<double>(k) * kLn2);
}

double max_attributes(BopFamily family, double n, double eps, double scale) {
    if (!(n > 0.0)) throw UsageError("population size must be positive");
    if (!(eps > 0.0)) throw UsageError("epsilon must be positive");
    double argument;
    switch (family) {
        case BopFamily::Categorical3:
            if (!(eps < 0.5))
                throw UsageError("categorical benefits admit effect sizes below 1/2 only");
            argument = n * std::log1p(4.0 * eps * eps);
            break;
        case BopFamily::Gaussian:
            if (!(scale > 0.0)) throw UsageError("sigma must be positive");
            argument = n * eps * eps / (scale * scale);
            break;
        case BopFamily::Laplace:
            if (!(scale > 0.0)) throw UsageError("b must be positive");
            argument = n * eps / scale;
            break;
        default:
            throw UsageError("unsupported family");
    }
    return lambert_w0(argument) / 0.6931471805599453;
}

namespace {

PeBound family_bound(BopFamily family, double eps, const std::vector<std::size_t>& m,
                     const std::vector<double>& scales) {
    switch (family) {
        case BopFamily::Categorical3: return pe_bound_categorical(eps, m);
        case BopFamily::Gaussian: return pe_bound_gaussian(eps, m, scales);
        case BopFamily::Laplace: return pe_bound_laplace(eps, m, scales);
    }
    throw UsageError("unsupported family");
}

}  // namespace

double min_reliable_epsilon(BopFamily family, const std::vector<std::size_t>& m,
                            const std::vector<double>& scales) {
    if (m.empty()) throw UsageError("at least one group is required");
    auto bound_at = [&](double eps) { return family_bound(family, eps, m, scales).raw; };

    double lo = 0.0;  // bound = 1 here
    double hi;
    if (family == BopFamily::Categorical3) {
        hi = 0.5 - 1e-12;
        if (bound_at(hi) > 0.5)
            throw NumericError("never reliable at this N,k");
    } else {
        // Grow until the bound dips under 1/2; scale-free upper sweep.
        double smin = *std::min_element(scales.begin(), scales.end());
        hi = 1e-9 * smin;
        bool found = false;
        for (int it = 0; it < 200; ++it) {
            if (bound_at(hi) <= 0.5) {
                found = true;
                break;
            }
            hi *= 2.0;
        }
        if (!found) throw NumericError("never reliable at this N,k");
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double v = bound_at(mid);
        if (std::abs(v - 0.5) <= 1e-9) return mid;
        if (v > 0.5)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(bound_at(mid) - 0.5) <= 1e-9) return mid;
    throw NumericError("bisection for the reliable effect size did not converge");
}

void BoundSpec::validate() const {
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
    if (m.empty()) throw UsageError("at least one group is required");
    for (std::size_t mj : m)
        if (mj < 1) throw UsageError("every group needs at least one sample");
    if (family == BopFamily::Categorical3) {
        if (!(epsilon < 0.5))
            throw UsageError("categorical benefits admit effect sizes below 1/2 only");
    } else {
        check_scales(m, scales, "scales");
    }
}

PeBound pe_bound(const BoundSpec& spec) {
    spec.validate();
    return family_bound(spec.family, spec.epsilon, spec.m, spec.scales);
}

TestOutcome hypothesis_test(double gamma_hat, const BoundSpec& spec) {
    spec.validate();
    TestOutcome out;
    out.gamma_hat = gamma_hat;
    out.epsilon = spec.epsilon;
    out.verdict = gamma_hat >= spec.epsilon ? Verdict::RejectH0
                                            : Verdict::FailToRejectH0;
    PeBound pb = family_bound(spec.family, spec.epsilon, spec.m, spec.scales);
    out.pe_lower_bound_raw = pb.raw;
    out.pe_lower_bound = pb.clamped;
    out.reliable = pb.clamped <= 0.5;
    try {
        out.min_reliable_eps = min_reliable_epsilon(spec.family, spec.m, spec.scales);
    } catch (const NumericError&) {
        out.min_reliable_eps.reset();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Distribution fitting.
// ---------------------------------------------------------------------------
namespace {

constexpr double kScaleFloor = 1e-9;

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BopDistributionFit fit_bop_distribution(
    const std::vector<std::vector<double>>& values_per_group) {
    if (values_per_group.empty())
        throw UsageError("at least one group is required");
    bool any_values = false;
    bool categorical_support = true;
    for (const auto& g : values_per_group)
        for (double v : g) {
            any_values = true;
            if (!std::isfinite(v)) throw DataError("non-finite benefit value");
            if (v != -1.0 && v != 0.0 && v != 1.0) categorical_support = false;
        }
    if (!any_values) throw DataError("cannot fit a distribution to zero samples");

    BopDistributionFit fit;
    fit.per_group.resize(values_per_group.size());
    double ll_gauss = 0.0, ll_lap = 0.0, ll_cat = 0.0;
    constexpr double kLog2Pi = 1.8378770664093453;

    for (std::size_t j = 0; j < values_per_group.size(); ++j) {
        const auto& v = values_per_group[j];
        GroupDistParams& gp = fit.per_group[j];
        if (v.empty()) {
            gp = GroupDistParams{0.0, kScaleFloor, true};
            continue;
        }
        double n = static_cast<double>(v.size());
        double mu = mean(v);
        double var = 0.0, ad = 0.0;
        double med = median_of(v);
        for (double x : v) {
            var += (x - mu) * (x - mu);
            ad += std::abs(x - med);
        }
        var /= n;
        double sigma = std::sqrt(var);
        double bscale = ad / n;

        bool degenerate = sigma <= 0.0 || bscale <= 0.0;
        double sigma_eff = std::max(sigma, kScaleFloor);
        double b_eff = std::max(bscale, kScaleFloor);
        ll_gauss += -0.5 * n * (kLog2Pi + 2.0 * std::log(sigma_eff)) -
                    0.5 * n * var / (sigma_eff * sigma_eff);
        ll_lap += -n * std::log(2.0 * b_eff) - ad / b_eff;
        if (categorical_support) {
            double counts[3] = {0, 0, 0};
            for (double x : v) counts[static_cast<int>(x) + 1] += 1.0;
            for (double c : counts)
                if (c > 0) ll_cat += c * std::log(c / n);
        }
        // Report the family-relevant location/scale pair; both families'
        // parameters are recomputed from the winning family below.
        gp.mu = mu;
        gp.scale = sigma_eff;
        gp.degenerate = degenerate;
    }

    fit.loglik_gaussian = ll_gauss;
    fit.loglik_laplace = ll_lap;
    if (categorical_support) {
        fit.loglik_categorical = ll_cat;
        fit.family = BopFamily::Categorical3;
        fit.chosen_by = FitChoice::Support;
        return fit;  // per-group (mean, std) already describe the support fit
    }
    fit.chosen_by = FitChoice::LogLikelihood;
    if (ll_lap > ll_gauss) {
        fit.family = BopFamily::Laplace;
        for (std::size_t j = 0; j < values_per_group.size(); ++j) {
            const auto& v = values_per_group[j];
            if (v.empty()) continue;
            double med = median_of(v);
            double ad = 0.0;
            for (double x : v) ad += std::abs(x - med);
            double b = ad / static_cast<double>(v.size());
            fit.per_group[j].mu = med;
            fit.per_group[j].scale = std::max(b, kScaleFloor);
            fit.per_group[j].degenerate = b <= 0.0;
        }
    } else {
        fit.family = BopFamily::Gaussian;
    }
    return fit;
}

}  // namespace paudit
