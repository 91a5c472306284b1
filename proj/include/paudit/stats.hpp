#pragma once

#include <optional>
#include <string>
#include <vector>

#include "paudit/common.hpp"

namespace paudit {

// Distribution families for per-sample benefit values.
enum class BopFamily { Categorical3, Gaussian, Laplace };

std::string to_string(BopFamily f);
BopFamily bop_family_from_string(const std::string& name);

// Principal branch of the Lambert W function for x >= 0, solved to
// |W e^W - x| <= 1e-12 * max(1, x).
double lambert_w0(double x);

// ---------------------------------------------------------------------------
// Distribution fitting for per-group benefit samples.
// ---------------------------------------------------------------------------
struct GroupDistParams {
    double mu = 0.0;
    double scale = 1.0;     // sigma (gaussian), b (laplace), sample std (categorical)
    bool degenerate = false;  // zero-variance group; scale floored at 1e-9
};

enum class FitChoice { Support, LogLikelihood };

struct BopDistributionFit {
    BopFamily family = BopFamily::Gaussian;
    std::vector<GroupDistParams> per_group;
    double loglik_gaussian = 0.0;
    double loglik_laplace = 0.0;
    std::optional<double> loglik_categorical;  // set when the support allows it
    FitChoice chosen_by = FitChoice::LogLikelihood;
};

// Maximum-likelihood fit per group. Benefit values supported on {-1, 0, +1}
// short-circuit to the categorical family; otherwise the family with the
// larger total log-likelihood wins (gaussian: mean / population std; laplace:
// median / mean absolute deviation about the median).
BopDistributionFit fit_bop_distribution(
    const std::vector<std::vector<double>>& values_per_group);

// ---------------------------------------------------------------------------
// Minimax lower bounds on the error probability of any audit test that
// decides between "some group gains nothing" and "every group gains at least
// epsilon", from group sizes and noise scales alone.
// ---------------------------------------------------------------------------
struct PeBound {
    double raw = 1.0;      // may be arbitrarily negative (even -inf)
    double clamped = 1.0;  // raw clipped to [0, 1]
};

// Benefit values on {-1, 0, +1}; requires 0 <= eps < 1/2. Kernel 1 + 4 eps^2.
PeBound pe_bound_categorical(double eps, const std::vector<std::size_t>& m);

// Gaussian benefit noise, kernel exp(eps^2 / sigma_j^2).
PeBound pe_bound_gaussian(double eps, const std::vector<std::size_t>& m,
                          const std::vector<double>& sigma);

// Double-exponential benefit noise, kernel exp(eps / b_j).
PeBound pe_bound_laplace(double eps, const std::vector<std::size_t>& m,
                         const std::vector<double>& b);

// Generalized Gaussian benefit noise with density
//   p(x) = beta / (2 alpha Gamma(1/beta)) * exp(-(|x - mu| / alpha)^beta),
// one (alpha, beta) shared by all groups. The divergence kernel is evaluated
// by adaptive quadrature and floored at exp((eps/alpha)^beta), the pointwise
// relaxation the closed-form corollaries use; a larger kernel only makes the
// reported lower bound more conservative. beta = 1 therefore reproduces
// pe_bound_laplace (b = alpha) and beta = 2 reproduces pe_bound_gaussian
// (sigma = alpha / sqrt(2), via Var = alpha^2 Gamma(3/beta) / Gamma(1/beta)).
PeBound pe_bound_gen_gaussian(double eps, const std::vector<std::size_t>& m,
                              double alpha, double beta);

// The quadrature estimate of that kernel, exposed for verification.
double gen_gaussian_kernel_quadrature(double eps, double alpha, double beta);

// Equal-group variants: all 2^k groups share one size and one scale, so the
// mixture collapses and the bound needs no per-group vectors. Planet-scale
// widths (k ~ 26, d ~ 7e7 groups) evaluate in O(1) memory. Agrees exactly
// with the vector forms on equal inputs.
PeBound pe_bound_equal_groups(BopFamily family, double eps, std::size_t k,
                              std::size_t m_each, double scale);
PeBound pe_bound_gen_gaussian_equal_groups(double eps, std::size_t k,
                                           std::size_t m_each, double alpha,
                                           double beta);

// Largest usable number of group attributes as a real value,
// (1 / ln 2) * W(argument); callers round to an integer attribute count.
// Argument: n*log(1+4 eps^2) (categorical), n eps^2 / scale^2 (gaussian),
// n eps / scale (laplace).
double max_attributes(BopFamily family, double n, double eps, double scale);

// Smallest eps at which the bound drops to 1/2 (bisection to
// |bound - 1/2| <= 1e-9). Throws NumericError("never reliable at this N,k")
// when no eps in the family's admissible range achieves it.
double min_reliable_epsilon(BopFamily family, const std::vector<std::size_t>& m,
                            const std::vector<double>& scales);

// ---------------------------------------------------------------------------
// Threshold test on the minimal group benefit.
// ---------------------------------------------------------------------------
struct BoundSpec {
    BopFamily family = BopFamily::Gaussian;
    double epsilon = 0.0;            // audited effect size, > 0
    std::vector<std::size_t> m;      // per-group sizes, each >= 1
    std::vector<double> scales;      // per-group sigma/b; ignored for categorical

    void validate() const;
};

enum class Verdict { RejectH0, FailToRejectH0 };

std::string to_string(Verdict v);

struct TestOutcome {
    double gamma_hat = 0.0;
    double epsilon = 0.0;
    Verdict verdict = Verdict::FailToRejectH0;
    double pe_lower_bound_raw = 1.0;
    double pe_lower_bound = 1.0;  // clamped to [0, 1]
    bool reliable = false;        // bound <= 1/2
    std::optional<double> min_reliable_eps;  // empty when never reliable
};

// Decide gamma_hat >= epsilon (boundary rejects) and attach the reliability
// diagnostics implied by the BoundSpec.
TestOutcome hypothesis_test(double gamma_hat, const BoundSpec& spec);

PeBound pe_bound(const BoundSpec& spec);

}  // namespace paudit
