// paudit: benefit-of-personalization auditing from the command line.
//
// Subcommands:
//   audit     train (or load) a generic/personalized model pair on a CSV
//             dataset and report per-group benefit metrics with reliability
//             diagnostics
//   bound     evaluate the minimax error lower bound for a family/effect size
//   maxk      largest auditable number of binary group attributes
//   simulate  Monte Carlo check that the threshold test's error dominates the
//             analytic bound
//   scenario  generate synthetic benchmark datasets with known analytics

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "paudit/cli_support.hpp"

namespace {

using paudit::DataError;
using paudit::NumericError;
using paudit::UsageError;
using paudit::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << text;
    if (!out) throw DataError("write failed: " + path);
}

paudit::Task parse_task(const std::string& s) {
    if (s == "classification") return paudit::Task::Classification;
    if (s == "regression") return paudit::Task::Regression;
    throw UsageError("unknown task: " + s);
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

struct AuditArgs {
    std::string data_path;
    std::string task = "classification";
    std::string oracle;
    std::string model;  // empty = auto (logistic / linear by task)
    int epochs = 500;
    double lr = 0.5;
    int hidden = 8;
    double l2 = 0.0;
    std::uint64_t seed = 1;
    double split = 0.3;
    double epsilon = 0.01;
    int r = -1;
    int steps = 128;
    bool pooled_scale = false;
    bool sweep = false;
    std::string out_path;
    std::string groups_csv_path;
    std::string save_models_path;
    std::string load_models_path;
};

void run_audit_cmd(const AuditArgs& a) {
    paudit::AuditConfig cfg;
    cfg.task = parse_task(a.task);
    if (!a.model.empty())
        cfg.model = a.model;
    else
        cfg.model = cfg.task == paudit::Task::Classification ? "logistic" : "linear";
    if (!a.oracle.empty()) cfg.oracle = a.oracle;
    cfg.train.lr = a.lr;
    cfg.train.epochs = a.epochs;
    cfg.train.hidden = a.hidden;
    cfg.train.l2 = a.l2;
    cfg.train.seed = a.seed;
    cfg.test_fraction = a.split;
    cfg.epsilon = a.epsilon;
    cfg.r = a.r;
    cfg.steps = a.steps;
    cfg.pooled_scale = a.pooled_scale;
    cfg.run_r_sweep = a.sweep;
    cfg.seed = a.seed;
    cfg.validate();  // fail fast on usage errors before touching the data

    paudit::AuditDataset data = paudit::read_dataset_csv(a.data_path, cfg.task);

    std::optional<paudit::LoadedModels> loaded;
    if (!a.load_models_path.empty())
        loaded = paudit::load_model_pair(a.load_models_path);

    paudit::AuditOutputs outs =
        paudit::run_audit(data, cfg, loaded ? &*loaded : nullptr);

    if (!a.save_models_path.empty())
        paudit::save_model_pair(a.save_models_path, *outs.generic,
                                *outs.personalized, cfg.task);
    if (!a.groups_csv_path.empty()) write_text(a.groups_csv_path, outs.groups_csv);
    write_text(a.out_path, outs.report.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

struct BoundArgs {
    std::string family;
    double epsilon = 0.0;
    double n = 0.0;
    std::size_t k = 1;
    double sigma = 0.0;
    double b = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::string curve;
    std::string out_path;
};

std::size_t group_size_for(double n, std::size_t k) {
    double m = std::floor(n / std::ldexp(1.0, static_cast<int>(k)));
    if (m < 1.0)
        throw UsageError("fewer than one sample per group at k = " + std::to_string(k));
    return static_cast<std::size_t>(m);
}

paudit::PeBound bound_at(const BoundArgs& a, double eps, std::size_t k) {
    std::size_t m = group_size_for(a.n, k);
    if (a.family == "categorical")
        return paudit::pe_bound_equal_groups(paudit::BopFamily::Categorical3, eps, k,
                                             m, 0.0);
    if (a.family == "gaussian")
        return paudit::pe_bound_equal_groups(paudit::BopFamily::Gaussian, eps, k, m,
                                             a.sigma);
    if (a.family == "laplace")
        return paudit::pe_bound_equal_groups(paudit::BopFamily::Laplace, eps, k, m,
                                             a.b);
    if (a.family == "gengaussian")
        return paudit::pe_bound_gen_gaussian_equal_groups(eps, k, m, a.alpha, a.beta);
    throw UsageError("unknown family: " + a.family);
}

void check_bound_scales(const BoundArgs& a) {
    if (a.family == "gaussian" && !(a.sigma > 0.0))
        throw UsageError("--sigma is required (positive) for the gaussian family");
    if (a.family == "laplace" && !(a.b > 0.0))
        throw UsageError("--b is required (positive) for the laplace family");
    if (a.family == "gengaussian" && (!(a.alpha > 0.0) || !(a.beta > 0.0)))
        throw UsageError(
            "--alpha and --beta are required (positive) for the gengaussian family");
}

void run_bound_cmd(const BoundArgs& a) {
    check_bound_scales(a);
    if (a.k < 1) throw UsageError("k must be at least 1");
    if (a.curve.empty()) {
        paudit::PeBound out = bound_at(a, a.epsilon, a.k);
        write_text(a.out_path, format_double(out.clamped) + "\n");
        return;
    }
    std::ostringstream csv;
    csv << "sweep_var,pe_lower_bound_raw,pe_lower_bound_clamped\n";
    if (a.curve == "eps") {
        const int points = 50;
        for (int i = 0; i <= points; ++i) {
            double e = a.epsilon * static_cast<double>(i) / points;
            paudit::PeBound out = bound_at(a, e, a.k);
            csv << format_double(e) << ',' << format_double(out.raw) << ','
                << format_double(out.clamped) << '\n';
        }
    } else if (a.curve == "k") {
        for (std::size_t k = 1; k <= a.k; ++k) {
            paudit::PeBound out = bound_at(a, a.epsilon, k);
            csv << k << ',' << format_double(out.raw) << ','
                << format_double(out.clamped) << '\n';
        }
    } else {
        throw UsageError("--curve must be 'eps' or 'k'");
    }
    write_text(a.out_path, csv.str());
}

// ---------------------------------------------------------------------------
// maxk
// ---------------------------------------------------------------------------

struct MaxkArgs {
    std::string family;
    double epsilon = 0.0;
    double n = 0.0;
    double sigma = 0.0;
    double b = 0.0;
    bool as_json = false;
    std::string out_path;
};

void run_maxk_cmd(const MaxkArgs& a) {
    paudit::BopFamily family = paudit::bop_family_from_string(a.family);
    double scale = 0.0;
    if (family == paudit::BopFamily::Gaussian) {
        if (!(a.sigma > 0.0))
            throw UsageError("--sigma is required (positive) for the gaussian family");
        scale = a.sigma;
    } else if (family == paudit::BopFamily::Laplace) {
        if (!(a.b > 0.0))
            throw UsageError("--b is required (positive) for the laplace family");
        scale = a.b;
    }
    double real = paudit::max_attributes(family, a.n, a.epsilon, scale);
    long long k_max = std::llround(real);
    if (a.as_json) {
        json doc{{"schema_version", paudit::kSchemaVersion},
                 {"tool_version", paudit::kVersion},
                 {"command", "maxk"},
                 {"family", a.family},
                 {"epsilon", a.epsilon},
                 {"n", a.n},
                 {"k_max", k_max},
                 {"k_max_real", real}};
        write_text(a.out_path, doc.dump(2) + "\n");
    } else {
        write_text(a.out_path, std::to_string(k_max) + "\n");
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string family;
    double epsilon = 0.0;
    std::size_t d = 2;
    std::size_t m = 100;
    std::size_t trials = 2000;
    std::uint64_t seed = 1;
    double sigma = 0.0;
    double b = 0.0;
    std::string out_path;
};

void run_simulate_cmd(const SimulateArgs& a) {
    paudit::BopFamily family = paudit::bop_family_from_string(a.family);
    std::vector<double> scales;
    if (family == paudit::BopFamily::Gaussian) {
        if (!(a.sigma > 0.0))
            throw UsageError("--sigma is required (positive) for the gaussian family");
        scales = {a.sigma};
    } else if (family == paudit::BopFamily::Laplace) {
        if (!(a.b > 0.0))
            throw UsageError("--b is required (positive) for the laplace family");
        scales = {a.b};
    }
    if (a.d < 2) throw UsageError("d must be at least 2");
    paudit::WorstCasePair pair =
        paudit::build_worst_case_pair(family, a.epsilon, a.d, {a.m}, scales, a.seed);
    paudit::SimulationResult res = paudit::simulate_pe(pair, a.trials, a.seed);
    json doc{{"schema_version", paudit::kSchemaVersion},
             {"tool_version", paudit::kVersion},
             {"command", "simulate"},
             {"family", a.family},
             {"epsilon", a.epsilon},
             {"d", a.d},
             {"m", a.m},
             {"trials", res.trials},
             {"seed", a.seed},
             {"type_i", res.type_i},
             {"type_ii", res.type_ii},
             {"empirical_pe", res.empirical_pe},
             {"ci_half_width", res.ci_half_width},
             {"analytic_bound_raw", paudit::json_number(res.bound_raw)},
             {"analytic_bound", res.bound_clamped},
             {"dominance_ok", res.dominance_ok}};
    if (!scales.empty()) doc["scale"] = scales[0];
    write_text(a.out_path, doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// scenario
// ---------------------------------------------------------------------------

struct ScenarioArgs {
    std::string name;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string analytics_path;
    std::vector<double> alphas_x = {1.0};
    std::vector<double> alphas_s = {1.0};
    std::vector<double> var_x = {1.0};
    std::vector<double> var_s = {1.0};
    double var_eps = 0.25;
};

void run_scenario_cmd(const ScenarioArgs& a) {
    json doc{{"schema_version", paudit::kSchemaVersion},
             {"tool_version", paudit::kVersion},
             {"command", "scenario"},
             {"name", a.name},
             {"n", a.n},
             {"seed", a.seed}};
    if (a.name == "sumsign") {
        paudit::SumSignScenario sc = paudit::gen_sum_sign(a.n, a.seed);
        paudit::write_dataset_csv(a.out_path, sc.data);
        doc["task"] = "classification";
        doc["analytics"] = json{
            {"bop_prediction", sc.analytics.bop_prediction},
            {"sufficiency_change_generic", sc.analytics.sufficiency_change_generic},
            {"sufficiency_change_personalized",
             sc.analytics.sufficiency_change_personalized},
            {"removal_change_generic", sc.analytics.removal_change_generic},
            {"removal_change_personalized", sc.analytics.removal_change_personalized},
            {"sufficiency_gap", sc.analytics.sufficiency_gap},
            {"incomprehensiveness_gap", sc.analytics.incomprehensiveness_gap}};
    } else if (a.name == "additive") {
        paudit::AdditiveScenario sc;
        sc.alphas_x = a.alphas_x;
        sc.alphas_s = a.alphas_s;
        sc.var_x = a.var_x;
        sc.var_s = a.var_s;
        sc.var_eps = a.var_eps;
        sc.validate();
        paudit::AuditDataset data = paudit::gen_additive(sc, a.n, a.seed);
        paudit::write_dataset_csv(a.out_path, data);
        paudit::AdditiveAnalytics an = paudit::additive_mse_analytics(sc);
        doc["task"] = "regression";
        doc["params"] = json{{"alphas_x", sc.alphas_x},
                             {"alphas_s", sc.alphas_s},
                             {"var_x", sc.var_x},
                             {"var_s", sc.var_s},
                             {"var_eps", sc.var_eps}};
        doc["analytics"] = json{{"mse_generic", an.mse_generic},
                                {"mse_personalized", an.mse_personalized},
                                {"bop_prediction", an.bop_prediction},
                                {"var_y", an.var_y}};
    } else {
        throw UsageError("unknown scenario: " + a.name);
    }
    write_text(a.analytics_path, doc.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benefit-of-personalization auditing toolkit"};
    app.require_subcommand(1);

    AuditArgs audit_args;
    CLI::App* audit = app.add_subcommand(
        "audit", "Audit a generic/personalized model pair on a CSV dataset");
    audit->add_option("--data", audit_args.data_path, "Dataset CSV path")->required();
    audit->add_option("--task", audit_args.task, "classification or regression")
        ->required()
        ->check(CLI::IsMember({"classification", "regression"}));
    audit->add_option("--oracle", audit_args.oracle,
                      "Audit a built-in analytic oracle pair (sumsign) instead of "
                      "training");
    audit->add_option("--model", audit_args.model,
                      "Model family (default: logistic/linear by task)")
        ->check(CLI::IsMember({"linear", "logistic", "mlp"}));
    audit->add_option("--epochs", audit_args.epochs, "Training epochs");
    audit->add_option("--lr", audit_args.lr, "Learning rate");
    audit->add_option("--hidden", audit_args.hidden, "Hidden units (mlp)");
    audit->add_option("--l2", audit_args.l2, "Ridge penalty");
    audit->add_option("--seed", audit_args.seed, "Seed for split and training");
    audit->add_option("--split", audit_args.split, "Held-out test fraction");
    audit->add_option("--epsilon", audit_args.epsilon, "Audited effect size");
    audit->add_option("--r", audit_args.r,
                      "Explanation mask size (-1 = half the inputs; 1 for oracles)");
    audit->add_option("--steps", audit_args.steps, "Attribution integration steps");
    audit->add_flag("--pooled-scale", audit_args.pooled_scale,
                    "One noise scale pooled across groups");
    audit->add_flag("--r-sweep", audit_args.sweep,
                    "Also sweep the mask size from 0 to the full input width");
    audit->add_option("--out", audit_args.out_path, "Report JSON path (default stdout)");
    audit->add_option("--groups-csv", audit_args.groups_csv_path,
                      "Per-group benefit table CSV path");
    audit->add_option("--save-models", audit_args.save_models_path,
                      "Write the audited model pair as JSON");
    audit->add_option("--load-models", audit_args.load_models_path,
                      "Load a model pair instead of training");

    BoundArgs bound_args;
    CLI::App* bound = app.add_subcommand(
        "bound", "Minimax lower bound on the audit's error probability");
    bound->add_option("--family", bound_args.family, "Benefit distribution family")
        ->required()
        ->check(CLI::IsMember({"categorical", "gaussian", "laplace", "gengaussian"}));
    bound->add_option("--epsilon", bound_args.epsilon, "Effect size")->required();
    bound->add_option("--n", bound_args.n, "Population size")->required();
    bound->add_option("--k", bound_args.k, "Number of binary group attributes")
        ->required();
    bound->add_option("--sigma", bound_args.sigma, "Gaussian scale");
    bound->add_option("--b", bound_args.b, "Laplace scale");
    bound->add_option("--alpha", bound_args.alpha, "Generalized-Gaussian scale");
    bound->add_option("--beta", bound_args.beta, "Generalized-Gaussian shape");
    bound->add_option("--curve", bound_args.curve,
                      "Emit a CSV sweep over 'eps' (0..epsilon) or 'k' (1..k)")
        ->check(CLI::IsMember({"eps", "k"}));
    bound->add_option("--out", bound_args.out_path, "Output path (default stdout)");

    MaxkArgs maxk_args;
    CLI::App* maxk = app.add_subcommand(
        "maxk", "Largest auditable number of binary group attributes");
    maxk->add_option("--family", maxk_args.family, "Benefit distribution family")
        ->required()
        ->check(CLI::IsMember({"categorical", "gaussian", "laplace"}));
    maxk->add_option("--epsilon", maxk_args.epsilon, "Effect size")->required();
    maxk->add_option("--n", maxk_args.n, "Population size")->required();
    maxk->add_option("--sigma", maxk_args.sigma, "Gaussian scale");
    maxk->add_option("--b", maxk_args.b, "Laplace scale");
    maxk->add_flag("--json", maxk_args.as_json, "Emit JSON with the real-valued width");
    maxk->add_option("--out", maxk_args.out_path, "Output path (default stdout)");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo dominance check of the analytic bound");
    simulate->add_option("--family", sim_args.family, "Benefit distribution family")
        ->required()
        ->check(CLI::IsMember({"categorical", "gaussian", "laplace"}));
    simulate->add_option("--epsilon", sim_args.epsilon, "Effect size")->required();
    simulate->add_option("--d", sim_args.d, "Number of groups")->required();
    simulate->add_option("--m", sim_args.m, "Samples per group")->required();
    simulate->add_option("--trials", sim_args.trials, "Monte Carlo trials");
    simulate->add_option("--seed", sim_args.seed, "Seed");
    simulate->add_option("--sigma", sim_args.sigma, "Gaussian scale");
    simulate->add_option("--b", sim_args.b, "Laplace scale");
    simulate->add_option("--out", sim_args.out_path, "Output path (default stdout)");

    ScenarioArgs scen_args;
    CLI::App* scenario = app.add_subcommand(
        "scenario", "Generate a synthetic benchmark dataset with known analytics");
    scenario->add_option("--name", scen_args.name, "sumsign or additive")
        ->required()
        ->check(CLI::IsMember({"sumsign", "additive"}));
    scenario->add_option("--n", scen_args.n, "Number of rows")->required();
    scenario->add_option("--seed", scen_args.seed, "Seed");
    scenario->add_option("--out", scen_args.out_path, "Dataset CSV path")->required();
    scenario->add_option("--analytics", scen_args.analytics_path,
                         "Analytics JSON path (default stdout)");
    scenario->add_option("--alphas-x", scen_args.alphas_x, "Feature coefficients")
        ->delimiter(',');
    scenario->add_option("--alphas-s", scen_args.alphas_s, "Group coefficients")
        ->delimiter(',');
    scenario->add_option("--var-x", scen_args.var_x, "Feature variances")
        ->delimiter(',');
    scenario->add_option("--var-s", scen_args.var_s, "Group-term variances")
        ->delimiter(',');
    scenario->add_option("--var-eps", scen_args.var_eps, "Noise variance");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(audit)) run_audit_cmd(audit_args);
        if (app.got_subcommand(bound)) run_bound_cmd(bound_args);
        if (app.got_subcommand(maxk)) run_maxk_cmd(maxk_args);
        if (app.got_subcommand(simulate)) run_simulate_cmd(sim_args);
        if (app.got_subcommand(scenario)) run_scenario_cmd(scen_args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
