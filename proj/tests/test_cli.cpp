#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "paudit/cli_support.hpp"
#include "paudit/scenarios.hpp"

using namespace paudit;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const std::string& tmp_dir() {
    static std::string dir = [] {
        char tmpl[] = "/tmp/paudit_cli_XXXXXX";
        const char* d = mkdtemp(tmpl);
        REQUIRE(d != nullptr);
        return std::string(d);
    }();
    return dir;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args) {
    static int call_no = 0;
    std::string err_path = tmp_dir() + "/stderr_" + std::to_string(call_no++) + ".txt";
    std::string cmd = std::string(PAUDIT_CLI_PATH) + " " + args + " 2>" + err_path;
    CmdResult res;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.err = read_file(err_path);
    return res;
}

// Minimal draft-07 validator covering the subset the shipped schema uses:
// $ref into #/definitions, type (single or list), const, enum, required,
// properties, items, minItems, pattern, and numeric range keywords.
class MiniSchema {
public:
    explicit MiniSchema(const json& root) : root_(root) {}

    bool validate(const json& inst, const json& schema, std::string path,
                  std::string* err) const {
        if (schema.contains("$ref")) {
            const std::string ref = schema["$ref"].get<std::string>();
            const std::string prefix = "#/definitions/";
            if (ref.rfind(prefix, 0) != 0) return fail(path, "unsupported $ref", err);
            return validate(inst, root_.at("definitions").at(ref.substr(prefix.size())),
                            path, err);
        }
        if (schema.contains("type") && !check_type(inst, schema["type"]))
            return fail(path, "type mismatch", err);
        if (schema.contains("const") && inst != schema["const"])
            return fail(path, "const mismatch", err);
        if (schema.contains("enum")) {
            bool any = false;
            for (const auto& v : schema["enum"]) any = any || inst == v;
            if (!any) return fail(path, "not in enum", err);
        }
        if (inst.is_number()) {
            double v = inst.get<double>();
            if (schema.contains("minimum") && v < schema["minimum"].get<double>())
                return fail(path, "below minimum", err);
            if (schema.contains("maximum") && v > schema["maximum"].get<double>())
                return fail(path, "above maximum", err);
            if (schema.contains("exclusiveMinimum") &&
                v <= schema["exclusiveMinimum"].get<double>())
                return fail(path, "not above exclusiveMinimum", err);
        }
        if (inst.is_string() && schema.contains("pattern")) {
            std::regex re(schema["pattern"].get<std::string>());
            if (!std::regex_search(inst.get<std::string>(), re))
                return fail(path, "pattern mismatch", err);
        }
        if (inst.is_object()) {
            if (schema.contains("required"))
                for (const auto& key : schema["required"])
                    if (!inst.contains(key.get<std::string>()))
                        return fail(path, "missing required " + key.get<std::string>(),
                                    err);
            if (schema.contains("properties"))
                for (auto it = schema["properties"].begin();
                     it != schema["properties"].end(); ++it)
                    if (inst.contains(it.key()) &&
                        !validate(inst.at(it.key()), it.value(), path + "/" + it.key(),
                                  err))
                        return false;
        }
        if (inst.is_array()) {
            if (schema.contains("minItems") &&
                inst.size() < schema["minItems"].get<std::size_t>())
                return fail(path, "too few items", err);
            if (schema.contains("items"))
                for (std::size_t i = 0; i < inst.size(); ++i)
                    if (!validate(inst[i], schema["items"],
                                  path + "/" + std::to_string(i), err))
                        return false;
        }
        return true;
    }

private:
    const json& root_;

    static bool fail(const std::string& path, const std::string& what,
                     std::string* err) {
        if (err) *err = path + ": " + what;
        return false;
    }

    static bool check_type(const json& inst, const json& type) {
        if (type.is_array()) {
            for (const auto& t : type)
                if (check_one(inst, t.get<std::string>())) return true;
            return false;
        }
        return check_one(inst, type.get<std::string>());
    }

    static bool check_one(const json& inst, const std::string& t) {
        if (t == "object") return inst.is_object();
        if (t == "array") return inst.is_array();
        if (t == "string") return inst.is_string();
        if (t == "boolean") return inst.is_boolean();
        if (t == "null") return inst.is_null();
        if (t == "number") return inst.is_number();
        if (t == "integer")
            return inst.is_number_integer() || inst.is_number_unsigned();
        return false;
    }
};

void check_report_schema(const json& report) {
    static json schema = [] {
        std::string text = read_file(std::string(PAUDIT_SCHEMA_DIR) +
                                     "/audit_report.schema.json");
        REQUIRE(!text.empty());
        return json::parse(text);
    }();
    MiniSchema v(schema);
    std::string err;
    bool ok = v.validate(report, schema, "", &err);
    INFO("schema violation at ", err);
    CHECK(ok);
}

json parse_json_file(const std::string& path) {
    std::string text = read_file(path);
    REQUIRE(!text.empty());
    return json::parse(text);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("maxk reproduces the planet-scale attribute widths") {
    CmdResult cat = run_cli("maxk --family categorical --epsilon 0.01 --n 8e9");
    CHECK(cat.exit_code == 0);
    CHECK(cat.out == "18\n");
    CmdResult gau = run_cli("maxk --family gaussian --epsilon 0.01 --n 8e9 --sigma 0.1");
    CHECK(gau.exit_code == 0);
    CHECK(gau.out == "22\n");
    CmdResult lap =
        run_cli("maxk --family laplace --epsilon 0.01 --n 8e9 --b 0.07071067811865475");
    CHECK(lap.exit_code == 0);
    CHECK(lap.out == "26\n");

    CmdResult js = run_cli(
        "maxk --family categorical --epsilon 0.01 --n 8e9 --json");
    CHECK(js.exit_code == 0);
    json doc = json::parse(js.out);
    CHECK(doc["k_max"] == 18);
    CHECK(doc["k_max_real"].get<double>() == doctest::Approx(17.970555).epsilon(1e-5));
}

TEST_CASE("bound prints the clamped value and sweeps curves") {
    CmdResult one = run_cli("bound --family categorical --epsilon 0 --n 10000 --k 2");
    CHECK(one.exit_code == 0);
    CHECK(std::stod(one.out) == 1.0);

    CmdResult gau =
        run_cli("bound --family gaussian --epsilon 0.001 --n 10000 --k 2 --sigma 0.1");
    CHECK(gau.exit_code == 0);
    CHECK(std::stod(gau.out) == doctest::Approx(0.8667649125).epsilon(1e-9));

    CmdResult gg = run_cli(
        "bound --family gengaussian --epsilon 0.001 --n 10000 --k 2 --alpha "
        "0.14142135623730951 --beta 2.0");
    CHECK(gg.exit_code == 0);
    CHECK(std::stod(gg.out) == doctest::Approx(0.8667649125).epsilon(1e-6));

    std::string curve_path = tmp_dir() + "/curve_k.csv";
    CmdResult ck = run_cli(
        "bound --family categorical --epsilon 0.01 --n 1e4 --k 13 --curve k --out " +
        curve_path);
    CHECK(ck.exit_code == 0);
    std::ifstream in(curve_path);
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "sweep_var,pe_lower_bound_raw,pe_lower_bound_clamped");
    std::string line;
    double prev = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        auto c1 = line.find(','), c2 = line.rfind(',');
        REQUIRE(c1 != std::string::npos);
        REQUIRE(c2 > c1);
        double clamped = std::stod(line.substr(c2 + 1));
        CHECK(clamped >= prev - 1e-12);
        prev = clamped;
        ++rows;
    }
    CHECK(rows == 13);

    std::string eps_path = tmp_dir() + "/curve_eps.csv";
    CmdResult ce = run_cli(
        "bound --family gaussian --epsilon 0.01 --n 1e4 --k 2 --sigma 0.1 "
        "--curve eps --out " +
        eps_path);
    CHECK(ce.exit_code == 0);
    std::ifstream ein(eps_path);
    REQUIRE(std::getline(ein, header));
    prev = 2.0;
    rows = 0;
    bool first = true;
    while (std::getline(ein, line)) {
        auto c1 = line.find(','), c2 = line.rfind(',');
        double sweep = std::stod(line.substr(0, c1));
        double clamped = std::stod(line.substr(c2 + 1));
        if (first) {
            CHECK(sweep == 0.0);
            CHECK(clamped == 1.0);
            first = false;
        }
        CHECK(clamped <= prev + 1e-12);
        prev = clamped;
        ++rows;
    }
    CHECK(rows == 51);
}

TEST_CASE("scenario datasets round-trip bit-identically through CSV") {
    std::string data_path = tmp_dir() + "/sumsign.csv";
    std::string an_path = tmp_dir() + "/sumsign_an.json";
    CmdResult res = run_cli("scenario --name sumsign --n 500 --seed 9 --out " +
                            data_path + " --analytics " + an_path);
    CHECK(res.exit_code == 0);

    AuditDataset reread = read_dataset_csv(data_path, Task::Classification);
    SumSignScenario direct = gen_sum_sign(500, 9);
    CHECK(reread.n == direct.data.n);
    CHECK(reread.x == direct.data.x);  // bit-identical feature matrix
    CHECK(reread.s == direct.data.s);
    CHECK(reread.y == direct.data.y);

    json an = parse_json_file(an_path);
    CHECK(an["name"] == "sumsign");
    CHECK(an["analytics"]["bop_prediction"].get<double>() == 0.0);
    CHECK(an["analytics"]["sufficiency_gap"].get<double>() == 0.25);
    CHECK(an["analytics"]["removal_change_personalized"].get<double>() == 0.5);

    std::string add_path = tmp_dir() + "/additive.csv";
    std::string add_an = tmp_dir() + "/additive_an.json";
    CmdResult res2 = run_cli(
        "scenario --name additive --n 400 --seed 11 --alphas-x 2.0,-1.0 --var-x "
        "1.0,1.0 --alphas-s 1.0 --var-s 1.0 --var-eps 0.25 --out " +
        add_path + " --analytics " + add_an);
    CHECK(res2.exit_code == 0);
    json an2 = parse_json_file(add_an);
    CHECK(an2["analytics"]["mse_generic"].get<double>() == doctest::Approx(1.25));
    CHECK(an2["analytics"]["mse_personalized"].get<double>() == doctest::Approx(0.25));
    CHECK(an2["analytics"]["bop_prediction"].get<double>() == doctest::Approx(1.0));

    AdditiveScenario sc;
    sc.alphas_x = {2.0, -1.0};
    sc.var_x = {1.0, 1.0};
    sc.alphas_s = {1.0};
    sc.var_s = {1.0};
    sc.var_eps = 0.25;
    AuditDataset direct2 = gen_additive(sc, 400, 11);
    AuditDataset reread2 = read_dataset_csv(add_path, Task::Regression);
    CHECK(reread2.x == direct2.x);
    CHECK(reread2.y == direct2.y);
}

TEST_CASE("oracle audit reproduces the analytic pattern and obeys the schema") {
    std::string data_path = tmp_dir() + "/sumsign_audit.csv";
    CmdResult gen = run_cli("scenario --name sumsign --n 5000 --seed 21 --out " +
                            data_path + " --analytics /dev/null");
    REQUIRE(gen.exit_code == 0);

    std::string report_path = tmp_dir() + "/oracle_report.json";
    std::string groups_path = tmp_dir() + "/oracle_groups.csv";
    CmdResult res = run_cli("audit --data " + data_path +
                            " --task classification --oracle sumsign --r 1 --out " +
                            report_path + " --groups-csv " + groups_path);
    CHECK(res.exit_code == 0);

    json report = parse_json_file(report_path);
    check_report_schema(report);
    CHECK(report["dataset"]["n"] == 5000);
    CHECK(report["dataset"]["n_eval"] == 5000);  // oracle mode has no split
    CHECK(report["config"]["model"] == "oracle:sumsign");

    const auto& pred = report["metrics"]["prediction"];
    CHECK(pred["population"]["bop"].get<double>() == 0.0);
    CHECK(pred["test"]["verdict"] == "fail_to_reject_h0");

    const auto& suff = report["metrics"]["sufficiency"];
    CHECK(suff["population"]["bop"].get<double>() == doctest::Approx(0.25).epsilon(0.1));
    CHECK(suff["population"]["cost_personalized"].get<double>() == 0.0);
    CHECK(suff["test"]["verdict"] == "reject_h0");
    CHECK(suff["fit"]["family"] == "categorical");

    const auto& inc = report["metrics"]["incomprehensiveness"];
    CHECK(inc["population"]["cost_personalized"].get<double>() ==
          doctest::Approx(-0.5).epsilon(0.1));
    CHECK(inc["population"]["bop"].get<double>() == doctest::Approx(0.25).epsilon(0.1));

    std::string csv = read_file(groups_path);
    std::istringstream lines(csv);
    std::string header;
    REQUIRE(std::getline(lines, header));
    CHECK(header == "group,n,prediction,incomprehensiveness,sufficiency");
    int rows = 0;
    std::string line;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 2);
}

TEST_CASE("trained audits are deterministic end-to-end") {
    std::string data_path = tmp_dir() + "/sumsign_train.csv";
    REQUIRE(run_cli("scenario --name sumsign --n 2000 --seed 5 --out " + data_path +
                    " --analytics /dev/null")
                .exit_code == 0);
    std::string rep1 = tmp_dir() + "/train_rep1.json";
    std::string rep2 = tmp_dir() + "/train_rep2.json";
    std::string flags = "audit --data " + data_path +
                        " --task classification --model logistic --epochs 200 "
                        "--lr 1.0 --seed 42 --steps 32 --out ";
    CHECK(run_cli(flags + rep1).exit_code == 0);
    CHECK(run_cli(flags + rep2).exit_code == 0);
    CHECK(read_file(rep1) == read_file(rep2));
    json report = parse_json_file(rep1);
    check_report_schema(report);
    std::size_t n_train = report["dataset"]["n_train"].get<std::size_t>();
    std::size_t n_eval = report["dataset"]["n_eval"].get<std::size_t>();
    CHECK(n_train + n_eval == 2000);
    // Stratified 70/30: per-group rounding can shift the total by at most one.
    CHECK(n_eval >= 598);
    CHECK(n_eval <= 602);
}

TEST_CASE("identical untrained models yield exactly zero benefit") {
    std::string data_path = tmp_dir() + "/sumsign_zero.csv";
    REQUIRE(run_cli("scenario --name sumsign --n 1000 --seed 7 --out " + data_path +
                    " --analytics /dev/null")
                .exit_code == 0);
    std::string report_path = tmp_dir() + "/zero_report.json";
    CmdResult res = run_cli("audit --data " + data_path +
                            " --task classification --model logistic --epochs 0 "
                            "--out " +
                            report_path);
    CHECK(res.exit_code == 0);
    json report = parse_json_file(report_path);
    for (const char* metric : {"prediction", "sufficiency", "incomprehensiveness"}) {
        INFO("metric ", metric);
        CHECK(report["metrics"][metric]["population"]["bop"].get<double>() == 0.0);
        CHECK(report["metrics"][metric]["test"]["verdict"] == "fail_to_reject_h0");
    }
}

TEST_CASE("model persistence reproduces the audit exactly") {
    std::string data_path = tmp_dir() + "/persist.csv";
    REQUIRE(run_cli("scenario --name sumsign --n 1200 --seed 5 --out " + data_path +
                    " --analytics /dev/null")
                .exit_code == 0);
    std::string models = tmp_dir() + "/models.json";
    std::string rep1 = tmp_dir() + "/persist_rep1.json";
    std::string rep2 = tmp_dir() + "/persist_rep2.json";
    CHECK(run_cli("audit --data " + data_path +
                  " --task classification --model logistic --epochs 150 --lr 1.0 "
                  "--seed 5 --save-models " +
                  models + " --out " + rep1)
              .exit_code == 0);
    CHECK(run_cli("audit --data " + data_path +
                  " --task classification --seed 5 --load-models " + models +
                  " --out " + rep2)
              .exit_code == 0);
    json a = parse_json_file(rep1);
    json b = parse_json_file(rep2);
    CHECK(a["metrics"] == b["metrics"]);
    CHECK(b["config"]["models_loaded"] == true);
}

TEST_CASE("mask-size sweep lands in the report when requested") {
    std::string data_path = tmp_dir() + "/sweep.csv";
    REQUIRE(run_cli("scenario --name sumsign --n 2000 --seed 13 --out " + data_path +
                    " --analytics /dev/null")
                .exit_code == 0);
    std::string report_path = tmp_dir() + "/sweep_report.json";
    CmdResult res = run_cli("audit --data " + data_path +
                            " --task classification --oracle sumsign --r-sweep --out " +
                            report_path);
    CHECK(res.exit_code == 0);
    json report = parse_json_file(report_path);
    check_report_schema(report);
    REQUIRE(report.contains("r_sweep"));
    REQUIRE(report["r_sweep"].size() == 4);
    CHECK(report["r_sweep"][0]["incomprehensiveness_generic"].get<double>() == 0.0);
    CHECK(report["r_sweep"][3]["sufficiency_personalized"].get<double>() == 0.0);
}

TEST_CASE("simulate emits a deterministic dominance report") {
    std::string flags =
        "simulate --family categorical --epsilon 0.05 --d 2 --m 10 --trials 200 "
        "--seed 3 --out ";
    std::string p1 = tmp_dir() + "/sim1.json";
    std::string p2 = tmp_dir() + "/sim2.json";
    CHECK(run_cli(flags + p1).exit_code == 0);
    CHECK(run_cli(flags + p2).exit_code == 0);
    CHECK(read_file(p1) == read_file(p2));
    json doc = parse_json_file(p1);
    CHECK(doc["trials"] == 200);
    CHECK(doc["dominance_ok"] == true);
    CHECK(doc["type_i"].get<double>() + doc["type_ii"].get<double>() ==
          doctest::Approx(doc["empirical_pe"].get<double>()).epsilon(1e-12));
    CHECK(doc["analytic_bound"].get<double>() ==
          doctest::Approx(0.8856419409).epsilon(1e-6));
}

TEST_CASE("failures map to the documented exit codes") {
    CmdResult missing = run_cli("audit --data /nonexistent.csv --task classification");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("cannot open") != std::string::npos);

    std::string bad_path = tmp_dir() + "/bad.csv";
    {
        std::ofstream out(bad_path);
        out << "x_0,s_0,y\n0.5,0,1\n0.25,oops,0\n";
    }
    CmdResult malformed = run_cli("audit --data " + bad_path + " --task classification");
    CHECK(malformed.exit_code == 2);
    CHECK(malformed.err.find("line 3") != std::string::npos);

    CmdResult badflag = run_cli("audit --data " + bad_path + " --task floof");
    CHECK(badflag.exit_code == 1);

    CmdResult trials = run_cli(
        "simulate --family categorical --epsilon 0.05 --d 2 --m 10 --trials 50");
    CHECK(trials.exit_code == 1);

    // Rank-deficient design with no ridge: numeric failure.
    std::string collinear = tmp_dir() + "/collinear.csv";
    {
        std::ofstream out(collinear);
        out << "x_0,s_0,y\n";
        for (int i = 0; i < 12; ++i)
            out << "1.0," << i % 2 << ',' << 0.1 * i << '\n';
    }
    CmdResult numeric = run_cli("audit --data " + collinear +
                                " --task regression --model linear");
    CHECK(numeric.exit_code == 3);

    CmdResult badeps = run_cli("audit --data " + bad_path +
                               " --task classification --epsilon 0");
    CHECK(badeps.exit_code == 1);
}

}  // TEST_SUITE
