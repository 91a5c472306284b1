#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "paudit/core.hpp"

using namespace paudit;

namespace {

AuditDataset make_dataset(std::size_t n, std::size_t t, std::size_t k, Task task,
                          std::uint64_t seed) {
    AuditDataset d;
    d.n = n;
    d.t = t;
    d.k = k;
    d.task = task;
    d.x.resize(n * t);
    d.s.resize(n * k);
    d.y.resize(n);
    Rng rng(seed);
    for (auto& v : d.x) v = rng.uniform(-1.0, 1.0);
    for (auto& b : d.s) b = rng.bernoulli(0.5) ? 1 : 0;
    for (auto& v : d.y)
        v = task == Task::Classification ? (rng.bernoulli(0.5) ? 1.0 : 0.0)
                                         : rng.normal();
    return d;
}

}  // namespace

TEST_SUITE("core") {

TEST_CASE("group encoding round-trips for up to 16 attributes") {
    Rng rng(11);
    for (std::size_t k = 1; k <= 16; ++k) {
        for (int rep = 0; rep < 50; ++rep) {
            std::vector<std::uint8_t> bits(k);
            for (auto& b : bits) b = rng.bernoulli(0.5) ? 1 : 0;
            std::size_t idx = encode_group(bits.data(), k);
            CHECK(idx < (std::size_t{1} << k));
            CHECK(decode_group(idx, k) == bits);
        }
    }
    // Little-endian convention: s_0 is the low bit.
    std::uint8_t bits01[2] = {1, 0};
    CHECK(encode_group(bits01, 2) == 1);
    std::uint8_t bits10[2] = {0, 1};
    CHECK(encode_group(bits10, 2) == 2);
    CHECK(group_bits_string(2, 2) == "01");
}

TEST_CASE("index_groups partitions samples and keeps empty groups") {
    AuditDataset d = make_dataset(500, 3, 2, Task::Classification, 7);
    // Force group 3 (s = 11) to be empty.
    for (std::size_t i = 0; i < d.n; ++i)
        if (d.sat(i, 0) == 1 && d.sat(i, 1) == 1) d.s[i * d.k + 1] = 0;
    GroupTable g = index_groups(d);
    CHECK(g.d == 4);
    CHECK(std::accumulate(g.counts.begin(), g.counts.end(), std::size_t{0}) == d.n);
    // Each sample appears exactly once.
    std::vector<int> seen(d.n, 0);
    for (const auto& members : g.members)
        for (std::size_t i : members) seen[i]++;
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(g.counts[3] == 0);
    REQUIRE(g.empty_groups.size() == 1);
    CHECK(g.empty_groups[0] == 3);
}

TEST_CASE("zero-one costs threshold probabilities at 0.5 with ties to class 1") {
    AuditDataset d;
    d.n = 5;
    d.t = 1;
    d.k = 0;
    d.task = Task::Classification;
    d.x = {0, 0, 0, 0, 0};
    d.y = {0, 1, 1, 0, 1};
    CostVector cv = individual_costs({0.0, 1.0, 0.0, 1.0, 0.5}, d, CostKind::ZeroOne,
                                     ModelTag::Generic);
    CHECK(cv.values == std::vector<double>{0, 0, 1, 1, 0});
    CHECK(cv.decomposable);
}

TEST_CASE("squared error costs are per-sample quadratic residuals") {
    AuditDataset d;
    d.n = 3;
    d.t = 1;
    d.k = 0;
    d.task = Task::Regression;
    d.x = {0, 0, 0};
    d.y = {1.0, -2.0, 0.5};
    CostVector cv = individual_costs({1.5, -2.0, 0.0}, d, CostKind::SquaredError,
                                     ModelTag::Personalized);
    CHECK(cv.values[0] == doctest::Approx(0.25));
    CHECK(cv.values[1] == doctest::Approx(0.0));
    CHECK(cv.values[2] == doctest::Approx(0.25));
}

TEST_CASE("individual_costs rejects rank costs and mismatched inputs") {
    AuditDataset d = make_dataset(10, 2, 1, Task::Classification, 3);
    std::vector<double> p(10, 0.5);
    CHECK_THROWS_AS(individual_costs(p, d, CostKind::NegAuc, ModelTag::Generic),
                    UsageError);
    CHECK_THROWS_AS(individual_costs(p, d, CostKind::SquaredError, ModelTag::Generic),
                    DataError);
    std::vector<double> wrong(9, 0.5);
    CHECK_THROWS_AS(individual_costs(wrong, d, CostKind::ZeroOne, ModelTag::Generic),
                    DataError);
}

TEST_CASE("group costs average within groups; empty groups give NaN") {
    AuditDataset d;
    d.n = 4;
    d.t = 1;
    d.k = 1;
    d.task = Task::Classification;
    d.x = {0, 0, 0, 0};
    d.s = {0, 0, 1, 1};
    d.y = {0, 1, 0, 1};
    GroupTable g = index_groups(d);
    CostVector cv;
    cv.kind = CostKind::ZeroOne;
    cv.values = {0, 1, 0, 1};
    CHECK(group_cost(cv, g, 0) == doctest::Approx(0.5));
    CHECK(group_cost(cv, g, 1) == doctest::Approx(0.5));

    // Make group 1 empty.
    d.s = {0, 0, 0, 0};
    GroupTable g2 = index_groups(d);
    CHECK(std::isnan(group_cost(cv, g2, 1)));
}

TEST_CASE("negated AUC matches exhaustive pair enumeration") {
    AuditDataset d;
    d.n = 4;
    d.t = 1;
    d.k = 0;
    d.task = Task::Classification;
    d.x = {0, 0, 0, 0};
    d.y = {0, 0, 1, 1};
    GroupTable g = index_groups(d);
    std::vector<double> scores = {0.1, 0.4, 0.35, 0.8};
    std::vector<double> costs = group_cost_rank(scores, d, g, CostKind::NegAuc);
    REQUIRE(costs.size() == 1);
    CHECK(costs[0] == doctest::Approx(-0.75));

    // Independent check: count concordant positive/negative score pairs.
    auto pair_auc = [&](const std::vector<double>& sc, const std::vector<double>& y) {
        double num = 0, den = 0;
        for (std::size_t i = 0; i < y.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j)
                if (y[i] == 1.0 && y[j] == 0.0) {
                    den += 1.0;
                    if (sc[i] > sc[j]) num += 1.0;
                    else if (sc[i] == sc[j]) num += 0.5;
                }
        return num / den;
    };
    CHECK(costs[0] == doctest::Approx(-pair_auc(scores, d.y)));

    // Randomized agreement including ties.
    Rng rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        AuditDataset r = make_dataset(40, 1, 0, Task::Classification, 1000 + rep);
        bool has_both = false;
        {
            bool p = false, n = false;
            for (double v : r.y) (v == 1.0 ? p : n) = true;
            has_both = p && n;
        }
        if (!has_both) continue;
        std::vector<double> sc(r.n);
        for (auto& v : sc) v = std::round(rng.uniform01() * 8.0) / 8.0;  // force ties
        GroupTable gr = index_groups(r);
        CHECK(group_cost_rank(sc, r, gr, CostKind::NegAuc)[0] ==
              doctest::Approx(-pair_auc(sc, r.y)).epsilon(1e-12));
    }
}

TEST_CASE("negated AUC rejects single-class groups") {
    AuditDataset d;
    d.n = 3;
    d.t = 1;
    d.k = 0;
    d.task = Task::Classification;
    d.x = {0, 0, 0};
    d.y = {1, 1, 1};
    GroupTable g = index_groups(d);
    CHECK_THROWS_AS(group_cost_rank({0.1, 0.2, 0.3}, d, g, CostKind::NegAuc), DataError);
}

TEST_CASE("negated R^2 matches definition and rejects constant labels") {
    AuditDataset d;
    d.n = 4;
    d.t = 1;
    d.k = 0;
    d.task = Task::Regression;
    d.x = {0, 0, 0, 0};
    d.y = {1.0, 2.0, 3.0, 4.0};
    GroupTable g = index_groups(d);
    // Perfect predictions: R^2 = 1, cost = -1.
    CHECK(group_cost_rank(d.y, d, g, CostKind::NegR2)[0] == doctest::Approx(-1.0));
    // Predicting the mean: R^2 = 0.
    std::vector<double> mu(4, 2.5);
    CHECK(group_cost_rank(mu, d, g, CostKind::NegR2)[0] == doctest::Approx(0.0));

    d.y = {2.0, 2.0, 2.0, 2.0};
    CHECK_THROWS_AS(group_cost_rank(mu, d, g, CostKind::NegR2), DataError);
}

TEST_CASE("benefit report: population, minimal, ties, and empty groups") {
    AuditDataset d;
    d.n = 6;
    d.t = 1;
    d.k = 1;
    d.task = Task::Classification;
    d.x = std::vector<double>(6, 0.0);
    d.s = {0, 0, 0, 1, 1, 1};
    d.y = {0, 0, 0, 1, 1, 1};
    GroupTable g = index_groups(d);
    CostVector h0, hp;
    h0.kind = hp.kind = CostKind::ZeroOne;
    h0.model_tag = ModelTag::Generic;
    hp.model_tag = ModelTag::Personalized;
    h0.values = {1, 1, 0, 1, 0, 0};  // group costs: 2/3, 1/3
    hp.values = {0, 0, 0, 0, 0, 1};  // group costs: 0, 1/3
    BopReport rep = bop_report(h0, hp, g, MetricTag::Prediction);
    CHECK(rep.per_group[0].bop == doctest::Approx(2.0 / 3.0));
    CHECK(rep.per_group[1].bop == doctest::Approx(0.0));
    CHECK(rep.population_bop == doctest::Approx(0.5 - 1.0 / 6.0));
    CHECK(rep.minimal_bop == doctest::Approx(0.0));
    CHECK(rep.minimal_group == 1);
    CHECK(rep.minimal_bop <= rep.population_bop);

    // Tie on the minimum picks the lowest index.
    hp.values = {1, 1, 0, 0, 0, 0};  // BoPs: 0, 1/3 -> then make them equal
    BopReport rep2 = bop_report(h0, hp, g, MetricTag::Prediction);
    CHECK(rep2.per_group[0].bop == doctest::Approx(0.0));
    hp.values = {1, 1, 0, 1, 0, 0};  // BoPs: 0, 0 (tied)
    BopReport rep3 = bop_report(h0, hp, g, MetricTag::Prediction);
    CHECK(rep3.minimal_bop == doctest::Approx(0.0));
    CHECK(rep3.minimal_group == 0);
    CHECK(rep2.per_group[1].m == 3);
}

TEST_CASE("benefit report flags empty groups and excludes them from the minimum") {
    AuditDataset d;
    d.n = 4;
    d.t = 1;
    d.k = 2;
    d.task = Task::Classification;
    d.x = std::vector<double>(4, 0.0);
    d.s = {0, 0, 1, 0, 0, 1, 1, 0};  // groups 0,1,2,1 -> group 3 empty
    d.y = {0, 0, 0, 0};
    GroupTable g = index_groups(d);
    CostVector h0, hp;
    h0.kind = hp.kind = CostKind::ZeroOne;
    h0.model_tag = ModelTag::Generic;
    hp.model_tag = ModelTag::Personalized;
    h0.values = {1, 1, 1, 1};
    hp.values = {0, 0, 0, 0};
    BopReport rep = bop_report(h0, hp, g, MetricTag::Prediction);
    CHECK(rep.has_empty_groups);
    CHECK(rep.per_group[3].empty);
    CHECK(std::isnan(rep.per_group[3].bop));
    CHECK(rep.minimal_bop == doctest::Approx(1.0));
}

TEST_CASE("zero-one group benefits stay within [-1, 1]") {
    for (int rep = 0; rep < 20; ++rep) {
        AuditDataset d = make_dataset(200, 2, 2, Task::Classification, 500 + rep);
        GroupTable g = index_groups(d);
        Rng rng(900 + rep);
        std::vector<double> p0(d.n), p1(d.n);
        for (auto& v : p0) v = rng.uniform01();
        for (auto& v : p1) v = rng.uniform01();
        CostVector h0 = individual_costs(p0, d, CostKind::ZeroOne, ModelTag::Generic);
        CostVector hp = individual_costs(p1, d, CostKind::ZeroOne, ModelTag::Personalized);
        BopReport r = bop_report(h0, hp, g, MetricTag::Prediction);
        for (const auto& gb : r.per_group) {
            if (gb.empty) continue;
            CHECK(gb.bop >= -1.0);
            CHECK(gb.bop <= 1.0);
        }
        CHECK(r.minimal_bop <= r.population_bop + 1e-15);
    }
}

TEST_CASE("partition property: group means recombine to the population mean") {
    AuditDataset d = make_dataset(100000, 1, 3, Task::Regression, 42);
    GroupTable g = index_groups(d);
    std::vector<double> p(d.n, 0.0);
    CostVector cv = individual_costs(p, d, CostKind::SquaredError, ModelTag::Generic);
    double total = 0.0;
    for (std::size_t j = 0; j < g.d; ++j)
        total += group_cost(cv, g, j) * static_cast<double>(g.counts[j]);
    double pop = pairwise_sum(cv.values);
    CHECK(std::abs(total - pop) <= 1e-12 * static_cast<double>(d.n));
}

TEST_CASE("permuting samples within a group leaves group costs unchanged") {
    AuditDataset d = make_dataset(4000, 2, 2, Task::Regression, 77);
    GroupTable g = index_groups(d);
    Rng rng(5);
    std::vector<double> p(d.n);
    for (auto& v : p) v = rng.normal();
    CostVector cv = individual_costs(p, d, CostKind::SquaredError, ModelTag::Generic);
    std::vector<double> before(g.d);
    for (std::size_t j = 0; j < g.d; ++j) before[j] = group_cost(cv, g, j);

    // Reverse the member order inside each group: same multiset of samples.
    GroupTable shuffled = g;
    for (auto& members : shuffled.members)
        std::reverse(members.begin(), members.end());
    for (std::size_t j = 0; j < g.d; ++j) {
        double after = group_cost(cv, shuffled, j);
        CHECK(after == doctest::Approx(before[j]).epsilon(1e-12));
    }
}

TEST_CASE("bop_report validates tags and kinds") {
    AuditDataset d = make_dataset(8, 1, 1, Task::Classification, 1);
    GroupTable g = index_groups(d);
    CostVector a, b;
    a.kind = b.kind = CostKind::ZeroOne;
    a.model_tag = ModelTag::Generic;
    b.model_tag = ModelTag::Generic;  // wrong tag
    a.values.assign(8, 0.0);
    b.values.assign(8, 0.0);
    CHECK_THROWS_AS(bop_report(a, b, g, MetricTag::Prediction), UsageError);
    b.model_tag = ModelTag::Personalized;
    b.kind = CostKind::SquaredError;
    CHECK_THROWS_AS(bop_report(a, b, g, MetricTag::Prediction), UsageError);
}

TEST_CASE("dataset validation catches malformed inputs") {
    AuditDataset d = make_dataset(10, 2, 1, Task::Classification, 2);
    CHECK_NOTHROW(d.validate());
    AuditDataset bad = d;
    bad.x[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = d;
    bad.s[0] = 2;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = d;
    bad.y[0] = 0.5;
    CHECK_THROWS_AS(bad.validate(), DataError);
    bad = d;
    bad.y.pop_back();
    CHECK_THROWS_AS(bad.validate(), DataError);
}

}  // TEST_SUITE
