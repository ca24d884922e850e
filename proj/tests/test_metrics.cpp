#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sfma/metrics.hpp"
#include "support/naive.hpp"

using namespace sfma;

namespace {

RunTrace trace_from_values(const std::vector<double>& initial,
                           const std::vector<double>& queries, int n_bit = 4) {
    RunTrace t;
    for (double y : initial)
        t.initial.points.push_back(DataPoint{BinaryVector(n_bit), y});
    for (double y : queries)
        t.queries.push_back(DataPoint{BinaryVector(n_bit), y});
    return t;
}

// Random ensemble with values drawn from a small grid so exact optimum hits
// and ties actually occur.
TraceEnsemble random_ensemble(std::mt19937_64& gen, int n_traces,
                              int n_queries) {
    std::uniform_int_distribution<int> level(0, 6);
    TraceEnsemble e;
    e.y_star = 0.0;
    for (int t = 0; t < n_traces; ++t) {
        std::vector<double> initial{static_cast<double>(level(gen)) + 1.0,
                                    static_cast<double>(level(gen)) + 1.0};
        std::vector<double> queries;
        for (int q = 0; q < n_queries; ++q)
            queries.push_back(static_cast<double>(level(gen)) * 0.5);
        e.traces.push_back(trace_from_values(initial, queries));
    }
    return e;
}

}  // namespace

TEST_CASE("running minimum over a short trace") {
    const RunTrace t = trace_from_values({5.0, 8.0}, {3.0, 1.0, 2.0});
    REQUIRE(running_min(t) == std::vector<double>{5.0, 3.0, 1.0, 1.0});
}

TEST_CASE("running minimum stays flat when queries never improve") {
    const RunTrace t = trace_from_values({2.0}, {4.0, 9.0, 2.5});
    REQUIRE(running_min(t) == std::vector<double>{2.0, 2.0, 2.0, 2.0});
}

TEST_CASE("running minimum equals a prefix rescan") {
    std::mt19937_64 gen(55);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<double> initial, queries;
    for (int i = 0; i < 5; ++i) initial.push_back(dist(gen));
    for (int i = 0; i < 40; ++i) queries.push_back(dist(gen));
    const RunTrace t = trace_from_values(initial, queries);
    REQUIRE(running_min(t) == naive::running_min(t));
}

TEST_CASE("aggregate of identical traces has zero spread") {
    TraceEnsemble e;
    e.y_star = 1.0;
    for (int i = 0; i < 4; ++i)
        e.traces.push_back(trace_from_values({5.0}, {3.0, 1.0}));
    const BenchmarkSummary s = aggregate(e);
    REQUIRE(s.mean_min == std::vector<double>{5.0, 3.0, 1.0});
    for (double v : s.variance) REQUIRE(v == 0.0);
    for (double v : s.ci95_half_width) REQUIRE(v == 0.0);
    REQUIRE(s.success_rate.back() == Rational{4, 4});
}

TEST_CASE("aggregate matches the hand-worked split ensemble") {
    // two runs at 0 and two at 2 -> mean 1, success 2/4, variance 1
    TraceEnsemble e;
    e.y_star = 0.0;
    e.traces.push_back(trace_from_values({9.0}, {0.0}));
    e.traces.push_back(trace_from_values({9.0}, {0.0}));
    e.traces.push_back(trace_from_values({9.0}, {2.0}));
    e.traces.push_back(trace_from_values({9.0}, {2.0}));
    const BenchmarkSummary s = aggregate(e);
    REQUIRE(s.mean_min[1] == 1.0);
    REQUIRE(s.success_rate[1] == Rational{2, 4});
    REQUIRE(s.variance[1] == 1.0);
    REQUIRE(s.ci95_half_width[1] == Catch::Approx(1.96 * std::sqrt(0.25)));
}

TEST_CASE("aggregate success counts match a naive per-sample scan") {
    std::mt19937_64 gen(66);
    const TraceEnsemble e = random_ensemble(gen, 30, 12);
    const BenchmarkSummary s = aggregate(e);
    const auto expected = naive::success_numerators(e);
    REQUIRE(s.success_rate.size() == expected.size());
    for (std::size_t a = 0; a < expected.size(); ++a) {
        REQUIRE(s.success_rate[a].num == expected[a]);
        REQUIRE(s.success_rate[a].den == 30);
    }
}

TEST_CASE("aggregate rejects ragged ensembles") {
    TraceEnsemble e;
    e.traces.push_back(trace_from_values({1.0}, {1.0, 2.0}));
    e.traces.push_back(trace_from_values({1.0}, {1.0}));
    REQUIRE_THROWS_AS(aggregate(e), std::invalid_argument);
}

TEST_CASE("convergence count finds the first crossing") {
    const std::vector<Rational> rates{{1, 10}, {3, 10}, {5, 10}, {9, 10}};
    REQUIRE(n_conv(rates) == 3);

    const std::vector<Rational> low{{1, 10}, {2, 10}, {4, 10}};
    REQUIRE_FALSE(n_conv(low).has_value());
}

TEST_CASE("convergence count equals the literal definition") {
    std::mt19937_64 gen(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Rational> rates;
        long long num = 0;
        for (int a = 0; a < 25; ++a) {
            num = std::min<long long>(30, num + (gen() % 3));
            rates.push_back(Rational{num, 30});
        }
        REQUIRE(n_conv(rates) == naive::n_conv(rates));
    }
}

TEST_CASE("final success rate formatting") {
    BenchmarkSummary s;
    s.success_rate = {Rational{0, 30}, Rational{30, 30}};
    REQUIRE(final_success_rate(s).str() == "30/30");
    s.success_rate = {Rational{0, 30}};
    REQUIRE(final_success_rate(s).str() == "0/30");
}

TEST_CASE("frequency table with a unique winner") {
    std::map<std::string, std::map<std::string, std::optional<Rational>>> t;
    t["I0"]["A"] = Rational{10, 1};
    t["I0"]["B"] = Rational{20, 1};
    const auto freq = frequency_table(t, Better::Smaller);
    REQUIRE(freq.at("A") == 1.0);
    REQUIRE(freq.at("B") == 0.0);
}

TEST_CASE("frequency table splits ties") {
    std::map<std::string, std::map<std::string, std::optional<Rational>>> t;
    t["I0"]["A"] = Rational{15, 30};
    t["I0"]["B"] = Rational{15, 30};
    t["I0"]["C"] = Rational{10, 30};
    const auto freq = frequency_table(t, Better::Larger);
    REQUIRE(freq.at("A") == Catch::Approx(0.5));
    REQUIRE(freq.at("B") == Catch::Approx(0.5));
    REQUIRE(freq.at("C") == 0.0);
}

TEST_CASE("frequency table never rewards absent or zero entries") {
    std::map<std::string, std::map<std::string, std::optional<Rational>>> t;
    t["I0"]["A"] = std::nullopt;
    t["I0"]["B"] = Rational{0, 30};
    t["I1"]["A"] = Rational{3, 30};
    t["I1"]["B"] = Rational{0, 30};
    const auto freq = frequency_table(t, Better::Larger);
    REQUIRE(freq.at("A") == 1.0);  // only the I1 win counts
    REQUIRE(freq.at("B") == 0.0);
}

TEST_CASE("frequency table sweeps ten instances to one winner") {
    std::map<std::string, std::map<std::string, std::optional<Rational>>> t;
    for (int i = 0; i < 10; ++i) {
        const std::string inst = "W" + std::to_string(i);
        t[inst]["S-SFMA"] = Rational{25 + (i % 5), 30};
        t[inst]["S-FMA"] = Rational{10, 30};
        t[inst]["NS-SFMA"] = Rational{8, 30};
        t[inst]["NS-FMA"] = Rational{4, 30};
        t[inst]["RS"] = Rational{12, 30};
    }
    const auto freq = frequency_table(t, Better::Larger);
    REQUIRE(freq.at("S-SFMA") == 10.0);
    REQUIRE(freq.at("RS") == 0.0);
}

TEST_CASE("frequency table matches the naive accounting on random input") {
    std::mt19937_64 gen(88);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::string, std::map<std::string, std::optional<Rational>>> t;
        const int n_inst = 1 + static_cast<int>(gen() % 6);
        for (int i = 0; i < n_inst; ++i) {
            const std::string inst = "I" + std::to_string(i);
            for (const char* alg : {"A", "B", "C", "D"}) {
                if (gen() % 5 == 0)
                    t[inst][alg] = std::nullopt;
                else
                    t[inst][alg] =
                        Rational{static_cast<long long>(gen() % 4) * 5, 30};
            }
        }
        for (auto better : {Better::Smaller, Better::Larger}) {
            const auto ours = frequency_table(t, better);
            const auto naive_freq =
                naive::frequency_table(t, better == Better::Smaller);
            REQUIRE(ours.size() == naive_freq.size());
            for (const auto& [alg, f] : ours)
                REQUIRE(f == Catch::Approx(naive_freq.at(alg)).margin(1e-12));
        }
    }
}

TEST_CASE("rounding predicate is reflexive, symmetric, and tight") {
    REQUIRE(round17_equal(1.25, 1.25));
    REQUIRE(round17_equal(0.0, -0.0));
    REQUIRE(round17_equal(1e-20, 3e-20));   // both round to zero
    REQUIRE_FALSE(round17_equal(1.0, 1.0 + 1e-9));
    const double a = 123.456;
    const double b = std::nextafter(a, 1e9);
    REQUIRE(round17_equal(a, a));
    REQUIRE(round17_equal(b, b));
    REQUIRE(round17_key(a) == round17_key(a));
}

TEST_CASE("ensemble monotonicity holds for generated ensembles") {
    std::mt19937_64 gen(99);
    for (int trial = 0; trial < 20; ++trial) {
        const TraceEnsemble e = random_ensemble(gen, 10, 15);
        const BenchmarkSummary s = aggregate(e);
        for (std::size_t a = 1; a < s.length(); ++a) {
            REQUIRE(s.mean_min[a] <= s.mean_min[a - 1] + 1e-15);
            REQUIRE(s.success_rate[a].num >= s.success_rate[a - 1].num);
        }
        // mean can only touch the optimum when every sample has found it,
        // and the variance vanishes exactly when all samples agree
        std::vector<std::vector<double>> mins;
        for (const auto& t : e.traces) mins.push_back(running_min(t));
        for (std::size_t a = 0; a < s.length(); ++a) {
            REQUIRE(s.mean_min[a] >= e.y_star - 1e-12);
            if (s.mean_min[a] == e.y_star)
                REQUIRE(s.success_rate[a].num == s.success_rate[a].den);
            bool all_agree = true;
            for (const auto& rm : mins)
                if (rm[a] != mins[0][a]) all_agree = false;
            REQUIRE((s.variance[a] == 0.0) == all_agree);
        }
    }
}
