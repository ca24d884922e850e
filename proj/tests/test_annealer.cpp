#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sfma/annealer.hpp"
#include "sfma/problem.hpp"
#include "support/naive.hpp"

using namespace sfma;

namespace {

QuboMatrix random_dense_qubo(int n_bit, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    QuboMatrix q(n_bit);
    for (int i = 0; i < n_bit; ++i)
        for (int j = i; j < n_bit; ++j) q.set(i, j, dist(gen));
    return q;
}

}  // namespace

TEST_CASE("default beta range on the unit diagonal") {
    QuboMatrix q(4);
    for (int i = 0; i < 4; ++i) q.set(i, i, 1.0);
    const auto [hot, cold] = default_beta_range(q);
    REQUIRE(hot == Catch::Approx(std::log(2.0)));
    REQUIRE(cold == Catch::Approx(std::log(100.0)));
}

TEST_CASE("default beta range falls back on an all-zero matrix") {
    QuboMatrix q(3);
    const auto [hot, cold] = default_beta_range(q);
    REQUIRE(hot == 0.1);
    REQUIRE(cold == 10.0);
}

TEST_CASE("default beta range scales inversely with the coefficients") {
    std::mt19937_64 gen(31);
    QuboMatrix q = random_dense_qubo(8, gen);
    QuboMatrix q10(8);
    for (int i = 0; i < 8; ++i)
        for (int j = i; j < 8; ++j) q10.set(i, j, 10.0 * q.at(i, j));
    const auto [hot, cold] = default_beta_range(q);
    const auto [hot10, cold10] = default_beta_range(q10);
    REQUIRE(hot10 == Catch::Approx(hot / 10.0));
    REQUIRE(cold10 == Catch::Approx(cold / 10.0));
}

TEST_CASE("single positive bit relaxes to zero") {
    QuboMatrix q(1);
    q.set(0, 0, 1.0);
    const AnnealConfig cfg;
    const ReadSet reads = simulated_annealing(q, cfg, 0);
    REQUIRE(reads.reads.size() == 10);
    for (const auto& r : reads.reads) {
        REQUIRE(r.x.bits == std::vector<std::uint8_t>{0});
        REQUIRE(r.energy == 0.0);
    }
}

TEST_CASE("separable negative diagonal fills every bit") {
    QuboMatrix q(5);
    for (int i = 0; i < 5; ++i) q.set(i, i, -1.0);
    const ReadSet reads = simulated_annealing(q, AnnealConfig{}, 1);
    for (const auto& r : reads.reads) {
        REQUIRE(r.x.bits == std::vector<std::uint8_t>(5, 1));
        REQUIRE(r.energy == Catch::Approx(-5.0));
    }
}

TEST_CASE("annealing finds the minimum of random dense problems") {
    std::mt19937_64 gen(2025);
    int exact_hits = 0;
    for (int instance = 0; instance < 30; ++instance) {
        const QuboMatrix q = random_dense_qubo(12, gen);
        const double ground =
            naive::exhaustive_min([&](const BinaryVector& x) {
                return qubo_eval(q, x);
            }, 12);
        const ReadSet reads =
            simulated_annealing(q, AnnealConfig{}, 1000 + instance);
        double best = reads.reads[0].energy;
        for (const auto& r : reads.reads) best = std::min(best, r.energy);
        REQUIRE(best >= ground - 1e-9);  // never below the true minimum
        if (std::abs(best - ground) <= 1e-9) ++exact_hits;
    }
    REQUIRE(exact_hits >= 27);
}

TEST_CASE("read energies are consistent with qubo_eval") {
    std::mt19937_64 gen(77);
    const QuboMatrix q = random_dense_qubo(10, gen);
    const ReadSet reads = simulated_annealing(q, AnnealConfig{}, 3);
    for (const auto& r : reads.reads)
        REQUIRE(r.energy == Catch::Approx(qubo_eval(q, r.x)).margin(1e-9));
}

TEST_CASE("annealing is deterministic per seed") {
    std::mt19937_64 gen(78);
    const QuboMatrix q = random_dense_qubo(10, gen);
    const ReadSet a = simulated_annealing(q, AnnealConfig{}, 9);
    const ReadSet b = simulated_annealing(q, AnnealConfig{}, 9);
    REQUIRE(a.reads.size() == b.reads.size());
    for (std::size_t i = 0; i < a.reads.size(); ++i) {
        REQUIRE(a.reads[i].x == b.reads[i].x);
        REQUIRE(a.reads[i].energy == b.reads[i].energy);
    }
}

TEST_CASE("best_read picks the smallest FM value with index ties") {
    FmParams p;
    p.k = 1;
    p.w0 = 0.0;
    p.w = {1.0, 2.0};
    p.v = {0.0, 0.0};

    ReadSet single;
    single.reads.push_back(Read{from_bit_string("10"), 0.0});
    REQUIRE(best_read(single, p) == from_bit_string("10"));

    ReadSet two;
    two.reads.push_back(Read{from_bit_string("11"), 0.0});  // fm value 3
    two.reads.push_back(Read{from_bit_string("10"), 0.0});  // fm value 1
    REQUIRE(best_read(two, p) == from_bit_string("10"));

    REQUIRE_THROWS_AS(best_read(ReadSet{}, p), std::invalid_argument);
}

TEST_CASE("best_read matches a naive scan") {
    std::mt19937_64 gen(79);
    std::normal_distribution<double> dist(0.0, 1.0);
    FmParams p;
    p.k = 2;
    p.w0 = dist(gen);
    p.w.resize(8);
    p.v.resize(16);
    for (auto& x : p.w) x = dist(gen);
    for (auto& x : p.v) x = dist(gen);

    ReadSet reads;
    for (int i = 0; i < 10; ++i) {
        BinaryVector x(8);
        for (int b = 0; b < 8; ++b)
            x.bits[b] = static_cast<std::uint8_t>(gen() & 1u);
        reads.reads.push_back(Read{x, 0.0});
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < reads.reads.size(); ++i)
        if (naive::fm_eval(p, reads.reads[i].x) <
            naive::fm_eval(p, reads.reads[best].x))
            best = i;
    REQUIRE(best_read(reads, p) == reads.reads[best].x);
}

TEST_CASE("anneal config validation") {
    AnnealConfig bad;
    bad.n_reads = 0;
    QuboMatrix q(2);
    q.set(0, 0, 1.0);
    REQUIRE_THROWS_AS(simulated_annealing(q, bad, 0), std::invalid_argument);

    AnnealConfig inverted;
    inverted.beta_hot = 5.0;
    inverted.beta_cold = 1.0;
    REQUIRE_THROWS_AS(simulated_annealing(q, inverted, 0),
                      std::invalid_argument);
}
