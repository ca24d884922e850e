#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sfma/bbo.hpp"
#include "sfma/io.hpp"
#include "sfma/metrics.hpp"
#include "sfma/problem.hpp"

namespace sfma {

struct InstanceSpec {
    std::string id;
    std::optional<std::string> path;  // CSV with sidecar JSON
    int n = 0;
    int d = 0;
    int k_factor = 1;
    std::uint64_t seed = 0;
};

struct PhaseSpec {
    double ratio_r = 0.1;
    std::optional<int> n_ite;  // resolved from n_bit when absent
};

/// One algorithm column of the benchmark. Unset fields resolve per instance
/// from its n_bit (k = n_bit/2 - 1, n_g = 5 n_bit, n_ite = 2 n_bit^2 + 1).
struct AlgorithmSpec {
    std::string name;
    std::string kind = "SFMA";  // FMA | SFMA | RS | ISFMA2
    bool standardize = true;
    std::optional<double> ratio_r;
    std::optional<int> n_ite;
    std::optional<int> k;
    std::optional<int> n_g;
    TrainConfig train;
    AnnealConfig anneal;
    PhaseSpec phase1{0.1, std::nullopt};   // ISFMA2 only
    PhaseSpec phase2{0.01, std::nullopt};  // ISFMA2 only
};

struct ExperimentConfig {
    std::vector<InstanceSpec> instances;
    std::vector<AlgorithmSpec> algorithms;
    int n_samp = 30;
    std::uint64_t master_seed = 0;
    std::string output_dir = "out";
    bool oracle = true;
};

namespace detail {

inline void reject_unknown_keys(const json& j,
                                const std::set<std::string>& allowed,
                                const std::string& context) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw std::runtime_error("config: unknown key '" + key + "' in " +
                                     context);
}

inline TrainConfig parse_train(const json& j) {
    reject_unknown_keys(j, {"learning_rate", "n_epochs", "adam_beta1",
                            "adam_beta2", "adam_eps"},
                        "train");
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.n_epochs = j.value("n_epochs", c.n_epochs);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    check_train_config(c);
    return c;
}

inline AnnealConfig parse_anneal(const json& j) {
    reject_unknown_keys(j, {"n_reads", "n_sweeps", "beta_hot", "beta_cold"},
                        "anneal");
    AnnealConfig c;
    c.n_reads = j.value("n_reads", c.n_reads);
    c.n_sweeps = j.value("n_sweeps", c.n_sweeps);
    if (j.contains("beta_hot")) c.beta_hot = j.at("beta_hot").get<double>();
    if (j.contains("beta_cold")) c.beta_cold = j.at("beta_cold").get<double>();
    check_anneal_config(c);
    return c;
}

inline PhaseSpec parse_phase(const json& j, double default_ratio,
                             const std::string& context) {
    reject_unknown_keys(j, {"ratio_r", "n_ite"}, context);
    PhaseSpec p;
    p.ratio_r = j.value("ratio_r", default_ratio);
    if (!(p.ratio_r > 0.0 && p.ratio_r < 1.0))
        throw std::runtime_error("config: ratio_r in " + context +
                                 " must lie in (0, 1)");
    if (j.contains("n_ite")) {
        p.n_ite = j.at("n_ite").get<int>();
        if (*p.n_ite < 1)
            throw std::runtime_error("config: n_ite in " + context +
                                     " must be >= 1");
    }
    return p;
}

}  // namespace detail

/// Parses and validates a JSON experiment document. Unknown keys are
/// rejected; omitted parameters get the benchmark defaults.
inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: malformed JSON: ") +
                                 e.what());
    }
    detail::reject_unknown_keys(j,
                                {"instances", "algorithms", "n_samp",
                                 "master_seed", "output_dir", "oracle"},
                                "top level");

    ExperimentConfig cfg;
    cfg.n_samp = j.value("n_samp", 30);
    if (cfg.n_samp < 1) throw std::runtime_error("config: n_samp must be >= 1");
    cfg.master_seed = j.value("master_seed", 0ull);
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.oracle = j.value("oracle", true);

    if (!j.contains("instances") || !j.at("instances").is_array() ||
        j.at("instances").empty())
        throw std::runtime_error("config: 'instances' must be a non-empty array");
    std::set<std::string> instance_ids;
    for (const auto& ij : j.at("instances")) {
        detail::reject_unknown_keys(ij, {"id", "path", "n", "d", "k_factor", "seed"},
                                    "instance");
        InstanceSpec inst;
        inst.id = ij.at("id").get<std::string>();
        if (!instance_ids.insert(inst.id).second)
            throw std::runtime_error("config: duplicate instance id '" +
                                     inst.id + "'");
        if (ij.contains("path")) {
            inst.path = ij.at("path").get<std::string>();
        } else {
            inst.n = ij.at("n").get<int>();
            inst.d = ij.at("d").get<int>();
            inst.k_factor = ij.value("k_factor", 1);
            inst.seed = ij.value("seed", 0ull);
            if (inst.n < 1 || inst.d < 1)
                throw std::runtime_error("config: instance '" + inst.id +
                                         "': n and d must be >= 1");
            if (inst.k_factor < 1 || inst.k_factor > inst.n)
                throw std::runtime_error("config: instance '" + inst.id +
                                         "': k_factor must satisfy 1 <= K <= N");
            if (cfg.oracle && inst.n * inst.k_factor > kBruteForceMaxBits)
                throw std::runtime_error(
                    "config: instance '" + inst.id + "': n_bit = " +
                    std::to_string(inst.n * inst.k_factor) +
                    " exceeds the oracle limit of " +
                    std::to_string(kBruteForceMaxBits) +
                    " (disable 'oracle' to run it)");
        }
        cfg.instances.push_back(std::move(inst));
    }

    if (!j.contains("algorithms") || !j.at("algorithms").is_array() ||
        j.at("algorithms").empty())
        throw std::runtime_error(
            "config: 'algorithms' must be a non-empty array");
    std::set<std::string> algorithm_names;
    for (const auto& aj : j.at("algorithms")) {
        detail::reject_unknown_keys(
            aj,
            {"name", "mode", "standardize", "ratio_r", "n_ite", "k", "n_g",
             "train", "anneal", "phase1", "phase2"},
            "algorithm");
        AlgorithmSpec alg;
        alg.name = aj.at("name").get<std::string>();
        if (!algorithm_names.insert(alg.name).second)
            throw std::runtime_error("config: algorithm name collision on '" +
                                     alg.name + "'");
        alg.kind = aj.value("mode", std::string("SFMA"));
        if (alg.kind != "FMA" && alg.kind != "SFMA" && alg.kind != "RS" &&
            alg.kind != "ISFMA2")
            throw std::runtime_error("config: algorithm '" + alg.name +
                                     "': unknown mode '" + alg.kind + "'");
        alg.standardize = aj.value("standardize", true);
        if (aj.contains("ratio_r")) {
            alg.ratio_r = aj.at("ratio_r").get<double>();
            if (!(*alg.ratio_r > 0.0 && *alg.ratio_r < 1.0))
                throw std::runtime_error("config: algorithm '" + alg.name +
                                         "': ratio_r must lie in (0, 1)");
        }
        if (aj.contains("n_ite")) {
            alg.n_ite = aj.at("n_ite").get<int>();
            if (*alg.n_ite < 1)
                throw std::runtime_error("config: algorithm '" + alg.name +
                                         "': n_ite must be >= 1");
        }
        if (aj.contains("k")) {
            alg.k = aj.at("k").get<int>();
            if (*alg.k < 1)
                throw std::runtime_error("config: algorithm '" + alg.name +
                                         "': k must be >= 1");
        }
        if (aj.contains("n_g")) {
            alg.n_g = aj.at("n_g").get<int>();
            if (*alg.n_g < 1)
                throw std::runtime_error("config: algorithm '" + alg.name +
                                         "': n_g must be >= 1");
        }
        if (aj.contains("train")) alg.train = detail::parse_train(aj.at("train"));
        if (aj.contains("anneal"))
            alg.anneal = detail::parse_anneal(aj.at("anneal"));
        if (alg.kind == "ISFMA2") {
            if (aj.contains("phase1"))
                alg.phase1 = detail::parse_phase(aj.at("phase1"), 0.1, "phase1");
            if (aj.contains("phase2"))
                alg.phase2 = detail::parse_phase(aj.at("phase2"), 0.01, "phase2");
        } else if (aj.contains("phase1") || aj.contains("phase2")) {
            throw std::runtime_error("config: algorithm '" + alg.name +
                                     "': phases are only valid for ISFMA2");
        }
        cfg.algorithms.push_back(std::move(alg));
    }
    return cfg;
}

inline int default_latent_dim(int n_bit) { return std::max(1, n_bit / 2 - 1); }

/// Concrete per-instance strategy for a spec, filling n_bit-derived defaults.
inline StrategyConfig resolve_strategy(const AlgorithmSpec& alg, int n_bit) {
    StrategyConfig c;
    c.mode = alg.kind == "FMA" ? Mode::FMA
             : alg.kind == "RS" ? Mode::RS
                                : Mode::SFMA;
    c.standardize = alg.standardize;
    c.ratio_r = alg.ratio_r.value_or(0.4);
    c.n_ite = alg.n_ite.value_or(2 * n_bit * n_bit + 1);
    c.k = alg.k.value_or(default_latent_dim(n_bit));
    c.n_g = alg.n_g.value_or(5 * n_bit);
    c.train = alg.train;
    c.anneal = alg.anneal;
    return c;
}

/// The two phases of an ISFMA2 run. Phase 1 spans the initial full-dataset
/// loop plus n_bit^2 subsampled loops by default; phase 2 adds 5 n_bit^2
/// loops at the smaller ratio.
inline std::pair<StrategyConfig, StrategyConfig> resolve_isfma2(
    const AlgorithmSpec& alg, int n_bit) {
    StrategyConfig base = resolve_strategy(alg, n_bit);
    base.mode = Mode::SFMA;
    StrategyConfig p1 = base;
    p1.ratio_r = alg.phase1.ratio_r;
    p1.n_ite = alg.phase1.n_ite.value_or(n_bit * n_bit + 1);
    StrategyConfig p2 = base;
    p2.ratio_r = alg.phase2.ratio_r;
    p2.n_ite = alg.phase2.n_ite.value_or(5 * n_bit * n_bit);
    return {p1, p2};
}

/// Canonical JSON for hashing and the manifest. Key order is sorted by
/// construction, so equal configs serialize identically.
inline json config_to_json(const ExperimentConfig& cfg) {
    json instances = json::array();
    for (const auto& inst : cfg.instances) {
        json ij{{"id", inst.id}};
        if (inst.path) {
            ij["path"] = *inst.path;
        } else {
            ij["n"] = inst.n;
            ij["d"] = inst.d;
            ij["k_factor"] = inst.k_factor;
            ij["seed"] = inst.seed;
        }
        instances.push_back(std::move(ij));
    }
    json algorithms = json::array();
    for (const auto& alg : cfg.algorithms) {
        json aj{{"name", alg.name},
                {"mode", alg.kind},
                {"standardize", alg.standardize},
                {"train", train_config_to_json(alg.train)},
                {"anneal", anneal_config_to_json(alg.anneal)}};
        if (alg.ratio_r) aj["ratio_r"] = *alg.ratio_r;
        if (alg.n_ite) aj["n_ite"] = *alg.n_ite;
        if (alg.k) aj["k"] = *alg.k;
        if (alg.n_g) aj["n_g"] = *alg.n_g;
        if (alg.kind == "ISFMA2") {
            json p1{{"ratio_r", alg.phase1.ratio_r}};
            if (alg.phase1.n_ite) p1["n_ite"] = *alg.phase1.n_ite;
            json p2{{"ratio_r", alg.phase2.ratio_r}};
            if (alg.phase2.n_ite) p2["n_ite"] = *alg.phase2.n_ite;
            aj["phase1"] = std::move(p1);
            aj["phase2"] = std::move(p2);
        }
        algorithms.push_back(std::move(aj));
    }
    return json{{"instances", std::move(instances)},
                {"algorithms", std::move(algorithms)},
                {"n_samp", cfg.n_samp},
                {"master_seed", cfg.master_seed},
                {"output_dir", cfg.output_dir},
                {"oracle", cfg.oracle}};
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dump)));
    return buf;
}

/// Seed of one run. Shared across algorithms on purpose: every algorithm at
/// the same (instance, sample index) starts from the same initial dataset,
/// which is what makes their comparison paired rather than independent.
inline std::uint64_t run_seed(std::uint64_t master_seed,
                              const std::string& instance_id, int alpha) {
    const std::uint64_t inst = derive_seed(master_seed, instance_id);
    return derive_seed(inst, "alpha", static_cast<std::uint64_t>(alpha));
}

struct ExperimentResult {
    bool all_ok = true;
    int failures = 0;
    std::filesystem::path out_dir;
};

namespace detail {

struct RunTask {
    std::size_t instance_index;
    std::size_t algorithm_index;
    int alpha;  // 1-based sample index
};

struct RunOutcome {
    std::optional<RunTrace> trace;
    std::string error;
    std::uint64_t seed = 0;
    std::string trace_path;
};

inline std::string sanitize_component(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                              c == '_'
                          ? c
                          : '_');
    return out;
}

}  // namespace detail

/// Runs the full grid instances x algorithms x n_samp, persists every trace,
/// aggregates summaries and frequency tables, and writes a manifest. Failed
/// runs are recorded and skipped by aggregation; the experiment keeps going.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       int jobs = 1) {
    namespace fs = std::filesystem;
    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir / "traces");
    fs::create_directories(out_dir / "summary");

    // Materialize problems.
    std::vector<LossyCompressionProblem> problems;
    std::vector<BlackBoxFunction> functions;
    for (const auto& inst : cfg.instances) {
        LossyCompressionProblem p;
        if (inst.path) {
            LoadedInstance li = load_w_matrix(*inst.path);
            p = make_lossy_problem(std::move(li.w), li.k_factor);
        } else {
            p = make_lossy_problem(make_synthetic_w(inst.n, inst.d, inst.seed),
                                   inst.k_factor);
        }
        functions.push_back(as_black_box(p));
        problems.push_back(std::move(p));
    }

    // Oracle pass.
    std::vector<std::optional<OracleResult>> oracles(cfg.instances.size());
    if (cfg.oracle) {
        fs::create_directories(out_dir / "oracle");
        for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
            oracles[i] = brute_force_optima(functions[i]);
            write_text_file(
                out_dir / "oracle" /
                    (detail::sanitize_component(cfg.instances[i].id) + ".json"),
                oracle_to_json(*oracles[i], functions[i].n_bit).dump(2) + "\n");
        }
    }

    // Fan the runs out over a small worker pool; every task writes only its
    // own slots and files, and seeds are content-derived, so the result is
    // independent of scheduling.
    std::vector<detail::RunTask> tasks;
    for (std::size_t ii = 0; ii < cfg.instances.size(); ++ii)
        for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai)
            for (int alpha = 1; alpha <= cfg.n_samp; ++alpha)
                tasks.push_back(detail::RunTask{ii, ai, alpha});
    std::vector<detail::RunOutcome> outcomes(tasks.size());
    for (const auto& inst : cfg.instances)
        for (const auto& alg : cfg.algorithms)
            fs::create_directories(out_dir / "traces" /
                                   detail::sanitize_component(inst.id) /
                                   detail::sanitize_component(alg.name));

    std::atomic<std::size_t> cursor{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = cursor.fetch_add(1);
            if (t >= tasks.size()) return;
            const auto& task = tasks[t];
            const auto& inst = cfg.instances[task.instance_index];
            const auto& alg = cfg.algorithms[task.algorithm_index];
            const auto& fn = functions[task.instance_index];
            auto& outcome = outcomes[t];
            outcome.seed = run_seed(cfg.master_seed, inst.id, task.alpha);
            const fs::path trace_path =
                out_dir / "traces" / detail::sanitize_component(inst.id) /
                detail::sanitize_component(alg.name) /
                ("alpha_" + std::to_string(task.alpha) + ".jsonl");
            outcome.trace_path = fs::relative(trace_path, out_dir).string();
            try {
                RunTrace trace;
                if (alg.kind == "ISFMA2") {
                    auto [p1, p2] = resolve_isfma2(alg, fn.n_bit);
                    trace = run_isfma2(fn, p1, p2, outcome.seed);
                } else {
                    trace = run_bbo(fn, resolve_strategy(alg, fn.n_bit),
                                    outcome.seed);
                }
                write_text_file(trace_path, run_trace_to_jsonl(trace));
                outcome.trace = std::move(trace);
            } catch (const std::exception& e) {
                outcome.error = e.what();
            }
        }
    };
    const int n_workers = std::max(1, jobs);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    // Aggregate per (instance, algorithm).
    std::map<std::string, std::map<std::string, std::optional<Rational>>>
        nconv_cells, rate_cells;
    int failures = 0;
    for (const auto& o : outcomes)
        if (!o.trace) ++failures;

    for (std::size_t ii = 0; ii < cfg.instances.size(); ++ii) {
        const auto& inst = cfg.instances[ii];
        // Best known objective: the oracle when present, otherwise the best
        // value any run of this instance found (labelled as such).
        double y_star = 0.0;
        std::string y_star_source = "oracle";
        if (oracles[ii]) {
            y_star = oracles[ii]->y_opt_1st;
        } else {
            y_star_source = "best_found";
            bool seen = false;
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                if (tasks[t].instance_index != ii || !outcomes[t].trace)
                    continue;
                const auto rm = running_min(*outcomes[t].trace);
                if (!seen || rm.back() < y_star) y_star = rm.back();
                seen = true;
            }
        }
        for (std::size_t ai = 0; ai < cfg.algorithms.size(); ++ai) {
            const auto& alg = cfg.algorithms[ai];
            TraceEnsemble ensemble;
            ensemble.y_star = y_star;
            bool complete = true;
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                if (tasks[t].instance_index != ii ||
                    tasks[t].algorithm_index != ai)
                    continue;
                if (!outcomes[t].trace) {
                    complete = false;
                    break;
                }
                ensemble.traces.push_back(*outcomes[t].trace);
            }
            if (!complete || ensemble.traces.empty()) {
                nconv_cells[inst.id][alg.name] = std::nullopt;
                rate_cells[inst.id][alg.name] = std::nullopt;
                continue;
            }
            const BenchmarkSummary summary = aggregate(ensemble);
            nconv_cells[inst.id][alg.name] =
                summary.n_conv ? std::optional<Rational>(
                                     Rational{*summary.n_conv, 1})
                               : std::nullopt;
            rate_cells[inst.id][alg.name] = summary.final_success_rate;

            const std::string stem = detail::sanitize_component(inst.id) +
                                     "__" +
                                     detail::sanitize_component(alg.name);
            json sj = summary_to_json(summary);
            sj["instance"] = inst.id;
            sj["algorithm"] = alg.name;
            sj["y_star_source"] = y_star_source;
            sj["ci_formula"] = "1.96*sqrt(variance/n_samp)";
            write_text_file(out_dir / "summary" / (stem + ".json"),
                            sj.dump(2) + "\n");
            write_text_file(out_dir / "summary" / (stem + ".csv"),
                            summary_to_csv(summary));
        }
    }

    // Frequency tables across instances.
    std::vector<std::string> instance_ids, algorithm_names;
    for (const auto& inst : cfg.instances) instance_ids.push_back(inst.id);
    for (const auto& alg : cfg.algorithms) algorithm_names.push_back(alg.name);
    write_text_file(out_dir / "frequency_nconv.csv",
                    frequency_to_csv(instance_ids, algorithm_names, nconv_cells,
                                     frequency_table(nconv_cells, Better::Smaller),
                                     false));
    write_text_file(out_dir / "frequency_final_success.csv",
                    frequency_to_csv(instance_ids, algorithm_names, rate_cells,
                                     frequency_table(rate_cells, Better::Larger),
                                     true));

    // Manifest: config, hash, and one record per run. The timestamp lives
    // here and nowhere else in the bundle.
    json runs = json::array();
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        const auto& o = outcomes[t];
        json r{{"instance", cfg.instances[task.instance_index].id},
               {"algorithm", cfg.algorithms[task.algorithm_index].name},
               {"alpha", task.alpha},
               {"seed", o.seed},
               {"trace", o.trace_path},
               {"status", o.trace ? "ok" : "failed"}};
        if (!o.trace) r["error"] = o.error;
        runs.push_back(std::move(r));
    }
    const auto now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    json manifest{{"format", "sfma-bundle-v1"},
                  {"config", config_to_json(cfg)},
                  {"config_hash", config_hash(cfg)},
                  {"created_utc", stamp},
                  {"runs", std::move(runs)},
                  {"failures", failures},
                  {"all_ok", failures == 0}};
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    return ExperimentResult{failures == 0, failures, out_dir};
}

enum class PlotAxis { DatasetSize, Iteration };

/// Plot-ready CSV. The dataset-size axis carries the mean running minimum
/// with its confidence half-width; the iteration axis carries the success
/// rate. Oracle reference rows are appended when available.
inline std::string export_plot_data(
    const BenchmarkSummary& s, PlotAxis axis,
    const std::optional<OracleResult>& oracle = std::nullopt) {
    std::ostringstream out;
    if (axis == PlotAxis::DatasetSize) {
        out << "series,a,dataset_size,value,ci95_half_width\n";
        for (std::size_t a = 0; a < s.length(); ++a)
            out << "mean_min," << a << ',' << (s.initial_size + a) << ','
                << fmt_double(s.mean_min[a]) << ','
                << fmt_double(s.ci95_half_width[a]) << '\n';
        if (oracle) {
            out << "y_opt_1st,,," << fmt_double(oracle->y_opt_1st) << ",\n";
            if (oracle->y_opt_2nd)
                out << "y_opt_2nd,,," << fmt_double(*oracle->y_opt_2nd)
                    << ",\n";
        }
    } else {
        out << "series,a,iteration,success_num,success_den,value\n";
        for (std::size_t a = 1; a < s.length(); ++a)
            out << "success_rate," << a << ',' << a << ','
                << s.success_rate[a].num << ',' << s.success_rate[a].den << ','
                << fmt_double(s.success_rate[a].value()) << '\n';
    }
    return out.str();
}

}  // namespace sfma
