// Command-line front end: oracle / run / aggregate / export.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sfma/experiment.hpp"

namespace fs = std::filesystem;
using namespace sfma;

namespace {

int cmd_oracle(const std::string& w_csv, int n, int d, int k_factor,
               std::uint64_t instance_seed, const std::string& out_path,
               const std::string& save_w_path) {
    LossyCompressionProblem problem;
    std::uint64_t seed = instance_seed;
    if (!w_csv.empty()) {
        LoadedInstance li = load_w_matrix(w_csv);
        seed = li.seed;
        problem = make_lossy_problem(std::move(li.w), li.k_factor);
    } else {
        problem = make_lossy_problem(make_synthetic_w(n, d, instance_seed),
                                     k_factor);
    }
    if (!save_w_path.empty())
        save_w_matrix(save_w_path, problem.w, problem.k_factor, seed);
    const BlackBoxFunction fn = as_black_box(problem);
    const OracleResult oracle = brute_force_optima(fn);
    json j = oracle_to_json(oracle, fn.n_bit);
    j["instance_seed"] = seed;
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    std::cerr << "optimum " << fmt_double(oracle.y_opt_1st) << " over 2^"
              << fn.n_bit << " inputs, " << oracle.best.size()
              << " argmin input(s)\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            int jobs, std::optional<std::uint64_t> seed_override) {
    ExperimentConfig cfg = parse_config(read_text_file(config_path));
    if (!out_override.empty()) cfg.output_dir = out_override;
    if (seed_override) cfg.master_seed = *seed_override;
    const ExperimentResult result = run_experiment(cfg, jobs);
    if (result.failures > 0)
        std::cerr << result.failures << " run(s) failed; see "
                  << (result.out_dir / "manifest.json") << "\n";
    else
        std::cerr << "bundle written to " << result.out_dir << "\n";
    return result.all_ok ? 0 : 1;
}

// Rebuilds summaries and frequency tables from the trace files of an
// existing bundle directory.
int cmd_aggregate(const std::string& bundle_dir) {
    const fs::path root = bundle_dir;
    const fs::path traces_dir = root / "traces";
    if (!fs::is_directory(traces_dir)) {
        std::cerr << "no traces/ directory under " << root << "\n";
        return 1;
    }

    std::map<std::string, std::map<std::string, std::optional<Rational>>>
        nconv_cells, rate_cells;
    std::vector<std::string> instance_ids, algorithm_names;
    std::vector<fs::path> instance_dirs;
    for (const auto& inst_entry : fs::directory_iterator(traces_dir))
        if (inst_entry.is_directory()) instance_dirs.push_back(inst_entry.path());
    std::sort(instance_dirs.begin(), instance_dirs.end());
    for (const auto& inst_dir : instance_dirs) {
        const std::string inst = inst_dir.filename().string();
        instance_ids.push_back(inst);

        std::optional<OracleResult> oracle;
        const fs::path oracle_path = root / "oracle" / (inst + ".json");
        if (fs::exists(oracle_path))
            oracle = oracle_from_json(json::parse(read_text_file(oracle_path)));

        std::vector<fs::path> alg_dirs;
        for (const auto& alg_entry : fs::directory_iterator(inst_dir))
            if (alg_entry.is_directory()) alg_dirs.push_back(alg_entry.path());
        std::sort(alg_dirs.begin(), alg_dirs.end());
        for (const auto& alg_dir : alg_dirs) {
            const std::string alg = alg_dir.filename().string();
            if (std::find(algorithm_names.begin(), algorithm_names.end(),
                          alg) == algorithm_names.end())
                algorithm_names.push_back(alg);

            TraceEnsemble ensemble;
            std::vector<fs::path> files;
            for (const auto& f : fs::directory_iterator(alg_dir))
                if (f.path().extension() == ".jsonl") files.push_back(f.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files)
                ensemble.traces.push_back(run_trace_from_jsonl(read_text_file(f)));
            if (ensemble.traces.empty()) continue;

            std::string y_star_source = "oracle";
            if (oracle) {
                ensemble.y_star = oracle->y_opt_1st;
            } else {
                y_star_source = "best_found";
                double best = running_min(ensemble.traces[0]).back();
                for (const auto& t : ensemble.traces)
                    best = std::min(best, running_min(t).back());
                ensemble.y_star = best;
            }
            const BenchmarkSummary summary = aggregate(ensemble);
            nconv_cells[inst][alg] =
                summary.n_conv
                    ? std::optional<Rational>(Rational{*summary.n_conv, 1})
                    : std::nullopt;
            rate_cells[inst][alg] = summary.final_success_rate;

            json sj = summary_to_json(summary);
            sj["instance"] = inst;
            sj["algorithm"] = alg;
            sj["y_star_source"] = y_star_source;
            sj["ci_formula"] = "1.96*sqrt(variance/n_samp)";
            write_text_file(root / "summary" / (inst + "__" + alg + ".json"),
                            sj.dump(2) + "\n");
            write_text_file(root / "summary" / (inst + "__" + alg + ".csv"),
                            summary_to_csv(summary));
        }
    }
    if (instance_ids.empty()) {
        std::cerr << "no traces found\n";
        return 1;
    }
    write_text_file(root / "frequency_nconv.csv",
                    frequency_to_csv(instance_ids, algorithm_names, nconv_cells,
                                     frequency_table(nconv_cells, Better::Smaller),
                                     false));
    write_text_file(root / "frequency_final_success.csv",
                    frequency_to_csv(instance_ids, algorithm_names, rate_cells,
                                     frequency_table(rate_cells, Better::Larger),
                                     true));
    std::cerr << "aggregated " << instance_ids.size() << " instance(s)\n";
    return 0;
}

int cmd_export(const std::string& summary_path, const std::string& axis,
               const std::string& oracle_path, const std::string& out_path) {
    const BenchmarkSummary summary =
        summary_from_json(json::parse(read_text_file(summary_path)));
    std::optional<OracleResult> oracle;
    if (!oracle_path.empty())
        oracle = oracle_from_json(json::parse(read_text_file(oracle_path)));
    const PlotAxis ax =
        axis == "iteration" ? PlotAxis::Iteration : PlotAxis::DatasetSize;
    const std::string csv = export_plot_data(summary, ax, oracle);
    if (out_path.empty())
        std::cout << csv;
    else
        write_text_file(out_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subsampling factorization-machine annealing toolkit"};
    app.require_subcommand(1);

    // oracle
    auto* oracle = app.add_subcommand(
        "oracle", "Exhaustively enumerate a compression instance");
    std::string o_w_csv, o_out, o_save_w;
    int o_n = 6, o_d = 50, o_k = 2;
    std::uint64_t o_seed = 0;
    oracle->add_option("--w-csv", o_w_csv,
                       "Load the target matrix from CSV (+ sidecar JSON)");
    oracle->add_option("--save-w", o_save_w,
                       "Also write the target matrix as CSV (+ sidecar)");
    oracle->add_option("--n", o_n, "Rows of the synthetic target");
    oracle->add_option("--d", o_d, "Columns of the synthetic target");
    oracle->add_option("--k-factor", o_k, "Columns of the spin factor M");
    oracle->add_option("--instance-seed", o_seed, "Synthetic instance seed");
    oracle->add_option("--out", o_out, "Output JSON path (stdout by default)");

    // run
    auto* run = app.add_subcommand("run", "Run a benchmark configuration");
    std::string r_config, r_out;
    int r_jobs = 1;
    std::int64_t r_seed = -1;
    run->add_option("--config", r_config, "Experiment JSON document")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--out", r_out, "Output directory (overrides config)");
    run->add_option("--jobs", r_jobs, "Parallel worker count")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed", r_seed, "Master seed override");

    // aggregate
    auto* agg = app.add_subcommand(
        "aggregate", "Recompute summaries from a bundle's trace files");
    std::string a_bundle;
    agg->add_option("--bundle", a_bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);

    // export
    auto* exp = app.add_subcommand("export", "Emit plot-ready CSV");
    std::string e_summary, e_axis = "dataset_size", e_oracle, e_out;
    exp->add_option("--summary", e_summary, "Summary JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    exp->add_option("--axis", e_axis, "dataset_size or iteration")
        ->check(CLI::IsMember({"dataset_size", "iteration"}));
    exp->add_option("--oracle", e_oracle, "Oracle JSON for reference rows");
    exp->add_option("--out", e_out, "Output CSV path (stdout by default)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*oracle)
            return cmd_oracle(o_w_csv, o_n, o_d, o_k, o_seed, o_out, o_save_w);
        if (*run)
            return cmd_run(r_config, r_out, r_jobs,
                           r_seed < 0 ? std::nullopt
                                      : std::optional<std::uint64_t>(
                                            static_cast<std::uint64_t>(r_seed)));
        if (*agg) return cmd_aggregate(a_bundle);
        if (*exp) return cmd_export(e_summary, e_axis, e_oracle, e_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
