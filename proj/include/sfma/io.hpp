#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfma/bbo.hpp"
#include "sfma/fm.hpp"
#include "sfma/metrics.hpp"
#include "sfma/problem.hpp"

namespace sfma {

using json = nlohmann::json;

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? "."
                                            : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// ---- WMatrix: CSV of rows plus a sidecar JSON with instance metadata ----

inline std::string w_matrix_to_csv(const WMatrix& w) {
    std::ostringstream out;
    for (int i = 0; i < w.rows(); ++i) {
        for (int j = 0; j < w.cols(); ++j) {
            if (j) out << ',';
            out << fmt_double(w.entries(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline WMatrix w_matrix_from_csv(const std::string& text) {
    WMatrix w;
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("w_matrix_from_csv: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("w_matrix_from_csv: no data");
    w.entries.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            w.entries(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(j)) = rows[i][j];
    return w;
}

inline void save_w_matrix(const std::filesystem::path& csv_path,
                          const WMatrix& w, int k_factor,
                          std::uint64_t seed) {
    write_text_file(csv_path, w_matrix_to_csv(w));
    json side = {{"n", w.rows()},
                 {"d", w.cols()},
                 {"k_factor", k_factor},
                 {"seed", seed}};
    write_text_file(csv_path.string() + ".json", side.dump(2) + "\n");
}

struct LoadedInstance {
    WMatrix w;
    int k_factor = 1;
    std::uint64_t seed = 0;
};

inline LoadedInstance load_w_matrix(const std::filesystem::path& csv_path) {
    LoadedInstance out;
    out.w = w_matrix_from_csv(read_text_file(csv_path));
    const json side = json::parse(read_text_file(csv_path.string() + ".json"));
    out.k_factor = side.at("k_factor").get<int>();
    out.seed = side.value("seed", 0ull);
    if (side.at("n").get<int>() != out.w.rows() ||
        side.at("d").get<int>() != out.w.cols())
        throw std::runtime_error("load_w_matrix: sidecar shape mismatch");
    return out;
}

// ---- FmParams JSON ----

inline json fm_params_to_json(const FmParams& p) {
    json v = json::array();
    for (int i = 0; i < p.n_bit(); ++i) {
        json row = json::array();
        for (int l = 0; l < p.k; ++l) row.push_back(p.v_at(i, l));
        v.push_back(std::move(row));
    }
    return json{{"w0", p.w0}, {"w", p.w}, {"v", v}, {"k", p.k}};
}

inline FmParams fm_params_from_json(const json& j) {
    FmParams p;
    p.w0 = j.at("w0").get<double>();
    p.w = j.at("w").get<std::vector<double>>();
    p.k = j.at("k").get<int>();
    const auto& v = j.at("v");
    p.v.reserve(p.w.size() * p.k);
    for (const auto& row : v)
        for (const auto& x : row) p.v.push_back(x.get<double>());
    check_fm_shapes(p);
    return p;
}

// ---- strategy / anneal / train configs as JSON ----

inline json train_config_to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"n_epochs", c.n_epochs},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_eps", c.adam_eps}};
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.n_epochs = j.at("n_epochs").get<int>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    return c;
}

inline json anneal_config_to_json(const AnnealConfig& c) {
    json j{{"n_reads", c.n_reads}, {"n_sweeps", c.n_sweeps}};
    if (c.beta_hot) j["beta_hot"] = *c.beta_hot;
    if (c.beta_cold) j["beta_cold"] = *c.beta_cold;
    return j;
}

inline AnnealConfig anneal_config_from_json(const json& j) {
    AnnealConfig c;
    c.n_reads = j.at("n_reads").get<int>();
    c.n_sweeps = j.at("n_sweeps").get<int>();
    if (j.contains("beta_hot")) c.beta_hot = j.at("beta_hot").get<double>();
    if (j.contains("beta_cold")) c.beta_cold = j.at("beta_cold").get<double>();
    return c;
}

inline json strategy_config_to_json(const StrategyConfig& c) {
    return json{{"mode", mode_name(c.mode)},
                {"standardize", c.standardize},
                {"ratio_r", c.ratio_r},
                {"n_ite", c.n_ite},
                {"k", c.k},
                {"n_g", c.n_g},
                {"train", train_config_to_json(c.train)},
                {"anneal", anneal_config_to_json(c.anneal)}};
}

inline Mode mode_from_name(const std::string& name) {
    if (name == "FMA") return Mode::FMA;
    if (name == "SFMA") return Mode::SFMA;
    if (name == "RS") return Mode::RS;
    throw std::runtime_error("unknown mode '" + name + "'");
}

inline StrategyConfig strategy_config_from_json(const json& j) {
    StrategyConfig c;
    c.mode = mode_from_name(j.at("mode").get<std::string>());
    c.standardize = j.at("standardize").get<bool>();
    c.ratio_r = j.at("ratio_r").get<double>();
    c.n_ite = j.at("n_ite").get<int>();
    c.k = j.at("k").get<int>();
    c.n_g = j.at("n_g").get<int>();
    c.train = train_config_from_json(j.at("train"));
    c.anneal = anneal_config_from_json(j.at("anneal"));
    return c;
}

// ---- RunTrace as JSON lines ----
// First line: header with config, seed, and the initial dataset.
// Then one line per query: {loop_index, x, y, y_min_so_far}.

inline std::string run_trace_to_jsonl(const RunTrace& trace) {
    json initial = json::array();
    for (const auto& pt : trace.initial.points)
        initial.push_back(json{{"x", to_bit_string(pt.x)}, {"y", pt.y}});
    json header{{"type", "header"},
                {"format", "sfma-trace-v1"},
                {"seed", trace.seed},
                {"config", strategy_config_to_json(trace.config)},
                {"initial", std::move(initial)}};
    if (trace.phase2) header["phase2"] = strategy_config_to_json(*trace.phase2);

    std::ostringstream out;
    out << header.dump() << '\n';
    double best = trace.initial.points.empty()
                      ? std::numeric_limits<double>::infinity()
                      : trace.initial.points[0].y;
    for (const auto& pt : trace.initial.points) best = std::min(best, pt.y);
    for (std::size_t i = 0; i < trace.queries.size(); ++i) {
        const auto& q = trace.queries[i];
        best = std::min(best, q.y);
        json rec{{"loop_index", i + 1},
                 {"x", to_bit_string(q.x)},
                 {"y", q.y},
                 {"y_min_so_far", best}};
        if (i < trace.loop_stats.size() && trace.loop_stats[i])
            rec["stats"] = json{{"y_bar", trace.loop_stats[i]->y_bar},
                                {"var_y", trace.loop_stats[i]->var_y},
                                {"n_g", trace.loop_stats[i]->n_g}};
        out << rec.dump() << '\n';
    }
    return out.str();
}

inline RunTrace run_trace_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("run_trace_from_jsonl: empty document");
    const json header = json::parse(line);
    if (header.value("type", "") != "header")
        throw std::runtime_error("run_trace_from_jsonl: missing header record");

    RunTrace trace;
    trace.seed = header.at("seed").get<std::uint64_t>();
    trace.config = strategy_config_from_json(header.at("config"));
    if (header.contains("phase2"))
        trace.phase2 = strategy_config_from_json(header.at("phase2"));
    for (const auto& pt : header.at("initial"))
        trace.initial.points.push_back(
            DataPoint{from_bit_string(pt.at("x").get<std::string>()),
                      pt.at("y").get<double>()});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        trace.queries.push_back(
            DataPoint{from_bit_string(rec.at("x").get<std::string>()),
                      rec.at("y").get<double>()});
        if (rec.contains("stats")) {
            const auto& s = rec.at("stats");
            trace.loop_stats.push_back(StandardizationStats{
                s.at("y_bar").get<double>(), s.at("var_y").get<double>(),
                s.at("n_g").get<int>()});
        } else {
            trace.loop_stats.push_back(std::nullopt);
        }
    }
    return trace;
}

// ---- OracleResult JSON ----

inline json oracle_to_json(const OracleResult& o, int n_bit) {
    json argmin = json::array();
    for (const auto& [x, y] : o.best) argmin.push_back(to_bit_string(x));
    json j{{"n_bit", n_bit},
           {"y_opt_1st", o.y_opt_1st},
           {"argmin", std::move(argmin)}};
    j["y_opt_2nd"] = o.y_opt_2nd ? json(*o.y_opt_2nd) : json(nullptr);
    return j;
}

inline OracleResult oracle_from_json(const json& j) {
    OracleResult o;
    o.y_opt_1st = j.at("y_opt_1st").get<double>();
    if (!j.at("y_opt_2nd").is_null())
        o.y_opt_2nd = j.at("y_opt_2nd").get<double>();
    for (const auto& s : j.at("argmin"))
        o.best.emplace_back(from_bit_string(s.get<std::string>()),
                            o.y_opt_1st);
    return o;
}

// ---- BenchmarkSummary CSV / JSON ----

inline std::string summary_to_csv(const BenchmarkSummary& s) {
    std::ostringstream out;
    out << "a,dataset_size,mean_min,success_num,success_den,variance,ci95\n";
    for (std::size_t a = 0; a < s.length(); ++a) {
        out << a << ',' << (s.initial_size + a) << ','
            << fmt_double(s.mean_min[a]) << ',' << s.success_rate[a].num << ','
            << s.success_rate[a].den << ',' << fmt_double(s.variance[a]) << ','
            << fmt_double(s.ci95_half_width[a]) << '\n';
    }
    return out.str();
}

inline json summary_to_json(const BenchmarkSummary& s) {
    json series = json::array();
    for (std::size_t a = 0; a < s.length(); ++a)
        series.push_back(json{{"a", a},
                              {"dataset_size", s.initial_size + a},
                              {"mean_min", s.mean_min[a]},
                              {"success_num", s.success_rate[a].num},
                              {"success_den", s.success_rate[a].den},
                              {"variance", s.variance[a]},
                              {"ci95", s.ci95_half_width[a]}});
    json j{{"n_samp", s.n_samp},
           {"initial_size", s.initial_size},
           {"n_bit", s.n_bit},
           {"y_star", s.y_star},
           {"series", std::move(series)},
           {"final_success_rate", s.final_success_rate.str()}};
    j["n_conv"] = s.n_conv ? json(*s.n_conv) : json(nullptr);
    return j;
}

inline BenchmarkSummary summary_from_json(const json& j) {
    BenchmarkSummary s;
    s.n_samp = j.at("n_samp").get<int>();
    s.initial_size = j.at("initial_size").get<int>();
    s.n_bit = j.at("n_bit").get<int>();
    s.y_star = j.at("y_star").get<double>();
    for (const auto& row : j.at("series")) {
        s.mean_min.push_back(row.at("mean_min").get<double>());
        s.success_rate.push_back(Rational{row.at("success_num").get<long long>(),
                                          row.at("success_den").get<long long>()});
        s.variance.push_back(row.at("variance").get<double>());
        s.ci95_half_width.push_back(row.at("ci95").get<double>());
    }
    if (!j.at("n_conv").is_null()) s.n_conv = j.at("n_conv").get<int>();
    if (!s.success_rate.empty()) s.final_success_rate = s.success_rate.back();
    return s;
}

/// Frequency tables in the benchmark layout: algorithms as rows, instances
/// as columns, one trailing frequency column. Cells show the metric value or
/// "None".
inline std::string frequency_to_csv(
    const std::vector<std::string>& instances,
    const std::vector<std::string>& algorithms,
    const std::map<std::string,
                   std::map<std::string, std::optional<Rational>>>& values,
    const std::map<std::string, double>& freq, bool as_fraction) {
    std::ostringstream out;
    out << "algorithm";
    for (const auto& inst : instances) out << ',' << inst;
    out << ",frequency\n";
    for (const auto& alg : algorithms) {
        out << alg;
        for (const auto& inst : instances) {
            out << ',';
            std::optional<Rational> cell;
            const auto it_inst = values.find(inst);
            if (it_inst != values.end()) {
                const auto it_alg = it_inst->second.find(alg);
                if (it_alg != it_inst->second.end()) cell = it_alg->second;
            }
            if (!cell)
                out << "None";
            else if (as_fraction)
                out << cell->str();
            else
                out << cell->num;
        }
        const auto fit = freq.find(alg);
        out << ',' << fmt_double(fit == freq.end() ? 0.0 : fit->second) << '\n';
    }
    return out.str();
}

}  // namespace sfma
