#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nurf/benchmarks.hpp"
#include "nurf/error.hpp"
#include "nurf/psi_table.hpp"
#include "nurf/regression.hpp"
#include "nurf/samplers.hpp"

namespace nurf {

using Json = nlohmann::json;

/// A sampler together with the label it carries in result tables.
struct LabeledSampler {
    std::string label;
    SamplerSpec spec;
};

struct ExperimentConfig {
    std::string benchmark = "gauss1d";
    int d = 0;
    std::size_t K = 1000;
    PointSampling sampling = PointSampling::uniform_random;
    double noise_sigma = -1.0;  // < 0: benchmark default
    std::size_t n_test = 5000;
    std::vector<LabeledSampler> samplers;
    std::vector<std::size_t> n_grid;
    std::size_t replicates = 20;
    ActivationSpec activation{1, -1.0};  // delta < 0: 1/80 in 1-D, 1/40 otherwise
    double delta_w = -1.0;                // < 0: twice the activation width
    std::vector<double> alpha_grid;
    bool polynomial = true;
    std::uint64_t seed = 1;
    std::string output_dir = "results";
    std::size_t threads = 0;  // 0: hardware concurrency
    bool record_time = true;
};

namespace detail {

template <typename T>
void read_field(const Json& j, const char* key, T& target)
{
    if (j.contains(key)) {
        try {
            target = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::config, std::string("field '") + key + "': " + e.what());
        }
    }
}

inline RhoMode parse_rho_mode(const std::string& name)
{
    if (name == "constant") return RhoMode::constant;
    if (name == "known") return RhoMode::known;
    throw Error(ErrorKind::config, "rho_mode must be 'constant' or 'known'");
}

inline LabeledSampler parse_sampler(const Json& j)
{
    LabeledSampler out;
    if (j.is_string()) {
        out.spec.kind = parse_sampler_kind(j.get<std::string>());
        out.label = j.get<std::string>();
        out.spec.order_m = -1;
        return out;
    }
    if (!j.is_object() || !j.contains("kind")) {
        throw Error(ErrorKind::config, "sampler entries need a 'kind'");
    }
    out.spec.kind = parse_sampler_kind(j.at("kind").get<std::string>());
    out.label = std::string(sampler_kind_name(out.spec.kind));
    out.spec.order_m = -1;
    read_field(j, "label", out.label);
    read_field(j, "delta_w", out.spec.delta_w);
    read_field(j, "order_m", out.spec.order_m);
    read_field(j, "safety", out.spec.safety);
    read_field(j, "kappa", out.spec.kappa);
    read_field(j, "n0", out.spec.n0);
    if (j.contains("base")) {
        out.spec.base_kind = parse_sampler_kind(j.at("base").get<std::string>());
    }
    if (j.contains("rho_mode")) {
        out.spec.rho_mode = parse_rho_mode(j.at("rho_mode").get<std::string>());
    }
    return out;
}

inline Json parse_override_value(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
        return Json(text);
    }
}

} // namespace detail

/// Sets a dotted key (e.g. "activation.delta" or "samplers.1.kappa") in a
/// JSON document. The value is parsed as JSON when possible, else kept as text.
inline void apply_override(Json& doc, const std::string& dotted, const std::string& value)
{
    if (dotted.empty()) {
        throw Error(ErrorKind::config, "empty override key");
    }
    std::string pointer;
    std::stringstream parts(dotted);
    std::string part;
    while (std::getline(parts, part, '.')) {
        if (part.empty()) {
            throw Error(ErrorKind::config, "malformed override key '" + dotted + "'");
        }
        pointer += '/' + part;
    }
    try {
        doc[Json::json_pointer(pointer)] = detail::parse_override_value(value);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, "cannot apply override '" + dotted + "': " + e.what());
    }
}

/// Interprets a JSON document, fills defaults and validates.
inline ExperimentConfig parse_config(const Json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorKind::config, "configuration must be a JSON object");
    }
    static const std::set<std::string> known{"benchmark", "d",         "K",          "sampling",   "noise_sigma",
                                             "n_test",    "samplers",  "n_grid",     "replicates", "activation",
                                             "delta_w",   "alpha_grid", "polynomial", "seed",       "output_dir",
                                             "threads",   "timing"};
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw Error(ErrorKind::config, "unknown configuration field '" + item.key() + "'");
        }
    }
    ExperimentConfig c;
    detail::read_field(j, "benchmark", c.benchmark);
    detail::read_field(j, "d", c.d);
    detail::read_field(j, "K", c.K);
    detail::read_field(j, "noise_sigma", c.noise_sigma);
    detail::read_field(j, "n_test", c.n_test);
    detail::read_field(j, "n_grid", c.n_grid);
    detail::read_field(j, "replicates", c.replicates);
    detail::read_field(j, "delta_w", c.delta_w);
    detail::read_field(j, "polynomial", c.polynomial);
    detail::read_field(j, "seed", c.seed);
    detail::read_field(j, "output_dir", c.output_dir);
    detail::read_field(j, "threads", c.threads);
    if (j.contains("sampling")) {
        const auto mode = j.at("sampling").get<std::string>();
        if (mode == "grid") {
            c.sampling = PointSampling::grid;
        } else if (mode == "uniform" || mode == "uniform_random") {
            c.sampling = PointSampling::uniform_random;
        } else {
            throw Error(ErrorKind::config, "sampling must be 'grid' or 'uniform'");
        }
    }
    if (j.contains("timing")) {
        const auto mode = j.at("timing").get<std::string>();
        if (mode != "wall" && mode != "off") {
            throw Error(ErrorKind::config, "timing must be 'wall' or 'off'");
        }
        c.record_time = mode == "wall";
    }
    if (j.contains("activation")) {
        detail::read_field(j.at("activation"), "s", c.activation.s);
        detail::read_field(j.at("activation"), "delta", c.activation.delta);
    }
    if (j.contains("alpha_grid")) {
        const Json& a = j.at("alpha_grid");
        if (a.is_array()) {
            c.alpha_grid = a.get<std::vector<double>>();
        } else if (a.is_object()) {
            double lo = 1e-12;
            double hi = 1.0;
            std::size_t count = 25;
            detail::read_field(a, "lo", lo);
            detail::read_field(a, "hi", hi);
            detail::read_field(a, "count", count);
            if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
                throw Error(ErrorKind::config, "alpha_grid needs 0 < lo <= hi and count >= 1");
            }
            c.alpha_grid = log_alpha_grid(lo, hi, count);
        } else {
            throw Error(ErrorKind::config, "alpha_grid must be a list or {lo, hi, count}");
        }
    } else {
        c.alpha_grid = log_alpha_grid();
    }
    if (j.contains("samplers")) {
        if (!j.at("samplers").is_array()) {
            throw Error(ErrorKind::config, "samplers must be a list");
        }
        for (const Json& s : j.at("samplers")) {
            c.samplers.push_back(detail::parse_sampler(s));
        }
    }

    // Defaults and validation.
    try {
        if (c.d == 0) {
            c.d = default_benchmark_dim(c.benchmark);
        }
    } catch (const Error& e) {
        throw Error(ErrorKind::config, e.what());
    }
    if (c.activation.delta < 0.0) {
        c.activation.delta = c.d == 1 ? 1.0 / 80.0 : 1.0 / 40.0;
    }
    try {
        c.activation.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::config, e.what());
    }
    if (c.delta_w < 0.0) {
        c.delta_w = 2.0 * c.activation.delta;
    }
    if (c.samplers.empty()) {
        throw Error(ErrorKind::config, "at least one sampler is required");
    }
    std::set<std::string> labels;
    for (LabeledSampler& s : c.samplers) {
        if (!labels.insert(s.label).second) {
            throw Error(ErrorKind::config, "duplicate sampler label '" + s.label + "'");
        }
        if (s.label.find(',') != std::string::npos) {
            throw Error(ErrorKind::config, "sampler labels may not contain commas");
        }
        if (s.spec.delta_w == 0.0) {
            s.spec.delta_w = c.delta_w;
        }
        if (s.spec.order_m < 0) {
            s.spec.order_m = c.activation.s - 1;
        }
        try {
            s.spec.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::config, "sampler '" + s.label + "': " + e.what());
        }
    }
    if (c.n_grid.empty()) {
        throw Error(ErrorKind::config, "n_grid must not be empty");
    }
    for (std::size_t i = 0; i < c.n_grid.size(); ++i) {
        if (c.n_grid[i] < 1 || (i > 0 && c.n_grid[i] <= c.n_grid[i - 1])) {
            throw Error(ErrorKind::config, "n_grid must be strictly ascending and positive");
        }
    }
    if (c.replicates < 1) {
        throw Error(ErrorKind::config, "replicates must be >= 1");
    }
    if (c.K < 10) {
        throw Error(ErrorKind::config, "K must be >= 10");
    }
    if (c.alpha_grid.empty()) {
        throw Error(ErrorKind::config, "alpha grid must not be empty");
    }
    std::sort(c.alpha_grid.begin(), c.alpha_grid.end(), std::greater<>());
    c.alpha_grid.erase(std::unique(c.alpha_grid.begin(), c.alpha_grid.end()), c.alpha_grid.end());
    if (!(c.alpha_grid.back() > 0.0)) {
        throw Error(ErrorKind::config, "alpha values must be positive");
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::pair<std::string, std::string>>& overrides = {})
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::config, "cannot open configuration '" + path + "'");
    }
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::config, std::string("invalid JSON in '") + path + "': " + e.what());
    }
    for (const auto& [key, value] : overrides) {
        apply_override(doc, key, value);
    }
    return parse_config(doc);
}

struct ResultRow {
    std::string benchmark;
    int d = 0;
    std::string sampler;
    std::size_t N = 0;
    std::size_t replicate = 0;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double train_rmse = std::numeric_limits<double>::quiet_NaN();
    double val_rmse = std::numeric_limits<double>::quiet_NaN();
    double test_rmse = std::numeric_limits<double>::quiet_NaN();
    double accept_rate = std::numeric_limits<double>::quiet_NaN();
    long long wall_ms = 0;
    std::string status = "ok";
};

inline constexpr const char* results_header =
    "benchmark,d,sampler,N,replicate,alpha,train_rmse,val_rmse,test_rmse,accept_rate,wall_ms,status";

inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    out << results_header << '\n';
    for (const ResultRow& r : rows) {
        out << r.benchmark << ',' << r.d << ',' << r.sampler << ',' << r.N << ',' << r.replicate << ','
            << format_double(r.alpha) << ',' << format_double(r.train_rmse) << ',' << format_double(r.val_rmse)
            << ',' << format_double(r.test_rmse) << ',' << format_double(r.accept_rate) << ',' << r.wall_ms << ','
            << r.status << '\n';
    }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != results_header) {
        throw Error(ErrorKind::config, "results file does not start with the expected header");
    }
    auto number = [](const std::string& s) { return s == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(s); };
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 12) {
            throw Error(ErrorKind::config, "results row has " + std::to_string(f.size()) + " fields, expected 12");
        }
        try {
            ResultRow r;
            r.benchmark = f[0];
            r.d = std::stoi(f[1]);
            r.sampler = f[2];
            r.N = std::stoul(f[3]);
            r.replicate = std::stoul(f[4]);
            r.alpha = number(f[5]);
            r.train_rmse = number(f[6]);
            r.val_rmse = number(f[7]);
            r.test_rmse = number(f[8]);
            r.accept_rate = number(f[9]);
            r.wall_ms = std::stoll(f[10]);
            r.status = f[11];
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::config, "malformed results row: " + line);
        }
    }
    return rows;
}

/// Stream id of one (benchmark, sampler, N, replicate) cell.
inline std::uint64_t cell_stream_id(const std::string& benchmark, const std::string& sampler, std::size_t n,
                                    std::size_t replicate)
{
    std::uint64_t h = stable_hash(benchmark);
    h = hash_combine(h, stable_hash(sampler));
    h = hash_combine(h, static_cast<std::uint64_t>(n));
    return hash_combine(h, static_cast<std::uint64_t>(replicate));
}

/// Stream id of the data of one replicate, shared by all samplers and N.
inline std::uint64_t dataset_stream_id(const std::string& benchmark, std::size_t replicate)
{
    return hash_combine(hash_combine(stable_hash(benchmark), stable_hash("dataset")),
                        static_cast<std::uint64_t>(replicate));
}

/// Everything shared by the cells of one experiment.
struct ExperimentContext {
    ExperimentConfig config;
    Benchmark bench;
    std::vector<DataSplits> data;  // one per replicate
    std::map<int, std::shared_ptr<const PsiTable>> psi;  // by order m
};

inline DataOptions data_options(const ExperimentConfig& config, const Benchmark& bench)
{
    DataOptions opt;
    opt.K = config.K;
    opt.sampling = config.sampling;
    opt.noise_sigma = config.noise_sigma >= 0.0 ? config.noise_sigma : bench.noise_sigma;
    opt.n_test = config.n_test;
    opt.with_hessians = std::any_of(config.samplers.begin(), config.samplers.end(),
                                    [](const LabeledSampler& s) { return s.spec.kind == SamplerKind::nonlocal_hessian; });
    return opt;
}

inline DataSplits replicate_data(const ExperimentConfig& config, const Benchmark& bench, std::size_t replicate)
{
    RngStream rng(config.seed, dataset_stream_id(bench.name, replicate));
    return generate_dataset(bench, data_options(config, bench), rng);
}

inline ExperimentContext prepare_experiment(const ExperimentConfig& config, bool all_replicates = true)
{
    ExperimentContext ctx;
    ctx.config = config;
    try {
        ctx.bench = make_benchmark(config.benchmark, config.d);
    } catch (const Error& e) {
        throw Error(ErrorKind::config, e.what());
    }
    const std::size_t count = all_replicates ? config.replicates : 0;
    for (std::size_t r = 0; r < count; ++r) {
        ctx.data.push_back(replicate_data(config, ctx.bench, r));
    }
    for (const LabeledSampler& s : config.samplers) {
        if (s.spec.kind == SamplerKind::integral_density && !ctx.psi.count(s.spec.order_m)) {
            ctx.psi[s.spec.order_m] = std::make_shared<const PsiTable>(
                build_psi_table_adaptive(s.spec.order_m, config.d, config.activation.delta, 1.0));
        }
    }
    return ctx;
}

inline SamplingContext sampling_context(const ExperimentContext& ctx, const LabeledSampler& sampler,
                                        const DataSplits& data)
{
    SamplingContext sc;
    sc.activation = ctx.config.activation;
    if (auto it = ctx.psi.find(sampler.spec.order_m); it != ctx.psi.end()) {
        sc.psi = it->second;
    }
    const ExperimentConfig& cfg = ctx.config;
    sc.fit = [&data, &cfg](const std::vector<Neuron>& neurons) {
        return cross_validate(data.train, data.val, neurons, cfg.activation, cfg.alpha_grid, cfg.polynomial);
    };
    return sc;
}

/// Runs one cell; errors end up in the status column.
inline ResultRow run_cell(const ExperimentContext& ctx, std::size_t sampler_index, std::size_t n,
                          std::size_t replicate)
{
    const ExperimentConfig& cfg = ctx.config;
    const LabeledSampler& sampler = cfg.samplers[sampler_index];
    const DataSplits& data = ctx.data[replicate];
    ResultRow row;
    row.benchmark = ctx.bench.name;
    row.d = cfg.d;
    row.sampler = sampler.label;
    row.N = n;
    row.replicate = replicate;
    const auto start = std::chrono::steady_clock::now();
    try {
        RngStream rng(cfg.seed, cell_stream_id(ctx.bench.name, sampler.label, n, replicate));
        const SamplingContext sc = sampling_context(ctx, sampler, data);
        SampleResult drawn = sample_neurons(data.train, sampler.spec, n, sc, rng);
        auto fitted = drawn.fit ? std::move(*drawn.fit) : sc.fit(drawn.neurons);
        const FitReport& report = fitted.second;
        row.alpha = report.alpha;
        row.train_rmse = report.train_rmse[report.chosen_index];
        row.val_rmse = report.val_rmse[report.chosen_index];
        row.test_rmse = rmse(eval_model(fitted.first, data.test.X), data.test.y);
        row.accept_rate = drawn.accept_rate;
    } catch (const Error& e) {
        row.status = std::string(error_kind_name(e.kind()));
    } catch (const std::exception&) {
        row.status = "internal_error";
    }
    if (cfg.record_time) {
        row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                          .count();
    }
    return row;
}

/// All (sampler, N, replicate) cells, executed by a worker pool and returned
/// in sampler-major, then N, then replicate order.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                             const std::function<void(const ResultRow&)>& on_cell = {})
{
    const ExperimentContext ctx = prepare_experiment(config);
    struct Cell {
        std::size_t sampler;
        std::size_t n;
        std::size_t replicate;
    };
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < config.samplers.size(); ++s) {
        for (std::size_t n : config.n_grid) {
            for (std::size_t r = 0; r < config.replicates; ++r) {
                cells.push_back({s, n, r});
            }
        }
    }
    std::vector<ResultRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) {
                return;
            }
            rows[i] = run_cell(ctx, cells[i].sampler, cells[i].n, cells[i].replicate);
            if (on_cell) {
                std::lock_guard<std::mutex> lock(report_mutex);
                on_cell(rows[i]);
            }
        }
    };
    std::size_t threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = std::min(threads, cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (std::thread& t : pool) {
        t.join();
    }
    return rows;
}

struct SummaryRow {
    std::string benchmark;
    int d = 0;
    std::string sampler;
    std::size_t N = 0;
    std::size_t n_ok = 0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
};

/// Linear-interpolation quantile of sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Median and quartiles of test RMSE per (benchmark, d, sampler, N), over
/// cells with status ok. Samplers keep their order of first appearance.
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows)
{
    std::vector<std::string> order;
    std::map<std::tuple<std::string, int, std::string, std::size_t>, std::vector<double>> groups;
    for (const ResultRow& r : rows) {
        const std::string key = r.benchmark + '\n' + std::to_string(r.d) + '\n' + r.sampler;
        if (std::find(order.begin(), order.end(), key) == order.end()) {
            order.push_back(key);
        }
        auto& bucket = groups[{r.benchmark, r.d, r.sampler, r.N}];
        if (r.status == "ok" && std::isfinite(r.test_rmse)) {
            bucket.push_back(r.test_rmse);
        }
    }
    std::vector<SummaryRow> out;
    for (const std::string& key : order) {
        for (auto& [group, values] : groups) {
            const auto& [bench, d, sampler, n] = group;
            if (bench + '\n' + std::to_string(d) + '\n' + sampler != key) {
                continue;
            }
            std::sort(values.begin(), values.end());
            SummaryRow s;
            s.benchmark = bench;
            s.d = d;
            s.sampler = sampler;
            s.N = n;
            s.n_ok = values.size();
            s.median = sorted_quantile(values, 0.5);
            s.q25 = sorted_quantile(values, 0.25);
            s.q75 = sorted_quantile(values, 0.75);
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows)
{
    out << "benchmark,d,sampler,N,n_ok,median_test_rmse,q25_test_rmse,q75_test_rmse\n";
    for (const SummaryRow& s : rows) {
        out << s.benchmark << ',' << s.d << ',' << s.sampler << ',' << s.N << ',' << s.n_ok << ','
            << format_double(s.median) << ',' << format_double(s.q25) << ',' << format_double(s.q75) << '\n';
    }
}

/// Log-log chart of median test RMSE against N, one polyline per sampler.
inline void write_summary_svg(std::ostream& out, const std::vector<SummaryRow>& rows, const std::string& title)
{
    constexpr double width = 640.0;
    constexpr double height = 420.0;
    constexpr double margin = 60.0;
    double nmin = INFINITY, nmax = 0.0, emin = INFINITY, emax = 0.0;
    for (const SummaryRow& s : rows) {
        if (!(s.median > 0.0)) {
            continue;
        }
        nmin = std::min(nmin, static_cast<double>(s.N));
        nmax = std::max(nmax, static_cast<double>(s.N));
        emin = std::min(emin, s.median);
        emax = std::max(emax, s.median);
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title
        << "</text>\n";
    if (!(nmax > 0.0)) {
        out << "</svg>\n";
        return;
    }
    const double lx0 = std::log10(nmin), lx1 = std::max(std::log10(nmax), lx0 + 1e-9);
    const double ly0 = std::log10(emin), ly1 = std::max(std::log10(emax), ly0 + 1e-9);
    auto px = [&](double n) { return margin + (std::log10(n) - lx0) / (lx1 - lx0) * (width - 2 * margin); };
    auto py = [&](double e) { return height - margin - (std::log10(e) - ly0) / (ly1 - ly0) * (height - 2 * margin); };
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\" font-family=\"sans-serif\">N (log)</text>\n";
    out << "<text x=\"15\" y=\"" << height / 2 << "\" font-family=\"sans-serif\" transform=\"rotate(-90 15 " << height / 2
        << ")\" text-anchor=\"middle\">median test RMSE (log)</text>\n";
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};
    std::vector<std::string> samplers;
    for (const SummaryRow& s : rows) {
        if (std::find(samplers.begin(), samplers.end(), s.sampler) == samplers.end()) {
            samplers.push_back(s.sampler);
        }
    }
    for (std::size_t i = 0; i < samplers.size(); ++i) {
        const char* color = colors[i % 7];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const SummaryRow& s : rows) {
            if (s.sampler == samplers[i] && s.median > 0.0) {
                out << px(static_cast<double>(s.N)) << ',' << py(s.median) << ' ';
            }
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin - 150 << "\" y=\"" << margin + 18.0 * static_cast<double>(i)
            << "\" fill=\"" << color << "\" font-family=\"sans-serif\" font-size=\"13\">" << samplers[i] << "</text>\n";
    }
    out << "</svg>\n";
}

/// Samples N neurons with one configured sampler on replicate 0 of the data
/// (drawn with the given master seed) and writes them in the weight format.
inline std::filesystem::path export_weights(ExperimentConfig config, const std::string& sampler_label, std::size_t n,
                                            std::uint64_t seed, const std::filesystem::path& target = {})
{
    config.seed = seed;
    auto it = std::find_if(config.samplers.begin(), config.samplers.end(),
                           [&](const LabeledSampler& s) { return s.label == sampler_label; });
    if (it == config.samplers.end()) {
        LabeledSampler s;
        try {
            s.spec.kind = parse_sampler_kind(sampler_label);
        } catch (const Error&) {
            throw Error(ErrorKind::config, "no sampler labelled '" + sampler_label + "' in the configuration");
        }
        s.label = sampler_label;
        s.spec.delta_w = config.delta_w;
        s.spec.order_m = config.activation.s - 1;
        config.samplers = {s};
    } else {
        config.samplers = {*it};
    }
    config.replicates = 1;
    const ExperimentContext ctx = prepare_experiment(config);
    const LabeledSampler& sampler = config.samplers.front();
    RngStream rng(seed, cell_stream_id(ctx.bench.name, sampler.label, n, 0));
    const SampleResult drawn = sample_neurons(ctx.data[0].train, sampler.spec, n, sampling_context(ctx, sampler, ctx.data[0]), rng);

    std::filesystem::path path = target;
    if (path.empty()) {
        path = std::filesystem::path(config.output_dir) /
               ("weights_" + ctx.bench.name + "_" + sampler.label + "_N" + std::to_string(n) + "_seed" +
                std::to_string(seed) + ".txt");
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::config, "cannot write '" + path.string() + "'");
    }
    write_weights(out, drawn.neurons);
    return path;
}

} // namespace nurf
