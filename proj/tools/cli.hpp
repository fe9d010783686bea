#pragma once

// Command-line front end: explain, sweep, stability and bench.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smilepc/smilepc.hpp"

#ifndef SMILEPC_VERSION
#define SMILEPC_VERSION "unknown"
#endif

namespace smilepc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
    std::string input = "toy:cross";
    std::string model = "toy";
    std::string distance = "wd";
    std::string surrogate = "wls";
    std::string ranking = "signed";
    std::size_t clusters = 32;
    std::size_t perturbations = 1000;
    double kernel_width = 0.5;
    double top_fraction = 0.2;
    std::optional<std::size_t> explained_class;
    std::uint64_t seed = 0;
    std::size_t points = 1024;
    std::size_t threads = 1;
    std::string out = "out";
};

inline void add_common(CLI::App& app, CommonArgs& a) {
    app.add_option("--input", a.input, "OFF/XYZ/JSON file, or toy:{sphere,box,plate,cross}")->capture_default_str();
    app.add_option("--model", a.model, "toy | bridge:COMMAND")->capture_default_str();
    app.add_option("--distance", a.distance, "cosine | wd | ks | ad")
        ->check(CLI::IsMember({"cosine", "wd", "ks", "ad"}))
        ->capture_default_str();
    app.add_option("--surrogate", a.surrogate, "wls | bayes")->check(CLI::IsMember({"wls", "bayes"}))->capture_default_str();
    app.add_option("--ranking", a.ranking, "signed | absolute coefficient ranking")
        ->check(CLI::IsMember({"signed", "absolute"}))
        ->capture_default_str();
    app.add_option("--clusters", a.clusters, "super-point count")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--perturbations", a.perturbations, "mask rows, including the unperturbed row")
        ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}))
        ->capture_default_str();
    app.add_option("--kernel-width", a.kernel_width, "kernel width sigma")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--top-fraction", a.top_fraction, "fraction of clusters marked salient")
        ->check(CLI::Range(1e-12, 1.0))
        ->capture_default_str();
    app.add_option("--class", a.explained_class, "class to explain (default: predicted class)");
    app.add_option("--seed", a.seed, "base seed")->capture_default_str();
    app.add_option("--points", a.points, "points sampled from mesh or toy input")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", a.out, "output directory")->capture_default_str();
}

inline ExplainConfig make_config(const CommonArgs& a) {
    ExplainConfig cfg;
    cfg.clusters = a.clusters;
    cfg.perturbations = a.perturbations;
    cfg.kernel_width = a.kernel_width;
    cfg.distance = *parse_distance(a.distance);
    cfg.surrogate = *parse_surrogate(a.surrogate);
    cfg.top_fraction = a.top_fraction;
    cfg.ranking = a.ranking == "absolute" ? Ranking::Absolute : Ranking::Signed;
    cfg.seed = a.seed;
    cfg.explained_class = a.explained_class;
    return cfg;
}

/// Loads and normalizes the input cloud. Sampling randomness depends only on the base seed.
inline PointCloud load_input(const std::string& input, std::size_t points, std::uint64_t seed) {
    const std::uint64_t s = derive_seed(seed, "input");
    if (input.rfind("toy:", 0) == 0) {
        const auto shape = parse_shape(input.substr(4));
        if (!shape) throw InvalidArgument("unknown toy shape '" + input.substr(4) + "'");
        return make_shape(*shape, points, s);
    }
    const fs::path path(input);
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") return normalize(sample_mesh(read_off(path), points, s));
    if (ext == ".xyz" || ext == ".txt") return normalize(read_xyz(path));
    if (ext == ".json") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + input);
        return normalize(cloud_from_json(json::parse(in)));
    }
    throw InvalidArgument("unsupported input format '" + ext + "' (expected .off, .xyz or .json)");
}

inline std::unique_ptr<Classifier> make_model(const std::string& spec) {
    if (spec == "toy") return std::make_unique<ToyClassifier>();
    if (spec.rfind("bridge:", 0) == 0 && spec.size() > 7)
        return std::make_unique<BridgeClassifier>(spec.substr(7), bridge_timeout_from_env());
    throw InvalidArgument("unknown model '" + spec + "' (expected toy or bridge:COMMAND)");
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

inline json manifest(const std::string& command, const json& config, const CommonArgs& a, double secs) {
    return {{"command", command}, {"config", config},           {"seed", a.seed},
            {"input", a.input},   {"version", SMILEPC_VERSION}, {"duration_secs", secs}};
}

/// Fidelity with undefined metrics left empty (e.g. C >= Np - 1).
struct FidelityCells {
    FidelityReport report;
    bool r2_defined = true;
    bool adj_defined = true;
};

inline FidelityCells fidelity_cells(const Explanation& ex) {
    FidelityCells c;
    auto& r = c.report;
    const auto& f = ex.targets;
    const auto& g = ex.fit.predictions;
    r.np = f.size();
    r.ns = ex.fit.coefficients.size();
    r.l_m = mean_loss(f, g);
    std::tie(r.l1, r.l2) = l1_l2(f, g);
    std::tie(r.l1w, r.l2w) = weighted_l1_l2(f, g, ex.weights);
    try {
        r.r2w = weighted_r2(f, g, ex.weights);
    } catch (const UndefinedMetricError&) {
        c.r2_defined = c.adj_defined = false;
        return c;
    }
    try {
        r.adj_r2w = adjusted_weighted_r2(r.r2w, r.np, r.ns);
    } catch (const UndefinedMetricError&) {
        c.adj_defined = false;
    }
    return c;
}

inline std::string fidelity_csv(const FidelityCells& c) {
    if (c.r2_defined && c.adj_defined) return fidelity_csv_row(c.report);
    // Same layout with the undefined trailing cells left empty.
    std::string row = fidelity_csv_row(c.report);
    row.erase(row.rfind(','));
    if (!c.r2_defined) return row.erase(row.rfind(',')) + ",,";
    return row + ",";
}

// ---------------------------------------------------------------------------
// explain

inline int cmd_explain(const CommonArgs& a, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const PointCloud cloud = load_input(a.input, a.points, a.seed);
    auto model = make_model(a.model);
    const ExplainConfig cfg = make_config(a);
    ExecutionOptions exec;
    exec.threads = a.threads;
    const Explanation ex = explain(cloud, *model, cfg, exec);
    const FidelityCells fid = fidelity_cells(ex);

    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "explanation.json", to_json(ex).dump(2) + "\n");
    write_saliency_ply(saliency(ex, cloud), dir / "saliency.ply");
    write_text(dir / "fidelity.csv", std::string(kFidelityCsvHeader) + "\n" + fidelity_csv(fid) + "\n");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest("explain", to_json(ex.config), a, secs).dump(2) + "\n");

    const auto& names = model->descriptor().class_names;
    out << "explained class: " << ex.explained_class << " (" << names[ex.explained_class] << ")\n";
    out << "top clusters:";
    for (auto k : ex.top_set) out << ' ' << k;
    out << "\n" << kFidelityCsvHeader << "\n" << fidelity_csv(fid) << "\n";
    out << "wrote " << (dir / "explanation.json").string() << ", saliency.ply, fidelity.csv, manifest.json\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

enum class Axis { KernelWidth, Perturbations, Clusters, Surrogate, Distance };

struct AxisSpec {
    Axis axis;
    std::string name;
    std::vector<std::string> values;  // canonical text of every grid value
};

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Parses AXIS=START:STOP:STEP or AXIS=v1,v2,...
inline AxisSpec parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InvalidArgument("sweep must look like AXIS=START:STOP:STEP or AXIS=v1,v2");
    AxisSpec spec;
    spec.name = text.substr(0, eq);
    const std::string body = text.substr(eq + 1);
    static const std::map<std::string, Axis> axes{{"kernel-width", Axis::KernelWidth},
                                                  {"perturbations", Axis::Perturbations},
                                                  {"clusters", Axis::Clusters},
                                                  {"surrogate", Axis::Surrogate},
                                                  {"distance", Axis::Distance}};
    const auto it = axes.find(spec.name);
    if (it == axes.end()) throw InvalidArgument("unknown sweep axis '" + spec.name + "'");
    spec.axis = it->second;
    const bool numeric = spec.axis == Axis::KernelWidth || spec.axis == Axis::Perturbations || spec.axis == Axis::Clusters;
    const bool integral = spec.axis == Axis::Perturbations || spec.axis == Axis::Clusters;

    if (body.find(':') != std::string::npos) {
        if (!numeric) throw InvalidArgument("range sweeps need a numeric axis");
        double start, stop, step;
        char c1, c2;
        std::istringstream ss(body);
        if (!(ss >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || stop < start)
            throw InvalidArgument("malformed range '" + body + "'");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) {
            const double v = start + static_cast<double>(i) * step;
            spec.values.push_back(integral ? std::to_string(static_cast<long long>(std::llround(v))) : format_number(v));
        }
    } else {
        std::istringstream ss(body);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            if (numeric) {
                std::size_t used = 0;
                double v;
                try {
                    v = std::stod(tok, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != tok.size()) throw InvalidArgument("non-numeric sweep value '" + tok + "'");
                tok = integral ? std::to_string(static_cast<long long>(std::llround(v))) : format_number(v);
            } else if (spec.axis == Axis::Surrogate ? !parse_surrogate(tok) : !parse_distance(tok)) {
                throw InvalidArgument("invalid " + spec.name + " value '" + tok + "'");
            }
            spec.values.push_back(tok);
        }
    }
    if (spec.values.empty()) throw InvalidArgument("sweep axis '" + spec.name + "' has no values");
    return spec;
}

inline void apply_axis(ExplainConfig& cfg, Axis axis, const std::string& v) {
    switch (axis) {
        case Axis::KernelWidth: cfg.kernel_width = std::stod(v); break;
        case Axis::Perturbations: cfg.perturbations = static_cast<std::size_t>(std::stoll(v)); break;
        case Axis::Clusters: cfg.clusters = static_cast<std::size_t>(std::stoll(v)); break;
        case Axis::Surrogate: cfg.surrogate = *parse_surrogate(v); break;
        case Axis::Distance: cfg.distance = *parse_distance(v); break;
    }
}

struct GridPoint {
    ExplainConfig cfg;
    std::vector<std::pair<std::string, std::string>> coordinates;
};

/// Cartesian product, first axis outermost. Each point's seed is a hash of the
/// base seed and its (axis, value) pairs only.
inline std::vector<GridPoint> expand_grid(const ExplainConfig& base, const std::vector<AxisSpec>& axes) {
    std::vector<GridPoint> grid{{base, {}}};
    for (const auto& ax : axes) {
        std::vector<GridPoint> next;
        for (const auto& g : grid)
            for (const auto& v : ax.values) {
                GridPoint p = g;
                apply_axis(p.cfg, ax.axis, v);
                p.coordinates.emplace_back(ax.name, v);
                next.push_back(std::move(p));
            }
        grid = std::move(next);
    }
    for (auto& g : grid) {
        std::uint64_t s = base.seed;
        for (const auto& [name, value] : g.coordinates) s = derive_seed(s, name, value);
        g.cfg.seed = s;
    }
    return grid;
}

inline constexpr const char* kSweepCsvHeader =
    "distance,surrogate,kernel_width,perturbations,seed,C,L_m,L1,L1w,L2,L2w,R2w,adjR2w";

inline std::string sweep_csv_row(const ExplainConfig& cfg, const std::string& fidelity) {
    return std::string(distance_name(cfg.distance)) + "," + std::string(surrogate_name(cfg.surrogate)) + "," +
           format_number(cfg.kernel_width) + "," + std::to_string(cfg.perturbations) + "," + std::to_string(cfg.seed) +
           "," + fidelity;
}

inline int cmd_sweep(const CommonArgs& a, const std::vector<std::string>& sweeps, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<AxisSpec> axes;
    for (const auto& s : sweeps) axes.push_back(parse_sweep(s));
    const PointCloud cloud = load_input(a.input, a.points, a.seed);
    const auto grid = expand_grid(make_config(a), axes);

    auto model = make_model(a.model);
    const bool serial = model->descriptor().serial_only;
    std::vector<std::string> rows(grid.size());
    std::vector<std::string> errors(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
            try {
                const Explanation ex = explain(cloud, *model, grid[i].cfg);
                rows[i] = sweep_csv_row(ex.config, fidelity_csv(fidelity_cells(ex)));
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t threads = serial ? 1 : std::max<std::size_t>(1, std::min(a.threads, grid.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!errors[i].empty()) throw Error("grid point " + std::to_string(i) + ": " + errors[i]);

    std::string csv = std::string(kSweepCsvHeader) + "\n";
    for (const auto& r : rows) csv += r + "\n";
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "sweep.csv", csv);
    json axes_json = json::array();
    for (const auto& ax : axes) axes_json.push_back({{"axis", ax.name}, {"values", ax.values}});
    json config = to_json(make_config(a));
    config["sweep"] = axes_json;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest("sweep", config, a, secs).dump(2) + "\n");
    out << csv;
    return 0;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityArgs {
    std::size_t trials = 10;
    std::size_t n_ball = 30;
    std::optional<double> radius;
    bool dump_ply = false;
};

inline int cmd_stability(const CommonArgs& a, const StabilityArgs& s, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const PointCloud cloud = load_input(a.input, a.points, a.seed);
    auto model = make_model(a.model);
    const ExplainConfig cfg = make_config(a);
    StabilityOptions opts;
    opts.trials = s.trials;
    opts.n_ball = s.n_ball;
    opts.radius = s.radius;
    opts.seed = derive_seed(a.seed, "stability");
    ExecutionOptions exec;
    exec.threads = a.threads;

    const fs::path dir(a.out);
    fs::create_directories(dir);
    std::size_t counted = 0;
    auto dump = [&](const StabilityTrial& t, const BallInsertion& ins, const Explanation&) {
        if (!s.dump_ply) return;
        write_saliency_ply(saliency(ins.clusters, t.top_set, ins.cloud), dir / ("trial_" + std::to_string(counted++) + ".ply"));
    };
    const StabilityReport report = stability_run(cloud, *model, cfg, opts, exec, dump);

    write_text(dir / "stability.json", to_json(report).dump(2) + "\n");
    json config = to_json(cfg);
    config["trials"] = s.trials;
    config["n_ball"] = s.n_ball;
    config["radius"] = report.radius;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest("stability", config, a, secs).dump(2) + "\n");
    out << "per-trial jaccard:";
    for (double j : report.per_trial_jaccard) out << ' ' << format_number(j);
    out << "\nmean_jaccard " << format_number(report.mean_jaccard) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCell {
    std::size_t clusters;
    DistanceKind distance;
    SurrogateKind surrogate;
    double total_secs;
    double distance_secs;
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string method_label(DistanceKind d) {
    return d == DistanceKind::Cosine ? "LIME" : "SMILE-" + [&] {
        std::string s(distance_name(d));
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
        return s;
    }();
}

inline std::vector<BenchCell> run_bench(const PointCloud& cloud, Classifier& model, const ExplainConfig& base,
                                        const std::vector<std::size_t>& cluster_values, std::size_t repeats) {
    std::vector<BenchCell> cells;
    for (auto c : cluster_values)
        for (auto d : {DistanceKind::Cosine, DistanceKind::Wasserstein, DistanceKind::AndersonDarling,
                       DistanceKind::KolmogorovSmirnov})
            for (auto s : {SurrogateKind::WeightedLeastSquares, SurrogateKind::BayesianRidge}) {
                ExplainConfig cfg = base;
                cfg.clusters = c;
                cfg.distance = d;
                cfg.surrogate = s;
                std::vector<double> total, dist;
                for (std::size_t r = 0; r < std::max<std::size_t>(1, repeats); ++r) {
                    const Explanation ex = explain(cloud, model, cfg);
                    total.push_back(ex.timings.total_secs);
                    dist.push_back(ex.timings.distance_secs);
                }
                cells.push_back({c, d, s, median(total), median(dist)});
            }
    return cells;
}

inline int cmd_bench(const CommonArgs& a, const std::vector<std::string>& sweeps, std::size_t repeats, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> cluster_values{a.clusters};
    for (const auto& s : sweeps) {
        const auto spec = parse_sweep(s);
        if (spec.axis != Axis::Clusters) throw InvalidArgument("bench only sweeps clusters");
        cluster_values.clear();
        for (const auto& v : spec.values) cluster_values.push_back(static_cast<std::size_t>(std::stoll(v)));
    }
    const PointCloud cloud = load_input(a.input, a.points, a.seed);
    auto model = make_model(a.model);
    const auto cells = run_bench(cloud, *model, make_config(a), cluster_values, repeats);

    std::string csv = "clusters,method,surrogate,perturbations,total_secs,distance_secs\n";
    for (const auto& c : cells) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%s,%s,%zu,%.6f,%.6f\n", c.clusters, method_label(c.distance).c_str(),
                      std::string(surrogate_name(c.surrogate)).c_str(), a.perturbations, c.total_secs, c.distance_secs);
        csv += buf;
    }
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "bench.csv", csv);

    out << "Running time (s), " << a.perturbations << " perturbations\n";
    for (auto c : cluster_values) {
        out << "C = " << c << "\n";
        out << std::left << std::setw(12) << "method" << std::right << std::setw(12) << "wls" << std::setw(12) << "bayes"
            << std::setw(16) << "distance(wls)" << "\n";
        for (auto d : {DistanceKind::Cosine, DistanceKind::Wasserstein, DistanceKind::AndersonDarling,
                       DistanceKind::KolmogorovSmirnov}) {
            double wls = 0, bayes = 0, dist = 0;
            for (const auto& cell : cells) {
                if (cell.clusters != c || cell.distance != d) continue;
                if (cell.surrogate == SurrogateKind::WeightedLeastSquares) {
                    wls = cell.total_secs;
                    dist = cell.distance_secs;
                } else {
                    bayes = cell.total_secs;
                }
            }
            out << std::left << std::setw(12) << method_label(d) << std::right << std::fixed << std::setprecision(3)
                << std::setw(12) << wls << std::setw(12) << bayes << std::setw(16) << dist << "\n";
            out.unsetf(std::ios::fixed);
        }
    }
    json config = to_json(make_config(a));
    config["clusters"] = cluster_values;
    config["repeats"] = repeats;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest("bench", config, a, secs).dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

/// Runs the CLI. Exit codes: 0 success, 1 pipeline error, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Perturbation-based explanations for point-cloud classifiers", "smilepc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SMILEPC_VERSION);

    CommonArgs explain_args, sweep_args, stability_args, bench_args;
    auto* explain_cmd = app.add_subcommand("explain", "explain one prediction; writes explanation.json, saliency.ply, fidelity.csv");
    add_common(*explain_cmd, explain_args);

    std::vector<std::string> sweeps;
    auto* sweep_cmd = app.add_subcommand("sweep", "fidelity over a parameter grid; writes sweep.csv");
    add_common(*sweep_cmd, sweep_args);
    sweep_cmd->add_option("--sweep", sweeps, "AXIS=START:STOP:STEP or AXIS=v1,v2 (kernel-width, perturbations, clusters, surrogate, distance)")
        ->required();

    StabilityArgs stab;
    auto* stability_cmd = app.add_subcommand("stability", "ball-insertion stability; writes stability.json");
    add_common(*stability_cmd, stability_args);
    stability_cmd->add_option("--trials", stab.trials, "prediction-preserving trials")->check(CLI::PositiveNumber)->capture_default_str();
    stability_cmd->add_option("--n-ball", stab.n_ball, "points per inserted ball")->check(CLI::PositiveNumber)->capture_default_str();
    stability_cmd->add_option("--radius", stab.radius, "ball radius (default 0.05 x bounding-box diagonal)")
        ->check(CLI::NonNegativeNumber);
    stability_cmd->add_flag("--dump-ply", stab.dump_ply, "write a saliency PLY per trial");

    std::vector<std::string> bench_sweeps;
    std::size_t repeats = 1;
    auto* bench_cmd = app.add_subcommand("bench", "running time per method and surrogate; writes bench.csv");
    add_common(*bench_cmd, bench_args);
    bench_cmd->add_option("--sweep", bench_sweeps, "clusters=v1,v2,... (default: --clusters)");
    bench_cmd->add_option("--repeats", repeats, "runs per cell; the median is reported")->check(CLI::PositiveNumber)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n";
        const CLI::App* scope = &app;
        for (const auto* sub : app.get_subcommands()) scope = sub;
        err << scope->help();
        return 2;
    }

    try {
        if (*explain_cmd) return cmd_explain(explain_args, out);
        if (*sweep_cmd) return cmd_sweep(sweep_args, sweeps, out);
        if (*stability_cmd) return cmd_stability(stability_args, stab, out);
        if (*bench_cmd) return cmd_bench(bench_args, bench_sweeps, repeats, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace smilepc::cli
