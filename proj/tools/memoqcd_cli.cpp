// memoqcd — command-line workbench around the memoqcd library.
//
// Subcommands cover the full pipeline: synthetic data generation, kernel
// feature-map search, training-state optimization, density estimation, and
// sample-quality evaluation.  Every run that produces files also writes a
// manifest (<output stem>.<command>.manifest.json) recording the resolved
// configuration, the content hash of each produced file, and the wall-clock
// time.  With identical flags and seeds, all primary artifacts are
// byte-identical across runs; only the manifest's wall-clock entry varies.
//
// Exit codes: 0 success, 1 numerical failure during computation, 2 usage
// error (bad flags, missing or unreadable inputs).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "memoqcd/codec.hpp"
#include "memoqcd/data.hpp"
#include "memoqcd/dmkde.hpp"
#include "memoqcd/eval.hpp"
#include "memoqcd/hea.hpp"
#include "memoqcd/model_io.hpp"
#include "memoqcd/optimize.hpp"
#include "memoqcd/parallel.hpp"
#include "memoqcd/trainstate.hpp"

namespace {

constexpr const char* kToolVersion = "memoqcd 0.1.0";

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Small shared helpers

/// Thrown by command bodies for problems that are the caller's fault
/// (missing files, inconsistent flags); mapped to exit code 2.
using usage_error = std::invalid_argument;

std::string stem_of(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    const std::size_t dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
    return path.substr(0, dot);
}

void require_file(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw usage_error(std::string(what) + " not found: " + path);
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash file: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Write <stem(primary)>.<command>.manifest.json describing a finished run.
void write_manifest(const std::string& command, const std::string& primary_artifact,
                    const ordered_json& config, const std::vector<std::string>& artifacts,
                    double wall_clock_s) {
    ordered_json m;
    m["format"] = "memoqcd-run-manifest";
    m["version"] = 1;
    m["tool"] = kToolVersion;
    m["command"] = command;
    m["config"] = config;
    m["artifacts"] = ordered_json::array();
    for (const std::string& path : artifacts) {
        ordered_json a;
        a["path"] = path;
        a["bytes"] = static_cast<std::uint64_t>(std::filesystem::file_size(path));
        a["fnv1a64"] = hex64(fnv1a64_file(path));
        m["artifacts"].push_back(a);
    }
    m["wall_clock_s"] = wall_clock_s;
    const std::string path = stem_of(primary_artifact) + "." + command + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << m.dump(2) << "\n";
}

/// Map parameters of build_hea(n, l) onto the slot order of the decoded
/// hea_chromosome(n, l): the k-th rotation of a given kind on a given qubit
/// is the same logical gate in both layouts.
std::vector<double> hea_params_in_chromosome_order(int n_qubits, int n_layers,
                                                   const std::vector<double>& hea_order) {
    using Key = std::tuple<int, int, int>;  // kind, qubit, occurrence
    auto slots_by_gate = [](const memoqcd::ParamCircuit& circ) {
        std::map<Key, int> slots;
        std::map<std::pair<int, int>, int> seen;
        for (const memoqcd::Gate& g : circ.gates) {
            if (!g.is_rotation()) continue;
            std::pair<int, int> key{static_cast<int>(g.kind), g.target};
            slots[{key.first, key.second, seen[key]++}] = g.param_slot;
        }
        return slots;
    };
    const auto ref = slots_by_gate(memoqcd::build_hea(n_qubits, n_layers, true));
    const auto dec =
        slots_by_gate(memoqcd::decode(memoqcd::hea_chromosome(n_qubits, n_layers), n_qubits));
    std::vector<double> out(hea_order.size());
    for (const auto& [gate, dec_slot] : dec)
        out[static_cast<std::size_t>(dec_slot)] = hea_order[static_cast<std::size_t>(ref.at(gate))];
    return out;
}

memoqcd::Dataset load_dataset(const std::string& path) {
    require_file(path, "data file");
    try {
        return memoqcd::read_csv(path);
    } catch (const std::exception& e) {
        throw usage_error(std::string("cannot read data file: ") + e.what());
    }
}

memoqcd::DMKDEModel load_model_checked(const std::string& path) {
    require_file(path, "model file");
    try {
        return memoqcd::load_model(path);
    } catch (const std::exception& e) {
        throw usage_error(std::string("cannot read model file: ") + e.what());
    }
}

/// Per-dimension |det| of the stored raw->scaled map (1 when none is stored).
double scale_jacobian(const memoqcd::DMKDEModel& model) {
    if (!model.scale) return 1.0;
    double j = 1.0;
    for (double f : model.scale->factor) j *= std::abs(f);
    return j;
}

std::vector<double> to_model_space(const memoqcd::DMKDEModel& model,
                                   const std::vector<double>& raw) {
    return model.scale ? model.scale->apply(raw) : raw;
}

// ---------------------------------------------------------------------------
// datagen

struct DatagenOpts {
    std::string name;
    std::size_t n = 0;  // 0 -> generator default
    double noise = 0.1;
    std::uint64_t seed = 0;
    std::string out;
};

int run_datagen(const DatagenOpts& o) {
    Stopwatch watch;
    memoqcd::Dataset ds;
    if (o.name == "two-moons")
        ds = memoqcd::two_moons(o.n ? o.n : 1000, o.noise, o.seed);
    else if (o.name == "circles")
        ds = memoqcd::concentric_circles(o.n ? o.n : 2000, o.noise, o.seed);
    else if (o.name == "blobs")
        ds = memoqcd::gaussian_blobs(o.n ? o.n : 2000, memoqcd::default_blob_centers(), o.noise,
                                     o.seed);
    else if (o.name == "spirals")
        ds = memoqcd::spirals(o.n ? o.n : 2000, o.noise, o.seed);
    else
        throw usage_error("unknown dataset '" + o.name +
                          "' (expected two-moons, circles, blobs, or spirals)");

    memoqcd::write_csv(ds, o.out);

    ordered_json config{{"name", o.name},   {"n", ds.size()}, {"noise", o.noise},
                        {"seed", o.seed},   {"out", o.out}};
    write_manifest("datagen", o.out, config, {o.out}, watch.seconds());
    std::cout << "wrote " << ds.size() << " points (d=" << ds.d << ") to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// qfm-search

struct QfmSearchOpts {
    std::string mode = "memetic";
    int qubits = 3;
    int gates = 8;
    double gamma = 0.1;
    int pairs = 10000;
    std::vector<double> interval{-3.0, 3.0};
    int generations = 30;
    int population = 15;
    int epochs = 2000;
    double lr = 0.2;
    std::uint64_t seed = 0;
    std::string out;
};

int run_qfm_search(const QfmSearchOpts& o) {
    Stopwatch watch;
    memoqcd::KernelSpec kernel{o.gamma, o.interval[0], o.interval[1], o.pairs};
    kernel.check_valid();

    memoqcd::DMKDEModel model;
    model.qfm_mode = memoqcd::search_mode_from_name(o.mode);
    model.kernel = kernel;
    model.search_seed = o.seed;
    // Placeholder layout: the data dimension and ansatz shape are fixed later
    // by `train`; only the feature-map qubit count is decided here.
    model.layout = memoqcd::HEALayout{o.qubits, 1, 1, 1};

    const std::string trace_path = stem_of(o.out) + ".search-trace.csv";
    double mse = 0.0;

    if (model.qfm_mode == memoqcd::SearchMode::hea) {
        memoqcd::HeaFitResult fit =
            memoqcd::hea_kernel_fit(o.qubits, 1, kernel, o.epochs, o.lr, o.seed);
        model.qfm_chromosome = memoqcd::hea_chromosome(o.qubits, 1);
        model.qfm_params = hea_params_in_chromosome_order(o.qubits, 1, fit.params);
        mse = fit.trace.back();

        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot open for writing: " + trace_path);
        trace << "epoch,mse\n";
        trace.precision(17);
        for (std::size_t e = 0; e < fit.trace.size(); ++e)
            trace << e << "," << fit.trace[e] << "\n";
    } else {
        memoqcd::SearchConfig config;
        config.mode = model.qfm_mode;
        config.n_qubits = o.qubits;
        config.n_gates = o.gates;
        config.generations = o.generations;
        config.population = o.population;
        config.epochs = o.epochs;
        config.learning_rate = o.lr;
        config.seed = o.seed;
        config.check_valid();

        memoqcd::EvolveResult result = memoqcd::evolve(config, kernel);
        model.qfm_chromosome = result.best.chromosome;
        model.qfm_params = result.best.params;
        mse = result.best.mse;

        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot open for writing: " + trace_path);
        memoqcd::write_trace_csv(trace, result.trace);
    }

    model.qfm_mse = mse;
    model.check_valid();
    memoqcd::save_model(model, o.out);

    ordered_json config{{"mode", o.mode},
                        {"qubits", o.qubits},
                        {"gates", o.gates},
                        {"gamma", o.gamma},
                        {"pairs", o.pairs},
                        {"interval", o.interval},
                        {"generations", o.generations},
                        {"population", o.population},
                        {"epochs", o.epochs},
                        {"lr", o.lr},
                        {"seed", o.seed},
                        {"out", o.out}};
    write_manifest("qfm-search", o.out, config, {o.out, trace_path}, watch.seconds());

    std::ostringstream msg;
    msg.precision(17);
    msg << o.mode << " search finished: kernel mse " << mse << "\n"
        << "model stub: " << o.out << " (complete it with `memoqcd train`)\n"
        << "trace: " << trace_path << "\n";
    std::cout << msg.str();
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string model;
    std::string data;
    int aux = 1;
    int layers = 5;
    int epochs = 5000;
    double lr = 0.4;
    std::string objective = "log-of-sum";
    std::uint64_t seed = 0;
    std::string out;  // empty -> rewrite --model in place
};

int run_train(const TrainOpts& o) {
    Stopwatch watch;
    memoqcd::DMKDEModel model = load_model_checked(o.model);
    memoqcd::Dataset raw = load_dataset(o.data);
    if (raw.size() == 0) throw usage_error("data file has no rows: " + o.data);

    memoqcd::LLObjective objective;
    if (o.objective == "log-of-sum")
        objective = memoqcd::LLObjective::log_of_sum;
    else if (o.objective == "sum-of-logs")
        objective = memoqcd::LLObjective::sum_of_logs;
    else
        throw usage_error("unknown objective '" + o.objective +
                          "' (expected log-of-sum or sum-of-logs)");

    // Min-max scale every dimension onto the kernel interval.  Data that is
    // already scaled maps through the identity, so retraining on a scaled
    // csv is harmless.
    memoqcd::Dataset data = memoqcd::scale_to_interval(raw, model.kernel.a, model.kernel.b);
    model.scale = data.scale;

    model.layout.d = data.d;
    model.layout.n_a = o.aux;
    model.layout.n_layers = o.layers;
    model.layout.check_valid();

    memoqcd::TrainReport report =
        memoqcd::train_state_circuit(model.layout, model.qfm_circuit(), model.qfm_params, data,
                                     o.epochs, o.lr, o.seed, objective);
    model.hea_params = report.params;
    model.train_seed = o.seed;
    model.norm_constant.reset();  // any previously stored normalization is stale now
    model.check_valid();

    const std::string out = o.out.empty() ? o.model : o.out;
    memoqcd::save_model(model, out);

    const std::string trace_path = stem_of(out) + ".train-trace.csv";
    {
        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot open for writing: " + trace_path);
        trace << "epoch,log_likelihood\n";
        trace.precision(17);
        for (std::size_t e = 0; e < report.ll_trace.size(); ++e)
            trace << e << "," << report.ll_trace[e] << "\n";
    }

    ordered_json config{{"model", o.model},   {"data", o.data},       {"aux", o.aux},
                        {"layers", o.layers}, {"epochs", o.epochs},   {"lr", o.lr},
                        {"objective", o.objective}, {"seed", o.seed}, {"out", out}};
    write_manifest("train", out, config, {out, trace_path}, watch.seconds());

    std::ostringstream msg;
    msg.precision(17);
    msg << "trained " << model.layout.total_qubits() << "-qubit state on " << data.size()
        << " points: log-likelihood " << report.ll_trace.front() << " -> "
        << report.ll_trace.back() << "\n"
        << "model: " << out << "\ntrace: " << trace_path << "\n";
    std::cout << msg.str();
    return 0;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOpts {
    std::string model;
    std::vector<double> point;
    int grid = 0;
    std::vector<double> bounds;  // empty or {lo, hi} in raw data coordinates
    std::string mode = "exact";
    long long shots = 10000;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    std::string pgm;
};

int run_estimate(const EstimateOpts& o) {
    Stopwatch watch;
    memoqcd::DMKDEModel model = load_model_checked(o.model);
    if (!model.trained())
        throw usage_error("model has no trained state yet; run `memoqcd train` first");
    if (o.mode != "exact" && o.mode != "shots")
        throw usage_error("unknown mode '" + o.mode + "' (expected exact or shots)");
    const bool use_shots = o.mode == "shots";
    if (use_shots && o.shots < 1) throw usage_error("shot count must be positive");
    const int threads = memoqcd::resolve_threads(o.threads);
    const int d = model.layout.d;
    const double jac = scale_jacobian(model);

    // All user-facing coordinates are in raw data space; the model works on
    // the scaled space, and densities pick up the |det| change-of-variables
    // factor on the way back out.
    const auto scaled_box = memoqcd::padded_bounds(model.kernel, d);
    std::vector<std::pair<double, double>> raw_box(scaled_box.size());
    for (int j = 0; j < d; ++j) {
        if (!o.bounds.empty()) {
            raw_box[static_cast<std::size_t>(j)] = {o.bounds[0], o.bounds[1]};
        } else if (model.scale) {
            std::vector<double> lo(scaled_box.size()), hi(scaled_box.size());
            for (int i = 0; i < d; ++i) {
                lo[static_cast<std::size_t>(i)] = scaled_box[static_cast<std::size_t>(i)].first;
                hi[static_cast<std::size_t>(i)] = scaled_box[static_cast<std::size_t>(i)].second;
            }
            const auto raw_lo = model.scale->invert(lo);
            const auto raw_hi = model.scale->invert(hi);
            raw_box[static_cast<std::size_t>(j)] = {
                std::min(raw_lo[static_cast<std::size_t>(j)], raw_hi[static_cast<std::size_t>(j)]),
                std::max(raw_lo[static_cast<std::size_t>(j)], raw_hi[static_cast<std::size_t>(j)])};
        } else {
            raw_box[static_cast<std::size_t>(j)] = scaled_box[static_cast<std::size_t>(j)];
        }
    }

    if (o.grid <= 0 && o.point.empty())
        throw usage_error("pass --point or --grid to choose what to evaluate");
    if (o.grid > 0 && o.out.empty()) throw usage_error("--grid needs --out for the csv");

    // The requested grid box in model space (grid mode only).
    std::vector<std::pair<double, double>> scaled_request;
    if (o.grid > 0) {
        scaled_request.resize(raw_box.size());
        if (model.scale) {
            std::vector<double> lo_raw(static_cast<std::size_t>(d)), hi_raw(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) {
                lo_raw[static_cast<std::size_t>(i)] = raw_box[static_cast<std::size_t>(i)].first;
                hi_raw[static_cast<std::size_t>(i)] = raw_box[static_cast<std::size_t>(i)].second;
            }
            const auto lo = model.scale->apply(lo_raw);
            const auto hi = model.scale->apply(hi_raw);
            for (int j = 0; j < d; ++j)
                scaled_request[static_cast<std::size_t>(j)] = {
                    std::min(lo[static_cast<std::size_t>(j)], hi[static_cast<std::size_t>(j)]),
                    std::max(lo[static_cast<std::size_t>(j)], hi[static_cast<std::size_t>(j)])};
        } else {
            scaled_request = raw_box;
        }
    }

    // The stored normalization constant is always calibrated on the padded
    // kernel box in model space, independent of the requested grid.  When
    // the request is exactly that canonical grid, one pass serves both.
    const bool had_norm = model.norm_constant.has_value();
    const bool canonical_request = o.grid > 0 && !use_shots && scaled_request == scaled_box;
    std::vector<std::string> artifacts;
    if (!had_norm && !canonical_request) {
        const int norm_res = o.grid > 0 ? o.grid : 64;
        memoqcd::density_grid(model, scaled_box, norm_res, /*shots=*/0, /*seed=*/0, threads);
        std::cerr << "normalization constant computed on a " << norm_res
                  << "^d padded grid and stored back into " << o.model << "\n";
    }

    ordered_json config{{"model", o.model}, {"mode", o.mode},   {"shots", use_shots ? o.shots : 0},
                        {"seed", o.seed},   {"threads", o.threads}};

    if (o.grid > 0) {
        memoqcd::DensityGrid grid = memoqcd::density_grid(
            model, scaled_request, o.grid, use_shots ? o.shots : 0, o.seed, threads);
        if (!had_norm) {
            memoqcd::save_model(model, o.model);
            artifacts.push_back(o.model);
        }

        // Re-express the grid in raw coordinates: cell centers map affinely,
        // so only the axis bounds and the density values need touching.
        for (int j = 0; j < d; ++j) {
            grid.axes[static_cast<std::size_t>(j)].lo = raw_box[static_cast<std::size_t>(j)].first;
            grid.axes[static_cast<std::size_t>(j)].hi = raw_box[static_cast<std::size_t>(j)].second;
        }
        for (double& v : grid.values) v *= jac;

        memoqcd::write_grid_csv(grid, o.out);
        artifacts.insert(artifacts.begin(), o.out);
        if (!o.pgm.empty()) {
            memoqcd::write_grid_pgm(grid, o.pgm);
            artifacts.push_back(o.pgm);
        }

        double mass = 0.0;
        for (double v : grid.values) mass += v;
        mass *= grid.cell_volume();

        config["grid"] = o.grid;
        config["bounds"] = ordered_json::array();
        for (const auto& [lo, hi] : raw_box) config["bounds"].push_back({lo, hi});
        config["out"] = o.out;
        if (!o.pgm.empty()) config["pgm"] = o.pgm;
        write_manifest("estimate", o.out, config, artifacts, watch.seconds());

        std::ostringstream msg;
        msg.precision(17);
        msg << "grid " << o.grid << "^" << d << " written to " << o.out << " (mass " << mass
            << ")\n";
        std::cout << msg.str();
    } else {
        if (static_cast<int>(o.point.size()) != d)
            throw usage_error("--point needs " + std::to_string(d) + " coordinates");
        if (!had_norm) {
            memoqcd::save_model(model, o.model);
            artifacts.push_back(o.model);
        }
        const std::vector<double> xs = to_model_space(model, o.point);
        for (double v : xs)
            if (v < model.kernel.a || v > model.kernel.b) {
                std::cerr << "warning: point lies outside the model's kernel interval; the "
                             "estimate extrapolates\n";
                break;
            }
        const double projection = use_shots
                                      ? memoqcd::estimate_shots(model, xs, o.shots, o.seed)
                                      : memoqcd::estimate_exact(model, xs);
        const double density = projection * *model.norm_constant * jac;

        std::ostringstream msg;
        msg.precision(17);
        msg << "density = " << density << "\n";
        std::cout << msg.str();

        if (!o.out.empty()) {
            std::ofstream csv(o.out);
            if (!csv) throw std::runtime_error("cannot open for writing: " + o.out);
            csv.precision(17);
            for (int j = 0; j < d; ++j) csv << "x" << j << ",";
            csv << "density\n";
            for (double v : o.point) csv << v << ",";
            csv << density << "\n";
            csv.close();
            artifacts.insert(artifacts.begin(), o.out);
            config["point"] = o.point;
            config["out"] = o.out;
            write_manifest("estimate", o.out, config, artifacts, watch.seconds());
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// kld

struct KldOpts {
    std::string model;
    std::string data;
    int seeds = 50;
    int k = 5;
    int grid = 128;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
};

int run_kld(const KldOpts& o) {
    Stopwatch watch;
    memoqcd::DMKDEModel model = load_model_checked(o.model);
    if (!model.trained())
        throw usage_error("model has no trained state yet; run `memoqcd train` first");
    memoqcd::Dataset raw = load_dataset(o.data);
    if (raw.d != model.layout.d)
        throw usage_error("data dimension " + std::to_string(raw.d) +
                          " does not match the model's " + std::to_string(model.layout.d));
    if (o.seeds < 1) throw usage_error("seed count must be positive");

    // Compare in model space: samples drawn from the model's density grid
    // against the training data mapped through the stored transform.
    memoqcd::Dataset data = raw;
    if (model.scale) {
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const auto s = model.scale->apply(raw.point_vec(i));
            std::copy(s.begin(), s.end(),
                      data.values.begin() + static_cast<std::ptrdiff_t>(i * s.size()));
        }
    }

    const bool had_norm = model.norm_constant.has_value();
    const int threads = memoqcd::resolve_threads(o.threads);
    memoqcd::KLDReport report =
        memoqcd::evaluate_model_kld(model, data, o.seeds, o.k, o.grid, o.seed, threads);
    memoqcd::write_kld_csv(report, o.out);

    std::vector<std::string> artifacts{o.out};
    if (!had_norm && model.norm_constant) {
        memoqcd::save_model(model, o.model);
        artifacts.push_back(o.model);
    }

    ordered_json config{{"model", o.model}, {"data", o.data},     {"seeds", o.seeds},
                        {"k", o.k},         {"grid", o.grid},     {"seed", o.seed},
                        {"threads", o.threads}, {"out", o.out}};
    write_manifest("kld", o.out, config, artifacts, watch.seconds());

    std::ostringstream msg;
    msg.precision(17);
    msg << "kld over " << o.seeds << " sample sets: mean " << report.mean << ", std "
        << report.std_dev << "\n";
    std::cout << msg.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-circuit kernel density estimation workbench"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    DatagenOpts dg;
    CLI::App* datagen = app.add_subcommand("datagen", "generate a synthetic 2-D dataset");
    datagen->add_option("--name", dg.name, "two-moons, circles, blobs, or spirals")->required();
    datagen->add_option("--n", dg.n, "number of points (0 = generator default)");
    datagen->add_option("--noise", dg.noise, "noise level (cluster sd for blobs)")
        ->capture_default_str();
    datagen->add_option("--seed", dg.seed, "rng seed")->capture_default_str();
    datagen->add_option("--out", dg.out, "output csv path")->required();

    QfmSearchOpts qs;
    CLI::App* search = app.add_subcommand("qfm-search", "search a quantum feature map by kernel fit");
    search->add_option("--mode", qs.mode, "genetic, memetic, or hea")->capture_default_str();
    search->add_option("--qubits", qs.qubits, "feature-map qubits per dimension")
        ->capture_default_str();
    search->add_option("--gates", qs.gates, "genes per chromosome")->capture_default_str();
    search->add_option("--gamma", qs.gamma, "gaussian kernel bandwidth")->capture_default_str();
    search->add_option("--pairs", qs.pairs, "training pairs for the kernel fit")
        ->capture_default_str();
    search->add_option("--interval", qs.interval, "kernel interval lo hi")
        ->expected(2)
        ->capture_default_str();
    search->add_option("--generations", qs.generations, "evolution generations")
        ->capture_default_str();
    search->add_option("--population", qs.population, "population size")->capture_default_str();
    search->add_option("--epochs", qs.epochs, "gradient epochs (memetic and hea)")
        ->capture_default_str();
    search->add_option("--lr", qs.lr, "gradient learning rate")->capture_default_str();
    search->add_option("--seed", qs.seed, "rng seed")->capture_default_str();
    search->add_option("--out", qs.out, "model stub output path")->required();

    TrainOpts tr;
    CLI::App* train = app.add_subcommand("train", "train the density state on a dataset");
    train->add_option("--model", tr.model, "model stub from qfm-search")->required();
    train->add_option("--data", tr.data, "training data csv")->required();
    train->add_option("--aux", tr.aux, "ancilla qubits")->capture_default_str();
    train->add_option("--layers", tr.layers, "ansatz layers")->capture_default_str();
    train->add_option("--epochs", tr.epochs, "gradient epochs")->capture_default_str();
    train->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
    train->add_option("--objective", tr.objective, "log-of-sum or sum-of-logs")
        ->capture_default_str();
    train->add_option("--seed", tr.seed, "rng seed")->capture_default_str();
    train->add_option("--out", tr.out, "output model path (default: rewrite --model)");

    EstimateOpts es;
    CLI::App* estimate = app.add_subcommand("estimate", "evaluate the trained density");
    estimate->add_option("--model", es.model, "trained model")->required();
    CLI::Option* opt_point =
        estimate->add_option("--point", es.point, "point to evaluate, e.g. 0.5,1.2")
            ->delimiter(',')
            ->expected(-1);
    CLI::Option* opt_grid =
        estimate->add_option("--grid", es.grid, "grid resolution per axis")->excludes(opt_point);
    opt_point->excludes(opt_grid);
    estimate->add_option("--bounds", es.bounds, "grid bounds lo hi (raw coordinates, every axis)")
        ->expected(2);
    estimate->add_option("--mode", es.mode, "exact or shots")->capture_default_str();
    estimate->add_option("--shots", es.shots, "measurement shots per evaluation")
        ->capture_default_str();
    estimate->add_option("--seed", es.seed, "rng seed for shot noise")->capture_default_str();
    estimate->add_option("--threads", es.threads, "worker threads (0 = MEMOQCD_THREADS or 1)")
        ->capture_default_str();
    estimate->add_option("--out", es.out, "output csv path");
    estimate->add_option("--pgm", es.pgm, "also write the grid as a pgm image (2-D only)");

    KldOpts kl;
    CLI::App* kld = app.add_subcommand("kld", "divergence between model samples and data");
    kld->add_option("--model", kl.model, "trained model")->required();
    kld->add_option("--data", kl.data, "reference data csv")->required();
    kld->add_option("--seeds", kl.seeds, "number of sample sets")->capture_default_str();
    kld->add_option("--k", kl.k, "nearest-neighbor order")->capture_default_str();
    kld->add_option("--grid", kl.grid, "sampling grid resolution")->capture_default_str();
    kld->add_option("--seed", kl.seed, "base rng seed")->capture_default_str();
    kld->add_option("--threads", kl.threads, "worker threads (0 = MEMOQCD_THREADS or 1)")
        ->capture_default_str();
    kld->add_option("--out", kl.out, "report csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (datagen->parsed()) return run_datagen(dg);
        if (search->parsed()) return run_qfm_search(qs);
        if (train->parsed()) return run_train(tr);
        if (estimate->parsed()) return run_estimate(es);
        if (kld->parsed()) return run_kld(kl);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
