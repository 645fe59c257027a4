// Command-line surface over the kernel engine: gram construction, kernel
// regression, dynamics, spectra, finite-width runs, corrected kernels,
// embeddings, and the scaling bench.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 budget exceeded.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "ntk/bench.hpp"
#include "ntk/corrections.hpp"
#include "ntk/dataset.hpp"
#include "ntk/dynamics.hpp"
#include "ntk/empirical.hpp"
#include "ntk/errors.hpp"
#include "ntk/fc_kernel.hpp"
#include "ntk/flops.hpp"
#include "ntk/gram.hpp"
#include "ntk/solvers.hpp"
#include "ntk/spectral.hpp"
#include "ntk/training.hpp"
#include "ntk/version.hpp"

using json = nlohmann::json;
using namespace ntk;

namespace {

struct RunConfig {
    std::string command;
    std::string dataset;
    std::string test_dataset;
    std::string labels;
    std::string gram_file;
    std::string model_file;
    std::string out = "out";

    int arch_depth = 2;
    std::string arch_kind = "fc";
    std::string ker = "0";
    int channels = 1;
    int pixels = 1;
    std::string padding = "circular";
    std::string param = "ntk";
    std::string kind = "ntk";

    double lambda = 0.0;
    int nystrom_m = 0;
    int cg_iters = 0;
    double cg_tol = 1e-8;

    double eta = 1e-3;
    long steps = 1000;
    std::string loss = "square";
    double time = -1.0; // continuous t for dynamics; <0 means eta*steps

    std::vector<std::uint64_t> seeds = {0};
    std::vector<int> widths = {64};
    int ensemble = 10;

    std::string spectrum_kernel = "fc-ntk";
    int kmax = 64;
    int quad_n = 8192;

    std::string embed_kind = "basic";
    int embed_m = 8;
    double embed_sigma = 1.0;

    std::string bench_sweep = "m";
    std::vector<int> sizes;

    double mem_budget_mb = 4096.0;
    long record_every = 10;
};

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stoi(cell));
    }
    if (out.empty()) throw ConfigError("empty integer list: '" + text + "'");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stoull(cell));
    }
    if (out.empty()) throw ConfigError("empty seed list: '" + text + "'");
    return out;
}

// Config file keys mirror the long flags; unknown keys are rejected.
void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& [key, value] : doc.items()) {
        if (key == "dataset") cfg.dataset = value.get<std::string>();
        else if (key == "test_dataset") cfg.test_dataset = value.get<std::string>();
        else if (key == "labels") cfg.labels = value.get<std::string>();
        else if (key == "gram") cfg.gram_file = value.get<std::string>();
        else if (key == "model") cfg.model_file = value.get<std::string>();
        else if (key == "out") cfg.out = value.get<std::string>();
        else if (key == "arch_depth") cfg.arch_depth = value.get<int>();
        else if (key == "arch_kind") cfg.arch_kind = value.get<std::string>();
        else if (key == "ker") cfg.ker = value.get<std::string>();
        else if (key == "channels") cfg.channels = value.get<int>();
        else if (key == "pixels") cfg.pixels = value.get<int>();
        else if (key == "padding") cfg.padding = value.get<std::string>();
        else if (key == "param") cfg.param = value.get<std::string>();
        else if (key == "kind") cfg.kind = value.get<std::string>();
        else if (key == "lambda") cfg.lambda = value.get<double>();
        else if (key == "nystrom_m") cfg.nystrom_m = value.get<int>();
        else if (key == "cg_iters") cfg.cg_iters = value.get<int>();
        else if (key == "cg_tol") cfg.cg_tol = value.get<double>();
        else if (key == "eta") cfg.eta = value.get<double>();
        else if (key == "steps") cfg.steps = value.get<long>();
        else if (key == "loss") cfg.loss = value.get<std::string>();
        else if (key == "time") cfg.time = value.get<double>();
        else if (key == "seeds") cfg.seeds = value.get<std::vector<std::uint64_t>>();
        else if (key == "widths") cfg.widths = value.get<std::vector<int>>();
        else if (key == "ensemble") cfg.ensemble = value.get<int>();
        else if (key == "spectrum_kernel") cfg.spectrum_kernel = value.get<std::string>();
        else if (key == "kmax") cfg.kmax = value.get<int>();
        else if (key == "quad_n") cfg.quad_n = value.get<int>();
        else if (key == "embed_kind") cfg.embed_kind = value.get<std::string>();
        else if (key == "embed_m") cfg.embed_m = value.get<int>();
        else if (key == "embed_sigma") cfg.embed_sigma = value.get<double>();
        else if (key == "bench_sweep") cfg.bench_sweep = value.get<std::string>();
        else if (key == "sizes") cfg.sizes = value.get<std::vector<int>>();
        else if (key == "mem_budget_mb") cfg.mem_budget_mb = value.get<double>();
        else if (key == "record_every") cfg.record_every = value.get<long>();
        else throw ConfigError("unknown config key: " + key);
    }
}

ArchSpec arch_from(const RunConfig& cfg, int feature_count, bool with_widths) {
    std::vector<int> widths;
    if (with_widths && cfg.arch_depth > 1) {
        widths.assign(cfg.arch_depth - 1, cfg.widths.front());
    }
    if (cfg.arch_kind == "fc") {
        return ArchSpec::dense(cfg.arch_depth, feature_count, widths);
    }
    if (cfg.arch_kind != "conv1d") throw ConfigError("arch kind must be fc or conv1d");
    const Padding padding = cfg.padding == "zero" ? Padding::Zero : Padding::Circular;
    int channels = cfg.channels;
    int pixels = cfg.pixels;
    if (channels * pixels != feature_count) {
        if (feature_count % std::max(channels, 1) == 0) {
            pixels = feature_count / channels;
        } else {
            throw ConfigError("channels x pixels must match the dataset feature count");
        }
    }
    return ArchSpec::conv1d(cfg.arch_depth, channels, pixels, parse_int_list(cfg.ker), widths,
                            padding);
}

Parameterization param_from(const RunConfig& cfg) {
    if (cfg.param == "ntk") return Parameterization::NTK;
    if (cfg.param == "standard") return Parameterization::Standard;
    throw ConfigError("param must be ntk or standard");
}

void write_json(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(2) << "\n";
}

json stage_report(const std::string& stage, double seconds, std::uint64_t flops, long m, long d) {
    return json{{"stage", stage}, {"seconds", seconds}, {"flops", flops}, {"m", m}, {"d", d}};
}

Eigen::MatrixXd require_dataset(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("this command needs --dataset");
    return load_csv(cfg.dataset);
}

Eigen::VectorXd require_labels(const RunConfig& cfg) {
    if (cfg.labels.empty()) throw ConfigError("this command needs --labels");
    return load_labels(cfg.labels);
}

// ---------------------------------------------------------------------------

int cmd_gram(const RunConfig& cfg) {
    const Eigen::MatrixXd data = require_dataset(cfg);
    const GramKind kind = gram_kind_from_string(cfg.kind);
    flops::counters().reset();
    json stages = json::array();
    GramMatrix g;
    const long d = cfg.arch_kind == "conv1d" ? data.cols() / std::max(cfg.channels, 1) : 1;

    const auto t0 = std::chrono::steady_clock::now();
    if (kind == GramKind::NTK || kind == GramKind::NNGP) {
        const ArchSpec arch = arch_from(cfg, static_cast<int>(data.cols()), false);
        GramOptions options;
        options.mem_budget_mb = cfg.mem_budget_mb;
        g = gram(data, arch, kind, options);
    } else if (kind == GramKind::Empirical) {
        const ArchSpec arch = arch_from(cfg, static_cast<int>(data.cols()), true);
        g = mc_kernel_estimate(arch, param_from(cfg), cfg.ensemble, data, cfg.seeds.front());
    } else {
        const ArchSpec arch = arch_from(cfg, static_cast<int>(data.cols()), true);
        const Eigen::VectorXd y = require_labels(cfg);
        g = nth_kernel(arch, data, y, cfg.ensemble, cfg.seeds.front()).gram;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stages.push_back(stage_report("gram", seconds, flops::counters().flops.load(), data.rows(),
                                  d));
    save_gram(g, cfg.out);
    write_json(json{{"command", "gram"},
                    {"kind", to_string(g.kind)},
                    {"fingerprint", module_fingerprint("analytic-kernels")},
                    {"phi_expectations", flops::counters().phi_expectations.load()},
                    {"dphi_expectations", flops::counters().dphi_expectations.load()},
                    {"stages", stages}},
               cfg.out + ".report.json");
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    if (cfg.gram_file.empty()) throw ConfigError("fit needs --gram");
    const GramMatrix g = load_gram(cfg.gram_file);
    const Eigen::VectorXd y = require_labels(cfg);
    if (y.size() != g.m()) throw ConfigError("labels do not match the gram size");

    RidgeSolution solution;
    if (cfg.nystrom_m > 0) {
        // The loaded gram serves as kernel access: anchors index its rows.
        NystromOptions options;
        options.anchors = cfg.nystrom_m;
        options.lambda = cfg.lambda;
        options.max_iters = cfg.cg_iters;
        options.tol = cfg.cg_tol;
        options.seed = cfg.seeds.front();
        Eigen::MatrixXd index_rows(g.m(), 1);
        for (int i = 0; i < g.m(); ++i) index_rows(i, 0) = i;
        const KernelFn kfn = [&g](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
            return g.entries(static_cast<int>(a(0)), static_cast<int>(b(0)));
        };
        solution = nystrom_cg_solve(kfn, index_rows, y, options).solution;
    } else {
        solution = ridge_solve_direct(g.entries, y, cfg.lambda);
    }
    save_solution(solution, cfg.out);
    return 0;
}

int cmd_predict(const RunConfig& cfg) {
    if (cfg.model_file.empty()) throw ConfigError("predict needs --model");
    const RidgeSolution solution = load_solution(cfg.model_file);
    const Eigen::MatrixXd train = require_dataset(cfg);
    const Eigen::MatrixXd test = cfg.test_dataset.empty() ? train : load_csv(cfg.test_dataset);
    const ArchSpec arch = arch_from(cfg, static_cast<int>(train.cols()), false);

    std::vector<int> anchors = solution.anchors;
    if (anchors.empty()) {
        anchors.resize(train.rows());
        std::iota(anchors.begin(), anchors.end(), 0);
    }
    Eigen::MatrixXd k(test.rows(), anchors.size());
    for (int i = 0; i < test.rows(); ++i) {
        const Eigen::VectorXd row =
            kernel_row(test.row(i).transpose(), train, arch, GramKind::NTK);
        for (std::size_t a = 0; a < anchors.size(); ++a) k(i, a) = row(anchors[a]);
    }
    const Eigen::VectorXd preds = solution.predict(k);
    save_csv(preds, cfg.out);
    return 0;
}

int cmd_dynamics(const RunConfig& cfg) {
    if (cfg.gram_file.empty()) throw ConfigError("dynamics needs --gram");
    const GramMatrix g = load_gram(cfg.gram_file);
    const Eigen::VectorXd y = require_labels(cfg);
    const std::string fp = module_fingerprint("dynamics");

    if (cfg.loss == "square") {
        const SpectralDecomposition decomp = decompose(g.entries);
        const double horizon = cfg.time >= 0.0 ? cfg.time : cfg.eta * cfg.steps;
        std::ofstream out(cfg.out);
        if (!out) throw IoError("cannot open for writing: " + cfg.out);
        out.precision(17);
        const Eigen::VectorXd f0 = Eigen::VectorXd::Zero(g.m());
        const int rows = 50;
        for (int r = 0; r <= rows; ++r) {
            const double t = horizon * r / rows;
            const Eigen::VectorXd ft = exact_train_predictions(decomp, y, f0, t);
            out << t << "," << (y - ft).norm() << "," << fp << "\n";
        }
        return 0;
    }
    const DynLoss loss = cfg.loss == "bce" ? DynLoss::Bce : DynLoss::SoftmaxXent;
    const NumericDynamicsResult run = numeric_dynamics(g.entries, y, loss, cfg.eta, cfg.steps);
    if (run.diverged_at) throw NumericError("numeric dynamics diverged");
    std::ofstream out(cfg.out);
    if (!out) throw IoError("cannot open for writing: " + cfg.out);
    out.precision(17);
    for (std::size_t s = 0; s < run.losses.size(); ++s) {
        out << s << "," << run.losses[s] << "," << fp << "\n";
    }
    return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
    std::function<double(double)> kernel;
    if (cfg.spectrum_kernel == "linear") {
        kernel = [](double t) { return t; };
    } else if (cfg.spectrum_kernel == "constant") {
        kernel = [](double) { return 1.0 / (4.0 * M_PI * M_PI); };
    } else if (cfg.spectrum_kernel == "fc-ntk") {
        const int depth = cfg.arch_depth;
        kernel = [depth](double t) { return fc_ntk_from_cov({1.0, 1.0, t}, depth).theta; };
    } else if (cfg.spectrum_kernel == "fc-nngp") {
        const int depth = cfg.arch_depth;
        kernel = [depth](double t) { return fc_ntk_from_cov({1.0, 1.0, t}, depth).nngp; };
    } else {
        throw ConfigError("spectrum kernel must be linear, constant, fc-ntk, or fc-nngp");
    }
    const ZonalSpectrum spectrum = zonal_spectrum(kernel, cfg.kmax, cfg.quad_n);
    std::ofstream out(cfg.out);
    if (!out) throw IoError("cannot open for writing: " + cfg.out);
    out.precision(17);
    const std::string fp = module_fingerprint("spectral");
    for (int k = 0; k <= spectrum.k_max(); ++k) {
        out << k << "," << spectrum.lambdas[k] << "," << fp << "\n";
    }
    return 0;
}

int cmd_empirical(const RunConfig& cfg) {
    const Eigen::MatrixXd data = require_dataset(cfg);
    const ArchSpec arch = arch_from(cfg, static_cast<int>(data.cols()), true);
    const GramMatrix g =
        mc_kernel_estimate(arch, param_from(cfg), cfg.ensemble, data, cfg.seeds.front());
    save_gram(g, cfg.out);

    if (cfg.steps > 0) {
        if (cfg.labels.empty()) throw ConfigError("empirical training run needs --labels");
        const Eigen::VectorXd y = require_labels(cfg);
        FiniteNet net(arch, param_from(cfg), cfg.seeds.front());
        TrainOptions options;
        options.eta = cfg.eta;
        options.steps = cfg.steps;
        options.loss = cfg.loss == "bce" ? TrainLoss::Logistic : TrainLoss::Square;
        options.record_kernel_every = std::max<long>(cfg.record_every, 1);
        const TrainTrajectory traj = gradient_flow_train(net, data, y, options);
        std::ofstream out(cfg.out + ".velocity.csv");
        if (!out) throw IoError("cannot open for writing: " + cfg.out + ".velocity.csv");
        out.precision(17);
        const std::string fp = module_fingerprint("empirical-engine");
        for (std::size_t i = 0; i < traj.kernel_velocity.size(); ++i) {
            out << traj.record_steps[i + 1] << "," << traj.kernel_velocity[i] << "," << fp
                << "\n";
        }
    }
    return 0;
}

int cmd_correct(const RunConfig& cfg) {
    const Eigen::MatrixXd data = require_dataset(cfg);
    const Eigen::VectorXd y = require_labels(cfg);
    const ArchSpec arch = arch_from(cfg, static_cast<int>(data.cols()), true);
    const NthKernelResult nth = nth_kernel(arch, data, y, cfg.ensemble, cfg.seeds.front());
    save_gram(nth.gram, cfg.out);
    write_json(json{{"command", "correct"},
                    {"fingerprint", module_fingerprint("corrections")},
                    {"ensemble", nth.ensemble},
                    {"theta_se_max", nth.theta_se.maxCoeff()},
                    {"theta_se_mean", nth.theta_se.mean()}},
               cfg.out + ".report.json");
    return 0;
}

int cmd_embed(const RunConfig& cfg) {
    const Eigen::MatrixXd data = require_dataset(cfg);
    FourierEmbedding embedding;
    const int dim = static_cast<int>(data.cols());
    if (cfg.embed_kind == "basic") {
        embedding = FourierEmbedding::basic(dim);
    } else if (cfg.embed_kind == "positional") {
        embedding = FourierEmbedding::positional(dim, cfg.embed_m, cfg.embed_sigma);
    } else if (cfg.embed_kind == "gaussian") {
        embedding = FourierEmbedding::gaussian(dim, cfg.embed_m, cfg.embed_sigma,
                                               cfg.seeds.front());
    } else {
        throw ConfigError("embed kind must be basic, positional, or gaussian");
    }
    save_embedding(embedding, cfg.out);
    // Plot-ready embedded dataset next to the binary description.
    Eigen::MatrixXd embedded(data.rows(), embedding.output_dim());
    for (int i = 0; i < data.rows(); ++i) {
        embedded.row(i) = fourier_embed(data.row(i).transpose(), embedding).transpose();
    }
    save_csv(embedded, cfg.out + ".csv");
    return 0;
}

int cmd_bench(const RunConfig& cfg) {
    BenchConfig config;
    config.sizes = cfg.sizes;
    if (config.sizes.empty()) {
        config.sizes = cfg.bench_sweep == "d" ? std::vector<int>{4, 8, 16, 32}
                                              : std::vector<int>{50, 100, 200, 400};
    }
    config.depth = cfg.arch_depth;
    config.seed = cfg.seeds.front();
    config.eta = cfg.eta;
    const BenchReport report =
        cfg.bench_sweep == "d" ? bench_d_sweep(config) : bench_m_sweep(config);

    json points = json::array();
    for (const BenchPoint& p : report.points) {
        json stages = json::array();
        for (const auto& [stage, cost] : p.stages) {
            stages.push_back(stage_report(stage, cost.seconds, cost.flops,
                                          report.sweep == "m" ? p.size : 6,
                                          report.sweep == "d" ? p.size : 1));
        }
        points.push_back(json{{"size", p.size}, {"stages", stages}});
    }
    json slopes;
    for (const auto& [stage, fit] : report.flop_slopes) {
        slopes[stage] = {{"flops_slope", fit.slope},
                         {"flops_slope_stderr", fit.slope_stderr},
                         {"time_slope", report.time_slopes.at(stage).slope}};
    }
    write_json(json{{"command", "bench"},
                    {"sweep", report.sweep},
                    {"fingerprint", module_fingerprint("cli")},
                    {"points", points},
                    {"slopes", slopes}},
               cfg.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Infinite-width kernel engine"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    // Shared flags; flag values win over config-file values, so the config is
    // applied first in the pre-parse hook.
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--dataset", cfg.dataset, "training dataset csv");
        sub->add_option("--test-dataset", cfg.test_dataset, "test dataset csv");
        sub->add_option("--labels", cfg.labels, "label csv (single column)");
        sub->add_option("--gram", cfg.gram_file, "NTKG gram file");
        sub->add_option("--model", cfg.model_file, "NTKS solution file");
        sub->add_option("--out", cfg.out, "output path");
        sub->add_option("--arch-depth", cfg.arch_depth, "layer count");
        sub->add_option("--arch-kind", cfg.arch_kind, "fc | conv1d");
        sub->add_option("--ker", cfg.ker, "conv offsets, e.g. -1,0,1");
        sub->add_option("--channels", cfg.channels, "conv input channels");
        sub->add_option("--pixels", cfg.pixels, "conv pixel count");
        sub->add_option("--padding", cfg.padding, "circular | zero");
        sub->add_option("--param", cfg.param, "ntk | standard");
        sub->add_option("--kind", cfg.kind, "ntk | nngp | empirical | nth");
        sub->add_option("--lambda", cfg.lambda, "ridge strength");
        sub->add_option("--nystrom-m", cfg.nystrom_m, "anchor count (0 = direct)");
        sub->add_option("--cg-iters", cfg.cg_iters, "max cg iterations");
        sub->add_option("--cg-tol", cfg.cg_tol, "cg relative residual");
        sub->add_option("--eta", cfg.eta, "learning rate");
        sub->add_option("--steps", cfg.steps, "step count");
        sub->add_option("--loss", cfg.loss, "square | bce | xent");
        sub->add_option("--time", cfg.time, "continuous horizon (square dynamics)");
        sub->add_option("--seeds", [&cfg](const std::vector<std::string>& vals) {
            cfg.seeds = parse_seed_list(vals.back());
            return true;
        }, "comma-separated seeds");
        sub->add_option("--widths", [&cfg](const std::vector<std::string>& vals) {
            cfg.widths = parse_int_list(vals.back());
            return true;
        }, "comma-separated hidden widths");
        sub->add_option("--ensemble", cfg.ensemble, "monte-carlo sample count");
        sub->add_option("--kernel", cfg.spectrum_kernel,
                        "spectrum kernel: linear | constant | fc-ntk | fc-nngp");
        sub->add_option("--kmax", cfg.kmax, "highest retained mode");
        sub->add_option("--quad-n", cfg.quad_n, "quadrature resolution (power of two)");
        sub->add_option("--embed-kind", cfg.embed_kind, "basic | positional | gaussian");
        sub->add_option("--embed-m", cfg.embed_m, "embedding frequency count");
        sub->add_option("--embed-sigma", cfg.embed_sigma, "embedding bandwidth");
        sub->add_option("--bench-sweep", cfg.bench_sweep, "m | d");
        sub->add_option("--sizes", [&cfg](const std::vector<std::string>& vals) {
            cfg.sizes = parse_int_list(vals.back());
            return true;
        }, "comma-separated sweep sizes");
        sub->add_option("--mem-budget-mb", cfg.mem_budget_mb, "gram memory budget");
        sub->add_option("--record-every", cfg.record_every, "kernel recording stride");
        sub->preparse_callback([&](std::size_t) {
            if (!config_path.empty()) apply_config_file(cfg, config_path);
        });
    };

    int (*handler)(const RunConfig&) = nullptr;
    for (const auto& [name, fn, help] :
         std::initializer_list<std::tuple<const char*, int (*)(const RunConfig&), const char*>>{
             {"gram", cmd_gram, "build a kernel gram matrix (NTKG)"},
             {"fit", cmd_fit, "kernel ridge fit (NTKS)"},
             {"predict", cmd_predict, "predict from a fitted solution"},
             {"dynamics", cmd_dynamics, "training dynamics trajectories"},
             {"spectrum", cmd_spectrum, "zonal spectrum on the circle"},
             {"empirical", cmd_empirical, "finite-width kernels and velocity"},
             {"correct", cmd_correct, "label-aware corrected kernel (NTH)"},
             {"embed", cmd_embed, "fourier input embeddings"},
             {"bench", cmd_bench, "scaling sweeps with flop counters"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_common(sub);
        sub->callback([&handler, fn = fn] { handler = fn; });
    }

    try {
        app.parse(argc, argv);
        return handler(cfg);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
