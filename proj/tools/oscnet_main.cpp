// oscnet experiment runner: train / fit / attack / scenarios / verify / plot /
// datagen. A single JSON config drives every command; CLI flags override
// config keys; all outputs embed the effective config snapshot and are
// byte-reproducible under a fixed seed.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "oscnet/attacks.hpp"
#include "oscnet/data.hpp"
#include "oscnet/defense.hpp"
#include "oscnet/network.hpp"
#include "oscnet/plot.hpp"
#include "oscnet/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oscnet;

namespace {

// exit-code taxonomy
constexpr int kExitFail = 1;        // verify failure or any runtime error
constexpr int kExitInputMissing = 2;
constexpr int kExitWrongKind = 3;
constexpr int kExitMismatch = 4;

struct CliExit {
    int code;
    std::string message;
};

// ---- config -----------------------------------------------------------------

struct DatasetConfig {
    std::string name = "synth"; // synth | mnist | cifar10
    std::string dir;            // for file-backed datasets; env fallback
    int64_t train_n = 10000;
    int64_t eval_n = 1000;
    int64_t fit_n = 2000;
    uint64_t seed = 1;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::string preset = "mlp"; // mlp | cnn
    int64_t timesteps = 8;
    NeuronParams neuron;
    TrainConfig train;
    FitConfig fit;
    std::vector<AttackConfig> attacks;
    uint64_t scenario_seed = 12345;
    std::string out_dir = "runs/out";
    int workers = 2;

    std::string snapshot; // canonical JSON of the effective config
};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw InvalidParamError("config: unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

AttackConfig parse_attack(const json& j) {
    check_keys(j, {"kind", "epsilon", "iters", "mim_mu", "pgd_step", "seed"}, "attacks[]");
    AttackConfig a;
    a.kind = attack_kind_from_string(j.at("kind").get<std::string>());
    maybe(j, "epsilon", a.epsilon);
    maybe(j, "iters", a.iters);
    maybe(j, "mim_mu", a.mim_mu);
    maybe(j, "pgd_step", a.pgd_step);
    maybe(j, "seed", a.seed);
    a.validate();
    return a;
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j,
               {"dataset", "network", "neuron", "train", "fit", "attacks", "scenario_seed",
                "out_dir", "workers"},
               "top level");
    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d, {"name", "dir", "train_n", "eval_n", "fit_n", "seed"}, "dataset");
        maybe(d, "name", cfg.dataset.name);
        maybe(d, "dir", cfg.dataset.dir);
        maybe(d, "train_n", cfg.dataset.train_n);
        maybe(d, "eval_n", cfg.dataset.eval_n);
        maybe(d, "fit_n", cfg.dataset.fit_n);
        maybe(d, "seed", cfg.dataset.seed);
    }
    if (j.contains("network")) {
        const json& n = j.at("network");
        check_keys(n, {"preset", "timesteps"}, "network");
        maybe(n, "preset", cfg.preset);
        maybe(n, "timesteps", cfg.timesteps);
    }
    if (j.contains("neuron")) {
        const json& n = j.at("neuron");
        check_keys(n,
                   {"v_th", "v_reset", "lambda", "alpha", "leaky_slope", "noise_lo", "noise_hi",
                    "mapping", "c", "d"},
                   "neuron");
        maybe(n, "v_th", cfg.neuron.v_th);
        maybe(n, "v_reset", cfg.neuron.v_reset);
        maybe(n, "lambda", cfg.neuron.lambda);
        maybe(n, "alpha", cfg.neuron.alpha);
        maybe(n, "leaky_slope", cfg.neuron.leaky_slope);
        maybe(n, "noise_lo", cfg.neuron.noise_lo);
        maybe(n, "noise_hi", cfg.neuron.noise_hi);
        if (n.contains("mapping"))
            cfg.neuron.mapping_kind = mapping_kind_from_string(n.at("mapping").get<std::string>());
        maybe(n, "c", cfg.neuron.c);
        maybe(n, "d", cfg.neuron.d);
        cfg.neuron.validate();
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, {"epochs", "lr0", "t_max", "batch_size", "seed", "beta1", "beta2",
                       "adam_eps"},
                   "train");
        maybe(t, "epochs", cfg.train.epochs);
        maybe(t, "lr0", cfg.train.lr0);
        maybe(t, "t_max", cfg.train.t_max);
        maybe(t, "batch_size", cfg.train.batch_size);
        maybe(t, "seed", cfg.train.seed);
        maybe(t, "beta1", cfg.train.beta1);
        maybe(t, "beta2", cfg.train.beta2);
        maybe(t, "adam_eps", cfg.train.adam_eps);
    }
    if (j.contains("fit")) {
        const json& f = j.at("fit");
        check_keys(f, {"epochs", "lr", "batch_size", "seed", "mapping"}, "fit");
        maybe(f, "epochs", cfg.fit.epochs);
        maybe(f, "lr", cfg.fit.lr);
        maybe(f, "batch_size", cfg.fit.batch_size);
        maybe(f, "seed", cfg.fit.seed);
        if (f.contains("mapping"))
            cfg.fit.mapping = mapping_kind_from_string(f.at("mapping").get<std::string>());
    }
    if (j.contains("attacks"))
        for (const auto& a : j.at("attacks")) cfg.attacks.push_back(parse_attack(a));
    maybe(j, "scenario_seed", cfg.scenario_seed);
    maybe(j, "out_dir", cfg.out_dir);
    maybe(j, "workers", cfg.workers);
    return cfg;
}

std::vector<AttackConfig> default_attacks() {
    AttackConfig fgsm_cfg;
    fgsm_cfg.kind = AttackKind::FGSM;
    AttackConfig pgd_cfg;
    pgd_cfg.kind = AttackKind::PGD;
    AttackConfig bim_cfg;
    bim_cfg.kind = AttackKind::BIM;
    AttackConfig mim_cfg;
    mim_cfg.kind = AttackKind::MIM;
    return {fgsm_cfg, pgd_cfg, bim_cfg, mim_cfg};
}

std::string snapshot_of(const ExperimentConfig& cfg) {
    json j;
    j["dataset"] = {{"name", cfg.dataset.name},     {"dir", cfg.dataset.dir},
                    {"train_n", cfg.dataset.train_n}, {"eval_n", cfg.dataset.eval_n},
                    {"fit_n", cfg.dataset.fit_n},   {"seed", cfg.dataset.seed}};
    j["network"] = {{"preset", cfg.preset}, {"timesteps", cfg.timesteps}};
    j["neuron"] = {{"v_th", cfg.neuron.v_th},
                   {"v_reset", cfg.neuron.v_reset},
                   {"lambda", cfg.neuron.lambda},
                   {"alpha", cfg.neuron.alpha},
                   {"leaky_slope", cfg.neuron.leaky_slope},
                   {"noise_lo", cfg.neuron.noise_lo},
                   {"noise_hi", cfg.neuron.noise_hi},
                   {"mapping", to_string(cfg.neuron.mapping_kind)},
                   {"c", cfg.neuron.c},
                   {"d", cfg.neuron.d}};
    j["train"] = {{"epochs", cfg.train.epochs},     {"lr0", cfg.train.lr0},
                  {"t_max", cfg.train.t_max},       {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},         {"beta1", cfg.train.beta1},
                  {"beta2", cfg.train.beta2},       {"adam_eps", cfg.train.adam_eps}};
    j["fit"] = {{"epochs", cfg.fit.epochs},
                {"lr", cfg.fit.lr},
                {"batch_size", cfg.fit.batch_size},
                {"seed", cfg.fit.seed},
                {"mapping", to_string(cfg.fit.mapping)}};
    j["attacks"] = json::array();
    for (const auto& a : cfg.attacks)
        j["attacks"].push_back({{"kind", to_string(a.kind)},
                                {"epsilon", a.epsilon},
                                {"iters", a.iters},
                                {"mim_mu", a.mim_mu},
                                {"pgd_step", a.resolved_pgd_step()},
                                {"seed", a.seed}});
    j["scenario_seed"] = cfg.scenario_seed;
    j["out_dir"] = cfg.out_dir;
    j["workers"] = cfg.workers;
    return j.dump();
}

// ---- datasets -----------------------------------------------------------------

enum class Split { Train, Eval, Fit };

std::string data_dir_of(const ExperimentConfig& cfg) {
    if (!cfg.dataset.dir.empty()) return cfg.dataset.dir;
    if (const char* env = std::getenv("OSCNET_DATA_DIR")) return env;
    return ".";
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw CliExit{kExitInputMissing, "dataset not found: " + path};
}

Dataset load_split(const ExperimentConfig& cfg, Split split) {
    const DatasetConfig& d = cfg.dataset;
    const uint64_t tag = split == Split::Train ? 1 : split == Split::Eval ? 2 : 3;
    const int64_t n = split == Split::Train ? d.train_n : split == Split::Eval ? d.eval_n
                                                                               : d.fit_n;
    if (d.name == "synth") return synth_digits(n, derive_seed({d.seed, tag}));
    if (d.name == "mnist") {
        const std::string dir = data_dir_of(cfg);
        const bool test_files = split == Split::Eval;
        const std::string imgs =
            dir + (test_files ? "/t10k-images-idx3-ubyte" : "/train-images-idx3-ubyte");
        const std::string labs =
            dir + (test_files ? "/t10k-labels-idx1-ubyte" : "/train-labels-idx1-ubyte");
        require_file(imgs);
        require_file(labs);
        Dataset full = load_idx(imgs, labs);
        return sample_subset(full, std::min(n, full.size()), derive_seed({d.seed, tag}));
    }
    if (d.name == "cifar10") {
        const std::string dir = data_dir_of(cfg);
        std::vector<std::string> paths;
        if (split == Split::Eval) {
            paths = {dir + "/test_batch.bin"};
        } else {
            for (int i = 1; i <= 5; ++i)
                paths.push_back(dir + "/data_batch_" + std::to_string(i) + ".bin");
        }
        for (const auto& p : paths) require_file(p);
        Dataset full = load_cifar10_bin(paths);
        return sample_subset(full, std::min(n, full.size()), derive_seed({d.seed, tag}));
    }
    throw InvalidParamError("config: unknown dataset \"" + d.name + "\"");
}

NetworkSpec preset_spec(const ExperimentConfig& cfg, const Dataset& sample) {
    Shape input = sample.images.shape();
    input.erase(input.begin());
    if (cfg.preset == "mlp") return mlp_preset(input, sample.num_classes, cfg.timesteps);
    if (cfg.preset == "cnn") return cnn_preset(input, sample.num_classes, cfg.timesteps);
    throw InvalidParamError("config: unknown preset \"" + cfg.preset + "\"");
}

// ---- output helpers -------------------------------------------------------------

void write_text(const std::string& path, const std::string& text) {
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f << text;
}

std::string history_csv(const std::vector<EpochStats>& history, const std::string& snapshot) {
    std::string out = "# config " + snapshot + "\n";
    out += "epoch,lr,train_loss,eval_acc\n";
    char buf[160];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9f,%.6f\n",
                      static_cast<long long>(e.epoch), e.lr, e.train_loss, e.eval_acc);
        out += buf;
    }
    return out;
}

// ---- commands -----------------------------------------------------------------

int cmd_train(const ExperimentConfig& cfg) {
    Dataset train_set = load_split(cfg, Split::Train);
    Dataset eval_set = load_split(cfg, Split::Eval);
    const NetworkSpec spec = preset_spec(cfg, train_set);
    fs::create_directories(cfg.out_dir);

    Network teacher = build(spec, derive_seed({cfg.train.seed, 0xA}));
    teacher.neuron_kind = NeuronKind::Oscillation;
    teacher.neuron_params = cfg.neuron;
    std::printf("training oscillation teacher (%s, %lld train / %lld eval, %lld epochs)\n",
                cfg.preset.c_str(), (long long)train_set.size(), (long long)eval_set.size(),
                (long long)cfg.train.epochs);
    auto teacher_hist = train(teacher, train_set, eval_set, cfg.train);
    for (const auto& e : teacher_hist)
        std::printf("  teacher epoch %lld  lr %.3g  loss %.4f  acc %.4f\n",
                    (long long)e.epoch, e.lr, e.train_loss, e.eval_acc);
    save(teacher, cfg.out_dir + "/teacher_osc.ckpt");
    write_text(cfg.out_dir + "/history_teacher.csv", history_csv(teacher_hist, cfg.snapshot));

    Network bench = build(spec, derive_seed({cfg.train.seed, 0xB}));
    bench.neuron_kind = NeuronKind::LIF;
    bench.neuron_params = cfg.neuron;
    std::printf("training LIF benchmark\n");
    auto bench_hist = train(bench, train_set, eval_set, cfg.train);
    for (const auto& e : bench_hist)
        std::printf("  benchmark epoch %lld  lr %.3g  loss %.4f  acc %.4f\n",
                    (long long)e.epoch, e.lr, e.train_loss, e.eval_acc);
    save(bench, cfg.out_dir + "/benchmark_lif.ckpt");
    write_text(cfg.out_dir + "/history_benchmark.csv", history_csv(bench_hist, cfg.snapshot));

    std::printf("wrote %s/teacher_osc.ckpt and %s/benchmark_lif.ckpt\n", cfg.out_dir.c_str(),
                cfg.out_dir.c_str());
    return 0;
}

int cmd_fit(const ExperimentConfig& cfg, const std::string& teacher_path) {
    if (!fs::exists(teacher_path))
        throw CliExit{kExitInputMissing, "teacher checkpoint not found: " + teacher_path};
    Network teacher = load(teacher_path);
    if (teacher.neuron_kind != NeuronKind::Oscillation)
        throw CliExit{kExitWrongKind, "teacher checkpoint holds a " +
                                          to_string(teacher.neuron_kind) +
                                          " network, expected oscillation"};
    if (cfg.fit.epochs < 1 || cfg.fit.epochs > 3)
        std::fprintf(stderr, "warning: fit epochs %lld outside the 1-3 protocol, proceeding\n",
                     (long long)cfg.fit.epochs);
    Dataset fit_set = load_split(cfg, Split::Fit);
    Dataset eval_set = load_split(cfg, Split::Eval);
    fs::create_directories(cfg.out_dir);

    Network student;
    FitResult fit = fit_alternative(teacher, cfg.fit, fit_set, student);
    save(student, cfg.out_dir + "/student_alt.ckpt");

    const double agreement =
        spike_agreement(teacher, student, eval_set, derive_seed({cfg.fit.seed, 77}));

    std::string log = "# config " + cfg.snapshot + "\n";
    log += "epoch,loss\n";
    char buf[96];
    for (size_t i = 0; i < fit.epoch_losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9f\n", i, fit.epoch_losses[i]);
        log += buf;
    }
    write_text(cfg.out_dir + "/fit_log.csv", log);

    json summary;
    summary["c"] = fit.c;
    summary["d"] = fit.d;
    summary["initial_loss"] = fit.initial_loss;
    summary["final_loss"] = fit.final_loss;
    summary["spike_agreement"] = agreement;
    summary["config"] = json::parse(cfg.snapshot);
    write_text(cfg.out_dir + "/fit_summary.json", summary.dump(2) + "\n");

    std::printf("fitted c=%.6f d=%.6f  loss %.4f -> %.4f  spike agreement %.4f\n", fit.c, fit.d,
                fit.initial_loss, fit.final_loss, agreement);
    std::printf("wrote %s/student_alt.ckpt\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_attack(const ExperimentConfig& cfg, const std::string& ckpt_path) {
    if (!fs::exists(ckpt_path))
        throw CliExit{kExitInputMissing, "checkpoint not found: " + ckpt_path};
    Network net = load(ckpt_path);
    Dataset eval_set = load_split(cfg, Split::Eval);
    fs::create_directories(cfg.out_dir);

    std::vector<int64_t> idx(static_cast<size_t>(eval_set.size()));
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    auto [x, y] = gather(eval_set, idx);

    const auto attacks = cfg.attacks.empty() ? default_attacks() : cfg.attacks;
    for (const auto& a : attacks) {
        const uint64_t base = a.seed ? a.seed : cfg.scenario_seed;
        GradProvider provider = [&](const Tensor& xb, const std::vector<int>& yb, int iter) {
            std::vector<uint64_t> seeds(static_cast<size_t>(xb.shape()[0]));
            for (size_t i = 0; i < seeds.size(); ++i)
                seeds[i] = generation_noise_seed(base, static_cast<int64_t>(i), iter);
            return input_gradient(net, xb, yb, std::nullopt, seeds);
        };
        Tensor adv = run_attack(provider, x, y, a);
        const std::string stem = cfg.out_dir + "/adv_" + a.label();
        save_adv_batch(stem + ".bin", stem + ".json", adv, a, idx, cfg.snapshot);
        std::printf("wrote %s.bin (%lld samples, eps %.4g)\n", stem.c_str(),
                    (long long)eval_set.size(), a.epsilon);
    }
    return 0;
}

int cmd_scenarios(const ExperimentConfig& cfg, const std::string& osc_path,
                  const std::string& alt_path, const std::string& lif_path) {
    for (const auto& p : {osc_path, alt_path, lif_path})
        if (!fs::exists(p)) throw CliExit{kExitInputMissing, "checkpoint not found: " + p};
    Network osc = load(osc_path);
    Network alt = load(alt_path);
    Network lif = load(lif_path);
    if (weight_checksum(osc) != weight_checksum(alt))
        throw CliExit{kExitMismatch,
                      "oscillation and alternative checkpoints do not share weights"};
    Dataset eval_set = load_split(cfg, Split::Eval);
    fs::create_directories(cfg.out_dir);
    set_scenario_workers(cfg.workers);

    const auto attacks = cfg.attacks.empty() ? default_attacks() : cfg.attacks;
    ScenarioReport report = scenario_matrix(osc, alt, lif, attacks, eval_set, cfg.scenario_seed);
    report.config_snapshot = cfg.snapshot;
    write_text(cfg.out_dir + "/report.csv", report.to_csv());
    write_text(cfg.out_dir + "/report.json", report.to_json() + "\n");

    write_gradient_curves_svg(cfg.out_dir + "/gradients.svg", osc.neuron_params,
                              alt.neuron_params.c, alt.neuron_params.d, -1.0, 2.5, cfg.snapshot);
    write_gradient_curves_svg(cfg.out_dir + "/gradients_zoom.svg", osc.neuron_params,
                              alt.neuron_params.c, alt.neuron_params.d, 0.0, 0.4, cfg.snapshot);
    write_mapping_gradient_curves_svg(cfg.out_dir + "/mapping_gradients.svg", osc.neuron_params,
                                      alt.neuron_params.c, alt.neuron_params.d, -1.0, 2.5,
                                      cfg.snapshot);

    for (const auto& r : report.rows)
        std::printf("%-10s %-7s eps %-8.4g acc %.4f (n=%lld)\n", r.row.c_str(),
                    r.attack.c_str(), r.epsilon, r.accuracy, (long long)r.n);
    std::printf("wrote %s/report.csv, report.json and gradient SVGs\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = run_verify_suites(cfg.neuron);
    const auto t1 = std::chrono::steady_clock::now();
    bool all = true;
    std::vector<std::string> failed;
    for (const auto& r : results) {
        std::printf("%-28s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.c_str());
        all = all && r.pass;
        if (!r.pass) failed.push_back(r.name);
    }
    std::printf("verify: %zu checks in %.1fs\n", results.size(),
                std::chrono::duration<double>(t1 - t0).count());
    if (!all) {
        std::string list;
        for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
        throw CliExit{kExitFail, "failed properties: " + list};
    }
    return 0;
}

int cmd_plot(const ExperimentConfig& cfg, const std::string& alt_path) {
    double c = cfg.neuron.c, d = cfg.neuron.d;
    NeuronParams params = cfg.neuron;
    if (!alt_path.empty()) {
        if (!fs::exists(alt_path))
            throw CliExit{kExitInputMissing, "checkpoint not found: " + alt_path};
        Network alt = load(alt_path);
        params = alt.neuron_params;
        c = alt.neuron_params.c;
        d = alt.neuron_params.d;
    }
    fs::create_directories(cfg.out_dir);
    write_gradient_curves_svg(cfg.out_dir + "/gradients.svg", params, c, d, -1.0, 2.5,
                              cfg.snapshot);
    write_gradient_curves_svg(cfg.out_dir + "/gradients_zoom.svg", params, c, d, 0.0, 0.4,
                              cfg.snapshot);
    write_mapping_gradient_curves_svg(cfg.out_dir + "/mapping_gradients.svg", params, c, d, -1.0,
                                      2.5, cfg.snapshot);
    std::printf("wrote gradient SVGs to %s (c=%.4f, d=%.4f)\n", cfg.out_dir.c_str(), c, d);
    return 0;
}

int cmd_datagen(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    Dataset train_set = load_split(cfg, Split::Train);
    Dataset eval_set = load_split(cfg, Split::Eval);
    write_idx(train_set, cfg.out_dir + "/train-images-idx3-ubyte",
              cfg.out_dir + "/train-labels-idx1-ubyte");
    write_idx(eval_set, cfg.out_dir + "/t10k-images-idx3-ubyte",
              cfg.out_dir + "/t10k-labels-idx1-ubyte");
    std::printf("wrote %lld train / %lld eval images in IDX format to %s\n",
                (long long)train_set.size(), (long long)eval_set.size(), cfg.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiking-network training and gradient-masking robustness toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global options are accepted after the subcommand

    std::string config_path;
    std::string out_override, dataset_override, data_dir_override;
    int64_t epochs_override = -1, train_n_override = -1, eval_n_override = -1;
    int64_t seed_override = -1;
    int workers_override = -1;
    app.add_option("-c,--config", config_path, "JSON config file");
    app.add_option("--out", out_override, "output directory (overrides config)");
    app.add_option("--dataset", dataset_override, "dataset name: synth|mnist|cifar10");
    app.add_option("--data-dir", data_dir_override, "dataset directory");
    app.add_option("--epochs", epochs_override, "training epochs");
    app.add_option("--train-n", train_n_override, "training subset size");
    app.add_option("--eval-n", eval_n_override, "evaluation subset size");
    app.add_option("--seed", seed_override, "training seed");
    app.add_option("--workers", workers_override, "parallel worker bound");

    auto* train_cmd = app.add_subcommand("train", "train the oscillation teacher and LIF benchmark");
    auto* fit_cmd = app.add_subcommand("fit", "fit the alternative neuron's (c,d) to a teacher");
    auto* attack_cmd = app.add_subcommand("attack", "export adversarial batches for a checkpoint");
    auto* scen_cmd = app.add_subcommand("scenarios", "run the full attack-scenario matrix");
    auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
    auto* plot_cmd = app.add_subcommand("plot", "render gradient-curve SVGs");
    auto* datagen_cmd = app.add_subcommand("datagen", "materialize the synthetic dataset as IDX files");

    std::string teacher_path, ckpt_path, osc_path, alt_path, lif_path, plot_alt_path;
    fit_cmd->add_option("--teacher", teacher_path, "oscillation teacher checkpoint");
    attack_cmd->add_option("--ckpt", ckpt_path, "checkpoint to attack");
    scen_cmd->add_option("--osc", osc_path, "oscillation checkpoint");
    scen_cmd->add_option("--alt", alt_path, "alternative (student) checkpoint");
    scen_cmd->add_option("--lif", lif_path, "LIF benchmark checkpoint");
    plot_cmd->add_option("--alt", plot_alt_path, "alternative checkpoint for fitted (c,d)");

    CLI11_PARSE(app, argc, argv);

    try {
        json raw = json::object();
        if (!config_path.empty()) {
            if (!fs::exists(config_path))
                throw CliExit{kExitInputMissing, "config not found: " + config_path};
            std::ifstream f(config_path);
            try {
                raw = json::parse(f);
            } catch (const json::exception& e) {
                throw InvalidParamError(std::string("config: ") + e.what());
            }
        }
        ExperimentConfig cfg = parse_config(raw);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (!dataset_override.empty()) cfg.dataset.name = dataset_override;
        if (!data_dir_override.empty()) cfg.dataset.dir = data_dir_override;
        if (epochs_override >= 0) cfg.train.epochs = epochs_override;
        if (train_n_override >= 0) cfg.dataset.train_n = train_n_override;
        if (eval_n_override >= 0) cfg.dataset.eval_n = eval_n_override;
        if (seed_override >= 0) cfg.train.seed = static_cast<uint64_t>(seed_override);
        if (workers_override >= 0) cfg.workers = workers_override;
        cfg.snapshot = snapshot_of(cfg);

        if (teacher_path.empty()) teacher_path = cfg.out_dir + "/teacher_osc.ckpt";
        if (ckpt_path.empty()) ckpt_path = cfg.out_dir + "/teacher_osc.ckpt";
        if (osc_path.empty()) osc_path = cfg.out_dir + "/teacher_osc.ckpt";
        if (alt_path.empty()) alt_path = cfg.out_dir + "/student_alt.ckpt";
        if (lif_path.empty()) lif_path = cfg.out_dir + "/benchmark_lif.ckpt";

        if (train_cmd->parsed()) return cmd_train(cfg);
        if (fit_cmd->parsed()) return cmd_fit(cfg, teacher_path);
        if (attack_cmd->parsed()) return cmd_attack(cfg, ckpt_path);
        if (scen_cmd->parsed()) return cmd_scenarios(cfg, osc_path, alt_path, lif_path);
        if (verify_cmd->parsed()) return cmd_verify(cfg);
        if (plot_cmd->parsed()) return cmd_plot(cfg, plot_alt_path);
        if (datagen_cmd->parsed()) return cmd_datagen(cfg);
        return kExitFail;
    } catch (const CliExit& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFail;
    }
}
