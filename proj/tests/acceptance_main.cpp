// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Training-based criteria share one fixture (a trained oscillation
// teacher, its fitted student, and a separately trained LIF benchmark).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oscnet/attacks.hpp"
#include "oscnet/data.hpp"
#include "oscnet/defense.hpp"
#include "oscnet/network.hpp"
#include "oscnet/verify.hpp"

using namespace oscnet;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%-52s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// evaluation epsilon for the attack-ordering criteria; chosen so that FGSM
// costs the LIF benchmark >= 20 accuracy points on the desk-scale task
// (value recorded with the artifact; see README)
constexpr double kOrderingEpsilon = 0.12;

const CheckResult* find_check(const std::vector<CheckResult>& checks, const std::string& name) {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

void criterion_1_2_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto checks = run_verify_suites();
    const double elapsed = seconds_since(t0);

    const struct {
        const char* criterion;
        const char* check;
    } unit_map[] = {
        {"1a surrogate peak = alpha/2 at v_th", "surrogate_peak"},
        {"1b oscillation autodiff vs closed form", "osc_closed_form"},
        {"1c alternative autodiff vs closed form", "alt_closed_form"},
        {"1d finite differences on smooth ops", "finite_difference_ops"},
        {"1e spike-train loss values", "spike_train_loss_values"},
    };
    for (const auto& m : unit_map) {
        const CheckResult* c = find_check(checks, m.check);
        report(m.criterion, c && c->pass, c ? c->detail : "check missing");
    }
    report("1  unit-oracle runtime < 10 min", elapsed < 600.0,
           std::to_string((int)elapsed) + "s");

    const CheckResult* containment = find_check(checks, "attack_containment");
    const CheckResult* reductions = find_check(checks, "attack_reductions");
    report("2  attack containment (1000 samples/attack)", containment && containment->pass,
           containment ? containment->detail : "check missing");
    report("2  bim(1)==fgsm+clip, mim(0)==bim", reductions && reductions->pass,
           reductions ? reductions->detail : "check missing");

    const CheckResult* firing = find_check(checks, "spontaneous_firing");
    report("3  spontaneous firing (osc > 0, lif == 0)", firing && firing->pass,
           firing ? firing->detail : "check missing");
}

struct Fixture {
    Dataset train_set, eval_set, fit_set;
    Network teacher;   // oscillation
    Network benchmark; // LIF
    Network student;   // alternative, fitted
    double teacher_acc = 0, benchmark_acc = 0, student_acc = 0;
    double agreement = 0;
    FitResult fit;
};

Fixture make_fixture() {
    Fixture fx;
    fx.train_set = synth_digits(10000, derive_seed({1, 1}));
    fx.eval_set = synth_digits(1000, derive_seed({1, 2}));
    fx.fit_set = synth_digits(2000, derive_seed({1, 3}));

    const NetworkSpec spec = mlp_preset({1, 28, 28}, 10, 8);
    TrainConfig tc;
    tc.epochs = 20;
    tc.lr0 = 1e-4;
    tc.t_max = 100;
    tc.batch_size = 64;
    tc.seed = 7;

    fx.teacher = build(spec, derive_seed({tc.seed, 0xA}));
    fx.teacher.neuron_kind = NeuronKind::Oscillation;
    train(fx.teacher, fx.train_set, Dataset{}, tc);

    fx.benchmark = build(spec, derive_seed({tc.seed, 0xB}));
    fx.benchmark.neuron_kind = NeuronKind::LIF;
    train(fx.benchmark, fx.train_set, Dataset{}, tc);

    fx.teacher_acc = evaluate(fx.teacher, fx.eval_set, 100);
    fx.benchmark_acc = evaluate(fx.benchmark, fx.eval_set, 100);

    FitConfig fc;
    fc.epochs = 3;
    fc.lr = 0.01;
    fc.batch_size = 64;
    fc.seed = 11;
    fx.fit = fit_alternative(fx.teacher, fc, fx.fit_set, fx.student);
    fx.student_acc = evaluate(fx.student, fx.eval_set, 100);
    fx.agreement = spike_agreement(fx.teacher, fx.student, fx.eval_set, 101);
    return fx;
}

void criterion_4(const Fixture& fx, double train_seconds) {
    report("4  LIF accuracy >= 95%", fx.benchmark_acc >= 0.95,
           "lif " + pct(fx.benchmark_acc));
    report("4  oscillation within 3 points of LIF",
           std::abs(fx.teacher_acc - fx.benchmark_acc) <= 0.03,
           "osc " + pct(fx.teacher_acc) + " vs lif " + pct(fx.benchmark_acc));
    report("4  training runtime < 30 min", train_seconds < 1800.0,
           std::to_string((int)train_seconds) + "s");
}

void criterion_5(const Fixture& fx) {
    report("5  fitted clean accuracy within 3 points",
           std::abs(fx.student_acc - fx.teacher_acc) <= 0.03,
           "alt " + pct(fx.student_acc) + " vs osc " + pct(fx.teacher_acc) + " (c=" +
               std::to_string(fx.fit.c) + ", d=" + std::to_string(fx.fit.d) + ")");
    report("5  spike agreement >= 0.9", fx.agreement >= 0.9, pct(fx.agreement));
}

void criterion_6(Fixture& fx) {
    AttackConfig fgsm_cfg;
    fgsm_cfg.kind = AttackKind::FGSM;
    fgsm_cfg.epsilon = kOrderingEpsilon;
    AttackConfig pgd_cfg;
    pgd_cfg.kind = AttackKind::PGD;
    pgd_cfg.epsilon = kOrderingEpsilon;
    pgd_cfg.iters = 5;

    const uint64_t seed = 500;
    const double clean = run_benchmark_row(fx.benchmark, std::nullopt, fx.eval_set, seed).accuracy;
    const double fgsm_acc =
        run_benchmark_row(fx.benchmark, fgsm_cfg, fx.eval_set, seed).accuracy;
    const double pgd_acc = run_benchmark_row(fx.benchmark, pgd_cfg, fx.eval_set, seed).accuracy;

    char detail[160];
    std::snprintf(detail, sizeof(detail), "eps=%.4g clean %s, fgsm %s, pgd-5 %s",
                  kOrderingEpsilon, pct(clean).c_str(), pct(fgsm_acc).c_str(),
                  pct(pgd_acc).c_str());
    report("6  FGSM drops benchmark >= 20 points", clean - fgsm_acc >= 0.20, detail);
    report("6  clean > FGSM > PGD-5, gaps >= 5 points",
           clean - fgsm_acc >= 0.05 && fgsm_acc - pgd_acc >= 0.05, detail);
}

void criterion_7(Fixture& fx) {
    AttackConfig pgd_cfg;
    pgd_cfg.kind = AttackKind::PGD;
    pgd_cfg.epsilon = kOrderingEpsilon;
    pgd_cfg.iters = 5;

    bool all_hold = true;
    std::string detail;
    for (uint64_t seed : {601, 602, 603}) {
        const double bench =
            run_benchmark_row(fx.benchmark, pgd_cfg, fx.eval_set, seed).accuracy;
        const double s1 = run_scenario(fx.teacher, fx.student, fx.benchmark, scenario_by_id(1),
                                       pgd_cfg, fx.eval_set, seed)
                              .accuracy;
        const double s4 = run_scenario(fx.teacher, fx.student, fx.benchmark, scenario_by_id(4),
                                       pgd_cfg, fx.eval_set, seed)
                              .accuracy;
        const double s5 = run_scenario(fx.teacher, fx.student, fx.benchmark, scenario_by_id(5),
                                       pgd_cfg, fx.eval_set, seed)
                              .accuracy;
        const bool hold = (s1 >= bench + 0.05) && (s4 >= s1 + 0.05) && (s4 > s5 + 0.05);
        all_hold = all_hold && hold;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "[seed %llu: bench %s s1 %s s4 %s s5 %s] ",
                      (unsigned long long)seed, pct(bench).c_str(), pct(s1).c_str(),
                      pct(s4).c_str(), pct(s5).c_str());
        detail += buf;
    }
    report("7  defense orderings under PGD-5, three seeds", all_hold, detail);
}

// ---- criterion 8: CLI determinism --------------------------------------------

#ifndef OSCNET_CLI_PATH
#define OSCNET_CLI_PATH "oscnet"
#endif

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return "<missing " + path + ">";
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool run_cli(const std::string& args) {
    const std::string cmd = std::string(OSCNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

int cli_exit_code(const std::string& args) {
    const std::string cmd = std::string(OSCNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_8() {
    const std::string base = fs::temp_directory_path() / "oscnet_accept_cli";
    fs::remove_all(base);
    const std::string cfg_path = base + "/config.json";
    fs::create_directories(base);
    {
        std::ofstream f(cfg_path);
        f << R"({
  "dataset": {"name": "synth", "train_n": 240, "eval_n": 60, "fit_n": 240, "seed": 5},
  "network": {"preset": "mlp", "timesteps": 8},
  "train": {"epochs": 2, "lr0": 0.001, "batch_size": 32, "seed": 9},
  "fit": {"epochs": 2, "lr": 0.01, "batch_size": 32, "seed": 13},
  "attacks": [{"kind": "FGSM", "epsilon": 0.1}, {"kind": "PGD", "epsilon": 0.1, "iters": 2}],
  "scenario_seed": 77,
  "workers": 2
})";
    }

    bool ok = true;
    std::string why;
    for (const char* run : {"a", "b"}) {
        const std::string out = base + "/" + run;
        ok = ok && run_cli("train -c " + cfg_path + " --out " + out);
        ok = ok && run_cli("fit -c " + cfg_path + " --out " + out);
        ok = ok && run_cli("attack -c " + cfg_path + " --out " + out);
        ok = ok && run_cli("scenarios -c " + cfg_path + " --out " + out);
        ok = ok && run_cli("datagen -c " + cfg_path + " --out " + out + "/idx");
        ok = ok && run_cli("plot -c " + cfg_path + " --out " + out +
                           " --alt " + out + "/student_alt.ckpt");
    }
    if (!ok) why = "a CLI command exited nonzero; ";

    const char* files[] = {"history_teacher.csv", "history_benchmark.csv",
                           "fit_log.csv",         "fit_summary.json",
                           "report.csv",          "report.json",
                           "teacher_osc.ckpt",    "benchmark_lif.ckpt",
                           "student_alt.ckpt",    "adv_FGSM.bin",
                           "adv_PGD-2.bin",       "gradients.svg",
                           "idx/train-images-idx3-ubyte"};
    for (const char* f : files) {
        const std::string a = slurp(base + "/a/" + std::string(f));
        const std::string b = slurp(base + "/b/" + std::string(f));
        if (a != b || a.rfind("<missing", 0) == 0) {
            ok = false;
            why += std::string(f) + " differs; ";
        }
    }
    report("8  CLI reruns byte-identical", ok, ok ? "all artifacts identical across reruns" : why);

    // exit-code taxonomy: 2 missing input, 3 wrong checkpoint kind, strict config
    const int missing_data =
        cli_exit_code("train -c " + cfg_path + " --out " + base + "/x --dataset mnist "
                      "--data-dir " + base + "/nonexistent");
    const int wrong_kind = cli_exit_code("fit -c " + cfg_path + " --out " + base +
                                         "/a --teacher " + base + "/a/benchmark_lif.ckpt");
    const std::string bad_cfg = base + "/bad.json";
    {
        std::ofstream f(bad_cfg);
        f << R"({"trian": {"epochs": 1}})";
    }
    const int unknown_key = cli_exit_code("verify -c " + bad_cfg);
    const bool codes_ok = missing_data == 2 && wrong_kind == 3 && unknown_key == 1;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "missing-data %d, wrong-kind %d, unknown-key %d",
                  missing_data, wrong_kind, unknown_key);
    report("8  CLI exit-code taxonomy", codes_ok, buf);
    if (ok && codes_ok) fs::remove_all(base);
}

} // namespace

int main() {
    std::printf("== acceptance suite ==\n");
    criterion_1_2_3();

    const auto t0 = std::chrono::steady_clock::now();
    Fixture fx = make_fixture();
    const double train_seconds = seconds_since(t0);

    criterion_4(fx, train_seconds);
    criterion_5(fx);
    criterion_6(fx);
    criterion_7(fx);
    criterion_8();

    std::printf("== %s (%d failing) ==\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
