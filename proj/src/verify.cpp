#include "oscnet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "oscnet/attacks.hpp"
#include "oscnet/defense.hpp"
#include "oscnet/network.hpp"

namespace oscnet {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double ds_dh_autodiff_osc(double h, double gamma, const NeuronParams& p, SurrogateMode mode) {
    Tensor current({1}, {h}, true);
    Tape tape;
    TapeScope scope(tape);
    StepResult r = osc_step_with_noise({Tensor::zeros({1})}, current, p, Tensor({1}, {gamma}),
                                       mode);
    tape.backward(sum(r.spikes));
    return current.grad()[0];
}

double ds_dh_autodiff_alt(double h, double c, double d, const NeuronParams& base,
                          SurrogateMode mode) {
    NeuronParams p = base;
    p.c = c;
    p.d = d;
    p.mapping_kind = MappingKind::F1;
    Tensor current({1}, {h}, true);
    Tape tape;
    TapeScope scope(tape);
    StepResult r = alt_osc_step({Tensor::zeros({1})}, current, p, mode);
    tape.backward(sum(r.spikes));
    return current.grad()[0];
}

CheckResult check_surrogate_peak(const NeuronParams& p) {
    CheckResult r{"surrogate_peak"};
    const double peak = atan_surrogate(p.v_th, p);
    double worst = std::abs(peak - p.alpha / 2.0);
    for (double delta : {0.05, 0.3, 1.0, 4.0}) {
        worst = std::max(worst, std::abs(atan_surrogate(p.v_th + delta, p) -
                                         atan_surrogate(p.v_th - delta, p)));
        if (atan_surrogate(p.v_th + delta, p) >= peak) worst = std::max(worst, 1.0);
    }
    r.pass = worst < 1e-12;
    r.detail = "peak " + num(peak) + ", worst dev " + num(worst);
    return r;
}

CheckResult check_osc_closed_form(const NeuronParams& p) {
    CheckResult r{"osc_closed_form"};
    Rng rng(1001);
    double worst = 0.0;
    int nonneg = 0;
    for (int i = 0; i < 1000; ++i) {
        const double h = rng.uniform(-2, 2);
        const double gamma = rng.uniform(p.noise_lo, p.noise_hi);
        const double cf = closed_form_grad_osc(h, gamma, p);
        if (h + gamma >= 0.0) {
            worst = std::max(worst, std::abs(ds_dh_autodiff_osc(h, gamma, p,
                                                                SurrogateMode::Exact) - cf));
            ++nonneg;
        } else {
            worst = std::max(
                worst, std::abs(ds_dh_autodiff_osc(h, gamma, p, SurrogateMode::PaperLiteral) - cf));
        }
    }
    r.pass = worst < 1e-9 && nonneg > 100;
    r.detail = "max abs err " + num(worst) + " over 1000 draws (" + std::to_string(nonneg) +
               " nonneg-branch)";
    return r;
}

CheckResult check_alt_closed_form(const NeuronParams& p) {
    CheckResult r{"alt_closed_form"};
    Rng rng(1002);
    double worst = 0.0;
    int nonneg = 0;
    for (int i = 0; i < 1000; ++i) {
        const double h = rng.uniform(-2, 2);
        const double c = rng.uniform(-1, 1);
        const double d = rng.uniform(-1, 1);
        const double cf = closed_form_grad_alt(h, c, d, p);
        if (h + std::sin(h + c) + d >= 0.0) {
            worst = std::max(worst,
                             std::abs(ds_dh_autodiff_alt(h, c, d, p, SurrogateMode::Exact) - cf));
            ++nonneg;
        } else {
            worst = std::max(
                worst, std::abs(ds_dh_autodiff_alt(h, c, d, p, SurrogateMode::PaperLiteral) - cf));
        }
    }
    r.pass = worst < 1e-9 && nonneg > 100;
    r.detail = "max abs err " + num(worst) + " over 1000 draws (" + std::to_string(nonneg) +
               " nonneg-branch)";
    return r;
}

// independent central differences; h = 1e-5, inputs in [-2,2]
double fd_err(std::vector<Tensor>& leaves,
              const std::function<Tensor(std::vector<Tensor>&)>& f) {
    constexpr double h = 1e-5;
    for (auto& t : leaves) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tape tape;
    {
        TapeScope scope(tape);
        tape.backward(f(leaves));
    }
    std::vector<std::vector<double>> analytic;
    for (auto& t : leaves) analytic.push_back(t.grad());
    double worst = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& data = leaves[li].data();
        for (size_t i = 0; i < data.size(); ++i) {
            const double orig = data[i];
            data[i] = orig + h;
            const double up = f(leaves).item();
            data[i] = orig - h;
            const double dn = f(leaves).item();
            data[i] = orig;
            const double numeric = (up - dn) / (2 * h);
            const double a = analytic[li][i];
            worst = std::max(worst,
                             std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
        }
    }
    return worst;
}

Tensor rnd(Shape shape, Rng& rng, double lo = -2, double hi = 2) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

CheckResult check_finite_differences(const NeuronParams& p) {
    CheckResult r{"finite_difference_ops"};
    Rng rng(1003);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        {
            Tensor a = rnd({3, 4}, rng), b = rnd({4, 2}, rng);
            std::vector<Tensor> ls{a, b};
            worst = std::max(worst, fd_err(ls, [](std::vector<Tensor>& l) {
                                 return sum(matmul(l[0], l[1]));
                             }));
        }
        {
            Tensor in = rnd({1, 2, 5, 5}, rng), k = rnd({2, 2, 3, 3}, rng);
            std::vector<Tensor> ls{in, k};
            worst = std::max(worst, fd_err(ls, [](std::vector<Tensor>& l) {
                                 return sum(conv2d(l[0], l[1], 2, 1));
                             }));
        }
        {
            Tensor in = rnd({1, 1, 4, 4}, rng);
            std::vector<Tensor> ls{in};
            worst = std::max(worst, fd_err(ls, [](std::vector<Tensor>& l) {
                                 return sum(avg_pool2d(l[0], 2, 2));
                             }));
        }
        {
            Tensor x = rnd({4, 3}, rng), g = rnd({3}, rng, 0.5, 1.5), b = rnd({3}, rng, -0.5, 0.5);
            std::vector<Tensor> ls{x, g, b};
            worst = std::max(worst, fd_err(ls, [](std::vector<Tensor>& l) {
                                 BnStats st;
                                 Tensor y = batch_norm(l[0], l[1], l[2], st, true);
                                 Tensor w = Tensor::zeros(y.shape());
                                 for (size_t i = 0; i < w.data().size(); ++i)
                                     w.data()[i] = 0.05 * double(i % 5) - 0.1;
                                 return sum(mul(y, w));
                             }));
        }
        {
            Tensor z = rnd({3, 4}, rng);
            std::vector<Tensor> ls{z};
            worst = std::max(worst, fd_err(ls, [](std::vector<Tensor>& l) {
                                 return cross_entropy(l[0], {0, 3, 1});
                             }));
        }
        {
            // leaky transfer away from the kink, mapping family
            Tensor x = rnd({6}, rng);
            bool near_kink = false;
            for (double v : x.data()) near_kink = near_kink || std::abs(v) < 1e-3;
            if (!near_kink) {
                std::vector<Tensor> ls{x};
                NeuronParams np = p;
                worst = std::max(worst, fd_err(ls, [np](std::vector<Tensor>& l) {
                                     Tensor y = leaky_transfer(l[0], np);
                                     return sum(mul(y, y));
                                 }));
            }
            Tensor h = rnd({5}, rng);
            Tensor c = Tensor::scalar(rng.uniform(-1, 1));
            Tensor d = Tensor::scalar(rng.uniform(-1, 1));
            std::vector<Tensor> ls2{h, c, d};
            worst = std::max(worst, fd_err(ls2, [](std::vector<Tensor>& l) {
                                 Tensor m = apply_mapping(MappingKind::F1, l[0], l[1], l[2]);
                                 return sum(mul(m, m));
                             }));
        }
    }
    r.pass = worst < 1e-4;
    r.detail = "max rel err " + num(worst) + " over 100 trials per op";
    return r;
}

CheckResult check_spike_loss_values() {
    CheckResult r{"spike_train_loss_values"};
    Tensor a({4}, {1, 0, 1, 0});
    Tensor b({4}, {1, 0, 1, 0});
    std::vector<std::vector<Tensor>> ra = {{a}}, rb = {{b}};
    const double zero = spike_record_loss(ra, rb, 1);
    Tensor c({4}, {1, 0, 0, 0}); // one spike bit flipped
    std::vector<std::vector<Tensor>> rc = {{c}};
    const double half = spike_record_loss(ra, rc, 1);
    r.pass = zero == 0.0 && half == 0.5;
    r.detail = "identical " + num(zero) + ", single mismatch " + num(half);
    return r;
}

CheckResult check_attack_containment() {
    CheckResult r{"attack_containment"};
    Dataset ds = synth_digits(1000, 4242);
    Network net = build(mlp_preset(), 17);
    net.neuron_kind = NeuronKind::Oscillation;
    std::vector<int64_t> all(static_cast<size_t>(ds.size()));
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int64_t>(i);
    auto [x, y] = gather(ds, all);
    GradProvider provider = [&](const Tensor& xb, const std::vector<int>& yb, int iter) {
        std::vector<uint64_t> seeds(static_cast<size_t>(xb.shape()[0]));
        for (size_t i = 0; i < seeds.size(); ++i)
            seeds[i] = derive_seed(99, Stream::AttackNoise, i, static_cast<uint64_t>(iter));
        return input_gradient(net, xb, yb, std::nullopt, seeds);
    };
    int64_t violations = 0, checked = 0;
    const double eps = 8.0 / 255.0;
    for (AttackKind kind :
         {AttackKind::FGSM, AttackKind::BIM, AttackKind::MIM, AttackKind::PGD}) {
        AttackConfig cfg;
        cfg.kind = kind;
        cfg.epsilon = eps;
        cfg.iters = 5;
        cfg.seed = 7;
        Tensor adv = run_attack(provider, x, y, cfg);
        const int64_t per = numel(x.shape()) / x.shape()[0];
        for (int64_t row = 0; row < x.shape()[0]; ++row) {
            double linf = 0.0;
            bool in_range = true;
            for (int64_t i = 0; i < per; ++i) {
                const double v = adv.data()[row * per + i];
                linf = std::max(linf, std::abs(v - x.data()[row * per + i]));
                in_range = in_range && v >= 0.0 && v <= 1.0;
            }
            violations += !(linf <= eps + 1e-12 && in_range);
            ++checked;
        }
    }
    r.pass = violations == 0 && checked == 4000;
    r.detail = std::to_string(violations) + " violations over " + std::to_string(checked) +
               " adversarial samples";
    return r;
}

CheckResult check_attack_reductions() {
    CheckResult r{"attack_reductions"};
    Dataset ds = synth_digits(64, 321);
    Network net = build(mlp_preset(), 23); // LIF: deterministic gradients
    std::vector<int64_t> all(static_cast<size_t>(ds.size()));
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int64_t>(i);
    auto [x, y] = gather(ds, all);
    std::vector<uint64_t> seeds(static_cast<size_t>(x.shape()[0]), 5);
    GradProvider provider = [&](const Tensor& xb, const std::vector<int>& yb, int) {
        return input_gradient(net, xb, yb, std::nullopt, seeds);
    };
    AttackConfig one;
    one.kind = AttackKind::BIM;
    one.iters = 1;
    one.epsilon = 0.1;
    Tensor via_bim = bim(provider, x, y, one);
    Tensor via_fgsm = clip_ball(fgsm(provider, x, y, one), x, one.epsilon);
    bool eq1 = via_bim.data() == via_fgsm.data();

    AttackConfig five;
    five.kind = AttackKind::MIM;
    five.iters = 5;
    five.epsilon = 0.1;
    five.mim_mu = 0.0;
    Tensor via_mim = mim(provider, x, y, five);
    Tensor via_bim5 = bim(provider, x, y, five);
    bool eq2 = via_mim.data() == via_bim5.data();

    r.pass = eq1 && eq2;
    r.detail = std::string("bim(1)==fgsm+clip: ") + (eq1 ? "exact" : "DIFFERS") +
               ", mim(mu=0)==bim: " + (eq2 ? "exact" : "DIFFERS");
    return r;
}

CheckResult check_spontaneous_firing(const NeuronParams& p) {
    CheckResult r{"spontaneous_firing"};
    constexpr int64_t kTrials = 10000;
    constexpr int kSteps = 100;
    Tensor zero = Tensor::zeros({kTrials});
    Rng rng(2024);
    NeuronState osc_state{Tensor::full({kTrials}, p.v_reset)};
    int64_t osc_spikes = 0;
    for (int t = 0; t < kSteps; ++t) {
        StepResult s = osc_step(osc_state, zero, p, rng);
        for (double v : s.spikes.data()) osc_spikes += static_cast<int64_t>(v);
        osc_state = s.state;
    }
    NeuronState lif_state{Tensor::full({kTrials}, p.v_reset)};
    int64_t lif_spikes = 0;
    for (int t = 0; t < kSteps; ++t) {
        StepResult s = lif_step(lif_state, zero, p);
        for (double v : s.spikes.data()) lif_spikes += static_cast<int64_t>(v);
        lif_state = s.state;
    }
    const double freq =
        static_cast<double>(osc_spikes) / static_cast<double>(kTrials * kSteps);
    r.pass = osc_spikes > 0 && lif_spikes == 0;
    r.detail = "oscillation rate " + num(freq) + ", lif spikes " + std::to_string(lif_spikes) +
               " over 10000 trials x 100 steps";
    return r;
}

CheckResult check_dropout_stats() {
    CheckResult r{"dropout_stats"};
    Rng rng(42);
    Tensor m = dropout_mask({1000000}, 0.5, rng);
    int64_t kept = 0;
    for (double v : m.data()) kept += (v != 0.0);
    const double frac = static_cast<double>(kept) / 1e6;
    Rng rz(1);
    Tensor ones = dropout_mask({100}, 0.0, rz);
    bool all_one = true;
    for (double v : ones.data()) all_one = all_one && v == 1.0;
    r.pass = frac > 0.498 && frac < 0.502 && all_one;
    r.detail = "kept fraction " + num(frac);
    return r;
}

CheckResult check_osc_lif_equivalence(const NeuronParams& base) {
    CheckResult r{"osc_lif_zero_noise"};
    NeuronParams p = base;
    p.noise_lo = p.noise_hi = 0.0;
    Rng rng(77);
    bool equal = true;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor v = rnd({8}, rng, 0.0, 0.9);
        Tensor cur = rnd({8}, rng, 0.0, 1.2);
        StepResult a = lif_step({v}, cur, p);
        StepResult b = osc_step({v}, cur, p, rng);
        equal = equal && a.spikes.data() == b.spikes.data() &&
                a.state.v.data() == b.state.v.data();
    }
    r.pass = equal;
    r.detail = equal ? "identical over 100 random nonnegative instances" : "mismatch";
    return r;
}

CheckResult check_conv1x1_matmul() {
    CheckResult r{"conv1x1_matmul"};
    Rng rng(31);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int64_t C = 1 + int64_t(rng.below(4)), O = 1 + int64_t(rng.below(4));
        const int64_t H = 2 + int64_t(rng.below(4)), W = 2 + int64_t(rng.below(4));
        Tensor in = rnd({2, C, H, W}, rng);
        Tensor k = rnd({O, C, 1, 1}, rng);
        Tensor conv = conv2d(in, k, 1, 0);
        Tensor kmat({O, C}, k.data());
        for (int64_t n = 0; n < 2; ++n)
            for (int64_t h = 0; h < H; ++h)
                for (int64_t w = 0; w < W; ++w) {
                    Tensor px = Tensor::zeros({C, 1});
                    for (int64_t c = 0; c < C; ++c)
                        px.data()[c] = in.data()[((n * C + c) * H + h) * W + w];
                    Tensor o = matmul(kmat, px);
                    for (int64_t oc = 0; oc < O; ++oc)
                        worst = std::max(worst,
                                         std::abs(conv.data()[((n * O + oc) * H + h) * W + w] -
                                                  o.data()[oc]));
                }
    }
    r.pass = worst < 1e-12;
    r.detail = "max abs diff " + num(worst);
    return r;
}

CheckResult check_forward_invariants() {
    CheckResult r{"forward_invariants"};
    Network net = build(mlp_preset(), 5);
    net.neuron_kind = NeuronKind::Oscillation;
    Dataset ds = synth_digits(64, 8);
    std::vector<int64_t> all(64);
    for (size_t i = 0; i < 64; ++i) all[i] = static_cast<int64_t>(i);
    auto [x, y] = gather(ds, all);
    std::vector<uint64_t> seeds(64);
    for (size_t i = 0; i < 64; ++i) seeds[i] = derive_seed(3, Stream::EvalNoise, i);
    ForwardOptions o;
    o.row_seeds = &seeds;
    o.record_spikes = true;
    ForwardResult res = forward_T(net, x, o);
    bool ok = true;
    for (double v : res.rates.data()) ok = ok && v >= 0.0 && v <= 1.0;
    for (const auto& step : res.spikes)
        for (const auto& layer : step)
            for (double v : layer.data()) ok = ok && (v == 0.0 || v == 1.0);
    ForwardResult res2 = forward_T(net, x, o);
    ok = ok && res.rates.data() == res2.rates.data();
    r.pass = ok;
    r.detail = ok ? "rates in [0,1], spikes binary, seeded reruns identical" : "violated";
    return r;
}

} // namespace

std::vector<CheckResult> run_verify_suites(const NeuronParams& params,
                                           const std::vector<std::string>& only) {
    using Check = std::function<CheckResult()>;
    const std::vector<std::pair<std::string, Check>> suites = {
        {"surrogate_peak", [&] { return check_surrogate_peak(params); }},
        {"osc_closed_form", [&] { return check_osc_closed_form(params); }},
        {"alt_closed_form", [&] { return check_alt_closed_form(params); }},
        {"finite_difference_ops", [&] { return check_finite_differences(params); }},
        {"spike_train_loss_values", [&] { return check_spike_loss_values(); }},
        {"attack_containment", [&] { return check_attack_containment(); }},
        {"attack_reductions", [&] { return check_attack_reductions(); }},
        {"spontaneous_firing", [&] { return check_spontaneous_firing(params); }},
        {"dropout_stats", [&] { return check_dropout_stats(); }},
        {"osc_lif_zero_noise", [&] { return check_osc_lif_equivalence(params); }},
        {"conv1x1_matmul", [&] { return check_conv1x1_matmul(); }},
        {"forward_invariants", [&] { return check_forward_invariants(); }},
    };
    std::vector<CheckResult> results;
    for (const auto& [name, fn] : suites) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        results.push_back(fn());
    }
    return results;
}

} // namespace oscnet
