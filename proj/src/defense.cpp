#include "oscnet/defense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace oscnet {

using nlohmann::json;

double spike_record_loss(const std::vector<std::vector<Tensor>>& a,
                         const std::vector<std::vector<Tensor>>& b, int64_t batch) {
    if (a.size() != b.size()) throw InvalidInputError("spike_record_loss: timestep mismatch");
    double total = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
        if (a[t].size() != b[t].size())
            throw InvalidInputError("spike_record_loss: layer-count mismatch");
        for (size_t j = 0; j < a[t].size(); ++j) {
            const auto& av = a[t][j].data();
            const auto& bv = b[t][j].data();
            if (av.size() != bv.size())
                throw InvalidInputError("spike_record_loss: layer size mismatch");
            for (size_t i = 0; i < av.size(); ++i) {
                const double diff = av[i] - bv[i];
                total += 0.5 * diff * diff;
            }
        }
    }
    return total / static_cast<double>(batch);
}

namespace {

constexpr int64_t kChunk = 200;
int g_scenario_workers = 1;

std::vector<int64_t> chunk_indices(int64_t start, int64_t stop) {
    std::vector<int64_t> idx(static_cast<size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    return idx;
}

} // namespace

double spike_loss_on_set(Network& teacher, Network& student, double c, double d,
                         const Dataset& ds, uint64_t seed) {
    double total = 0.0;
    Tensor ct = Tensor::scalar(c), dt = Tensor::scalar(d);
    for (int64_t start = 0; start < ds.size(); start += kChunk) {
        const int64_t stop = std::min(ds.size(), start + kChunk);
        auto idx = chunk_indices(start, stop);
        auto [bx, by] = gather(ds, idx);
        std::vector<uint64_t> seeds(idx.size());
        for (size_t i = 0; i < idx.size(); ++i)
            seeds[i] = derive_seed(seed, Stream::FitNoise, static_cast<uint64_t>(idx[i]));
        ForwardOptions to;
        to.record_spikes = true;
        to.row_seeds = &seeds;
        ForwardResult tr = forward_T(teacher, bx, to);
        ForwardOptions so;
        so.record_spikes = true;
        so.c_param = &ct;
        so.d_param = &dt;
        ForwardResult sr = forward_T(student, bx, so);
        total += spike_record_loss(tr.spikes, sr.spikes, 1); // accumulate raw, divide later
    }
    return total / static_cast<double>(ds.size());
}

FitResult fit_alternative(Network& teacher, const FitConfig& cfg, const Dataset& fit_set,
                          Network& student) {
    if (teacher.neuron_kind != NeuronKind::Oscillation)
        throw InvalidInputError("fit_alternative: teacher must be an oscillation network");
    if (cfg.epochs < 1) throw InvalidParamError("fit_alternative: epochs must be >= 1");
    if (fit_set.size() == 0) throw InvalidInputError("fit_alternative: empty fit set");

    student = teacher; // weights shared; only neuron kind and (c,d) differ
    student.neuron_kind = NeuronKind::Alternative;
    student.neuron_params.mapping_kind = cfg.mapping;
    student.neuron_params.c = 0.0;
    student.neuron_params.d = 0.0;

    FitResult result;
    result.initial_loss =
        spike_loss_on_set(teacher, student, 0.0, 0.0, fit_set, cfg.seed);

    Tensor c = Tensor::scalar(0.0, true);
    Tensor d = Tensor::scalar(0.0, true);
    double mc = 0, vc = 0, md = 0, vd = 0; // Adam state for the two scalars
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    int64_t adam_t = 0;

    const int64_t n = fit_set.size();
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, Stream::TrainShuffle, static_cast<uint64_t>(epoch)));
        for (int64_t i = n - 1; i > 0; --i) {
            const int64_t j = static_cast<int64_t>(shuffle_rng.below(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }
        double epoch_loss = 0.0;
        int64_t step = 0;
        for (int64_t start = 0; start < n; start += cfg.batch_size, ++step) {
            const int64_t stop = std::min(n, start + cfg.batch_size);
            std::vector<int64_t> bidx(order.begin() + start, order.begin() + stop);
            auto [bx, by] = gather(fit_set, bidx);
            const int64_t bsize = stop - start;

            // teacher targets: noise drawn once per batch, then held fixed
            Rng noise_rng(derive_seed(cfg.seed, Stream::FitNoise, static_cast<uint64_t>(epoch),
                                      static_cast<uint64_t>(step)));
            ForwardOptions to;
            to.record_spikes = true;
            to.rng = &noise_rng;
            ForwardResult tr = forward_T(teacher, bx, to);

            c.zero_grad();
            d.zero_grad();
            Tape tape;
            double batch_loss;
            {
                TapeScope scope(tape);
                ForwardOptions so;
                so.record_spikes = true;
                so.c_param = &c;
                so.d_param = &d;
                ForwardResult sr = forward_T(student, bx, so);
                Tensor loss;
                for (size_t t = 0; t < tr.spikes.size(); ++t)
                    for (size_t j = 0; j < tr.spikes[t].size(); ++j) {
                        Tensor diff = sub(tr.spikes[t][j], sr.spikes[t][j]);
                        Tensor term = scale(sum(mul(diff, diff)), 0.5);
                        loss = loss.defined() ? add(loss, term) : term;
                    }
                loss = scale(loss, 1.0 / static_cast<double>(bsize));
                batch_loss = loss.item();
                if (!std::isfinite(batch_loss))
                    throw FitFailedError("fit_alternative: loss diverged at epoch " +
                                         std::to_string(epoch));
                tape.backward(loss);
            }
            epoch_loss += batch_loss * static_cast<double>(bsize);

            ++adam_t;
            const double bc1 = 1.0 - std::pow(b1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(b2, static_cast<double>(adam_t));
            const double gc = c.grad()[0], gd = d.grad()[0];
            mc = b1 * mc + (1 - b1) * gc;
            vc = b2 * vc + (1 - b2) * gc * gc;
            md = b1 * md + (1 - b1) * gd;
            vd = b2 * vd + (1 - b2) * gd * gd;
            c.data()[0] -= cfg.lr * (mc / bc1) / (std::sqrt(vc / bc2) + eps);
            d.data()[0] -= cfg.lr * (md / bc1) / (std::sqrt(vd / bc2) + eps);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    }

    result.c = c.item();
    result.d = d.item();
    student.neuron_params.c = result.c;
    student.neuron_params.d = result.d;
    result.final_loss =
        spike_loss_on_set(teacher, student, result.c, result.d, fit_set, cfg.seed);
    return result;
}

double spike_agreement(Network& a, Network& b, const Dataset& ds, uint64_t seed) {
    if (!(a.spec == b.spec) || weight_checksum(a) != weight_checksum(b))
        throw InvalidInputError("spike_agreement: networks must share spec and weights");
    if (ds.size() == 0) throw InvalidInputError("spike_agreement: empty dataset");
    int64_t equal = 0, total = 0;
    for (int64_t start = 0; start < ds.size(); start += kChunk) {
        const int64_t stop = std::min(ds.size(), start + kChunk);
        auto idx = chunk_indices(start, stop);
        auto [bx, by] = gather(ds, idx);
        std::vector<uint64_t> seeds(idx.size());
        for (size_t i = 0; i < idx.size(); ++i)
            seeds[i] = derive_seed(seed, Stream::EvalNoise, static_cast<uint64_t>(idx[i]));
        ForwardOptions o;
        o.record_spikes = true;
        o.row_seeds = &seeds;
        ForwardResult ra = forward_T(a, bx, o);
        ForwardResult rb = forward_T(b, bx, o);
        for (size_t t = 0; t < ra.spikes.size(); ++t)
            for (size_t j = 0; j < ra.spikes[t].size(); ++j) {
                const auto& av = ra.spikes[t][j].data();
                const auto& bv = rb.spikes[t][j].data();
                for (size_t i = 0; i < av.size(); ++i) {
                    equal += (av[i] == bv[i]);
                    ++total;
                }
            }
    }
    return static_cast<double>(equal) / static_cast<double>(total);
}

// ---- scenarios -----------------------------------------------------------------

Scenario scenario_by_id(int id) {
    switch (id) {
    case 1: return {1, NeuronKind::Oscillation, NeuronKind::Oscillation};
    case 2: return {2, NeuronKind::Alternative, NeuronKind::Alternative};
    case 3: return {3, NeuronKind::LIF, NeuronKind::Oscillation};
    case 4: return {4, NeuronKind::Alternative, NeuronKind::Oscillation};
    case 5: return {5, NeuronKind::Oscillation, NeuronKind::Alternative};
    }
    throw InvalidParamError("scenario id must be 1..5");
}

uint64_t generation_noise_seed(uint64_t seed, int64_t sample_idx, int iter) {
    return derive_seed(seed, Stream::AttackNoise, static_cast<uint64_t>(sample_idx),
                       static_cast<uint64_t>(iter));
}

uint64_t inference_noise_seed(uint64_t seed, int64_t sample_idx) {
    return derive_seed(seed, Stream::EvalNoise, static_cast<uint64_t>(sample_idx));
}

void set_scenario_workers(int workers) { g_scenario_workers = std::max(1, workers); }

namespace {

// generate with (gen_net, gen_override) gradients, then measure top-1 accuracy
// with inf_net; one seeded inference draw per sample
double attacked_accuracy(Network& gen_net, std::optional<NeuronKind> gen_override,
                         Network& inf_net, const std::optional<AttackConfig>& attack,
                         const Dataset& eval_set, uint64_t seed) {
    if (eval_set.size() == 0) throw InvalidInputError("scenario: empty eval set");
    const int64_t K = inf_net.spec.num_classes;
    const int64_t n_chunks = (eval_set.size() + kChunk - 1) / kChunk;
    std::vector<int64_t> correct_per_chunk(static_cast<size_t>(n_chunks), 0);

    auto process_chunk = [&](int64_t chunk_no) {
        const int64_t start = chunk_no * kChunk;
        const int64_t stop = std::min(eval_set.size(), start + kChunk);
        auto idx = chunk_indices(start, stop);
        auto [bx, by] = gather(eval_set, idx);

        Tensor x_adv = bx;
        if (attack) {
            GradProvider provider = [&](const Tensor& xb, const std::vector<int>& yb, int iter) {
                std::vector<uint64_t> seeds(idx.size());
                for (size_t i = 0; i < idx.size(); ++i)
                    seeds[i] = generation_noise_seed(seed, idx[i], iter);
                return input_gradient(gen_net, xb, yb, gen_override, seeds);
            };
            AttackConfig cfg = *attack;
            cfg.seed = derive_seed(attack->seed ? attack->seed : seed, Stream::AttackInit,
                                   static_cast<uint64_t>(chunk_no));
            x_adv = run_attack(provider, bx, by, cfg);
        }

        std::vector<uint64_t> inf_seeds(idx.size());
        for (size_t i = 0; i < idx.size(); ++i)
            inf_seeds[i] = inference_noise_seed(seed, idx[i]);
        ForwardOptions o;
        o.row_seeds = &inf_seeds;
        ForwardResult res = forward_T(inf_net, x_adv, o);
        int64_t correct = 0;
        for (int64_t r = 0; r < stop - start; ++r) {
            const double* row = res.rates.data().data() + r * K;
            int64_t best = 0;
            for (int64_t k = 1; k < K; ++k)
                if (row[k] > row[best]) best = k;
            if (best == by[static_cast<size_t>(r)]) ++correct;
        }
        correct_per_chunk[static_cast<size_t>(chunk_no)] = correct;
    };

    const int workers = std::max(1, std::min<int>(g_scenario_workers,
                                                  static_cast<int>(n_chunks)));
    if (workers == 1) {
        for (int64_t c = 0; c < n_chunks; ++c) process_chunk(c);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int64_t c = w; c < n_chunks; c += workers) process_chunk(c);
            });
        for (auto& t : pool) t.join();
    }
    int64_t correct = 0;
    for (int64_t c : correct_per_chunk) correct += c;
    return static_cast<double>(correct) / static_cast<double>(eval_set.size());
}

ScenarioRow make_row(const std::string& label, const std::optional<AttackConfig>& attack,
                     double accuracy, int64_t n, uint64_t seed) {
    ScenarioRow row;
    row.row = label;
    row.attack = attack ? attack->label() : "clean";
    row.epsilon = attack ? attack->epsilon : 0.0;
    row.iters = attack && attack->kind != AttackKind::FGSM ? attack->iters : 0;
    row.accuracy = accuracy;
    row.n = n;
    row.seed = seed;
    return row;
}

} // namespace

ScenarioRow run_scenario(Network& osc_net, Network& alt_net, Network& lif_benchmark,
                         const Scenario& sc, const std::optional<AttackConfig>& attack,
                         const Dataset& eval_set, uint64_t seed) {
    (void)lif_benchmark;
    if (weight_checksum(osc_net) != weight_checksum(alt_net))
        throw InvalidInputError("scenario: oscillation and alternative nets must share weights");
    // generation model: LIF rules run on the oscillation net's weights
    Network* gen_net = &osc_net;
    std::optional<NeuronKind> gen_override;
    switch (sc.gen_kind) {
    case NeuronKind::LIF: gen_override = NeuronKind::LIF; break;
    case NeuronKind::Oscillation: gen_net = &osc_net; break;
    case NeuronKind::Alternative: gen_net = &alt_net; break;
    }
    Network& inf_net = sc.inf_kind == NeuronKind::Alternative ? alt_net : osc_net;
    const double acc = attacked_accuracy(*gen_net, gen_override, inf_net, attack, eval_set, seed);
    return make_row("scenario" + std::to_string(sc.id), attack, acc, eval_set.size(), seed);
}

ScenarioRow run_benchmark_row(Network& lif_benchmark, const std::optional<AttackConfig>& attack,
                              const Dataset& eval_set, uint64_t seed) {
    const double acc =
        attacked_accuracy(lif_benchmark, std::nullopt, lif_benchmark, attack, eval_set, seed);
    return make_row("benchmark", attack, acc, eval_set.size(), seed);
}

ScenarioReport scenario_matrix(Network& osc_net, Network& alt_net, Network& lif_benchmark,
                               const std::vector<AttackConfig>& attacks, const Dataset& eval_set,
                               uint64_t seed) {
    ScenarioReport report;
    std::vector<std::optional<AttackConfig>> columns;
    columns.emplace_back(std::nullopt);
    for (const auto& a : attacks) columns.emplace_back(a);
    uint64_t row_idx = 0;
    for (const auto& col : columns) {
        const uint64_t bench_seed = derive_seed({seed, row_idx++});
        report.rows.push_back(run_benchmark_row(lif_benchmark, col, eval_set, bench_seed));
        for (int id = 1; id <= 5; ++id) {
            const uint64_t row_seed = derive_seed({seed, row_idx++});
            report.rows.push_back(
                run_scenario(osc_net, alt_net, lif_benchmark, scenario_by_id(id), col, eval_set,
                             row_seed));
        }
    }
    return report;
}

std::string ScenarioReport::to_csv() const {
    std::string out;
    if (!config_snapshot.empty()) out += "# config " + config_snapshot + "\n";
    out += "row,attack,epsilon,iters,accuracy,n,seed\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%d,%.6f,%lld,%llu\n", r.row.c_str(),
                      r.attack.c_str(), r.epsilon, r.iters, r.accuracy,
                      static_cast<long long>(r.n), static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

std::string ScenarioReport::to_json() const {
    json j;
    j["config"] = config_snapshot.empty() ? json(nullptr) : json::parse(config_snapshot);
    j["rows"] = json::array();
    for (const auto& r : rows) {
        json rj;
        rj["row"] = r.row;
        rj["attack"] = r.attack;
        rj["epsilon"] = r.epsilon;
        rj["iters"] = r.iters;
        rj["accuracy"] = r.accuracy;
        rj["n"] = r.n;
        rj["seed"] = r.seed;
        j["rows"].push_back(rj);
    }
    return j.dump(2);
}

} // namespace oscnet
