#include "oscnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace oscnet {

using nlohmann::json;

namespace {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::AvgPool: return "avg_pool";
    case LayerKind::BatchNorm: return "batch_norm";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Spiking: return "spiking";
    }
    return "?";
}

LayerKind layer_kind_from(const std::string& s) {
    if (s == "dense") return LayerKind::Dense;
    if (s == "conv2d") return LayerKind::Conv2d;
    if (s == "avg_pool") return LayerKind::AvgPool;
    if (s == "batch_norm") return LayerKind::BatchNorm;
    if (s == "dropout") return LayerKind::Dropout;
    if (s == "spiking") return LayerKind::Spiking;
    throw FormatError("unknown layer kind: " + s);
}

std::string weight_name(size_t layer_idx, const char* part) {
    return "layer" + std::to_string(layer_idx) + "." + part;
}

} // namespace

std::vector<Shape> NetworkSpec::check() const {
    if (input_shape.empty()) throw SpecError("spec: empty input shape");
    if (timesteps < 1) throw SpecError("spec: timesteps must be >= 1");
    if (layers.empty()) throw SpecError("spec: no layers");
    std::vector<Shape> out;
    Shape cur = input_shape;
    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" +
                                  layer_kind_name(l.kind) + ")";
        switch (l.kind) {
        case LayerKind::Dense: {
            if (l.out_features < 1) throw SpecError(where + ": out_features must be >= 1");
            cur = {l.out_features};
            break;
        }
        case LayerKind::Conv2d: {
            if (cur.size() != 3)
                throw SpecError(where + ": needs CxHxW input, got " + shape_str(cur));
            if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1 || l.pad < 0)
                throw SpecError(where + ": bad conv geometry");
            const int64_t H = cur[1], W = cur[2];
            if (l.kernel > H + 2 * l.pad || l.kernel > W + 2 * l.pad)
                throw SpecError(where + ": kernel " + std::to_string(l.kernel) +
                                " exceeds padded input " + shape_str(cur));
            cur = {l.out_channels, (H + 2 * l.pad - l.kernel) / l.stride + 1,
                   (W + 2 * l.pad - l.kernel) / l.stride + 1};
            break;
        }
        case LayerKind::AvgPool: {
            if (cur.size() != 3)
                throw SpecError(where + ": needs CxHxW input, got " + shape_str(cur));
            if (l.window < 1 || l.window > cur[1] || l.window > cur[2])
                throw SpecError(where + ": window " + std::to_string(l.window) +
                                " does not fit " + shape_str(cur));
            cur = {cur[0], (cur[1] - l.window) / l.window + 1,
                   (cur[2] - l.window) / l.window + 1};
            break;
        }
        case LayerKind::BatchNorm:
            break;
        case LayerKind::Dropout:
            if (l.p < 0.0 || l.p >= 1.0) throw SpecError(where + ": p must be in [0,1)");
            break;
        case LayerKind::Spiking:
            break;
        }
        out.push_back(cur);
    }
    if (layers.back().kind != LayerKind::Spiking)
        throw SpecError("spec: final layer must be spiking");
    if (numel(out.back()) != num_classes)
        throw SpecError("spec: final layer produces " + std::to_string(numel(out.back())) +
                        " outputs, expected " + std::to_string(num_classes));
    return out;
}

std::string NetworkSpec::to_json() const {
    json j;
    j["input_shape"] = input_shape;
    j["num_classes"] = num_classes;
    j["timesteps"] = timesteps;
    j["layers"] = json::array();
    for (const auto& l : layers) {
        json lj;
        lj["kind"] = layer_kind_name(l.kind);
        switch (l.kind) {
        case LayerKind::Dense: lj["out_features"] = l.out_features; break;
        case LayerKind::Conv2d:
            lj["out_channels"] = l.out_channels;
            lj["kernel"] = l.kernel;
            lj["stride"] = l.stride;
            lj["pad"] = l.pad;
            break;
        case LayerKind::AvgPool: lj["window"] = l.window; break;
        case LayerKind::Dropout: lj["p"] = l.p; break;
        default: break;
        }
        j["layers"].push_back(lj);
    }
    return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& s) {
    json j;
    try {
        j = json::parse(s);
    } catch (const json::exception& e) {
        throw FormatError(std::string("spec json: ") + e.what());
    }
    NetworkSpec spec;
    try {
        spec.input_shape = j.at("input_shape").get<Shape>();
        spec.num_classes = j.at("num_classes").get<int64_t>();
        spec.timesteps = j.at("timesteps").get<int64_t>();
        for (const auto& lj : j.at("layers")) {
            LayerSpec l{layer_kind_from(lj.at("kind").get<std::string>())};
            switch (l.kind) {
            case LayerKind::Dense: l.out_features = lj.at("out_features").get<int64_t>(); break;
            case LayerKind::Conv2d:
                l.out_channels = lj.at("out_channels").get<int64_t>();
                l.kernel = lj.at("kernel").get<int64_t>();
                l.stride = lj.at("stride").get<int64_t>();
                l.pad = lj.at("pad").get<int64_t>();
                break;
            case LayerKind::AvgPool: l.window = lj.at("window").get<int64_t>(); break;
            case LayerKind::Dropout: l.p = lj.at("p").get<double>(); break;
            default: break;
            }
            spec.layers.push_back(l);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("spec json: ") + e.what());
    }
    return spec;
}

NetworkSpec mlp_preset(Shape input_shape, int64_t num_classes, int64_t timesteps) {
    NetworkSpec spec;
    spec.input_shape = std::move(input_shape);
    spec.num_classes = num_classes;
    spec.timesteps = timesteps;
    spec.layers = {LayerSpec::dense(256),     LayerSpec::batch_norm(), LayerSpec::spiking(),
                   LayerSpec::dropout(0.5),   LayerSpec::dense(num_classes),
                   LayerSpec::spiking()};
    return spec;
}

NetworkSpec cnn_preset(Shape input_shape, int64_t num_classes, int64_t timesteps) {
    NetworkSpec spec;
    spec.input_shape = std::move(input_shape);
    spec.num_classes = num_classes;
    spec.timesteps = timesteps;
    spec.layers = {LayerSpec::conv(16, 5),    LayerSpec::batch_norm(), LayerSpec::spiking(),
                   LayerSpec::avg_pool(2),    LayerSpec::conv(32, 5),  LayerSpec::batch_norm(),
                   LayerSpec::spiking(),      LayerSpec::avg_pool(2),  LayerSpec::dropout(0.5),
                   LayerSpec::dense(num_classes), LayerSpec::spiking()};
    return spec;
}

Network build(const NetworkSpec& spec, uint64_t seed) {
    const std::vector<Shape> shapes = spec.check();
    Network net;
    net.spec = spec;
    Shape cur = spec.input_shape;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        Rng rng(derive_seed(seed, Stream::WeightInit, i));
        switch (l.kind) {
        case LayerKind::Dense: {
            const int64_t fan_in = numel(cur);
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            Tensor w = Tensor::zeros({fan_in, l.out_features});
            for (auto& v : w.data()) v = rng.uniform(-bound, bound);
            net.weights[weight_name(i, "weight")] = w;
            break;
        }
        case LayerKind::Conv2d: {
            const int64_t fan_in = cur[0] * l.kernel * l.kernel;
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            Tensor w = Tensor::zeros({l.out_channels, cur[0], l.kernel, l.kernel});
            for (auto& v : w.data()) v = rng.uniform(-bound, bound);
            net.weights[weight_name(i, "weight")] = w;
            break;
        }
        case LayerKind::BatchNorm: {
            const int64_t C = cur.size() == 3 ? cur[0] : numel(cur);
            net.weights[weight_name(i, "gamma")] = Tensor::full({C}, 1.0);
            net.weights[weight_name(i, "beta")] = Tensor::zeros({C});
            BnStats st;
            st.mean.assign(C, 0.0);
            st.var.assign(C, 1.0);
            net.bn_stats.push_back(std::move(st));
            break;
        }
        default:
            break;
        }
        cur = shapes[i];
    }
    return net;
}

// ---- forward ----------------------------------------------------------------

namespace {

struct NoiseSource {
    Rng* global = nullptr;
    std::vector<Rng>* per_row = nullptr;

    Tensor draw(const Shape& shape, const NeuronParams& p) {
        Tensor noise = Tensor::zeros(shape);
        auto& nd = noise.data();
        if (per_row) {
            const int64_t rows = shape[0];
            const int64_t per = numel(shape) / rows;
            for (int64_t r = 0; r < rows; ++r) {
                Rng& rng = (*per_row)[static_cast<size_t>(r)];
                for (int64_t i = 0; i < per; ++i)
                    nd[static_cast<size_t>(r * per + i)] = rng.uniform(p.noise_lo, p.noise_hi);
            }
        } else {
            for (auto& v : nd) v = global->uniform(p.noise_lo, p.noise_hi);
        }
        return noise;
    }
};

Tensor flatten_batch(const Tensor& t) {
    const int64_t n = t.shape()[0];
    return t.shape().size() == 2 ? t : reshape(t, {n, numel(t.shape()) / n});
}

} // namespace

ForwardResult forward_T(Network& net, const Tensor& x, const ForwardOptions& opts) {
    const std::vector<Shape> shapes = net.spec.check();
    Shape expect = net.spec.input_shape;
    expect.insert(expect.begin(), x.shape().empty() ? 0 : x.shape()[0]);
    if (x.shape() != expect)
        throw ShapeError("forward: input " + shape_str(x.shape()) + ", spec wants " +
                         shape_str(expect));
    const int64_t N = x.shape()[0];
    if (N < 1) throw InvalidInputError("forward: empty batch");
    for (double v : x.data())
        if (v < -1e-9 || v > 1.0 + 1e-9)
            throw InvalidInputError("forward: input value " + std::to_string(v) +
                                    " outside [0,1]");

    const NeuronKind kind = opts.kind_override.value_or(net.neuron_kind);
    const NeuronParams& params = net.neuron_params;
    params.validate();

    std::vector<Rng> row_rngs;
    NoiseSource noise;
    if (opts.row_seeds) {
        if (static_cast<int64_t>(opts.row_seeds->size()) != N)
            throw InvalidInputError("forward: row_seeds size mismatch");
        row_rngs.reserve(opts.row_seeds->size());
        for (uint64_t s : *opts.row_seeds) row_rngs.emplace_back(s);
        noise.per_row = &row_rngs;
    } else {
        noise.global = opts.rng;
    }
    if (kind == NeuronKind::Oscillation && !opts.relax_spikes && !noise.per_row && !noise.global)
        throw InvalidInputError("forward: oscillation kind needs an rng or row seeds");

    Tensor c = opts.c_param ? *opts.c_param : Tensor::scalar(params.c);
    Tensor d = opts.d_param ? *opts.d_param : Tensor::scalar(params.d);

    // dropout masks are drawn once and frozen across the T timesteps
    std::vector<Tensor> dropout_masks;
    if (opts.train_mode) {
        for (size_t i = 0; i < net.spec.layers.size(); ++i) {
            if (net.spec.layers[i].kind != LayerKind::Dropout) continue;
            if (!opts.rng)
                throw InvalidInputError("forward: train-mode dropout needs an rng");
            Shape ms = shapes[i];
            ms.insert(ms.begin(), N);
            dropout_masks.push_back(dropout_mask(ms, net.spec.layers[i].p, *opts.rng));
        }
    }

    std::vector<NeuronState> states;
    for (size_t i = 0; i < net.spec.layers.size(); ++i) {
        if (net.spec.layers[i].kind != LayerKind::Spiking) continue;
        Shape ss = shapes[i];
        ss.insert(ss.begin(), N);
        states.push_back({Tensor::full(ss, params.v_reset)});
    }

    ForwardResult result;
    if (opts.record_spikes) result.spikes.resize(static_cast<size_t>(net.spec.timesteps));
    Tensor rate_sum;
    for (int64_t t = 0; t < net.spec.timesteps; ++t) {
        Tensor cur = x;
        size_t bn_i = 0, sp_i = 0, dr_i = 0;
        for (size_t li = 0; li < net.spec.layers.size(); ++li) {
            const LayerSpec& l = net.spec.layers[li];
            switch (l.kind) {
            case LayerKind::Dense:
                cur = matmul(flatten_batch(cur), net.weights.at(weight_name(li, "weight")));
                break;
            case LayerKind::Conv2d:
                cur = conv2d(cur, net.weights.at(weight_name(li, "weight")), l.stride, l.pad);
                break;
            case LayerKind::AvgPool:
                cur = avg_pool2d(cur, l.window, l.window);
                break;
            case LayerKind::BatchNorm:
                cur = batch_norm(cur, net.weights.at(weight_name(li, "gamma")),
                                 net.weights.at(weight_name(li, "beta")), net.bn_stats[bn_i],
                                 opts.train_mode);
                ++bn_i;
                break;
            case LayerKind::Dropout:
                if (opts.train_mode) {
                    cur = mul(cur, dropout_masks[dr_i]);
                    ++dr_i;
                }
                break;
            case LayerKind::Spiking: {
                NeuronState& st = states[sp_i];
                if (opts.relax_spikes) {
                    // smooth stand-in: integrate, pass through, no threshold/reset
                    Tensor h = add(scale(st.v, params.lambda), cur);
                    st.v = h;
                    cur = h;
                } else {
                    StepResult r = [&] {
                        switch (kind) {
                        case NeuronKind::LIF: return lif_step(st, cur, params);
                        case NeuronKind::Oscillation: {
                            Tensor gamma = noise.draw(cur.shape(), params);
                            return osc_step_with_noise(st, cur, params, gamma, opts.surrogate);
                        }
                        case NeuronKind::Alternative:
                            return alt_osc_step_cd(st, cur, params, c, d, opts.surrogate);
                        }
                        throw InvalidParamError("forward: unknown neuron kind");
                    }();
                    st = r.state;
                    cur = r.spikes;
                }
                if (opts.record_spikes) result.spikes[static_cast<size_t>(t)].push_back(cur);
                ++sp_i;
                break;
            }
            }
        }
        rate_sum = (t == 0) ? cur : add(rate_sum, cur);
    }
    result.rates = scale(flatten_batch(rate_sum), 1.0 / static_cast<double>(net.spec.timesteps));
    return result;
}

// ---- training -----------------------------------------------------------------

double cosine_lr(double lr0, int64_t epoch, int64_t t_max) {
    constexpr double kPi = 3.14159265358979323846;
    return lr0 * (1.0 + std::cos(kPi * static_cast<double>(epoch) / static_cast<double>(t_max))) /
           2.0;
}

std::vector<EpochStats> train(Network& net, const Dataset& train_set, const Dataset& eval_set,
                              const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw InvalidParamError("train: epochs must be >= 1");
    if (!(cfg.lr0 > 0.0)) throw InvalidParamError("train: lr0 must be > 0");
    if (cfg.batch_size < 1) throw InvalidParamError("train: batch_size must be >= 1");
    if (train_set.size() == 0) throw InvalidInputError("train: empty dataset");

    struct AdamSlot {
        std::vector<double> m, v;
    };
    std::map<std::string, AdamSlot> adam;
    for (auto& [name, w] : net.weights) {
        w.set_requires_grad(true);
        adam[name].m.assign(w.data().size(), 0.0);
        adam[name].v.assign(w.data().size(), 0.0);
    }

    std::vector<EpochStats> history;
    int64_t adam_t = 0;
    const int64_t n = train_set.size();
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(cfg.lr0, epoch, cfg.t_max);
        std::vector<int64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, Stream::TrainShuffle, static_cast<uint64_t>(epoch)));
        for (int64_t i = n - 1; i > 0; --i) {
            const int64_t j = static_cast<int64_t>(shuffle_rng.below(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }

        double loss_sum = 0.0;
        int64_t step = 0;
        for (int64_t start = 0; start < n; start += cfg.batch_size, ++step) {
            const int64_t stop = std::min(n, start + cfg.batch_size);
            std::vector<int64_t> bidx(order.begin() + start, order.begin() + stop);
            auto [bx, by] = gather(train_set, bidx);

            for (auto& [name, w] : net.weights) w.zero_grad();
            Rng pass_rng(derive_seed(cfg.seed, Stream::TrainNoise, static_cast<uint64_t>(epoch),
                                     static_cast<uint64_t>(step)));
            Tape tape;
            double batch_loss;
            {
                TapeScope scope(tape);
                ForwardOptions o;
                o.train_mode = true;
                o.rng = &pass_rng;
                ForwardResult res = forward_T(net, bx, o);
                Tensor loss = cross_entropy(res.rates, by);
                batch_loss = loss.item();
                if (!std::isfinite(batch_loss))
                    throw TrainingDivergedError("train: loss diverged at epoch " +
                                                std::to_string(epoch) + " step " +
                                                std::to_string(step));
                tape.backward(loss);
            }
            loss_sum += batch_loss * static_cast<double>(stop - start);

            ++adam_t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
            for (auto& [name, w] : net.weights) {
                auto& slot = adam[name];
                auto& g = w.grad();
                auto& wd = w.data();
                for (size_t i = 0; i < wd.size(); ++i) {
                    slot.m[i] = cfg.beta1 * slot.m[i] + (1.0 - cfg.beta1) * g[i];
                    slot.v[i] = cfg.beta2 * slot.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                    const double mhat = slot.m[i] / bc1;
                    const double vhat = slot.v[i] / bc2;
                    wd[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
                }
            }
        }

        const double eval_acc =
            eval_set.size() > 0
                ? evaluate(net, eval_set, derive_seed(cfg.seed, Stream::EvalNoise,
                                                      static_cast<uint64_t>(epoch)))
                : 0.0;
        history.push_back({epoch, lr, loss_sum / static_cast<double>(n), eval_acc});
    }
    for (auto& [name, w] : net.weights) {
        w.set_requires_grad(false);
        w.zero_grad();
    }
    return history;
}

double evaluate(Network& net, const Dataset& ds, uint64_t seed) {
    if (ds.size() == 0) throw InvalidInputError("evaluate: empty dataset");
    const int64_t n = ds.size();
    const int64_t K = net.spec.num_classes;
    int64_t correct = 0;
    constexpr int64_t kBatch = 250;
    for (int64_t start = 0; start < n; start += kBatch) {
        const int64_t stop = std::min(n, start + kBatch);
        std::vector<int64_t> idx(static_cast<size_t>(stop - start));
        std::iota(idx.begin(), idx.end(), start);
        auto [bx, by] = gather(ds, idx);
        std::vector<uint64_t> seeds(idx.size());
        for (size_t i = 0; i < idx.size(); ++i)
            seeds[i] = derive_seed(seed, Stream::EvalNoise, static_cast<uint64_t>(idx[i]));
        ForwardOptions o;
        o.row_seeds = &seeds;
        ForwardResult res = forward_T(net, bx, o);
        for (int64_t r = 0; r < stop - start; ++r) {
            const double* row = res.rates.data().data() + r * K;
            int64_t best = 0;
            for (int64_t k = 1; k < K; ++k)
                if (row[k] > row[best]) best = k;
            if (best == by[static_cast<size_t>(r)]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

Tensor input_gradient(Network& net, const Tensor& x, const std::vector<int>& y,
                      std::optional<NeuronKind> kind_override,
                      const std::vector<uint64_t>& row_seeds) {
    Tensor leaf = x.clone();
    leaf.set_requires_grad(true);
    Tape tape;
    {
        TapeScope scope(tape);
        ForwardOptions o;
        o.kind_override = kind_override;
        o.row_seeds = &row_seeds;
        ForwardResult res = forward_T(net, leaf, o);
        Tensor loss = cross_entropy(res.rates, y);
        tape.backward(loss);
    }
    return Tensor(x.shape(), leaf.grad());
}

// ---- checkpoint io ----------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'O', 'S', 'C', 'N', 'E', 'T', 'v', '1'};

json neuron_params_to_json(const NeuronParams& p) {
    json j;
    j["v_th"] = p.v_th;
    j["v_reset"] = p.v_reset;
    j["lambda"] = p.lambda;
    j["alpha"] = p.alpha;
    j["leaky_slope"] = p.leaky_slope;
    j["noise_lo"] = p.noise_lo;
    j["noise_hi"] = p.noise_hi;
    j["mapping"] = to_string(p.mapping_kind);
    j["c"] = p.c;
    j["d"] = p.d;
    return j;
}

NeuronParams neuron_params_from_json(const json& j) {
    NeuronParams p;
    p.v_th = j.at("v_th").get<double>();
    p.v_reset = j.at("v_reset").get<double>();
    p.lambda = j.at("lambda").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.leaky_slope = j.at("leaky_slope").get<double>();
    p.noise_lo = j.at("noise_lo").get<double>();
    p.noise_hi = j.at("noise_hi").get<double>();
    p.mapping_kind = mapping_kind_from_string(j.at("mapping").get<std::string>());
    p.c = j.at("c").get<double>();
    p.d = j.at("d").get<double>();
    return p;
}

} // namespace

void save(const Network& net, const std::string& path) {
    json header;
    header["format"] = "oscnet-checkpoint";
    header["version"] = 1;
    header["spec"] = json::parse(net.spec.to_json());
    header["neuron_kind"] = to_string(net.neuron_kind);
    header["neuron_params"] = neuron_params_to_json(net.neuron_params);
    header["weights"] = json::array();
    for (const auto& [name, w] : net.weights) {
        json wj;
        wj["name"] = name;
        wj["shape"] = w.shape();
        header["weights"].push_back(wj);
    }
    header["bn_sizes"] = json::array();
    for (const auto& st : net.bn_stats) header["bn_sizes"].push_back(st.mean.size());

    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f.write(kMagic, 8);
    const uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, w] : net.weights)
        f.write(reinterpret_cast<const char*>(w.data().data()),
                static_cast<std::streamsize>(w.data().size() * sizeof(double)));
    for (const auto& st : net.bn_stats) {
        f.write(reinterpret_cast<const char*>(st.mean.data()),
                static_cast<std::streamsize>(st.mean.size() * sizeof(double)));
        f.write(reinterpret_cast<const char*>(st.var.data()),
                static_cast<std::streamsize>(st.var.size() * sizeof(double)));
    }
    if (!f) throw FormatError(path + ": write failed");
}

Network load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError(path + ": cannot open");
    char magic[8];
    f.read(magic, 8);
    if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError(path + ": not an oscnet checkpoint (bad magic)");
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (f.gcount() != 8) throw FormatError(path + ": truncated header length");
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<uint64_t>(f.gcount()) != hlen)
        throw FormatError(path + ": truncated header");
    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw FormatError(path + ": corrupt header: " + e.what());
    }
    Network net;
    try {
        if (header.at("version").get<int>() != 1)
            throw FormatError(path + ": unsupported checkpoint version");
        net.spec = NetworkSpec::from_json(header.at("spec").dump());
        net.neuron_kind = neuron_kind_from_string(header.at("neuron_kind").get<std::string>());
        net.neuron_params = neuron_params_from_json(header.at("neuron_params"));
        for (const auto& wj : header.at("weights")) {
            const std::string name = wj.at("name").get<std::string>();
            const Shape shape = wj.at("shape").get<Shape>();
            Tensor w = Tensor::zeros(shape);
            f.read(reinterpret_cast<char*>(w.data().data()),
                   static_cast<std::streamsize>(w.data().size() * sizeof(double)));
            if (static_cast<size_t>(f.gcount()) != w.data().size() * sizeof(double))
                throw FormatError(path + ": truncated weight blob " + name);
            net.weights[name] = w;
        }
        for (const auto& sz : header.at("bn_sizes")) {
            const size_t C = sz.get<size_t>();
            BnStats st;
            st.mean.resize(C);
            st.var.resize(C);
            f.read(reinterpret_cast<char*>(st.mean.data()),
                   static_cast<std::streamsize>(C * sizeof(double)));
            f.read(reinterpret_cast<char*>(st.var.data()),
                   static_cast<std::streamsize>(C * sizeof(double)));
            if (!f) throw FormatError(path + ": truncated bn stats");
            net.bn_stats.push_back(std::move(st));
        }
    } catch (const json::exception& e) {
        throw FormatError(path + ": corrupt header: " + e.what());
    }
    net.spec.check();
    return net;
}

Tensor layer1_current(const Network& net, const Tensor& x) {
    for (size_t i = 0; i < net.spec.layers.size(); ++i) {
        const LayerSpec& l = net.spec.layers[i];
        if (l.kind == LayerKind::Dense)
            return matmul(flatten_batch(x), net.weights.at(weight_name(i, "weight")));
        if (l.kind == LayerKind::Conv2d)
            return conv2d(x, net.weights.at(weight_name(i, "weight")), l.stride, l.pad);
    }
    throw InvalidInputError("layer1_current: network has no parameterized layer");
}

uint64_t weight_checksum(const Network& net) {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix_bytes = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [name, w] : net.weights) {
        mix_bytes(name.data(), name.size());
        mix_bytes(w.data().data(), w.data().size() * sizeof(double));
    }
    for (const auto& st : net.bn_stats) {
        mix_bytes(st.mean.data(), st.mean.size() * sizeof(double));
        mix_bytes(st.var.data(), st.var.size() * sizeof(double));
    }
    return h;
}

} // namespace oscnet
