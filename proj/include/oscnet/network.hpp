#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oscnet/data.hpp"
#include "oscnet/neurons.hpp"
#include "oscnet/tensor.hpp"

namespace oscnet {

enum class LayerKind { Dense, Conv2d, AvgPool, BatchNorm, Dropout, Spiking };

struct LayerSpec {
    LayerKind kind;
    int64_t out_features = 0;               // dense
    int64_t out_channels = 0, kernel = 0;   // conv
    int64_t stride = 1, pad = 0;            // conv
    int64_t window = 2;                     // avg_pool (stride = window)
    double p = 0.5;                         // dropout

    static LayerSpec dense(int64_t out) { return {LayerKind::Dense, out}; }
    static LayerSpec conv(int64_t out_ch, int64_t k, int64_t stride = 1, int64_t pad = 0) {
        LayerSpec l{LayerKind::Conv2d};
        l.out_channels = out_ch;
        l.kernel = k;
        l.stride = stride;
        l.pad = pad;
        return l;
    }
    static LayerSpec avg_pool(int64_t window) {
        LayerSpec l{LayerKind::AvgPool};
        l.window = window;
        return l;
    }
    static LayerSpec batch_norm() { return {LayerKind::BatchNorm}; }
    static LayerSpec dropout(double p) {
        LayerSpec l{LayerKind::Dropout};
        l.p = p;
        return l;
    }
    static LayerSpec spiking() { return {LayerKind::Spiking}; }

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    Shape input_shape; // without batch dim, e.g. {1,28,28}
    int64_t num_classes = 10;
    int64_t timesteps = 8;

    // Static chain check; returns the per-layer output shapes (without batch).
    // Throws SpecError naming the offending layer.
    std::vector<Shape> check() const;

    std::string to_json() const;
    static NetworkSpec from_json(const std::string& s);
    bool operator==(const NetworkSpec&) const = default;
};

// Desk-scale reference topologies.
NetworkSpec mlp_preset(Shape input_shape = {1, 28, 28}, int64_t num_classes = 10,
                       int64_t timesteps = 8);
NetworkSpec cnn_preset(Shape input_shape = {1, 28, 28}, int64_t num_classes = 10,
                       int64_t timesteps = 8);

struct TrainConfig {
    int64_t epochs = 20;
    double lr0 = 1e-4;
    int64_t t_max = 100;
    int64_t batch_size = 64;
    uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
};

struct Network {
    NetworkSpec spec;
    std::map<std::string, Tensor> weights; // deterministic iteration order
    std::vector<BnStats> bn_stats;         // one per BatchNorm layer, in order
    NeuronKind neuron_kind = NeuronKind::LIF;
    NeuronParams neuron_params;
};

Network build(const NetworkSpec& spec, uint64_t seed);

struct ForwardOptions {
    bool train_mode = false;
    bool record_spikes = false;
    bool relax_spikes = false; // identity in place of thresholds (for FD tests)
    SurrogateMode surrogate = SurrogateMode::Exact;
    std::optional<NeuronKind> kind_override;
    Rng* rng = nullptr;                              // whole-batch noise + dropout
    const std::vector<uint64_t>* row_seeds = nullptr; // per-sample noise streams
    const Tensor* c_param = nullptr;                  // learnable mapping leaves
    const Tensor* d_param = nullptr;
};

struct ForwardResult {
    Tensor rates;                             // [N, num_classes], mean spikes over T
    std::vector<std::vector<Tensor>> spikes;  // [T][#spiking layers] when recorded
};

// Unrolled pass: the image is injected as constant current at every timestep;
// neuron states start at v_reset.
ForwardResult forward_T(Network& net, const Tensor& x, const ForwardOptions& opts = {});

struct EpochStats {
    int64_t epoch;
    double lr;
    double train_loss;
    double eval_acc;
};

// Surrogate-gradient BPTT with Adam and cosine-annealed learning rate.
std::vector<EpochStats> train(Network& net, const Dataset& train_set, const Dataset& eval_set,
                              const TrainConfig& cfg);

double cosine_lr(double lr0, int64_t epoch, int64_t t_max);

// Top-1 accuracy; one seeded forward per sample for stochastic neuron kinds.
double evaluate(Network& net, const Dataset& ds, uint64_t seed);

// Full-BPTT input gradient for attack generation. row_seeds supplies the
// per-sample noise streams; kind_override selects the backward neuron model.
Tensor input_gradient(Network& net, const Tensor& x, const std::vector<int>& y,
                      std::optional<NeuronKind> kind_override,
                      const std::vector<uint64_t>& row_seeds);

void save(const Network& net, const std::string& path);
Network load(const std::string& path);

// Pre-activation current of the first parameterized layer (kind-independent).
Tensor layer1_current(const Network& net, const Tensor& x);

uint64_t weight_checksum(const Network& net);

} // namespace oscnet
