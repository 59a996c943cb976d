#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oscnet/attacks.hpp"
#include "oscnet/network.hpp"

namespace oscnet {

struct FitConfig {
    int64_t epochs = 3; // teacher-student fit wants 1-3
    double lr = 1e-2;
    int64_t batch_size = 64;
    uint64_t seed = 0;
    MappingKind mapping = MappingKind::F1;
};

struct FitResult {
    double c = 0.0;
    double d = 0.0;
    double initial_loss = 0.0; // spike-train loss at (c,d) = (0,0) on the fit set
    double final_loss = 0.0;   // same loss after fitting, same teacher draws
    std::vector<double> epoch_losses;
};

// Sum over timesteps and spiking layers of half squared spike differences,
// averaged over the batch.
double spike_record_loss(const std::vector<std::vector<Tensor>>& a,
                         const std::vector<std::vector<Tensor>>& b, int64_t batch);

// Spike-train distance between a seeded teacher pass and the student's
// deterministic pass over a whole dataset, at explicit (c,d).
double spike_loss_on_set(Network& teacher, Network& student, double c, double d,
                         const Dataset& ds, uint64_t seed);

// Freezes every weight, learns only the mapping parameters (c,d) so the
// student's spike trains match the teacher's. The student shares the
// teacher's weights and differs only in neuron kind and (c,d).
FitResult fit_alternative(Network& teacher, const FitConfig& cfg, const Dataset& fit_set,
                          Network& student_out);

// Fraction of (layer, neuron, timestep) positions with equal spike bits.
double spike_agreement(Network& a, Network& b, const Dataset& ds, uint64_t seed);

struct Scenario {
    int id;
    NeuronKind gen_kind;
    NeuronKind inf_kind;
};

// 1=(osc,osc) 2=(alt,alt) 3=(lif,osc) 4=(alt,osc) 5=(osc,alt)
Scenario scenario_by_id(int id);

struct ScenarioRow {
    std::string row;    // "benchmark" or "scenario1".."scenario5"
    std::string attack; // "clean", "FGSM", "PGD-5", ...
    double epsilon = 0.0;
    int iters = 0;
    double accuracy = 0.0;
    int64_t n = 0;
    uint64_t seed = 0;
};

struct ScenarioReport {
    std::vector<ScenarioRow> rows;
    std::string config_snapshot; // JSON text, embedded in artifacts

    std::string to_csv() const;
    std::string to_json() const;
};

// Adversarial samples come from the gen-kind backward rules on the shared
// weights; accuracy is measured with the inf-kind forward. The LIF override
// path drops the noise term entirely (plain LIF steps on the same weights).
ScenarioRow run_scenario(Network& osc_net, Network& alt_net, Network& lif_benchmark,
                         const Scenario& sc, const std::optional<AttackConfig>& attack,
                         const Dataset& eval_set, uint64_t seed);

// The benchmark generates and infers with the separately trained LIF net.
ScenarioRow run_benchmark_row(Network& lif_benchmark, const std::optional<AttackConfig>& attack,
                              const Dataset& eval_set, uint64_t seed);

ScenarioReport scenario_matrix(Network& osc_net, Network& alt_net, Network& lif_benchmark,
                               const std::vector<AttackConfig>& attacks, const Dataset& eval_set,
                               uint64_t seed);

// Derived generation/inference noise streams for one sample; exposed so the
// no-reuse property is checkable.
uint64_t generation_noise_seed(uint64_t seed, int64_t sample_idx, int iter);
uint64_t inference_noise_seed(uint64_t seed, int64_t sample_idx);

// Bounds the scenario evaluator's sample-shard parallelism. Results do not
// depend on the worker count; per-sample streams are index-derived.
void set_scenario_workers(int workers);

} // namespace oscnet
