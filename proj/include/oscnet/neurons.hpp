#pragma once

#include <string>
#include <utility>

#include "oscnet/tensor.hpp"

namespace oscnet {

enum class NeuronKind { LIF, Oscillation, Alternative };
enum class MappingKind { F1, F2, F3, F4 };

// The closed-form gradient expressions evaluate the surrogate at the raw
// pre-transfer potential even on the negative transfer branch; the exact
// chain rule evaluates it at the transfer output. Exact is the default;
// PaperLiteral exists for oracle comparisons.
enum class SurrogateMode { Exact, PaperLiteral };

std::string to_string(NeuronKind kind);
NeuronKind neuron_kind_from_string(const std::string& s);
std::string to_string(MappingKind kind);
MappingKind mapping_kind_from_string(const std::string& s);

struct NeuronParams {
    double v_th = 1.0;
    double v_reset = 0.0;
    double lambda = 0.5;      // membrane decay
    double alpha = 3.0;       // surrogate sharpness
    double leaky_slope = -0.03;
    double noise_lo = -0.2;   // oscillation noise range [a,b]
    double noise_hi = 0.8;
    MappingKind mapping_kind = MappingKind::F1;
    double c = 0.0; // learnable mapping parameters, shared network-wide
    double d = 0.0;

    void validate() const;
};

// Per-layer membrane state: post-spike potentials V(t-1), one per neuron.
struct NeuronState {
    Tensor v;
};

struct StepResult {
    Tensor spikes;
    NeuronState state;
};

// ---- scalar pieces ---------------------------------------------------------

// Surrogate spike derivative: alpha / (2 (1 + ((pi/2) alpha (x - v_th))^2)).
double atan_surrogate(double x, const NeuronParams& p);

// Piecewise-linear transfer: x for x >= 0, leaky_slope * x for x < 0.
// Derivative at exactly 0 takes the negative-branch slope.
std::pair<double, double> leaky_f(double x, const NeuronParams& p);

double mapping_value(MappingKind kind, double h, double c, double d);
double mapping_dh(MappingKind kind, double h, double c, double d);
double mapping_dc(MappingKind kind, double h, double c, double d);

// Closed-form dS/dH for the oscillation neuron; branches on h + gamma.
double closed_form_grad_osc(double h, double gamma, const NeuronParams& p);

// Closed-form dS/dH for the alternative neuron with the sine mapping;
// branches on h + sin(h + c) + d.
double closed_form_grad_alt(double h, double c, double d, const NeuronParams& p);

// ---- tensor ops --------------------------------------------------------------

// Hard threshold on `pre` with surrogate backward evaluated at `surr_arg`
// (pass `pre` itself for the exact chain rule). Gradient flows to `pre` only.
Tensor spike_threshold(const Tensor& pre, const Tensor& surr_arg, const NeuronParams& p);

Tensor leaky_transfer(const Tensor& x, const NeuronParams& p);

// Elementwise mapping M(h; c, d); c and d are scalar tensors whose gradients
// accumulate over all elements.
Tensor apply_mapping(MappingKind kind, const Tensor& h, const Tensor& c, const Tensor& d);

// V = P (1 - S) + v_reset S with the reset mask detached from the grad path.
Tensor reset_membrane(const Tensor& p_or_h, const Tensor& spikes, const NeuronParams& params);

// ---- neuron steps -------------------------------------------------------------

StepResult lif_step(const NeuronState& state, const Tensor& current, const NeuronParams& p);

// noise is drawn U[noise_lo, noise_hi] per neuron per step.
StepResult osc_step(const NeuronState& state, const Tensor& current, const NeuronParams& p,
                    Rng& rng, SurrogateMode mode = SurrogateMode::Exact);
StepResult osc_step_with_noise(const NeuronState& state, const Tensor& current,
                               const NeuronParams& p, const Tensor& noise,
                               SurrogateMode mode = SurrogateMode::Exact);

// Deterministic; uses params.c/params.d unless scalar tensors are supplied
// (the fit path passes learnable leaves).
StepResult alt_osc_step(const NeuronState& state, const Tensor& current, const NeuronParams& p,
                        SurrogateMode mode = SurrogateMode::Exact);
StepResult alt_osc_step_cd(const NeuronState& state, const Tensor& current,
                           const NeuronParams& p, const Tensor& c, const Tensor& d,
                           SurrogateMode mode = SurrogateMode::Exact);

} // namespace oscnet
