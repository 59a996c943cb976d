#include "oscnet/neurons.hpp"

#include <cmath>

namespace oscnet {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::string to_string(NeuronKind kind) {
    switch (kind) {
    case NeuronKind::LIF: return "lif";
    case NeuronKind::Oscillation: return "oscillation";
    case NeuronKind::Alternative: return "alternative";
    }
    return "?";
}

NeuronKind neuron_kind_from_string(const std::string& s) {
    if (s == "lif") return NeuronKind::LIF;
    if (s == "oscillation") return NeuronKind::Oscillation;
    if (s == "alternative") return NeuronKind::Alternative;
    throw InvalidParamError("unknown neuron kind: " + s);
}

std::string to_string(MappingKind kind) {
    switch (kind) {
    case MappingKind::F1: return "F1";
    case MappingKind::F2: return "F2";
    case MappingKind::F3: return "F3";
    case MappingKind::F4: return "F4";
    }
    return "?";
}

MappingKind mapping_kind_from_string(const std::string& s) {
    if (s == "F1") return MappingKind::F1;
    if (s == "F2") return MappingKind::F2;
    if (s == "F3") return MappingKind::F3;
    if (s == "F4") return MappingKind::F4;
    throw InvalidParamError("unknown mapping kind: " + s);
}

void NeuronParams::validate() const {
    if (!(v_reset < v_th))
        throw InvalidParamError("neuron params: v_reset must be < v_th");
    if (!(noise_lo <= noise_hi))
        throw InvalidParamError("neuron params: noise_lo must be <= noise_hi");
    if (!(alpha > 0.0))
        throw InvalidParamError("neuron params: alpha must be > 0");
}

double atan_surrogate(double x, const NeuronParams& p) {
    const double t = (kPi / 2.0) * p.alpha * (x - p.v_th);
    return p.alpha / (2.0 * (1.0 + t * t));
}

std::pair<double, double> leaky_f(double x, const NeuronParams& p) {
    if (x > 0.0) return {x, 1.0};
    return {p.leaky_slope * x, p.leaky_slope};
}

double mapping_value(MappingKind kind, double h, double c, double d) {
    switch (kind) {
    case MappingKind::F1: return std::sin(h + c) + d;
    case MappingKind::F2: return h * std::sin(h + c) + d;
    case MappingKind::F3: return std::exp(h + c) + d;
    case MappingKind::F4: return 1.0 / (1.0 + std::exp(-c * h)) + d;
    }
    throw InvalidParamError("unknown mapping kind");
}

double mapping_dh(MappingKind kind, double h, double c, double d) {
    (void)d;
    switch (kind) {
    case MappingKind::F1: return std::cos(h + c);
    case MappingKind::F2: return std::sin(h + c) + h * std::cos(h + c);
    case MappingKind::F3: return std::exp(h + c);
    case MappingKind::F4: {
        const double s = 1.0 / (1.0 + std::exp(-c * h));
        return c * s * (1.0 - s);
    }
    }
    throw InvalidParamError("unknown mapping kind");
}

double mapping_dc(MappingKind kind, double h, double c, double d) {
    (void)d;
    switch (kind) {
    case MappingKind::F1: return std::cos(h + c);
    case MappingKind::F2: return h * std::cos(h + c);
    case MappingKind::F3: return std::exp(h + c);
    case MappingKind::F4: {
        const double s = 1.0 / (1.0 + std::exp(-c * h));
        return h * s * (1.0 - s);
    }
    }
    throw InvalidParamError("unknown mapping kind");
}

double closed_form_grad_osc(double h, double gamma, const NeuronParams& p) {
    const double pre = h + gamma;
    const double surr = atan_surrogate(pre, p);
    return (pre >= 0.0) ? surr : p.leaky_slope * surr;
}

double closed_form_grad_alt(double h, double c, double d, const NeuronParams& p) {
    const double pre = h + std::sin(h + c) + d;
    const double t = (kPi / 2.0) * p.alpha * (pre - p.v_th);
    const double base = p.alpha * (1.0 + std::cos(h + c)) / (2.0 * (1.0 + t * t));
    return (pre >= 0.0) ? base : p.leaky_slope * base;
}

// ---- tensor ops --------------------------------------------------------------

Tensor spike_threshold(const Tensor& pre, const Tensor& surr_arg, const NeuronParams& p) {
    if (pre.shape() != surr_arg.shape())
        throw ShapeError("spike_threshold: pre " + shape_str(pre.shape()) + " vs arg " +
                         shape_str(surr_arg.shape()));
    const NeuronParams params = p;
    return custom_op(
        {pre, surr_arg}, pre.shape(),
        [params](const std::vector<Tensor>& in) {
            std::vector<double> out(in[0].data().size());
            for (size_t i = 0; i < out.size(); ++i)
                out[i] = in[0].data()[i] > params.v_th ? 1.0 : 0.0;
            return out;
        },
        [params](const std::vector<Tensor>& in, const Tensor&,
                 const std::vector<double>& up) {
            std::vector<std::vector<double>> grads(2);
            grads[0].resize(up.size());
            const auto& arg = in[1].data();
            for (size_t i = 0; i < up.size(); ++i)
                grads[0][i] = up[i] * atan_surrogate(arg[i], params);
            return grads;
        });
}

Tensor leaky_transfer(const Tensor& x, const NeuronParams& p) {
    const NeuronParams params = p;
    return custom_op(
        {x}, x.shape(),
        [params](const std::vector<Tensor>& in) {
            std::vector<double> out(in[0].data().size());
            for (size_t i = 0; i < out.size(); ++i)
                out[i] = leaky_f(in[0].data()[i], params).first;
            return out;
        },
        [params](const std::vector<Tensor>& in, const Tensor&,
                 const std::vector<double>& up) {
            std::vector<std::vector<double>> grads(1);
            grads[0].resize(up.size());
            for (size_t i = 0; i < up.size(); ++i)
                grads[0][i] = up[i] * leaky_f(in[0].data()[i], params).second;
            return grads;
        });
}

Tensor apply_mapping(MappingKind kind, const Tensor& h, const Tensor& c, const Tensor& d) {
    if (c.size() != 1 || d.size() != 1)
        throw ShapeError("apply_mapping: c and d must be scalars");
    return custom_op(
        {h, c, d}, h.shape(),
        [kind](const std::vector<Tensor>& in) {
            const double cv = in[1].item(), dv = in[2].item();
            std::vector<double> out(in[0].data().size());
            for (size_t i = 0; i < out.size(); ++i)
                out[i] = mapping_value(kind, in[0].data()[i], cv, dv);
            return out;
        },
        [kind](const std::vector<Tensor>& in, const Tensor&, const std::vector<double>& up) {
            const double cv = in[1].item(), dv = in[2].item();
            const auto& hd = in[0].data();
            std::vector<std::vector<double>> grads(3);
            grads[0].resize(up.size());
            double gc = 0.0, gd = 0.0;
            for (size_t i = 0; i < up.size(); ++i) {
                grads[0][i] = up[i] * mapping_dh(kind, hd[i], cv, dv);
                gc += up[i] * mapping_dc(kind, hd[i], cv, dv);
                gd += up[i]; // dM/dd = 1 for the whole family
            }
            grads[1] = {gc};
            grads[2] = {gd};
            return grads;
        });
}

Tensor reset_membrane(const Tensor& p_or_h, const Tensor& spikes, const NeuronParams& params) {
    if (p_or_h.shape() != spikes.shape())
        throw ShapeError("reset_membrane: " + shape_str(p_or_h.shape()) + " vs " +
                         shape_str(spikes.shape()));
    // (1-S) and v_reset*S enter as constants: the reset path carries no grad.
    Tensor keep = Tensor::zeros(p_or_h.shape());
    Tensor resets = Tensor::zeros(p_or_h.shape());
    for (size_t i = 0; i < keep.data().size(); ++i) {
        const double s = spikes.data()[i];
        keep.data()[i] = 1.0 - s;
        resets.data()[i] = params.v_reset * s;
    }
    return add(mul(p_or_h, keep), resets);
}

// ---- neuron steps -------------------------------------------------------------

namespace {

Tensor integrate(const NeuronState& state, const Tensor& current, const NeuronParams& p) {
    if (state.v.shape() != current.shape())
        throw ShapeError("neuron step: state " + shape_str(state.v.shape()) + " vs current " +
                         shape_str(current.shape()));
    return add(scale(state.v, p.lambda), current);
}

} // namespace

StepResult lif_step(const NeuronState& state, const Tensor& current, const NeuronParams& p) {
    Tensor h = integrate(state, current, p);
    Tensor s = spike_threshold(h, h, p);
    return {s, {reset_membrane(h, s, p)}};
}

StepResult osc_step(const NeuronState& state, const Tensor& current, const NeuronParams& p,
                    Rng& rng, SurrogateMode mode) {
    Tensor noise = Tensor::zeros(current.shape());
    for (auto& v : noise.data()) v = rng.uniform(p.noise_lo, p.noise_hi);
    return osc_step_with_noise(state, current, p, noise, mode);
}

StepResult osc_step_with_noise(const NeuronState& state, const Tensor& current,
                               const NeuronParams& p, const Tensor& noise,
                               SurrogateMode mode) {
    Tensor h = integrate(state, current, p);
    Tensor hn = add(h, noise);
    Tensor pt = leaky_transfer(hn, p);
    Tensor s = spike_threshold(pt, mode == SurrogateMode::Exact ? pt : hn, p);
    return {s, {reset_membrane(pt, s, p)}};
}

StepResult alt_osc_step(const NeuronState& state, const Tensor& current, const NeuronParams& p,
                        SurrogateMode mode) {
    return alt_osc_step_cd(state, current, p, Tensor::scalar(p.c), Tensor::scalar(p.d), mode);
}

StepResult alt_osc_step_cd(const NeuronState& state, const Tensor& current,
                           const NeuronParams& p, const Tensor& c, const Tensor& d,
                           SurrogateMode mode) {
    Tensor h = integrate(state, current, p);
    Tensor m = apply_mapping(p.mapping_kind, h, c, d);
    Tensor hm = add(h, m);
    Tensor pt = leaky_transfer(hm, p);
    Tensor s = spike_threshold(pt, mode == SurrogateMode::Exact ? pt : hm, p);
    return {s, {reset_membrane(pt, s, p)}};
}

} // namespace oscnet
