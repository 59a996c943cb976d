#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oscnet/errors.hpp"
#include "oscnet/rng.hpp"

namespace oscnet {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad; // empty until first accumulation

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Dense row-major float64 tensor. Value-semantics handle over a shared
// buffer; ops allocate fresh outputs, so aliasing only matters for the
// explicitly in-place helpers (zero_grad, data writes during init/io).
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int64_t size() const { return static_cast<int64_t>(impl_->data.size()); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    double item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool v) { impl_->requires_grad = v; }

    // Accumulated gradient; materializes zeros on first access.
    std::vector<double>& grad() {
        impl_->ensure_grad();
        return impl_->grad;
    }
    bool has_grad() const { return !impl_->grad.empty(); }
    void zero_grad() {
        if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
    }

    // Deep copy of shape+data; the copy is a detached leaf.
    Tensor clone() const;

    bool all_finite() const;

    std::shared_ptr<TensorImpl> impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Records one backward rule per executed op, in execution order; reverse
// replay is then a valid topological order of the DAG.
class Tape {
public:
    void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
    size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss)=1 and runs every rule once, newest first.
    void backward(const Tensor& loss);

    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

// Define-by-run scope: ops record onto the innermost active tape. With no
// active tape, ops run forward-only and outputs do not require grad.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* prev_;
};

Tape* active_tape();

// Convenience: backward through the innermost active tape.
void backward(const Tensor& loss);

// ---- ops ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b); // elementwise
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor sum(const Tensor& a); // -> scalar
Tensor reshape(const Tensor& a, Shape shape);

Tensor matmul(const Tensor& a, const Tensor& b); // [m,k]x[k,n]

// Cross-correlation (no kernel flip), no bias. input [N,C,H,W],
// kernel [O,C,kh,kw]; output spatial floor((H+2p-kh)/stride)+1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int64_t stride, int64_t padding);

Tensor avg_pool2d(const Tensor& input, int64_t window, int64_t stride);

struct BnStats {
    std::vector<double> mean;
    std::vector<double> var;
};

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

// input [N,C] or [N,C,H,W]; train mode normalizes with batch statistics and
// folds them into `running` with momentum kBnMomentum; eval mode normalizes
// with `running` directly.
Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BnStats& running, bool train_mode);

// Inverted-dropout mask: entries are 0 or 1/(1-p); constant (not a grad path).
Tensor dropout_mask(const Shape& shape, double p, Rng& rng);

// Mean over batch of -log softmax(logits)[label]; logits [N,K].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// ---- user-registered custom ops -----------------------------------------

// forward: inputs -> output buffer (caller-declared shape).
// backward: (inputs, output, upstream) -> one grad buffer per input; an empty
// buffer means "no gradient for this input".
using CustomForward =
    std::function<std::vector<double>(const std::vector<Tensor>&)>;
using CustomBackward = std::function<std::vector<std::vector<double>>(
    const std::vector<Tensor>&, const Tensor&, const std::vector<double>&)>;

Tensor custom_op(const std::vector<Tensor>& inputs, Shape out_shape,
                 const CustomForward& forward, CustomBackward backward);

// ---- non-autodiff helpers (attack arithmetic, checks) --------------------

void clamp01_(Tensor& t);
Tensor sign_of(const Tensor& t); // sign(0) = 0

} // namespace oscnet
