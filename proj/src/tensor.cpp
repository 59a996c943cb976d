#include "oscnet/tensor.hpp"

#include <algorithm>
#include <cblas.h>
#include <cmath>
#include <mutex>
#include <sstream>

extern "C" void openblas_set_num_threads(int);

namespace oscnet {

namespace {

thread_local Tape* g_active_tape = nullptr;

// BLAS threading is pinned so results do not depend on the worker setting.
void pin_blas_threads() {
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

bool should_record(std::initializer_list<const Tensor*> inputs) {
    if (!g_active_tape) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

} // namespace

int64_t numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
    if (numel(shape) != static_cast<int64_t>(data.size()))
        throw ShapeError("tensor: " + shape_str(shape) + " incompatible with " +
                         std::to_string(data.size()) + " elements");
    impl_ = std::make_shared<TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::vector<double> d(static_cast<size_t>(numel(shape)), value);
    return Tensor(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor({1}, {value}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw InvalidInputError("item(): tensor has " + std::to_string(size()) + " elements");
    return impl_->data[0];
}

Tensor Tensor::clone() const {
    return Tensor(impl_->shape, impl_->data, false);
}

bool Tensor::all_finite() const {
    for (double v : impl_->data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw InvalidInputError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

TapeScope::TapeScope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
    if (!g_active_tape) throw InvalidInputError("backward: no active tape");
    g_active_tape->backward(loss);
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + bd[i];
    if (should_record({&a, &b})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] += oi->grad[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] - bd[i];
    if (should_record({&a, &b})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] -= oi->grad[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * bd[i];
    if (should_record({&a, &b})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), bi = b.impl(), oi = out.impl()] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = Tensor::zeros(a.shape());
    const auto& ad = a.data();
    auto& od = out.data();
    for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] * s;
    if (should_record({&a})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), oi = out.impl(), s] {
            if (oi->grad.empty() || !ai->requires_grad) return;
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * s;
        });
    }
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    Tensor out = Tensor::zeros(a.shape());
    const auto& ad = a.data();
    auto& od = out.data();
    for (size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + s;
    if (should_record({&a})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), oi = out.impl()] {
            if (oi->grad.empty() || !ai->requires_grad) return;
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return out;
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (should_record({&a})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), oi = out.impl()] {
            if (oi->grad.empty() || !ai->requires_grad) return;
            ai->ensure_grad();
            const double g = oi->grad[0];
            for (auto& v : ai->grad) v += g;
        });
    }
    return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    Tensor out(std::move(shape), a.data(), false);
    if (should_record({&a})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), oi = out.impl()] {
            if (oi->grad.empty() || !ai->requires_grad) return;
            ai->ensure_grad();
            for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
        });
    }
    return out;
}

// ---- matmul ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    pin_blas_threads();
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out = Tensor::zeros({m, n});
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)m, (int)n, (int)k, 1.0,
                a.data().data(), (int)k, b.data().data(), (int)n, 0.0, out.data().data(), (int)n);
    if (should_record({&a, &b})) {
        out.set_requires_grad(true);
        g_active_tape->record([ai = a.impl(), bi = b.impl(), oi = out.impl(), m, k, n] {
            if (oi->grad.empty()) return;
            if (ai->requires_grad) {
                ai->ensure_grad();
                // grad_a += grad_out . b^T
                cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)m, (int)k, (int)n, 1.0,
                            oi->grad.data(), (int)n, bi->data.data(), (int)n, 1.0,
                            ai->grad.data(), (int)k);
            }
            if (bi->requires_grad) {
                bi->ensure_grad();
                // grad_b += a^T . grad_out
                cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)k, (int)n, (int)m, 1.0,
                            ai->data.data(), (int)k, oi->grad.data(), (int)n, 1.0,
                            bi->grad.data(), (int)n);
            }
        });
    }
    return out;
}

// ---- conv2d ---------------------------------------------------------------

namespace {

struct ConvDims {
    int64_t N, C, H, W, O, kh, kw, Ho, Wo;
    int64_t stride, pad;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, int64_t stride, int64_t padding) {
    if (input.shape().size() != 4)
        throw ShapeError("conv2d: input must be NxCxHxW, got " + shape_str(input.shape()));
    if (kernel.shape().size() != 4)
        throw ShapeError("conv2d: kernel must be OxCxKHxKW, got " + shape_str(kernel.shape()));
    if (stride < 1) throw InvalidParamError("conv2d: stride must be >= 1");
    if (padding < 0) throw InvalidParamError("conv2d: padding must be >= 0");
    ConvDims d;
    d.N = input.shape()[0];
    d.C = input.shape()[1];
    d.H = input.shape()[2];
    d.W = input.shape()[3];
    d.O = kernel.shape()[0];
    d.kh = kernel.shape()[2];
    d.kw = kernel.shape()[3];
    d.stride = stride;
    d.pad = padding;
    if (kernel.shape()[1] != d.C)
        throw ShapeError("conv2d: channel mismatch, input " + shape_str(input.shape()) +
                         " kernel " + shape_str(kernel.shape()));
    if (d.kh > d.H + 2 * padding || d.kw > d.W + 2 * padding)
        throw ShapeError("conv2d: kernel " + shape_str(kernel.shape()) +
                         " exceeds padded input " + shape_str(input.shape()));
    d.Ho = (d.H + 2 * padding - d.kh) / stride + 1;
    d.Wo = (d.W + 2 * padding - d.kw) / stride + 1;
    return d;
}

// col layout: [C*kh*kw][Ho*Wo]
void im2col(const double* in, const ConvDims& d, double* col) {
    const int64_t span = d.Ho * d.Wo;
    for (int64_t c = 0; c < d.C; ++c) {
        for (int64_t i = 0; i < d.kh; ++i) {
            for (int64_t j = 0; j < d.kw; ++j) {
                double* row = col + ((c * d.kh + i) * d.kw + j) * span;
                for (int64_t ho = 0; ho < d.Ho; ++ho) {
                    const int64_t h = ho * d.stride + i - d.pad;
                    for (int64_t wo = 0; wo < d.Wo; ++wo) {
                        const int64_t w = wo * d.stride + j - d.pad;
                        row[ho * d.Wo + wo] =
                            (h >= 0 && h < d.H && w >= 0 && w < d.W)
                                ? in[(c * d.H + h) * d.W + w]
                                : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* col, const ConvDims& d, double* gin) {
    const int64_t span = d.Ho * d.Wo;
    for (int64_t c = 0; c < d.C; ++c) {
        for (int64_t i = 0; i < d.kh; ++i) {
            for (int64_t j = 0; j < d.kw; ++j) {
                const double* row = col + ((c * d.kh + i) * d.kw + j) * span;
                for (int64_t ho = 0; ho < d.Ho; ++ho) {
                    const int64_t h = ho * d.stride + i - d.pad;
                    if (h < 0 || h >= d.H) continue;
                    for (int64_t wo = 0; wo < d.Wo; ++wo) {
                        const int64_t w = wo * d.stride + j - d.pad;
                        if (w < 0 || w >= d.W) continue;
                        gin[(c * d.H + h) * d.W + w] += row[ho * d.Wo + wo];
                    }
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int64_t stride, int64_t padding) {
    pin_blas_threads();
    const ConvDims d = conv_dims(input, kernel, stride, padding);
    Tensor out = Tensor::zeros({d.N, d.O, d.Ho, d.Wo});
    const int64_t krows = d.C * d.kh * d.kw;
    const int64_t span = d.Ho * d.Wo;
    std::vector<double> col(static_cast<size_t>(krows * span));
    for (int64_t n = 0; n < d.N; ++n) {
        im2col(input.data().data() + n * d.C * d.H * d.W, d, col.data());
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)d.O, (int)span, (int)krows,
                    1.0, kernel.data().data(), (int)krows, col.data(), (int)span, 0.0,
                    out.data().data() + n * d.O * span, (int)span);
    }
    if (should_record({&input, &kernel})) {
        out.set_requires_grad(true);
        g_active_tape->record([ii = input.impl(), ki = kernel.impl(), oi = out.impl(), d] {
            if (oi->grad.empty()) return;
            const int64_t krows = d.C * d.kh * d.kw;
            const int64_t span = d.Ho * d.Wo;
            std::vector<double> col(static_cast<size_t>(krows * span));
            std::vector<double> gcol(static_cast<size_t>(krows * span));
            if (ii->requires_grad) ii->ensure_grad();
            if (ki->requires_grad) ki->ensure_grad();
            for (int64_t n = 0; n < d.N; ++n) {
                const double* gout = oi->grad.data() + n * d.O * span;
                if (ki->requires_grad) {
                    im2col(ii->data.data() + n * d.C * d.H * d.W, d, col.data());
                    // grad_kernel += grad_out . col^T
                    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)d.O, (int)krows,
                                (int)span, 1.0, gout, (int)span, col.data(), (int)span, 1.0,
                                ki->grad.data(), (int)krows);
                }
                if (ii->requires_grad) {
                    // grad_col = kernel^T . grad_out, scattered back by col2im
                    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)krows, (int)span,
                                (int)d.O, 1.0, ki->data.data(), (int)krows, gout, (int)span, 0.0,
                                gcol.data(), (int)span);
                    col2im_add(gcol.data(), d, ii->grad.data() + n * d.C * d.H * d.W);
                }
            }
        });
    }
    return out;
}

// ---- avg_pool2d -----------------------------------------------------------

Tensor avg_pool2d(const Tensor& input, int64_t window, int64_t stride) {
    if (input.shape().size() != 4)
        throw ShapeError("avg_pool2d: input must be NxCxHxW, got " + shape_str(input.shape()));
    if (window < 1 || stride < 1) throw InvalidParamError("avg_pool2d: window/stride must be >= 1");
    const int64_t N = input.shape()[0], C = input.shape()[1];
    const int64_t H = input.shape()[2], W = input.shape()[3];
    if (window > H || window > W)
        throw ShapeError("avg_pool2d: window " + std::to_string(window) + " exceeds input " +
                         shape_str(input.shape()));
    const int64_t Ho = (H - window) / stride + 1;
    const int64_t Wo = (W - window) / stride + 1;
    const double inv_area = 1.0 / static_cast<double>(window * window);
    Tensor out = Tensor::zeros({N, C, Ho, Wo});
    const auto& in = input.data();
    auto& od = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const double* plane = in.data() + nc * H * W;
        double* oplane = od.data() + nc * Ho * Wo;
        for (int64_t ho = 0; ho < Ho; ++ho)
            for (int64_t wo = 0; wo < Wo; ++wo) {
                double acc = 0.0;
                for (int64_t i = 0; i < window; ++i)
                    for (int64_t j = 0; j < window; ++j)
                        acc += plane[(ho * stride + i) * W + wo * stride + j];
                oplane[ho * Wo + wo] = acc * inv_area;
            }
    }
    if (should_record({&input})) {
        out.set_requires_grad(true);
        g_active_tape->record([ii = input.impl(), oi = out.impl(), N, C, H, W, Ho, Wo, window,
                               stride, inv_area] {
            if (oi->grad.empty() || !ii->requires_grad) return;
            ii->ensure_grad();
            for (int64_t nc = 0; nc < N * C; ++nc) {
                const double* gplane = oi->grad.data() + nc * Ho * Wo;
                double* giplane = ii->grad.data() + nc * H * W;
                for (int64_t ho = 0; ho < Ho; ++ho)
                    for (int64_t wo = 0; wo < Wo; ++wo) {
                        const double g = gplane[ho * Wo + wo] * inv_area;
                        for (int64_t i = 0; i < window; ++i)
                            for (int64_t j = 0; j < window; ++j)
                                giplane[(ho * stride + i) * W + wo * stride + j] += g;
                    }
            }
        });
    }
    return out;
}

// ---- batch_norm -----------------------------------------------------------

namespace {

struct BnDims {
    int64_t N, C, S; // S = spatial extent (1 for [N,C])
};

BnDims bn_dims(const Tensor& input) {
    const auto& s = input.shape();
    if (s.size() == 2) return {s[0], s[1], 1};
    if (s.size() == 4) return {s[0], s[1], s[2] * s[3]};
    throw ShapeError("batch_norm: input must be NxC or NxCxHxW, got " + shape_str(s));
}

} // namespace

Tensor batch_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                  BnStats& running, bool train_mode) {
    const BnDims d = bn_dims(input);
    if (gamma.size() != d.C || beta.size() != d.C)
        throw ShapeError("batch_norm: gamma/beta size " + std::to_string(gamma.size()) + "/" +
                         std::to_string(beta.size()) + " vs channels " + std::to_string(d.C));
    if (train_mode && d.N == 0) throw InvalidInputError("batch_norm: empty batch in train mode");
    if (running.mean.size() != static_cast<size_t>(d.C)) {
        running.mean.assign(d.C, 0.0);
        running.var.assign(d.C, 1.0);
    }

    const int64_t M = d.N * d.S;
    std::vector<double> mean(d.C), invstd(d.C);
    if (train_mode) {
        for (int64_t c = 0; c < d.C; ++c) {
            double m = 0.0;
            for (int64_t n = 0; n < d.N; ++n) {
                const double* p = input.data().data() + (n * d.C + c) * d.S;
                for (int64_t s = 0; s < d.S; ++s) m += p[s];
            }
            m /= static_cast<double>(M);
            double v = 0.0;
            for (int64_t n = 0; n < d.N; ++n) {
                const double* p = input.data().data() + (n * d.C + c) * d.S;
                for (int64_t s = 0; s < d.S; ++s) {
                    const double t = p[s] - m;
                    v += t * t;
                }
            }
            v /= static_cast<double>(M);
            mean[c] = m;
            invstd[c] = 1.0 / std::sqrt(v + kBnEps);
            running.mean[c] = (1.0 - kBnMomentum) * running.mean[c] + kBnMomentum * m;
            running.var[c] = (1.0 - kBnMomentum) * running.var[c] + kBnMomentum * v;
        }
    } else {
        for (int64_t c = 0; c < d.C; ++c) {
            mean[c] = running.mean[c];
            invstd[c] = 1.0 / std::sqrt(running.var[c] + kBnEps);
        }
    }

    Tensor out = Tensor::zeros(input.shape());
    // xhat saved for backward
    auto xhat = std::make_shared<std::vector<double>>(input.data().size());
    {
        const auto& in = input.data();
        auto& od = out.data();
        for (int64_t n = 0; n < d.N; ++n)
            for (int64_t c = 0; c < d.C; ++c) {
                const double m = mean[c], is = invstd[c];
                const double g = gamma.data()[c], b = beta.data()[c];
                const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                for (int64_t s = 0; s < d.S; ++s) {
                    const double xh = (in[base + s] - m) * is;
                    (*xhat)[base + s] = xh;
                    od[base + s] = g * xh + b;
                }
            }
    }

    if (should_record({&input, &gamma, &beta})) {
        out.set_requires_grad(true);
        g_active_tape->record([ii = input.impl(), gi = gamma.impl(), bi = beta.impl(),
                               oi = out.impl(), xhat, invstd, d, M, train_mode] {
            if (oi->grad.empty()) return;
            const auto& g = oi->grad;
            if (bi->requires_grad) {
                bi->ensure_grad();
                for (int64_t n = 0; n < d.N; ++n)
                    for (int64_t c = 0; c < d.C; ++c) {
                        const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                        double acc = 0.0;
                        for (int64_t s = 0; s < d.S; ++s) acc += g[base + s];
                        bi->grad[c] += acc;
                    }
            }
            if (gi->requires_grad) {
                gi->ensure_grad();
                for (int64_t n = 0; n < d.N; ++n)
                    for (int64_t c = 0; c < d.C; ++c) {
                        const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                        double acc = 0.0;
                        for (int64_t s = 0; s < d.S; ++s) acc += g[base + s] * (*xhat)[base + s];
                        gi->grad[c] += acc;
                    }
            }
            if (!ii->requires_grad) return;
            ii->ensure_grad();
            if (!train_mode) {
                // eval: dx = g * gamma * invstd (stats are constants)
                for (int64_t n = 0; n < d.N; ++n)
                    for (int64_t c = 0; c < d.C; ++c) {
                        const double k = gi->data[c] * invstd[c];
                        const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                        for (int64_t s = 0; s < d.S; ++s) ii->grad[base + s] += g[base + s] * k;
                    }
                return;
            }
            // train: backprop through batch statistics
            std::vector<double> sum_g(d.C, 0.0), sum_gx(d.C, 0.0);
            for (int64_t n = 0; n < d.N; ++n)
                for (int64_t c = 0; c < d.C; ++c) {
                    const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                    for (int64_t s = 0; s < d.S; ++s) {
                        sum_g[c] += g[base + s];
                        sum_gx[c] += g[base + s] * (*xhat)[base + s];
                    }
                }
            const double invM = 1.0 / static_cast<double>(M);
            for (int64_t n = 0; n < d.N; ++n)
                for (int64_t c = 0; c < d.C; ++c) {
                    const double k = gi->data[c] * invstd[c] * invM;
                    const size_t base = static_cast<size_t>((n * d.C + c) * d.S);
                    for (int64_t s = 0; s < d.S; ++s)
                        ii->grad[base + s] +=
                            k * (static_cast<double>(M) * g[base + s] - sum_g[c] -
                                 (*xhat)[base + s] * sum_gx[c]);
                }
        });
    }
    return out;
}

// ---- dropout_mask ----------------------------------------------------------

Tensor dropout_mask(const Shape& shape, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw InvalidParamError("dropout_mask: p must be in [0,1), got " + std::to_string(p));
    Tensor mask = Tensor::zeros(shape);
    const double keep_scale = 1.0 / (1.0 - p);
    for (auto& v : mask.data()) v = (rng.uniform01() >= p) ? keep_scale : 0.0;
    return mask;
}

// ---- cross_entropy ---------------------------------------------------------

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2)
        throw ShapeError("cross_entropy: logits must be NxK, got " + shape_str(logits.shape()));
    const int64_t N = logits.shape()[0], K = logits.shape()[1];
    if (static_cast<int64_t>(labels.size()) != N)
        throw InvalidInputError("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(N));
    for (int y : labels)
        if (y < 0 || y >= K)
            throw InvalidInputError("cross_entropy: label " + std::to_string(y) +
                                    " out of range [0," + std::to_string(K) + ")");
    auto softmax = std::make_shared<std::vector<double>>(logits.data().size());
    double total = 0.0;
    const auto& z = logits.data();
    for (int64_t n = 0; n < N; ++n) {
        const double* row = z.data() + n * K;
        double m = row[0];
        for (int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
        double denom = 0.0;
        for (int64_t k = 0; k < K; ++k) denom += std::exp(row[k] - m);
        const double log_denom = std::log(denom);
        for (int64_t k = 0; k < K; ++k)
            (*softmax)[n * K + k] = std::exp(row[k] - m) / denom;
        total += log_denom - (row[labels[n]] - m);
    }
    Tensor out = Tensor::scalar(total / static_cast<double>(N));
    if (should_record({&logits})) {
        out.set_requires_grad(true);
        g_active_tape->record([zi = logits.impl(), oi = out.impl(), softmax, labels, N, K] {
            if (oi->grad.empty() || !zi->requires_grad) return;
            zi->ensure_grad();
            const double g = oi->grad[0] / static_cast<double>(N);
            for (int64_t n = 0; n < N; ++n)
                for (int64_t k = 0; k < K; ++k) {
                    double v = (*softmax)[n * K + k];
                    if (k == labels[n]) v -= 1.0;
                    zi->grad[n * K + k] += g * v;
                }
        });
    }
    return out;
}

// ---- custom ops ------------------------------------------------------------

Tensor custom_op(const std::vector<Tensor>& inputs, Shape out_shape,
                 const CustomForward& forward, CustomBackward backward) {
    std::vector<double> out_data = forward(inputs);
    if (static_cast<int64_t>(out_data.size()) != numel(out_shape))
        throw ShapeError("custom_op: forward produced " + std::to_string(out_data.size()) +
                         " values for shape " + shape_str(out_shape));
    Tensor out(std::move(out_shape), std::move(out_data), false);
    bool any_grad = false;
    for (const auto& t : inputs) any_grad = any_grad || t.requires_grad();
    if (g_active_tape && any_grad) {
        out.set_requires_grad(true);
        g_active_tape->record([inputs, oi = out.impl(), out, bwd = std::move(backward)] {
            if (oi->grad.empty()) return;
            std::vector<std::vector<double>> grads = bwd(inputs, out, oi->grad);
            if (grads.size() != inputs.size())
                throw ShapeError("custom_op: backward produced " + std::to_string(grads.size()) +
                                 " grads for " + std::to_string(inputs.size()) + " inputs");
            for (size_t i = 0; i < inputs.size(); ++i) {
                if (grads[i].empty()) continue;
                if (static_cast<int64_t>(grads[i].size()) != inputs[i].size())
                    throw ShapeError("custom_op: grad " + std::to_string(i) + " has " +
                                     std::to_string(grads[i].size()) + " values, input is " +
                                     shape_str(inputs[i].shape()));
                if (!inputs[i].requires_grad()) continue;
                auto impl = inputs[i].impl();
                impl->ensure_grad();
                for (size_t j = 0; j < grads[i].size(); ++j) impl->grad[j] += grads[i][j];
            }
        });
    }
    return out;
}

// ---- non-autodiff helpers ----------------------------------------------------

void clamp01_(Tensor& t) {
    for (auto& v : t.data()) v = std::min(1.0, std::max(0.0, v));
}

Tensor sign_of(const Tensor& t) {
    Tensor out = Tensor::zeros(t.shape());
    for (size_t i = 0; i < t.data().size(); ++i) {
        const double v = t.data()[i];
        out.data()[i] = (v > 0.0) ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
    return out;
}

} // namespace oscnet
