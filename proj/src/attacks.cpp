#include "oscnet/attacks.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace oscnet {

std::string to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::FGSM: return "FGSM";
    case AttackKind::BIM: return "BIM";
    case AttackKind::MIM: return "MIM";
    case AttackKind::PGD: return "PGD";
    }
    return "?";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "FGSM") return AttackKind::FGSM;
    if (s == "BIM") return AttackKind::BIM;
    if (s == "MIM") return AttackKind::MIM;
    if (s == "PGD") return AttackKind::PGD;
    throw InvalidParamError("unknown attack kind: " + s);
}

void AttackConfig::validate() const {
    // epsilon = 0 is the degenerate empty ball (x_adv = x)
    if (epsilon < 0.0 || epsilon > 1.0)
        throw InvalidParamError("attack: epsilon must be in [0,1], got " + std::to_string(epsilon));
    if (iters < 1) throw InvalidParamError("attack: iters must be >= 1");
    if (mim_mu < 0.0) throw InvalidParamError("attack: mim_mu must be >= 0");
    if (pgd_step < 0.0) throw InvalidParamError("attack: pgd_step must be >= 0");
}

std::string AttackConfig::label() const {
    if (kind == AttackKind::FGSM) return "FGSM";
    return to_string(kind) + "-" + std::to_string(iters);
}

Tensor clip_ball(const Tensor& cand, const Tensor& ref, double epsilon) {
    if (cand.shape() != ref.shape())
        throw ShapeError("clip_ball: " + shape_str(cand.shape()) + " vs " +
                         shape_str(ref.shape()));
    Tensor out = cand.clone();
    for (size_t i = 0; i < out.data().size(); ++i) {
        const double r = ref.data()[i];
        double v = std::min(std::max(out.data()[i], r - epsilon), r + epsilon);
        out.data()[i] = std::min(1.0, std::max(0.0, v));
    }
    return out;
}

Tensor fgsm(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
            const AttackConfig& cfg) {
    cfg.validate();
    Tensor g = grads(x, y, 0);
    Tensor s = sign_of(g);
    Tensor out = x.clone();
    for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] += cfg.epsilon * s.data()[i];
    clamp01_(out);
    return out;
}

namespace {

Tensor iterate_signed_steps(const GradProvider& grads, const Tensor& x,
                            const std::vector<int>& y, const AttackConfig& cfg,
                            Tensor start, double step, bool momentum) {
    Tensor cur = std::move(start);
    const int64_t n = x.shape()[0];
    const int64_t per = numel(x.shape()) / n;
    std::vector<double> g_acc(momentum ? cur.data().size() : 0, 0.0);
    for (int m = 0; m < cfg.iters; ++m) {
        Tensor g = grads(cur, y, m);
        Tensor dir;
        if (momentum) {
            // g_m = mu g_{m-1} + grad / ||grad||_1, l1 taken per sample
            for (int64_t r = 0; r < n; ++r) {
                double l1 = 0.0;
                for (int64_t i = 0; i < per; ++i) l1 += std::abs(g.data()[r * per + i]);
                const double inv = l1 > 0.0 ? 1.0 / l1 : 0.0;
                for (int64_t i = 0; i < per; ++i) {
                    auto& acc = g_acc[static_cast<size_t>(r * per + i)];
                    acc = cfg.mim_mu * acc + g.data()[r * per + i] * inv;
                }
            }
            dir = sign_of(Tensor(x.shape(), g_acc));
        } else {
            dir = sign_of(g);
        }
        Tensor next = cur.clone();
        for (size_t i = 0; i < next.data().size(); ++i) next.data()[i] += step * dir.data()[i];
        cur = clip_ball(next, x, cfg.epsilon);
    }
    return cur;
}

} // namespace

Tensor bim(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg) {
    cfg.validate();
    return iterate_signed_steps(grads, x, y, cfg, x.clone(),
                                cfg.epsilon / static_cast<double>(cfg.iters), false);
}

Tensor mim(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg) {
    cfg.validate();
    return iterate_signed_steps(grads, x, y, cfg, x.clone(),
                                cfg.epsilon / static_cast<double>(cfg.iters), true);
}

Tensor pgd(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg) {
    cfg.validate();
    // random start in U(x, eps), clamped to the valid range
    Tensor start = x.clone();
    const int64_t n = x.shape()[0];
    const int64_t per = numel(x.shape()) / n;
    for (int64_t r = 0; r < n; ++r) {
        Rng rng(derive_seed(cfg.seed, Stream::AttackInit, static_cast<uint64_t>(r)));
        for (int64_t i = 0; i < per; ++i)
            start.data()[static_cast<size_t>(r * per + i)] +=
                rng.uniform(-cfg.epsilon, cfg.epsilon);
    }
    clamp01_(start);
    return iterate_signed_steps(grads, x, y, cfg, std::move(start), cfg.resolved_pgd_step(),
                                false);
}

Tensor run_attack(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
                  const AttackConfig& cfg) {
    switch (cfg.kind) {
    case AttackKind::FGSM: return fgsm(grads, x, y, cfg);
    case AttackKind::BIM: return bim(grads, x, y, cfg);
    case AttackKind::MIM: return mim(grads, x, y, cfg);
    case AttackKind::PGD: return pgd(grads, x, y, cfg);
    }
    throw InvalidParamError("run_attack: unknown kind");
}

// ---- replay files ------------------------------------------------------------

namespace {
constexpr char kAdvMagic[8] = {'O', 'S', 'C', 'A', 'D', 'V', 'v', '1'};
}

void save_adv_batch(const std::string& bin_path, const std::string& manifest_path,
                    const Tensor& x_adv, const AttackConfig& cfg,
                    const std::vector<int64_t>& source_indices,
                    const std::string& config_snapshot) {
    std::ofstream f(bin_path, std::ios::binary);
    if (!f) throw FormatError(bin_path + ": cannot open for writing");
    f.write(kAdvMagic, 8);
    const uint64_t ndims = x_adv.shape().size();
    f.write(reinterpret_cast<const char*>(&ndims), 8);
    for (int64_t d : x_adv.shape()) {
        const uint64_t v = static_cast<uint64_t>(d);
        f.write(reinterpret_cast<const char*>(&v), 8);
    }
    f.write(reinterpret_cast<const char*>(x_adv.data().data()),
            static_cast<std::streamsize>(x_adv.data().size() * sizeof(double)));
    if (!f) throw FormatError(bin_path + ": write failed");

    nlohmann::json m;
    m["attack"] = {{"kind", to_string(cfg.kind)}, {"epsilon", cfg.epsilon},
                   {"iters", cfg.iters},          {"mim_mu", cfg.mim_mu},
                   {"pgd_step", cfg.resolved_pgd_step()}, {"seed", cfg.seed}};
    m["source_indices"] = source_indices;
    m["tensor_file"] = bin_path;
    if (!config_snapshot.empty()) m["config"] = nlohmann::json::parse(config_snapshot);
    std::ofstream mf(manifest_path);
    if (!mf) throw FormatError(manifest_path + ": cannot open for writing");
    mf << m.dump(2) << "\n";
}

Tensor load_adv_batch(const std::string& bin_path) {
    std::ifstream f(bin_path, std::ios::binary);
    if (!f) throw FormatError(bin_path + ": cannot open");
    char magic[8];
    f.read(magic, 8);
    if (f.gcount() != 8 || std::memcmp(magic, kAdvMagic, 8) != 0)
        throw FormatError(bin_path + ": bad magic");
    uint64_t ndims = 0;
    f.read(reinterpret_cast<char*>(&ndims), 8);
    if (f.gcount() != 8 || ndims > 8) throw FormatError(bin_path + ": corrupt header");
    Shape shape(ndims);
    for (auto& d : shape) {
        uint64_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 8);
        if (f.gcount() != 8) throw FormatError(bin_path + ": corrupt dims");
        d = static_cast<int64_t>(v);
    }
    Tensor t = Tensor::zeros(shape);
    f.read(reinterpret_cast<char*>(t.data().data()),
           static_cast<std::streamsize>(t.data().size() * sizeof(double)));
    if (static_cast<size_t>(f.gcount()) != t.data().size() * sizeof(double))
        throw FormatError(bin_path + ": truncated data");
    return t;
}

} // namespace oscnet
