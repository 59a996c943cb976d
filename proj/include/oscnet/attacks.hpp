#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oscnet/tensor.hpp"

namespace oscnet {

enum class AttackKind { FGSM, BIM, MIM, PGD };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& s);

struct AttackConfig {
    AttackKind kind = AttackKind::FGSM;
    double epsilon = 8.0 / 255.0; // l-inf budget in pixel units
    int iters = 5;                // iterative kinds
    double mim_mu = 1.0;
    double pgd_step = 0.0; // <= 0 resolves to epsilon/4
    uint64_t seed = 0;

    double resolved_pgd_step() const { return pgd_step > 0.0 ? pgd_step : epsilon / 4.0; }
    void validate() const;

    // "PGD-5", "FGSM", ... for report rows
    std::string label() const;
};

// Supplies grad_x L(x, y) for the current iterate; `iter` lets stochastic
// providers reseed their noise per iteration.
using GradProvider =
    std::function<Tensor(const Tensor& x, const std::vector<int>& y, int iter)>;

// Elementwise clip to [ref - eps, ref + eps], then to the valid range [0,1].
Tensor clip_ball(const Tensor& cand, const Tensor& ref, double epsilon);

Tensor fgsm(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
            const AttackConfig& cfg);
Tensor bim(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg);
Tensor mim(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg);
Tensor pgd(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
           const AttackConfig& cfg);

Tensor run_attack(const GradProvider& grads, const Tensor& x, const std::vector<int>& y,
                  const AttackConfig& cfg);

// Replay files: raw tensor blob plus a JSON manifest.
void save_adv_batch(const std::string& bin_path, const std::string& manifest_path,
                    const Tensor& x_adv, const AttackConfig& cfg,
                    const std::vector<int64_t>& source_indices,
                    const std::string& config_snapshot);
Tensor load_adv_batch(const std::string& bin_path);

} // namespace oscnet
