#pragma once

#include <string>
#include <vector>

#include "oscnet/neurons.hpp"

namespace oscnet {

struct Curve {
    std::vector<double> xs, ys;
    std::string label;
    std::string color = "#1f77b4";
    bool dashed = false;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Curve>& curves, const std::string& config_snapshot = "");

// dS/dH curves: oscillation model at gamma = noise_lo and noise_hi, plus the
// fitted mapping's curve; h sweeps [h_lo, h_hi].
void write_gradient_curves_svg(const std::string& path, const NeuronParams& params, double c,
                               double d, double h_lo, double h_hi,
                               const std::string& config_snapshot = "");

// Gradient curves for every mapping kind at the given (c,d).
void write_mapping_gradient_curves_svg(const std::string& path, const NeuronParams& params,
                                       double c, double d, double h_lo, double h_hi,
                                       const std::string& config_snapshot = "");

} // namespace oscnet
