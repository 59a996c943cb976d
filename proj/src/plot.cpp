#include "oscnet/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "oscnet/errors.hpp"

namespace oscnet {

namespace {

constexpr double kW = 680, kH = 460;
constexpr double kL = 70, kR = 20, kT = 40, kB = 50; // margins

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Curve>& curves, const std::string& config_snapshot) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& c : curves) {
        for (double v : c.xs) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : c.ys) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmin < xmax)) xmax = xmin + 1;
    if (!(ymin < ymax)) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR); };
    auto py = [&](double y) { return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB); };

    std::ofstream f(path);
    if (!f) throw FormatError(path + ": cannot open for writing");
    char buf[512];
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    if (!config_snapshot.empty()) f << "<desc>" << xml_escape(config_snapshot) << "</desc>\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";

    // axes and ticks
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  kL, kH - kB, kW - kR, kH - kB);
    f << buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  kL, kT, kL, kH - kB);
    f << buf;
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\" font-size=\"11\">%s"
                      "</text>\n",
                      px(xv), kH - kB, px(xv), kH - kB + 5, px(xv), kH - kB + 18,
                      fmt(xv).c_str());
        f << buf;
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>"
                      "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\" font-size=\"11\">%s"
                      "</text>\n",
                      kL - 5, py(yv), kL, py(yv), kL - 8, py(yv) + 4, fmt(yv).c_str());
        f << buf;
    }
    f << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(xlabel) << "</text>\n";
    f << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (kT + kH - kB) / 2 << ")\">" << xml_escape(ylabel) << "</text>\n";

    // zero line when visible
    if (ymin < 0 && ymax > 0) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#cccccc\" "
                      "stroke-dasharray=\"2,3\"/>\n",
                      kL, py(0.0), kW - kR, py(0.0));
        f << buf;
    }

    for (const auto& c : curves) {
        f << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.6\"";
        if (c.dashed) f << " stroke-dasharray=\"6,4\"";
        f << " points=\"";
        for (size_t i = 0; i < c.xs.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(c.xs[i]), py(c.ys[i]));
            f << buf;
        }
        f << "\"/>\n";
    }
    // legend
    double ly = kT + 8;
    for (const auto& c : curves) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" "
                      "stroke-width=\"2\"%s/>"
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\">%s</text>\n",
                      kW - kR - 190.0, ly, kW - kR - 160.0, ly, c.color.c_str(),
                      c.dashed ? " stroke-dasharray=\"6,4\"" : "", kW - kR - 152.0, ly + 4,
                      xml_escape(c.label).c_str());
        f << buf;
        ly += 18;
    }
    f << "</svg>\n";
}

void write_gradient_curves_svg(const std::string& path, const NeuronParams& params, double c,
                               double d, double h_lo, double h_hi,
                               const std::string& config_snapshot) {
    constexpr int kPoints = 600;
    Curve lo, hi, alt;
    lo.label = "oscillation, gamma=" + fmt(params.noise_lo);
    lo.color = "#ff7f0e";
    hi.label = "oscillation, gamma=" + fmt(params.noise_hi);
    hi.color = "#ff7f0e";
    hi.dashed = true;
    alt.label = "alternative (fitted)";
    alt.color = "#d62728";
    for (int i = 0; i < kPoints; ++i) {
        const double h = h_lo + (h_hi - h_lo) * i / (kPoints - 1);
        lo.xs.push_back(h);
        lo.ys.push_back(closed_form_grad_osc(h, params.noise_lo, params));
        hi.xs.push_back(h);
        hi.ys.push_back(closed_form_grad_osc(h, params.noise_hi, params));
        alt.xs.push_back(h);
        alt.ys.push_back(closed_form_grad_alt(h, c, d, params));
    }
    write_svg_plot(path, "dS/dH vs H", "H", "dS/dH", {lo, hi, alt}, config_snapshot);
}

void write_mapping_gradient_curves_svg(const std::string& path, const NeuronParams& params,
                                       double c, double d, double h_lo, double h_hi,
                                       const std::string& config_snapshot) {
    constexpr int kPoints = 600;
    const char* colors[4] = {"#d62728", "#2ca02c", "#1f77b4", "#9467bd"};
    std::vector<Curve> curves;
    int ci = 0;
    for (MappingKind kind :
         {MappingKind::F1, MappingKind::F2, MappingKind::F3, MappingKind::F4}) {
        Curve cv;
        cv.label = to_string(kind);
        cv.color = colors[ci++];
        for (int i = 0; i < kPoints; ++i) {
            const double h = h_lo + (h_hi - h_lo) * i / (kPoints - 1);
            const double pre = h + mapping_value(kind, h, c, d);
            const double slope = pre >= 0.0 ? 1.0 : params.leaky_slope;
            const double t = (3.14159265358979323846 / 2.0) * params.alpha * (pre - params.v_th);
            const double surr = params.alpha / (2.0 * (1.0 + t * t));
            cv.xs.push_back(h);
            cv.ys.push_back(slope * surr * (1.0 + mapping_dh(kind, h, c, d)));
        }
        curves.push_back(std::move(cv));
    }
    write_svg_plot(path, "dS'/dH vs H by mapping", "H", "dS'/dH", curves, config_snapshot);
}

} // namespace oscnet
