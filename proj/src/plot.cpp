#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <sstream>

#include "xenopower/io.hpp"

namespace xenopower {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 120.0; // legend column
constexpr double kTop = 32.0;
constexpr double kBottom = 56.0;

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.2f", v);
    return buf.data();
}

} // namespace

std::string render_power_plot(const std::vector<PowerRow>& rows, double target_power,
                              std::pair<double, double> y_range) {
    if (rows.empty()) throw ValidationError("cannot plot an empty power table");
    const auto [lo, hi] = y_range;
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) throw ValidationError("y range must satisfy 0 <= lo < hi <= 1");

    std::map<int, std::vector<std::pair<int, double>>> series;
    int m_min = rows.front().m, m_max = rows.front().m;
    for (const auto& r : rows) {
        series[r.n].emplace_back(r.m, r.power / 100.0);
        m_min = std::min(m_min, r.m);
        m_max = std::max(m_max, r.m);
    }
    for (auto& [n, pts] : series) std::sort(pts.begin(), pts.end());

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double m) {
        if (m_max == m_min) return kLeft + plot_w / 2.0;
        return kLeft + (m - m_min) / (m_max - m_min) * plot_w;
    };
    auto sy = [&](double p) {
        p = std::clamp(p, lo, hi);
        return kTop + (hi - p) / (hi - lo) * plot_h;
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
        << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
        << "\" fill=\"white\"/>\n";

    // Axes and ticks.
    svg << "<g stroke=\"black\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
    svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
        << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n";
    svg << "</g>\n";
    for (int m = m_min; m <= m_max; ++m) {
        const double x = sx(m);
        svg << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(x)
            << "\" y2=\"" << num(kTop + plot_h + 5) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h + 18)
            << "\" text-anchor=\"middle\">" << m << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double p = lo + (hi - lo) * k / 5.0;
        const double y = sy(p);
        svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft)
            << "\" y2=\"" << num(y) << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 4)
            << "\" text-anchor=\"end\">" << num(p) << "</text>\n";
    }
    svg << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 16)
        << "\" text-anchor=\"middle\">m (animals per arm per PDX line)</text>\n";
    svg << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << num(kTop + plot_h / 2) << ")\">Power</text>\n";

    if (target_power >= lo && target_power <= hi) {
        const double y = sy(target_power);
        svg << "<line class=\"target\" x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
            << num(kLeft + plot_w) << "\" y2=\"" << num(y)
            << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    }

    std::size_t index = 0;
    for (const auto& [n, pts] : series) {
        const char* color = kPalette[index % kPalette.size()];
        svg << "<g class=\"series\" data-n=\"" << n << "\" stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        svg << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < pts.size(); ++k) {
            svg << (k ? " " : "") << num(sx(pts[k].first)) << ',' << num(sy(pts[k].second));
        }
        svg << "\"/>\n";
        for (const auto& [m, p] : pts) {
            svg << "<circle cx=\"" << num(sx(m)) << "\" cy=\"" << num(sy(p)) << "\" r=\"3\"/>\n";
        }
        const double ly = kTop + 10 + 18.0 * static_cast<double>(index);
        const double lx = kLeft + plot_w + 16;
        svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20)
            << "\" y2=\"" << num(ly) << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\" stroke=\"none\">n = "
            << n << "</text>\n";
        svg << "</g>\n";
        ++index;
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace xenopower
