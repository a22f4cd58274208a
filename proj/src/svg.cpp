#include <algorithm>
#include <fstream>
#include <sstream>

#include "trilead/explain.hpp"

namespace trilead {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(2);
    ss << std::fixed << v;
    return ss.str();
}

}  // namespace

void render_explanation_svg(const Tensor3<float>& input, const Explanation& ex,
                            const std::string& out_path, const RenderOptions& opts) {
    require(input.batch == 1 && input.channels == 3, "render: input must be [1,3,L]");
    for (int i = 0; i < 3; ++i)
        require(static_cast<int>(ex.maps[static_cast<std::size_t>(i)].size()) == input.length,
                "render: explanation length does not match signal length");

    const int W = opts.panel_width;
    const int H = opts.panel_height;
    const int margin = 10;
    const int total_h = 3 * (H + margin) + margin;
    const int L = input.length;
    const int strips = std::min(opts.heat_strips, L);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << total_h
        << "\" viewBox=\"0 0 " << W << " " << total_h << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << total_h << "\" fill=\"white\"/>\n";

    for (int lead = 0; lead < 3; ++lead) {
        const int top = margin + lead * (H + margin);
        const auto sig = input.row(0, lead);
        const auto& m = ex.maps[static_cast<std::size_t>(lead)];
        svg << "<g id=\"lead-" << opts.lead_names[static_cast<std::size_t>(lead)] << "\">\n";

        // heat background: strips colored by the max map value inside
        const double per = static_cast<double>(L) / strips;
        const double sw = static_cast<double>(W) / strips;
        for (int s = 0; s < strips; ++s) {
            const int lo = static_cast<int>(s * per);
            const int hi = std::min(L, static_cast<int>((s + 1) * per) + 1);
            float mx = 0.0f;
            for (int t = lo; t < hi; ++t) mx = std::max(mx, m[t]);
            if (mx <= 0.0f) continue;
            svg << "<rect x=\"" << fmt(s * sw) << "\" y=\"" << top << "\" width=\""
                << fmt(sw + 0.5) << "\" height=\"" << H << "\" fill=\"rgb(220,40,30)\" "
                << "fill-opacity=\"" << fmt(0.75 * mx) << "\"/>\n";
        }

        // signal trace scaled into the panel
        float lo = sig.minCoeff(), hi = sig.maxCoeff();
        if (hi <= lo) hi = lo + 1.0f;
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.8\" points=\"";
        for (int t = 0; t < L; ++t) {
            const double x = static_cast<double>(t) / (L - 1) * W;
            const double y = top + H - (sig[t] - lo) / (hi - lo) * (H - 24) - 12;
            svg << fmt(x) << "," << fmt(y) << " ";
        }
        svg << "\"/>\n";
        svg << "<text x=\"6\" y=\"" << top + 16
            << "\" font-family=\"monospace\" font-size=\"14\">lead "
            << opts.lead_names[static_cast<std::size_t>(lead)] << "  alpha="
            << fmt(ex.alpha[static_cast<std::size_t>(lead)]) << "</text>\n";
        svg << "</g>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write figure to path: " + out_path);
    out << svg.str();
    if (!out) throw std::runtime_error("short write to figure path: " + out_path);
}

}  // namespace trilead
