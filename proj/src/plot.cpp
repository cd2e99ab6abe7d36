#include "reactgen/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "reactgen/errors.hpp"

namespace reactgen::plot {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// One polyline through (t, row t of column dim), mapped into the panel box.
std::string polyline(const MatD& m, int dim, double x0, double y0, double wpx, double hpx,
                     double lo, double hi, const char* color) {
    std::ostringstream o;
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    const Eigen::Index T = m.rows();
    const double span = (hi > lo) ? hi - lo : 1.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double x = x0 + (T > 1 ? wpx * static_cast<double>(t) / (T - 1) : 0.0);
        const double y = y0 + hpx - hpx * (m(t, dim) - lo) / span;
        o << num(x) << "," << num(y) << (t + 1 < T ? " " : "");
    }
    o << "\"/>\n";
    return o.str();
}

} // namespace

std::string traces_svg(const MatD& speaker, const MatD& listener, int n_dims) {
    if (speaker.rows() != listener.rows())
        throw DataError("traces_svg: speaker and listener must cover the same frames");
    if (n_dims < 1) throw ConfigError("traces_svg: n_dims must be positive");
    const int dims = std::min<int>(n_dims, static_cast<int>(std::min(speaker.cols(),
                                                                     listener.cols())));
    const double margin = 46.0, panel_w = 820.0, panel_h = 96.0, gap = 26.0;
    const double width = margin * 2 + panel_w;
    const double height = margin * 2 + dims * panel_h + (dims - 1) * gap;

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    o << "<text x=\"" << num(margin) << "\" y=\"24\" font-family=\"monospace\" font-size=\"13\">"
      << "speaker (grey) vs generated listener (red), " << speaker.rows() << " frames</text>\n";

    for (int dmi = 0; dmi < dims; ++dmi) {
        const double y0 = margin + dmi * (panel_h + gap);
        double lo = speaker.col(dmi).minCoeff(), hi = speaker.col(dmi).maxCoeff();
        lo = std::min(lo, listener.col(dmi).minCoeff());
        hi = std::max(hi, listener.col(dmi).maxCoeff());
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        o << "<rect x=\"" << num(margin) << "\" y=\"" << num(y0) << "\" width=\"" << num(panel_w)
          << "\" height=\"" << num(panel_h)
          << "\" fill=\"#f7f7f7\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
        o << "<text x=\"4\" y=\"" << num(y0 + 14) << "\" font-family=\"monospace\""
          << " font-size=\"11\">dim " << dmi << "</text>\n";
        o << "<text x=\"4\" y=\"" << num(y0 + 28) << "\" font-family=\"monospace\""
          << " font-size=\"9\">" << num(hi) << "</text>\n";
        o << "<text x=\"4\" y=\"" << num(y0 + panel_h) << "\" font-family=\"monospace\""
          << " font-size=\"9\">" << num(lo) << "</text>\n";
        o << polyline(speaker, dmi, margin, y0, panel_w, panel_h, lo, hi, "#888888");
        o << polyline(listener, dmi, margin, y0, panel_w, panel_h, lo, hi, "#d03030");
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace reactgen::plot
