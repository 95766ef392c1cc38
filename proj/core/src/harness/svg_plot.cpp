#include "mspgm/harness/svg_plot.hpp"

#include "mspgm/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mspgm::harness {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Round tick spacing (1, 2 or 5 times a power of ten) giving about `target` ticks.
double tick_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size() || (!s.err.empty() && s.err.size() != s.y.size())) {
            throw InvalidArgument("plot: series '" + s.label + "' has mismatched lengths");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double e = s.err.empty() ? 0.0 : std::abs(s.err[i]);
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - e);
            ymax = std::max(ymax, s.y[i] + e);
        }
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double left = 70;
    const double right = spec.width - 20.0;
    const double top = 40;
    const double bottom = spec.height - 55.0;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
    auto py = [&](double y) { return bottom - (y - ymin) / (ymax - ymin) * (bottom - top); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(spec.title) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(right - left) << "\" height=\""
       << num(bottom - top) << "\" fill=\"none\" stroke=\"black\"/>\n";

    const double xs = tick_step(xmax - xmin, 8);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
        os << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(px(t)) << "\" y2=\""
           << num(bottom + 5) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(px(t)) << "\" y=\"" << num(bottom + 18) << "\" text-anchor=\"middle\">"
           << label_text(t) << "</text>\n";
    }
    const double ys = tick_step(ymax - ymin, 6);
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left) << "\" y2=\""
           << num(py(t)) << "\" stroke=\"black\"/>"
           << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">"
           << label_text(t) << "</text>\n";
    }
    os << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(spec.height - 12.0)
       << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
    os << "<text transform=\"translate(16," << num((top + bottom) / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        if (s.x.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!s.err.empty() && s.err[i] > 0) {
                const double x = px(s.x[i]);
                os << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(s.y[i] - s.err[i])) << "\" x2=\"" << num(x)
                   << "\" y2=\"" << num(py(s.y[i] + s.err[i])) << "\" stroke=\"" << s.color << "\"/>\n";
            }
            if (s.markers) {
                os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\""
                   << s.color << "\"/>\n";
            }
        }
        const double ly = top + 16.0 + 16.0 * static_cast<double>(k);
        os << "<line x1=\"" << num(left + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + 30)
           << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>"
           << "<text x=\"" << num(left + 36) << "\" y=\"" << num(ly) << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace mspgm::harness
