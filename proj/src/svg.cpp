#include "vpme/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vpme {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

}  // namespace

bool write_svg(const std::string& path, const Plot& p) {
    auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
    auto ok = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!p.logx || x > 0) && (!p.logy || y > 0);
    };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : p.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!ok(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!(x0 <= x1 && y0 <= y1)) return false;
    if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
    if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
    const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
    x0 -= padx; x1 += padx; y0 -= pady; y1 += pady;

    const double W = 640, H = 440, L = 80, R = 170, T = 40, B = 60;
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(p.title) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        double vx = x0 + (x1 - x0) * k / 4, vy = y0 + (y1 - y0) * k / 4;
        double lx = p.logx ? std::pow(10.0, vx) : vx, ly = p.logy ? std::pow(10.0, vy) : vy;
        o << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << fmt(lx) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << fmt(ly) << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << esc(p.xlabel)
      << "</text>\n";
    o << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(p.ylabel) << "</text>\n";
    int c = 0;
    for (const auto& s : p.series) {
        const char* col = kColors[c % 6];
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            if (ok(s.x[i], s.y[i])) pts << px(tx(s.x[i])) << ',' << py(ty(s.y[i])) << ' ';
        if (s.line)
            o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts.str()
              << "\"/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
                if (ok(s.x[i], s.y[i]))
                    o << "<circle cx=\"" << px(tx(s.x[i])) << "\" cy=\"" << py(ty(s.y[i])) << "\" r=\"3\" fill=\""
                      << col << "\"/>\n";
        double ly = T + 16 + 18 * c;
        o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
          << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << esc(s.label) << "</text>\n";
        ++c;
    }
    o << "</svg>\n";
    std::ofstream f(path);
    if (!f) return false;
    f << o.str();
    return static_cast<bool>(f);
}

}  // namespace vpme
