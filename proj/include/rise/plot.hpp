#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

// Minimal static SVG line charts. Panels are stacked vertically in one file.

namespace rise::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct HLine {
    std::string label;
    double y = 0.0;
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<HLine> references;
};

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
    return colors[i % 7];
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Tick step of 1, 2 or 5 times a power of ten giving about `target` ticks.
inline double nice_step(double span, int target = 6) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

/// Keeps the min and max of each of `buckets` x-ranges so spikes survive.
inline Series decimate(const Series& s, std::size_t buckets) {
    if (s.x.size() <= 2 * buckets) return s;
    Series out{s.label, {}, {}, s.dashed};
    const std::size_t n = s.x.size();
    for (std::size_t b = 0; b < buckets; ++b) {
        const std::size_t lo = b * n / buckets, hi = (b + 1) * n / buckets;
        std::size_t imin = lo, imax = lo;
        for (std::size_t i = lo; i < hi; ++i) {
            if (s.y[i] < s.y[imin]) imin = i;
            if (s.y[i] > s.y[imax]) imax = i;
        }
        const auto [a, c] = std::minmax(imin, imax);
        out.x.push_back(s.x[a]);
        out.y.push_back(s.y[a]);
        if (c != a) {
            out.x.push_back(s.x[c]);
            out.y.push_back(s.y[c]);
        }
    }
    return out;
}

class SvgBuilder {
public:
    explicit SvgBuilder(int width) : width_(width) {}

    void panel(const Panel& p, int height = 300) {
        const int top = height_;
        height_ += height;
        const double left = 70, right = width_ - 150, ptop = top + 30, pbottom = top + height - 45;

        body_ += "<text x=\"" + num(width_ / 2.0) + "\" y=\"" + num(top + 18.0) +
                 "\" text-anchor=\"middle\" font-size=\"14\" font-weight=\"bold\">" + escape(p.title) + "</text>\n";

        double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
        for (const auto& s : p.series) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
        body_ += "<rect x=\"" + num(left) + "\" y=\"" + num(ptop) + "\" width=\"" + num(right - left) + "\" height=\"" +
                 num(pbottom - ptop) + "\" fill=\"none\" stroke=\"#444\"/>\n";
        if (!std::isfinite(xmin)) {
            body_ += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num((ptop + pbottom) / 2) +
                     "\" text-anchor=\"middle\" fill=\"#b00\" font-size=\"13\">warning: no data (empty trace)</text>\n";
            ++warnings_;
            return;
        }
        for (const auto& h : p.references) {
            ymin = std::min(ymin, h.y);
            ymax = std::max(ymax, h.y);
        }
        if (xmax <= xmin) xmax = xmin + 1.0;
        if (ymax <= ymin) {
            const double pad = std::max(1e-12, std::abs(ymin) * 0.05 + 1e-9);
            ymin -= pad;
            ymax += pad;
        }
        const double ypad = 0.05 * (ymax - ymin);
        ymin -= ypad;
        ymax += ypad;
        auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (right - left); };
        auto sy = [&](double y) { return pbottom - (y - ymin) / (ymax - ymin) * (pbottom - ptop); };

        const double xs = nice_step(xmax - xmin), ys = nice_step(ymax - ymin);
        for (double v = std::ceil(xmin / xs) * xs; v <= xmax + 1e-9 * xs; v += xs) {
            body_ += "<line x1=\"" + num(sx(v), 6) + "\" y1=\"" + num(ptop) + "\" x2=\"" + num(sx(v), 6) + "\" y2=\"" +
                     num(pbottom) + "\" stroke=\"#eee\"/>\n";
            body_ += "<text x=\"" + num(sx(v), 6) + "\" y=\"" + num(pbottom + 15) +
                     "\" text-anchor=\"middle\" font-size=\"11\">" + num(std::abs(v) < 1e-12 * xs ? 0.0 : v) + "</text>\n";
        }
        for (double v = std::ceil(ymin / ys) * ys; v <= ymax + 1e-9 * ys; v += ys) {
            body_ += "<line x1=\"" + num(left) + "\" y1=\"" + num(sy(v), 6) + "\" x2=\"" + num(right) + "\" y2=\"" +
                     num(sy(v), 6) + "\" stroke=\"#eee\"/>\n";
            body_ += "<text x=\"" + num(left - 5) + "\" y=\"" + num(sy(v) + 4, 6) +
                     "\" text-anchor=\"end\" font-size=\"11\">" + num(std::abs(v) < 1e-12 * ys ? 0.0 : v) + "</text>\n";
        }
        body_ += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(pbottom + 33) +
                 "\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.x_label) + "</text>\n";
        body_ += "<text transform=\"translate(" + num(left - 52) + "," + num((ptop + pbottom) / 2) +
                 ") rotate(-90)\" text-anchor=\"middle\" font-size=\"12\">" + escape(p.y_label) + "</text>\n";

        std::size_t legend = 0;
        for (const auto& h : p.references) {
            body_ += "<line x1=\"" + num(left) + "\" y1=\"" + num(sy(h.y), 6) + "\" x2=\"" + num(right) + "\" y2=\"" +
                     num(sy(h.y), 6) + "\" stroke=\"#888\" stroke-dasharray=\"6,4\"/>\n";
            legend_entry(right, ptop, legend++, "#888", h.label, true);
        }
        for (std::size_t k = 0; k < p.series.size(); ++k) {
            const Series d = decimate(p.series[k], static_cast<std::size_t>(right - left));
            std::string pts;
            for (std::size_t i = 0; i < d.x.size() && i < d.y.size(); ++i) {
                if (!std::isfinite(d.x[i]) || !std::isfinite(d.y[i])) continue;
                pts += num(sx(d.x[i]), 6) + "," + num(sy(d.y[i]), 6) + " ";
            }
            body_ += std::string("<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"") + palette(k) + "\"" +
                     (d.dashed ? " stroke-dasharray=\"4,3\"" : "") + " points=\"" + pts + "\"/>\n";
            legend_entry(right, ptop, legend++, palette(k), d.label, d.dashed);
        }
    }

    std::string str() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) + "\" height=\"" +
               std::to_string(height_) + "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
               body_ + "</svg>\n";
    }

    int warnings() const { return warnings_; }

private:
    void legend_entry(double right, double top, std::size_t i, const char* color, const std::string& label, bool dashed) {
        const double y = top + 12 + 16.0 * static_cast<double>(i);
        body_ += "<line x1=\"" + num(right + 10) + "\" y1=\"" + num(y) + "\" x2=\"" + num(right + 30) + "\" y2=\"" + num(y) +
                 "\" stroke=\"" + color + "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"4,3\"" : "") + "/>\n";
        body_ += "<text x=\"" + num(right + 35) + "\" y=\"" + num(y + 4) + "\" font-size=\"11\">" + escape(label) + "</text>\n";
    }

    int width_;
    int height_ = 0;
    int warnings_ = 0;
    std::string body_;
};

inline std::string render(const std::vector<Panel>& panels, int width = 900, int panel_height = 300) {
    SvgBuilder b(width);
    for (const auto& p : panels) b.panel(p, panel_height);
    return b.str();
}

}  // namespace rise::plot
