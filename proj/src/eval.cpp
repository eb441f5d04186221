#include "pcw/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pcw/error.hpp"

namespace pcw::eval {

RocCurve roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_contract(scores.size() == labels.size(), "roc: scores/labels length mismatch");
    check_contract(!scores.empty(), "roc: empty input");
    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        check_contract(labels[i] == 0 || labels[i] == 1, "roc: labels must be 0/1");
        check_contract(std::isfinite(scores[i]) || scores[i] < 0.0, "roc: NaN or +inf score");
        labels[i] == 1 ? ++n_pos : ++n_neg;
    }
    check_contract(n_pos > 0 && n_neg > 0, "roc: need both classes");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        // Tied scores move together: one curve point per distinct threshold.
        while (i < order.size() && scores[order[i]] == t) {
            labels[order[i]] == 1 ? ++tp : ++fp;
            ++i;
        }
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
    }

    double auc = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const RocPoint& a = curve.points[k - 1];
        const RocPoint& b = curve.points[k];
        auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.auc = auc;
    return curve;
}

double tpr_at_fpr(const RocCurve& curve, double fpr_target) {
    check_contract(!curve.points.empty(), "tpr_at_fpr: empty curve");
    check_contract(fpr_target >= 0.0 && fpr_target <= 1.0, "tpr_at_fpr: target outside [0,1]");
    double best = 0.0;
    for (const RocPoint& p : curve.points) {
        if (p.fpr <= fpr_target) best = p.tpr;
    }
    return best;
}

void write_roc_csv(const std::string& path, const RocCurve& curve) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << "threshold,fpr,tpr\n";
    for (const RocPoint& p : curve.points) {
        char line[128];
        if (std::isinf(p.threshold)) {
            std::snprintf(line, sizeof(line), "inf,%.17g,%.17g\n", p.fpr, p.tpr);
        } else {
            std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
        }
        f << line;
    }
}

void write_report_csv(const std::string& path, const std::vector<MethodResult>& results,
                      double fpr_target) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << "method,auc,tpr_at_015\n";
    for (const MethodResult& r : results) {
        char line[160];
        std::snprintf(line, sizeof(line), "%s,%.17g,%.17g\n", r.name.c_str(), r.curve.auc,
                      tpr_at_fpr(r.curve, fpr_target));
        f << line;
    }
}

namespace {

struct Panel {
    double px, py, size;     // top-left corner and side length in svg units
    double lo, hi;           // data domain shown on both axes
};

void append_panel(std::string& svg, const Panel& pn, const std::vector<MethodResult>& results,
                  const char* title) {
    static const char* kColors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d68910"};
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "<rect x='%.1f' y='%.1f' width='%.1f' height='%.1f' fill='white' "
                  "stroke='#444'/>\n",
                  pn.px, pn.py, pn.size, pn.size);
    svg += buf;
    auto X = [&](double v) { return pn.px + (v - pn.lo) / (pn.hi - pn.lo) * pn.size; };
    auto Y = [&](double v) { return pn.py + pn.size - (v - pn.lo) / (pn.hi - pn.lo) * pn.size; };
    for (int g = 1; g < 4; ++g) {
        const double v = pn.lo + (pn.hi - pn.lo) * g / 4.0;
        std::snprintf(buf, sizeof(buf),
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#ddd'/>\n"
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#ddd'/>\n",
                      X(v), pn.py, X(v), pn.py + pn.size, pn.px, Y(v), pn.px + pn.size, Y(v));
        svg += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#bbb' "
                  "stroke-dasharray='4,3'/>\n",
                  X(pn.lo), Y(pn.lo), X(pn.hi), Y(pn.hi));
    svg += buf;
    for (std::size_t m = 0; m < results.size(); ++m) {
        svg += "<polyline fill='none' stroke='";
        svg += kColors[m % 5];
        svg += "' stroke-width='1.5' points='";
        for (const RocPoint& p : results[m].curve.points) {
            if (p.fpr < pn.lo || p.fpr > pn.hi) continue;
            const double ty = std::min(std::max(p.tpr, pn.lo), pn.hi);
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", X(p.fpr), Y(ty));
            svg += buf;
        }
        svg += "'/>\n";
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%.1f' font-family='monospace' font-size='13'>%s</text>\n",
                  pn.px, pn.py - 8.0, title);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%.1f' font-family='monospace' font-size='11'>fpr</text>\n"
                  "<text x='%.1f' y='%.1f' font-family='monospace' font-size='11'>tpr</text>\n",
                  pn.px + pn.size / 2 - 10, pn.py + pn.size + 26, pn.px - 30, pn.py + pn.size / 2);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%.1f' font-family='monospace' font-size='10'>%.2f</text>\n"
                  "<text x='%.1f' y='%.1f' font-family='monospace' font-size='10'>%.2f</text>\n",
                  pn.px - 8, pn.py + pn.size + 12, pn.lo, pn.px + pn.size - 14,
                  pn.py + pn.size + 12, pn.hi);
    svg += buf;
}

}  // namespace

void write_roc_svg(const std::string& path, const std::vector<MethodResult>& results) {
    check_contract(!results.empty(), "write_roc_svg: nothing to plot");
    std::string svg =
        "<svg xmlns='http://www.w3.org/2000/svg' width='980' height='520' "
        "viewBox='0 0 980 520'>\n<rect width='980' height='520' fill='#fafafa'/>\n";
    append_panel(svg, {60, 40, 400, 0.0, 1.0}, results, "receiver operating characteristic");
    append_panel(svg, {540, 40, 400, 0.0, 0.35}, results, "low false-positive corner");

    static const char* kColors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d68910"};
    char buf[256];
    for (std::size_t m = 0; m < results.size(); ++m) {
        const double y = 480.0 + 14.0 * static_cast<double>(m) - 14.0 * results.size() + 14.0;
        std::snprintf(buf, sizeof(buf),
                      "<rect x='60' y='%.1f' width='18' height='4' fill='%s'/>"
                      "<text x='84' y='%.1f' font-family='monospace' font-size='12'>%s "
                      "(auc %.4f)</text>\n",
                      y, kColors[m % 5], y + 5.0, results[m].name.c_str(), results[m].curve.auc);
        svg += buf;
    }
    svg += "</svg>\n";

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + path);
    f << svg;
}

std::string comparison_table(const std::vector<MethodResult>& results, double fpr_target) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %10s %14s\n", "method", "auc", "tpr@fpr=0.15");
    os << line;
    os << "---------------------------------------\n";
    for (const MethodResult& r : results) {
        std::snprintf(line, sizeof(line), "%-14s %10.4f %14.4f\n", r.name.c_str(), r.curve.auc,
                      tpr_at_fpr(r.curve, fpr_target));
        os << line;
    }
    return os.str();
}

}  // namespace pcw::eval
