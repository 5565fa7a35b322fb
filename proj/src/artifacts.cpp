#include "artifacts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "sphj/error.hpp"

#ifndef SPHJ_VERSION
#define SPHJ_VERSION "0.0.0"
#endif

namespace sphj {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorKind::Io,
            "sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string fmt_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::row(const std::vector<double>& values) {
    require(values.size() == header_.size(), ErrorKind::InvalidArgument, "csv row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) body_ += ',';
        body_ += fmt_num(values[i]);
    }
    body_ += '\n';
}

std::string CsvTable::str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) s += ',';
        s += header_[i];
    }
    return s + '\n' + body_;
}

namespace {

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

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Scale {
    double lo, hi;
    bool log;
    double a0, a1;  // pixel range
    double map(double v) const {
        const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
        return a0 + t * (a1 - a0);
    }
};

Scale make_scale(std::vector<double> vals, bool log, double a0, double a1) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : vals) {
        if (!std::isfinite(v) || (log && v <= 0.0)) continue;
        const double w = log ? std::log10(v) : v;
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
        if (hi <= lo) hi = lo + 1.0;
    } else {
        const double pad = hi > lo ? 0.05 * (hi - lo) : 0.5;
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, log, a0, a1};
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    const double W = 560, H = 400, L = 70, R = 150, T = 40, B = 50;
    std::vector<double> xs, ys;
    for (const auto& s : spec.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const Scale sx = make_scale(xs, spec.log_x, L, W - R);
    const Scale sy = make_scale(ys, spec.log_y, H - B, T);
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(W) + "\" height=\"" + px(H) + "\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + px(L) + "\" y=\"24\" font-size=\"14\">" + esc(spec.title) + "</text>\n";
    o += "<rect x=\"" + px(L) + "\" y=\"" + px(T) + "\" width=\"" + px(W - R - L) + "\" height=\"" + px(H - B - T) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    auto ticks = [&](const Scale& s, bool horizontal) {
        std::vector<double> at;
        if (s.log) {
            for (double e = s.lo; e <= s.hi + 1e-9; e += 1.0) at.push_back(e);
        } else {
            for (int k = 0; k <= 4; ++k) at.push_back(s.lo + (s.hi - s.lo) * k / 4.0);
        }
        for (double w : at) {
            const double v = s.log ? std::pow(10.0, w) : w;
            const double p = s.map(v);
            char lab[32];
            if (s.log) std::snprintf(lab, sizeof lab, "1e%d", static_cast<int>(std::lround(w)));
            else std::snprintf(lab, sizeof lab, "%.3g", v);
            if (horizontal) {
                o += "<line x1=\"" + px(p) + "\" y1=\"" + px(H - B) + "\" x2=\"" + px(p) + "\" y2=\"" + px(H - B + 5) +
                     "\" stroke=\"black\"/>\n";
                o += "<text x=\"" + px(p) + "\" y=\"" + px(H - B + 18) + "\" font-size=\"11\" text-anchor=\"middle\">" +
                     lab + "</text>\n";
            } else {
                o += "<line x1=\"" + px(L - 5) + "\" y1=\"" + px(p) + "\" x2=\"" + px(L) + "\" y2=\"" + px(p) +
                     "\" stroke=\"black\"/>\n";
                o += "<text x=\"" + px(L - 8) + "\" y=\"" + px(p + 4) + "\" font-size=\"11\" text-anchor=\"end\">" +
                     lab + "</text>\n";
            }
        }
    };
    ticks(sx, true);
    ticks(sy, false);
    o += "<text x=\"" + px(0.5 * (L + W - R)) + "\" y=\"" + px(H - 12) + "\" font-size=\"12\" text-anchor=\"middle\">" +
         esc(spec.x_label) + "</text>\n";
    o += "<text x=\"16\" y=\"" + px(0.5 * (T + H - B)) + "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         px(0.5 * (T + H - B)) + ")\">" + esc(spec.y_label) + "</text>\n";
    for (std::size_t k = 0; k < spec.series.size(); ++k) {
        const auto& s = spec.series[k];
        const std::string c = colors[k % 6];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((spec.log_x && s.x[i] <= 0) || (spec.log_y && s.y[i] <= 0)) continue;
            const double a = sx.map(s.x[i]), b = sy.map(s.y[i]);
            pts += px(a) + "," + px(b) + " ";
            o += "<circle cx=\"" + px(a) + "\" cy=\"" + px(b) + "\" r=\"3\" fill=\"" + c + "\"/>\n";
        }
        if (s.lines && !pts.empty())
            o += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + c + "\"/>\n";
        const double ly = T + 16.0 * static_cast<double>(k) + 8.0;
        o += "<rect x=\"" + px(W - R + 10) + "\" y=\"" + px(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" + c + "\"/>\n";
        o += "<text x=\"" + px(W - R + 24) + "\" y=\"" + px(ly + 1) + "\" font-size=\"11\">" + esc(s.label) + "</text>\n";
    }
    return o + "</svg>\n";
}

void ArtifactSet::add(const std::string& name, std::string bytes) { files_[name] = std::move(bytes); }

std::vector<std::string> ArtifactSet::names() const {
    std::vector<std::string> n;
    for (const auto& [k, v] : files_) n.push_back(k);
    return n;
}

std::string ArtifactSet::commit(const std::string& dir, const std::string& config_canonical,
                                const std::string& command) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
    nlohmann::ordered_json man;
    man["command"] = command;
    man["code_version"] = SPHJ_VERSION;
    man["config_sha256"] = sha256_hex(config_canonical);
    auto& files = man["files"];
    files = nlohmann::ordered_json::array();
    for (const auto& [name, bytes] : files_) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        require(static_cast<bool>(f), ErrorKind::Io, "cannot write " + name);
        files.push_back({{"name", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    const std::string text = man.dump(2) + "\n";
    std::ofstream f(fs::path(dir) / "manifest.json", std::ios::binary);
    f << text;
    require(static_cast<bool>(f), ErrorKind::Io, "cannot write manifest.json");
    return text;
}

}  // namespace sphj
