#pragma once
#include <map>
#include <string>
#include <vector>

namespace sphj {

std::string sha256_hex(const std::string& bytes);

// numbers printed with round-trip precision so reruns compare byte for byte
std::string fmt_num(double v);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void row(const std::vector<double>& values);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::string body_;
};

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool lines = true;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = true;
    bool log_y = true;
    std::vector<PlotSeries> series;
};

std::string render_svg(const PlotSpec& spec);

// Files are held in memory and written together, so a failed run leaves nothing behind.
class ArtifactSet {
public:
    void add(const std::string& name, std::string bytes);
    bool empty() const { return files_.empty(); }
    std::vector<std::string> names() const;
    // writes every file plus manifest.json; returns the manifest text
    std::string commit(const std::string& dir, const std::string& config_canonical, const std::string& command) const;

private:
    std::map<std::string, std::string> files_;
};

}  // namespace sphj
