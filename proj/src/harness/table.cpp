#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cbct/errors.hpp"
#include "cbct/eval/metrics.hpp"
#include "cbct/harness/harness.hpp"

namespace cbct::harness {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": not a number '" + s + "'");
    }
}

struct Stats {
    double mean = 0, std = 0;
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        for (double x : v) s.std += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(s.std / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

std::string eval_csv(const std::vector<EvalRecord>& records) {
    std::string out = "method,case,psnr,ssim\n";
    for (const auto& r : records) {
        out += r.method + "," + r.case_id + "," + fmt("%.6f", r.psnr) + "," + fmt("%.6f", r.ssim) + "\n";
    }
    return out;
}

std::vector<EvalRecord> read_eval_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line) || line != "method,case,psnr,ssim") {
        throw FormatError(path.string() + ": expected header 'method,case,psnr,ssim'");
    }
    std::vector<EvalRecord> out;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 4) throw FormatError(path.string() + ": expected 4 columns in '" + line + "'");
        out.push_back({cells[0], cells[1], to_double(cells[2], path), to_double(cells[3], path)});
    }
    return out;
}

std::string summary_table(const std::vector<EvalRecord>& records) {
    // method -> case -> record, in first-appearance order of methods.
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::string, EvalRecord>> by_method;
    for (const auto& r : records) {
        if (!by_method.count(r.method)) methods.push_back(r.method);
        if (!by_method[r.method].emplace(r.case_id, r).second) {
            throw FormatError("duplicate record for method '" + r.method + "', case '" + r.case_id + "'");
        }
    }

    std::string out = "| method | n | PSNR (dB) | SSIM |\n|---|---|---|---|\n";
    for (const auto& m : methods) {
        std::vector<double> p, s;
        for (const auto& [c, r] : by_method[m]) {
            p.push_back(r.psnr);
            s.push_back(r.ssim);
        }
        const Stats ps = stats(p), ss = stats(s);
        out += "| " + m + " | " + std::to_string(p.size()) + " | " + fmt("%.2f", ps.mean) + " ± " +
               fmt("%.2f", ps.std) + " | " + fmt("%.4f", ss.mean) + " ± " + fmt("%.4f", ss.std) + " |\n";
    }

    out += "\nOne-sided Wilcoxon signed-rank p-values (H1: A > B)\n\n";
    out += "| A | B | n | p (PSNR) | p (SSIM) |\n|---|---|---|---|---|\n";
    for (const auto& a : methods) {
        for (const auto& b : methods) {
            if (a == b) continue;
            std::vector<double> pa, pb, sa, sb;
            for (const auto& [c, ra] : by_method[a]) {
                auto it = by_method[b].find(c);
                if (it == by_method[b].end()) continue;
                pa.push_back(ra.psnr);
                pb.push_back(it->second.psnr);
                sa.push_back(ra.ssim);
                sb.push_back(it->second.ssim);
            }
            auto test = [](const std::vector<double>& x, const std::vector<double>& y) -> std::string {
                try {
                    return fmt("%.5f", eval::wilcoxon_one_sided(x, y));
                } catch (const std::invalid_argument& e) {
                    return std::string("error: ") + e.what();
                }
            };
            out += "| " + a + " | " + b + " | " + std::to_string(pa.size()) + " | " + test(pa, pb) + " | " +
                   test(sa, sb) + " |\n";
        }
    }
    return out;
}

}  // namespace cbct::harness
