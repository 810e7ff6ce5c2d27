#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "cbct/optim/optim.hpp"

namespace cbct::inline CBCT_REAL_NS::optim {

namespace {

void put(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

}  // namespace

std::string RunLog::csv() const {
    std::string out = "iter,total_loss,mse";
    for (int i = 1; i <= k; ++i) out += ",perc_" + std::to_string(i);
    for (int i = 1; i <= k; ++i) out += ",w_" + std::to_string(i);
    out += ",psnr_ref,ssim_ref,psnr_gt,ssim_gt,ref_scale\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iter);
        for (double v : {r.total_loss, r.mse}) {
            out += ',';
            put(out, v);
        }
        for (const auto* vec : {&r.perceptual, &r.w}) {
            for (int i = 0; i < k; ++i) {
                out += ',';
                put(out, i < static_cast<int>(vec->size()) ? (*vec)[static_cast<std::size_t>(i)] : std::nan(""));
            }
        }
        for (double v : {r.psnr_ref, r.ssim_ref, r.psnr_gt, r.ssim_gt, r.ref_scale}) {
            out += ',';
            put(out, v);
        }
        out += '\n';
    }
    return out;
}

void RunLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << csv();
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

int RunLog::dip_count(double threshold_db) const {
    int dips = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i - 1].psnr_ref - rows[i].psnr_ref > threshold_db) ++dips;
    }
    return dips;
}

}  // namespace cbct::inline CBCT_REAL_NS::optim
