#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <sstream>

#include "cbct/errors.hpp"
#include "cbct/harness/harness.hpp"

namespace cbct::harness {

optim::OptimizerConfig HarnessConfig::default_optimizer() {
    optim::OptimizerConfig o;
    o.n_iters = 300;
    o.log_every = 10;
    return o;
}

namespace {

struct Key {
    const char* section;
    const char* key;
    const char* type;
    std::function<void(HarnessConfig&, const std::string&)> set;
};

template <class T>
T parse_number(const std::string& s) {
    T v{};
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) throw std::invalid_argument("empty list entry in '" + s + "'");
        out.push_back(parse_number<int>(item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

#define CBCT_INT(sec, name, field) \
    Key { sec, name, "int", [](HarnessConfig& c, const std::string& v) { c.field = parse_number<int>(v); } }
#define CBCT_REAL(sec, name, field) \
    Key { sec, name, "float", [](HarnessConfig& c, const std::string& v) { c.field = parse_number<double>(v); } }

const std::vector<Key>& schema() {
    static const std::vector<Key> keys{
        {"phantom", "kind", "uniform_ball|shepp_logan_3d|nested_shells",
         [](HarnessConfig& c, const std::string& v) { c.phantom_kind = parse_phantom_kind(v); }},
        CBCT_INT("phantom", "size", size),
        CBCT_REAL("phantom", "voxel_size_mm", voxel_size),
        CBCT_INT("scan", "full_views", full_views),
        CBCT_INT("scan", "views", views),
        CBCT_REAL("scan", "arc_deg", arc_deg),
        CBCT_REAL("scan", "noise_sigma", noise_sigma),
        {"fdk", "filter", "ram_lak|hann_windowed_ram_lak",
         [](HarnessConfig& c, const std::string& v) { c.filter = recon::parse_ramp_filter(v); }},
        CBCT_INT("sirt", "iters", sirt_iters),
        {"generator", "architecture", "unetr|unet3d",
         [](HarnessConfig& c, const std::string& v) {
             if (v == "unetr") c.architecture = gen::Architecture::unetr;
             else if (v == "unet3d") c.architecture = gen::Architecture::unet3d;
             else throw std::invalid_argument("unknown architecture '" + v + "'");
         }},
        CBCT_INT("unetr", "patch", unetr.patch),
        CBCT_INT("unetr", "embed_dim", unetr.embed_dim),
        CBCT_INT("unetr", "n_heads", unetr.n_heads),
        CBCT_INT("unetr", "n_blocks", unetr.n_blocks),
        CBCT_INT("unetr", "mlp_dim", unetr.mlp_dim),
        CBCT_INT("unetr", "in_channels", unetr.in_channels),
        {"unetr", "decoder_channels", "int list",
         [](HarnessConfig& c, const std::string& v) { c.unetr.decoder_channels = parse_int_list(v); }},
        CBCT_INT("unet3d", "patch", unet.patch),
        CBCT_INT("unet3d", "base_channels", unet.base_channels),
        CBCT_INT("unet3d", "depth", unet.depth),
        CBCT_INT("unet3d", "in_channels", unet.in_channels),
        CBCT_REAL("dip", "lr", opt.lr),
        CBCT_REAL("dip", "decay", opt.decay),
        CBCT_INT("dip", "iters", opt.n_iters),
        {"dip", "backend", "gd|adam",
         [](HarnessConfig& c, const std::string& v) { c.opt.backend = optim::parse_backend(v); }},
        {"dip", "mode", "w_zero|w_fixed|reweight",
         [](HarnessConfig& c, const std::string& v) { c.opt.mode = optim::parse_weight_mode(v); }},
        CBCT_REAL("dip", "beta1", opt.beta1),
        CBCT_REAL("dip", "beta2", opt.beta2),
        CBCT_REAL("dip", "eps", opt.eps),
        CBCT_INT("dip", "log_every", opt.log_every),
        CBCT_REAL("dip", "alpha", alpha),
        {"dip", "clip_w_grad", "bool",
         [](HarnessConfig& c, const std::string& v) { c.opt.clip_w_grad = parse_bool(v); }},
        CBCT_REAL("dip", "w_grad_clip", opt.w_grad_clip),
        {"dip", "extractor", "path", [](HarnessConfig& c, const std::string& v) { c.extractor_path = v; }},
        CBCT_INT("ablate", "seeds", ablate_seeds),
        CBCT_INT("ablate", "jobs", jobs),
    };
    return keys;
}

#undef CBCT_INT
#undef CBCT_REAL

}  // namespace

HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' is outside any section");
        bool known_section = false;
        for (const auto& k : schema()) known_section |= section == k.section;
        if (!known_section) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            const Key* match = nullptr;
            for (const auto& k : schema()) {
                if (section == k.section && key == k.key) match = &k;
            }
            if (!match) throw ConfigError("config: unknown key '" + section + "." + key + "'");
            try {
                match->set(base, value.data());
            } catch (const std::exception& e) {
                throw ConfigError("config: bad value for '" + section + "." + key + "' (" + match->type +
                                  "): " + e.what());
            }
        }
    }
    return base;
}

std::string config_schema() {
    std::string out;
    for (const auto& k : schema()) out += std::string(k.section) + "." + k.key + ": " + k.type + "\n";
    return out;
}

}  // namespace cbct::harness
