#include "cbct/ad/param_store.hpp"

#include <cmath>
#include <stdexcept>

#include "cbct/errors.hpp"
#include "cbct/io.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

Var ParamStore::add(std::string name, Tensor init, bool trainable) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
    Var v = trainable ? Var::parameter(std::move(init)) : Var::constant(std::move(init));
    entries_.push_back({std::move(name), std::move(v)});
    return entries_.back().var;
}

bool ParamStore::contains(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

Var& ParamStore::at(std::string_view name) {
    for (auto& e : entries_) {
        if (e.name == name) return e.var;
    }
    throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Var& ParamStore::at(std::string_view name) const {
    return const_cast<ParamStore*>(this)->at(name);
}

std::int64_t ParamStore::numel() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.var.numel();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) e.var.zero_grad();
}

void ParamStore::set_trainable(bool on) {
    for (auto& e : entries_) e.var.set_requires_grad(on);
}

ParamStore ParamStore::clone() const {
    ParamStore out;
    for (const auto& e : entries_) out.add(e.name, e.var.value(), e.var.requires_grad());
    return out;
}

void grad(const Var& loss, std::initializer_list<ParamStore*> stores) {
    for (ParamStore* s : stores) s->zero_grad();
    backward(loss);
}

Tensor glorot_normal(Shape shape, std::int64_t fan_in, std::int64_t fan_out, std::mt19937_64& rng) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    std::normal_distribution<double> dist(0.0, std_dev);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<real>(dist(rng));
    return t;
}

Tensor standard_normal(Shape shape, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<real>(dist(rng));
    return t;
}

void save_params(const ParamStore& store, const std::filesystem::path& path, const nlohmann::json& meta) {
    nlohmann::json manifest = nlohmann::json::array();
    std::vector<float> payload;
    payload.reserve(static_cast<std::size_t>(store.numel()));
    for (const auto& e : store) {
        manifest.push_back({{"name", e.name}, {"shape", e.var.shape()}});
        for (real v : e.var.value().values()) payload.push_back(static_cast<float>(v));
    }
    nlohmann::json header = {{"tensors", manifest}};
    if (!meta.is_null()) header["meta"] = meta;
    write_container(path, kParamsMagic, header, payload);
}

ParamStore load_params(const std::filesystem::path& path, nlohmann::json* meta) {
    Container c = read_container(path, kParamsMagic);
    if (!c.header.contains("tensors") || !c.header["tensors"].is_array()) {
        throw FormatError(path.string() + ": missing tensor manifest");
    }
    ParamStore store;
    std::size_t offset = 0;
    try {
        for (const auto& t : c.header["tensors"]) {
            auto name = t.at("name").get<std::string>();
            auto shape = t.at("shape").get<Shape>();
            const auto n = static_cast<std::size_t>(shape_numel(shape));
            if (offset + n > c.payload.size()) throw FormatError(path.string() + ": payload shorter than manifest");
            std::vector<real> data(c.payload.begin() + static_cast<std::ptrdiff_t>(offset),
                                   c.payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
            offset += n;
            store.add(std::move(name), Tensor(std::move(shape), std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad manifest entry: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (offset != c.payload.size()) throw FormatError(path.string() + ": payload longer than manifest");
    if (meta) *meta = c.header.value("meta", nlohmann::json{});
    return store;
}

void load_params_into(ParamStore& store, const std::filesystem::path& path) {
    ParamStore file = load_params(path);
    if (file.size() != store.size()) {
        throw FormatError(path.string() + ": checkpoint has " + std::to_string(file.size()) +
                          " tensors, expected " + std::to_string(store.size()));
    }
    for (auto& e : store) {
        if (!file.contains(e.name)) throw FormatError(path.string() + ": missing tensor '" + e.name + "'");
        const Tensor& src = file.at(e.name).value();
        if (src.shape() != e.var.shape()) {
            throw FormatError(path.string() + ": tensor '" + e.name + "' has shape " + shape_str(src.shape()) +
                              ", expected " + shape_str(e.var.shape()));
        }
        e.var.mutable_value() = src;
    }
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
