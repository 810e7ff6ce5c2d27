#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cbct/ad/var.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

/// Named parameters in insertion order. Each entry's Var carries its own
/// gradient slot.
class ParamStore {
 public:
    struct Entry {
        std::string name;
        Var var;
    };

    /// Returns a handle sharing the stored node. Throws std::invalid_argument
    /// on a duplicate name.
    Var add(std::string name, Tensor init, bool trainable = true);

    bool contains(std::string_view name) const;
    Var& at(std::string_view name);
    const Var& at(std::string_view name) const;

    std::size_t size() const { return entries_.size(); }
    std::int64_t numel() const;
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    void zero_grad();
    void set_trainable(bool on);
    /// Deep copy: the result shares no graph nodes with this store.
    ParamStore clone() const;

 private:
    std::vector<Entry> entries_;
};

/// Zeroes the gradients of every store, then runs backward from `loss`.
/// Parameters the loss does not reach keep a zero gradient.
void grad(const Var& loss, std::initializer_list<ParamStore*> stores);

/// N(0, 2 / (fan_in + fan_out)) entries.
Tensor glorot_normal(Shape shape, std::int64_t fan_in, std::int64_t fan_out, std::mt19937_64& rng);
Tensor standard_normal(Shape shape, std::mt19937_64& rng);

/// "CBCTPAR1" checkpoint: header {"tensors": [{"name", "shape"}...], "meta": ...}
/// followed by the tensors' float32 data in manifest order.
void save_params(const ParamStore& store, const std::filesystem::path& path, const nlohmann::json& meta = {});
ParamStore load_params(const std::filesystem::path& path, nlohmann::json* meta = nullptr);
/// Copies values by name into an existing store. Every entry of `store` must
/// appear in the file with the same shape; extra file entries are an error.
void load_params_into(ParamStore& store, const std::filesystem::path& path);

}  // namespace cbct::inline CBCT_REAL_NS::ad
