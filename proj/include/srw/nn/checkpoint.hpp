#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "srw/io.hpp"
#include "srw/nn/model.hpp"
#include "srw/version.hpp"

namespace srw::nn {

// Checkpoint container: magic "SRWM", u32 format version, u64 JSON length,
// descriptor JSON (UTF-8), then each tensor as a shape header (u32 ndim,
// u64 dims) followed by little-endian f32 data. Tensor order is the model's
// parameter enumeration followed by batch-norm running statistics.
inline constexpr const char* kModelMagic = "SRWM";

template <class S>
void save_checkpoint(Model<S>& model, const std::string& path) {
    BinaryWriter w(path);
    w.str(kModelMagic);
    w.u32(kFormatVersion);
    nlohmann::json meta;
    meta["descriptor"] = model.desc;
    meta["seed"] = model.seed;
    const std::string js = meta.dump();
    w.u64(js.size());
    w.str(js);

    auto params = model.parameters();
    auto state = model.state_tensors();
    w.u32(static_cast<std::uint32_t>(params.size() + state.size()));
    auto write_tensor = [&](const Tensor<S>& t) {
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape) w.u64(static_cast<std::uint64_t>(d));
        if constexpr (std::is_same_v<S, float>) {
            w.f32_array(t.data.data(), t.numel());
        } else {
            for (auto v : t.data) w.f32(static_cast<float>(v));
        }
    };
    for (auto* p : params) write_tensor(p->value);
    for (auto* t : state) write_tensor(*t);
    if (!w.good()) throw DataError("checkpoint write failed: " + path);
}

template <class S>
Model<S> load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    if (r.str(4) != kModelMagic) throw DataError("not a model checkpoint: " + path);
    const auto version = r.u32();
    if (version != kFormatVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    const auto json_len = r.u64();
    nlohmann::json meta = nlohmann::json::parse(r.str(json_len));
    ArchitectureDescriptor desc = meta.at("descriptor").get<ArchitectureDescriptor>();
    const std::uint64_t seed = meta.at("seed").get<std::uint64_t>();

    Model<S> model = build_model<S>(desc, seed);
    auto params = model.parameters();
    auto state = model.state_tensors();
    const auto count = r.u32();
    if (count != params.size() + state.size())
        throw DataError("checkpoint tensor count mismatch: " + path);
    auto read_tensor = [&](Tensor<S>& t) {
        const auto ndim = r.u32();
        std::vector<std::int64_t> dims(ndim);
        for (auto& d : dims) d = static_cast<std::int64_t>(r.u64());
        if (dims != t.shape)
            throw DataError("checkpoint tensor shape mismatch: " + path);
        if constexpr (std::is_same_v<S, float>) {
            r.f32_array(t.data.data(), t.numel());
        } else {
            for (auto& v : t.data) v = static_cast<S>(r.f32());
        }
    };
    for (auto* p : params) read_tensor(p->value);
    for (auto* t : state) read_tensor(*t);
    return model;
}

}  // namespace srw::nn
