#include "srw/data.hpp"

#include <algorithm>
#include <cmath>

#include "srw/error.hpp"
#include "srw/io.hpp"
#include "srw/version.hpp"

namespace srw {

namespace origin {
std::string name(std::uint8_t o) {
    switch (o) {
        case kBaseline: return "baseline";
        case kValidation: return "validation";
        case kTest: return "test";
        default:
            if (is_eval(o)) return "eval" + std::to_string(o - kEvalBase);
            return "unknown" + std::to_string(o);
    }
}

std::uint8_t from_name(const std::string& s) {
    if (s == "baseline") return kBaseline;
    if (s == "validation") return kValidation;
    if (s == "test") return kTest;
    if (s.rfind("eval", 0) == 0) return eval_session(std::stoi(s.substr(4)));
    throw DataError("unknown origin tag '" + s + "'");
}
}  // namespace origin

void to_json(nlohmann::json& j, const ChannelStats& s) {
    j = nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}};
}

void from_json(const nlohmann::json& j, ChannelStats& s) {
    j.at("mean").get_to(s.mean);
    j.at("stddev").get_to(s.stddev);
}

std::vector<std::size_t> Dataset::indices_of(std::uint8_t origin_tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].origin == origin_tag) out.push_back(i);
    return out;
}

std::vector<std::int64_t> Dataset::sample_shape() const {
    if (samples.empty()) throw DataError("dataset is empty");
    return samples.front().x.shape;
}

int Dataset::num_classes() const { return meta.at("num_classes").get<int>(); }

namespace {
constexpr const char* kDatasetMagic = "SRWD";
}

void save_dataset(const Dataset& ds, const std::string& path) {
    if (ds.samples.empty()) throw DataError("refusing to save empty dataset");
    BinaryWriter w(path);
    w.str(kDatasetMagic);
    w.u32(kFormatVersion);
    nlohmann::json meta = ds.meta;
    meta["shape"] = ds.samples.front().x.shape;
    const std::string js = meta.dump();
    w.u64(js.size());
    w.str(js);
    w.u64(ds.samples.size());
    const auto shape = ds.samples.front().x.shape;
    for (const auto& s : ds.samples) {
        if (s.x.shape != shape) throw DataError("dataset has mixed sample shapes");
        w.u64(s.id);
        w.u8(s.origin);
        w.u8(static_cast<std::uint8_t>(s.label));
        w.f32_array(s.x.data.data(), s.x.numel());
    }
    if (!w.good()) throw DataError("dataset write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    if (r.str(4) != kDatasetMagic) throw DataError("not a dataset file: " + path);
    const auto version = r.u32();
    if (version != kFormatVersion)
        throw DataError("unsupported dataset version " + std::to_string(version) + ": " + path);
    Dataset ds;
    ds.meta = nlohmann::json::parse(r.str(r.u64()));
    std::vector<std::int64_t> shape = ds.meta.at("shape").get<std::vector<std::int64_t>>();
    const std::uint64_t count = r.u64();
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        s.id = r.u64();
        s.origin = r.u8();
        s.label = r.u8();
        s.x = Tensor<float>(shape);
        r.f32_array(s.x.data.data(), s.x.numel());
    }
    return ds;
}

ChannelStats compute_channel_stats(const std::vector<Sample>& samples,
                                   const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw DataError("channel stats: no samples");
    const int channels = static_cast<int>(samples[indices[0]].x.shape.back());
    std::vector<double> acc(static_cast<std::size_t>(channels), 0.0);
    std::vector<double> acc2(static_cast<std::size_t>(channels), 0.0);
    std::size_t per_channel = 0;
    for (auto idx : indices) {
        const auto& x = samples[idx].x;
        per_channel += x.numel() / static_cast<std::size_t>(channels);
        for (std::size_t i = 0; i < x.numel(); i += static_cast<std::size_t>(channels))
            for (int c = 0; c < channels; ++c) {
                const double v = x.data[i + static_cast<std::size_t>(c)];
                acc[static_cast<std::size_t>(c)] += v;
                acc2[static_cast<std::size_t>(c)] += v * v;
            }
    }
    ChannelStats st;
    st.mean.resize(static_cast<std::size_t>(channels));
    st.stddev.resize(static_cast<std::size_t>(channels));
    for (int c = 0; c < channels; ++c) {
        const double mu = acc[static_cast<std::size_t>(c)] / static_cast<double>(per_channel);
        const double var =
            std::max(0.0, acc2[static_cast<std::size_t>(c)] / static_cast<double>(per_channel) - mu * mu);
        st.mean[static_cast<std::size_t>(c)] = mu;
        st.stddev[static_cast<std::size_t>(c)] = var > 0 ? std::sqrt(var) : 1.0;
    }
    return st;
}

void apply_channel_stats(std::vector<Sample>& samples, const ChannelStats& stats) {
    const int channels = static_cast<int>(stats.mean.size());
    for (auto& s : samples) {
        for (std::size_t i = 0; i < s.x.numel(); i += static_cast<std::size_t>(channels))
            for (int c = 0; c < channels; ++c) {
                auto& v = s.x.data[i + static_cast<std::size_t>(c)];
                v = static_cast<float>((v - stats.mean[static_cast<std::size_t>(c)]) /
                                       stats.stddev[static_cast<std::size_t>(c)]);
            }
    }
}

}  // namespace srw
