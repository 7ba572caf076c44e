#include "srw/shap_explain.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "srw/error.hpp"
#include "srw/io.hpp"
#include "srw/parallel.hpp"
#include "srw/version.hpp"

namespace srw::shap {

PredictFn<float> make_class_predict_fn(const nn::Model<float>& infer_model, int class_a,
                                       int class_b, bool explain_logit) {
    const nn::Model<float>* model = &infer_model;
    return [model, class_a, class_b, explain_logit](const std::vector<Tensor<float>>& inputs) {
        const auto& shape = inputs[0].shape;
        Tensor<float> batch({static_cast<std::int64_t>(inputs.size()), shape[0], shape[1], shape[2]});
        std::size_t off = 0;
        for (const auto& in : inputs) {
            std::copy(in.data.begin(), in.data.end(), batch.data.begin() + static_cast<std::ptrdiff_t>(off));
            off += in.numel();
        }
        auto [emb, logits] = nn::forward(*model, batch);
        (void)emb;
        Tensor<float> scores = explain_logit ? logits : nn::softmax_rows(logits);
        std::vector<std::vector<double>> out(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i)
            out[i] = {static_cast<double>(scores.at2(static_cast<std::int64_t>(i), class_a)),
                      static_cast<double>(scores.at2(static_cast<std::int64_t>(i), class_b))};
        return out;
    };
}

std::vector<WrongSampleExplanation> explain_wrong_samples(
    const nn::Model<float>& model, const std::vector<const Sample*>& samples,
    const std::vector<int>& predicted, const Tensor<float>& background, const ExplainConfig& cfg) {
    if (samples.size() != predicted.size())
        throw std::invalid_argument("explain_wrong_samples: samples/predictions length mismatch");
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i]->label == predicted[i])
            throw std::invalid_argument("explain_wrong_samples: sample " +
                                        std::to_string(samples[i]->id) +
                                        " is correctly predicted (y == y_hat)");
    if (samples.empty()) return {};

    nn::Model<float> infer_model = model;
    infer_model.set_train(false);

    const auto shape = samples[0]->x.shape;
    const FeaturePartition part =
        partition_grid(shape, cfg.block_rows, cfg.block_cols, cfg.per_channel);
    MaskingConfig<float> masking{background};
    if (masking.background.shape != shape)
        throw std::invalid_argument("explain_wrong_samples: background shape mismatch");

    std::vector<WrongSampleExplanation> out(samples.size());
    parallel_for(samples.size(), cfg.threads, [&](std::size_t i) {
        const Sample& s = *samples[i];
        auto f = make_class_predict_fn(infer_model, s.label, predicted[i], cfg.explain_logit);
        ShapResult res;
        if (cfg.mode == "exact")
            res = shapley_exact(f, s.x, part, masking, cfg.eval_batch);
        else
            res = shapley_sampled(f, s.x, part, masking, cfg.permutations,
                                  derive_seed(cfg.seed, s.id), cfg.eval_batch);
        WrongSampleExplanation e;
        e.id = s.id;
        e.label = s.label;
        e.predicted = predicted[i];
        e.maps_label = attributions_to_maps(res.phi[0], part);
        e.maps_predicted = attributions_to_maps(res.phi[1], part);
        e.phi0_label = res.phi0[0];
        e.phi0_predicted = res.phi0[1];
        const auto full = f({s.x})[0];
        e.f_label = full[0];
        e.f_predicted = full[1];
        for (const auto& per_class : res.stderr_)
            for (double v : per_class) e.max_stderr = std::max(e.max_stderr, v);
        out[i] = std::move(e);
    });
    return out;
}

namespace {
constexpr const char* kShapMagic = "SRWS";
}

void save_explanations(const std::vector<WrongSampleExplanation>& exps, int rows, int cols,
                       int channels, const ExplainConfig& cfg, const std::string& path) {
    BinaryWriter w(path);
    w.str(kShapMagic);
    w.u32(kFormatVersion);
    nlohmann::json meta{{"rows", rows},
                        {"cols", cols},
                        {"channels", channels},
                        {"mode", cfg.mode},
                        {"permutations", cfg.permutations}};
    const std::string js = meta.dump();
    w.u64(js.size());
    w.str(js);
    w.u64(exps.size());
    const std::size_t map_len = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    auto write_maps = [&](const ChannelMaps& maps) {
        if (maps.size() != static_cast<std::size_t>(channels))
            throw DataError("explanation channel count mismatch");
        for (const auto& m : maps) {
            if (m.size() != map_len) throw DataError("explanation map size mismatch");
            for (double v : m) w.f32(static_cast<float>(v));
        }
    };
    for (const auto& e : exps) {
        w.u64(e.id);
        w.u8(static_cast<std::uint8_t>(e.label));
        w.u8(static_cast<std::uint8_t>(e.predicted));
        write_maps(e.maps_label);
        write_maps(e.maps_predicted);
    }
    if (!w.good()) throw DataError("explanation write failed: " + path);
}

ExplanationArchive load_explanations(const std::string& path) {
    BinaryReader r(path);
    if (r.str(4) != kShapMagic) throw DataError("not a SHAP archive: " + path);
    if (r.u32() != kFormatVersion) throw DataError("unsupported SHAP archive version: " + path);
    ExplanationArchive arch;
    nlohmann::json meta = nlohmann::json::parse(r.str(r.u64()));
    arch.rows = meta.at("rows").get<int>();
    arch.cols = meta.at("cols").get<int>();
    arch.channels = meta.at("channels").get<int>();
    arch.mode = meta.at("mode").get<std::string>();
    arch.permutations = meta.at("permutations").get<int>();
    const std::uint64_t count = r.u64();
    const std::size_t map_len = static_cast<std::size_t>(arch.rows) * static_cast<std::size_t>(arch.cols);
    arch.records.resize(count);
    for (auto& e : arch.records) {
        e.id = r.u64();
        e.label = r.u8();
        e.predicted = r.u8();
        auto read_maps = [&]() {
            ChannelMaps maps(static_cast<std::size_t>(arch.channels), std::vector<double>(map_len));
            for (auto& m : maps)
                for (auto& v : m) v = static_cast<double>(r.f32());
            return maps;
        };
        e.maps_label = read_maps();
        e.maps_predicted = read_maps();
    }
    return arch;
}

}  // namespace srw::shap
