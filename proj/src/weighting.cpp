#include "srw/weighting.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "srw/data.hpp"
#include "srw/error.hpp"

namespace srw::weighting {

Method method_from_string(const std::string& s) {
    if (s == "none") return Method::kNone;
    if (s == "softmax") return Method::kSoftmax;
    if (s == "masked" || s == "masked_diff") return Method::kMaskedDiff;
    if (s == "localize" || s == "localize_diff") return Method::kLocalizeDiff;
    throw UsageError("unknown weighting method '" + s + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::kNone: return "none";
        case Method::kSoftmax: return "softmax";
        case Method::kMaskedDiff: return "masked_diff";
        case Method::kLocalizeDiff: return "localize_diff";
    }
    return "?";
}

double softmax_weight(const std::vector<double>& probabilities, int predicted, int label) {
    if (predicted < 0 || label < 0 || predicted >= static_cast<int>(probabilities.size()) ||
        label >= static_cast<int>(probabilities.size()))
        throw std::invalid_argument("softmax_weight: class index out of range");
    if (predicted == label) return 1.0;
    return 1.0 + probabilities[static_cast<std::size_t>(predicted)] -
           probabilities[static_cast<std::size_t>(label)];
}

double masked_difference(const shap::ChannelMaps& maps_predicted,
                         const shap::ChannelMaps& maps_label) {
    if (maps_predicted.size() != maps_label.size())
        throw std::invalid_argument("masked_difference: channel count mismatch");
    double delta = 0.0;
    for (std::size_t k = 0; k < maps_predicted.size(); ++k) {
        const auto& mh = maps_predicted[k];
        const auto& m = maps_label[k];
        if (mh.size() != m.size())
            throw std::invalid_argument("masked_difference: map shape mismatch");
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < mh.size(); ++i)
            if (mh[i] > 0.0) {
                acc += mh[i] - m[i];
                ++count;
            }
        if (count > 0) delta += acc / static_cast<double>(count);
    }
    return delta;
}

double localize_difference(const shap::ChannelMaps& maps_predicted,
                           const shap::ChannelMaps& maps_label) {
    if (maps_predicted.size() != maps_label.size())
        throw std::invalid_argument("localize_difference: channel count mismatch");
    double delta = 0.0;
    for (std::size_t k = 0; k < maps_predicted.size(); ++k) {
        const auto& mh = maps_predicted[k];
        const auto& m = maps_label[k];
        if (mh.size() != m.size())
            throw std::invalid_argument("localize_difference: map shape mismatch");
        for (std::size_t i = 0; i < mh.size(); ++i) delta += mh[i] - m[i];
    }
    return delta;
}

double WeightTable::weight_of(std::uint64_t id) const {
    auto it = entries.find(id);
    if (it == entries.end())
        throw DataError("weight table has no entry for sample " + std::to_string(id));
    return it->second.weight;
}

WeightTable finalize_weights(const std::vector<std::pair<std::uint64_t, std::uint8_t>>& baseline_ids,
                             const std::vector<DeltaInput>& incremental, Method method,
                             double w_min) {
    WeightTable table;
    table.w_min = w_min;
    for (const auto& [id, orig] : baseline_ids) {
        WeightEntry e;
        e.sample_id = id;
        e.origin = orig;
        e.method = method;
        e.delta_w = 0.0;
        e.weight = 1.0;
        table.entries[id] = e;
    }
    for (const auto& d : incremental) {
        WeightEntry e;
        e.sample_id = d.sample_id;
        e.origin = d.origin;
        e.method = method;
        e.delta_w = d.delta_w;
        e.weight = std::max(1.0 + d.delta_w, w_min);
        table.entries[d.sample_id] = e;
    }
    return table;
}

void save_weight_table(const WeightTable& table, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "sample_id,origin,method,delta_w,weight\n";
    char buf[160];
    for (const auto& [id, e] : table.entries) {
        std::snprintf(buf, sizeof(buf), "%llu,%s,%s,%.9g,%.9g\n",
                      static_cast<unsigned long long>(id), origin::name(e.origin).c_str(),
                      method_name(e.method).c_str(), e.delta_w, e.weight);
        os << buf;
    }
}

WeightTable load_weight_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open for read: " + path);
    WeightTable table;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id_s, origin_s, method_s, dw_s, w_s;
        std::getline(ss, id_s, ',');
        std::getline(ss, origin_s, ',');
        std::getline(ss, method_s, ',');
        std::getline(ss, dw_s, ',');
        std::getline(ss, w_s, ',');
        WeightEntry e;
        e.sample_id = std::stoull(id_s);
        e.origin = origin::from_name(origin_s);
        e.method = method_from_string(method_s);
        e.delta_w = std::stod(dw_s);
        e.weight = std::stod(w_s);
        table.entries[e.sample_id] = e;
    }
    return table;
}

}  // namespace srw::weighting
