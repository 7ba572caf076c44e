#include "srw/cifar.hpp"

#include <algorithm>
#include <fstream>

#include "srw/error.hpp"
#include "srw/rng.hpp"

namespace srw::cifar {

namespace {
constexpr int kDim = 32;
constexpr int kChannels = 3;
constexpr std::size_t kRecord = 1 + kDim * kDim * kChannels;
}  // namespace

std::vector<Sample> read_cifar_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open CIFAR file: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.empty() || bytes.size() % kRecord != 0)
        throw DataError("CIFAR file size " + std::to_string(bytes.size()) +
                        " is not a multiple of 3073: " + path);
    const std::size_t count = bytes.size() / kRecord;
    std::vector<Sample> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto* rec = reinterpret_cast<const std::uint8_t*>(&bytes[i * kRecord]);
        Sample s;
        s.label = rec[0];
        if (s.label > 9) throw DataError("CIFAR label out of range in " + path);
        s.x = Tensor<float>({kDim, kDim, kChannels});
        for (int c = 0; c < kChannels; ++c) {
            const std::uint8_t* plane = rec + 1 + c * kDim * kDim;
            for (int r = 0; r < kDim; ++r)
                for (int col = 0; col < kDim; ++col)
                    s.x.data[static_cast<std::size_t>((r * kDim + col) * kChannels + c)] =
                        static_cast<float>(plane[r * kDim + col]) / 255.0f;
        }
        out[i] = std::move(s);
    }
    return out;
}

Dataset build_image_dataset(const std::vector<std::string>& train_files,
                            const std::vector<std::string>& test_files, const ImageSplitPlan& plan,
                            std::uint64_t seed) {
    std::vector<Sample> pool;
    for (const auto& f : train_files) {
        auto part = read_cifar_file(f);
        pool.insert(pool.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
    }
    const std::size_t need = static_cast<std::size_t>(plan.baseline) + plan.validation +
                             static_cast<std::size_t>(plan.eval_per_session) * plan.sessions;
    if (pool.size() < need)
        throw DataError("image dataset: need " + std::to_string(need) + " training records, have " +
                        std::to_string(pool.size()));

    Rng rng(derive_seed(seed, 0xC1FA));
    std::shuffle(pool.begin(), pool.end(), rng.engine());

    Dataset ds;
    std::uint64_t next_id = 0;
    std::size_t cursor = 0;
    auto take = [&](int count, std::uint8_t origin_tag) {
        for (int i = 0; i < count; ++i) {
            Sample s = std::move(pool[cursor++]);
            s.id = next_id++;
            s.origin = origin_tag;
            ds.samples.push_back(std::move(s));
        }
    };
    take(plan.baseline, origin::kBaseline);
    take(plan.validation, origin::kValidation);
    for (int i = 1; i <= plan.sessions; ++i) take(plan.eval_per_session, origin::eval_session(i));

    std::vector<Sample> test_pool;
    for (const auto& f : test_files) {
        auto part = read_cifar_file(f);
        test_pool.insert(test_pool.end(), std::make_move_iterator(part.begin()),
                         std::make_move_iterator(part.end()));
    }
    if (test_pool.size() < static_cast<std::size_t>(plan.test))
        throw DataError("image dataset: test split larger than test files");
    std::shuffle(test_pool.begin(), test_pool.end(), rng.engine());
    for (int i = 0; i < plan.test; ++i) {
        Sample s = std::move(test_pool[static_cast<std::size_t>(i)]);
        s.id = next_id++;
        s.origin = origin::kTest;
        ds.samples.push_back(std::move(s));
    }

    const ChannelStats stats = compute_channel_stats(ds.samples, ds.indices_of(origin::kBaseline));
    apply_channel_stats(ds.samples, stats);

    ds.meta["source"] = "image-files";
    ds.meta["stats"] = stats;
    ds.meta["num_classes"] = 10;
    ds.meta["seed"] = seed;
    return ds;
}

}  // namespace srw::cifar
