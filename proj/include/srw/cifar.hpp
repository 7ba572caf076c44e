#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srw/data.hpp"

namespace srw::cifar {

// CIFAR-10 binary batch: 3073-byte records, 1 label byte followed by 3072
// pixel bytes (channel-planar RGB, row-major 32x32). Pixels scaled to [0,1].
std::vector<Sample> read_cifar_file(const std::string& path);

struct ImageSplitPlan {
    int baseline = 5000;
    int validation = 2000;
    int eval_per_session = 2000;
    int sessions = 4;
    int test = 2000;
};

// Shuffles the pool of training records with the seed, carves the splits in
// order (baseline, validation, eval_1..eval_s), takes the test split from the
// test files, then z-scores all channels with baseline statistics.
Dataset build_image_dataset(const std::vector<std::string>& train_files,
                            const std::vector<std::string>& test_files, const ImageSplitPlan& plan,
                            std::uint64_t seed);

}  // namespace srw::cifar
