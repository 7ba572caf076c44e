#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "srw/cifar.hpp"
#include "srw/io.hpp"
#include "srw/pipeline.hpp"

using namespace srw;
using namespace srw::pipeline;

namespace fs = std::filesystem;

namespace {

// Small radar geometry (16x16 maps) so pipeline tests stay fast.
RunConfig tiny_config() {
    RunConfig cfg;
    cfg.data.radar.nts = 32;
    cfg.data.radar.pn = 16;
    cfg.data.radar.chirp_s = 16e-6;
    cfg.data.scene.num_classes = 3;
    cfg.data.scene.range_min_m = 0.5;
    cfg.data.scene.range_max_m = 2.0;
    cfg.data.scene.min_range_separation_m = 0.3;
    cfg.data.baseline_count = 60;
    cfg.data.validation_count = 24;
    cfg.data.test_count = 24;
    cfg.data.eval_count = 24;
    cfg.sessions = 2;
    cfg.model.kind = "dual_chain";
    cfg.model.input_rows = 16;
    cfg.model.input_cols = 16;
    cfg.model.input_channels = 4;
    cfg.model.num_classes = 3;
    cfg.model.embedding_dim = 8;
    cfg.model.block_channels = {3, 4, 4};
    cfg.model.cross_channels = {3, 3, 4};
    cfg.train.batch_size = 12;
    cfg.train.epochs = 4;
    cfg.train.patience = 3;
    cfg.train.max_shift = 3;
    cfg.shap.block_rows = 8;
    cfg.shap.block_cols = 8;
    cfg.shap.permutations = 4;
    cfg.shap.eval_batch = 64;
    cfg.seed = 11;
    cfg.threads = 2;
    return cfg;
}

std::vector<const Sample*> view_of(const Dataset& ds, std::uint8_t tag) {
    std::vector<const Sample*> out;
    for (const auto& s : ds.samples)
        if (s.origin == tag) out.push_back(&s);
    return out;
}

// Linearly separable two-class toy: constant-sign images plus small noise.
Dataset toy_dataset(int n, std::uint64_t seed) {
    Dataset ds;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        Sample s;
        s.id = static_cast<std::uint64_t>(i);
        s.origin = origin::kBaseline;
        s.label = i % 2;
        s.x = Tensor<float>({8, 8, 2});
        const float base = s.label == 0 ? -1.0f : 1.0f;
        for (auto& v : s.x.data) v = base + static_cast<float>(rng.normal(0.0, 0.1));
        ds.samples.push_back(std::move(s));
    }
    ds.meta["num_classes"] = 2;
    return ds;
}

RunConfig toy_config() {
    RunConfig cfg;
    cfg.model.kind = "single_chain";
    cfg.model.input_rows = 8;
    cfg.model.input_cols = 8;
    cfg.model.input_channels = 2;
    cfg.model.num_classes = 2;
    cfg.model.embedding_dim = 8;
    cfg.model.block_channels = {2, 3, 3};
    cfg.model.cross_channels = {};
    cfg.train.batch_size = 8;
    cfg.train.epochs = 50;
    cfg.train.patience = 50;
    return cfg;
}

std::vector<std::vector<float>> param_snapshot(nn::Model<float>& m) {
    std::vector<std::vector<float>> out;
    for (auto* p : m.parameters()) out.push_back(p->value.data);
    return out;
}

}  // namespace

TEST_CASE("training reaches 99% on a linearly separable toy set within 50 epochs") {
    const auto ds = toy_dataset(40, 1);
    const auto train_view = view_of(ds, origin::kBaseline);
    RunConfig cfg = toy_config();
    auto init = nn::build_model<float>(cfg.model, 5);
    const auto result = train(init, train_view, weighting::WeightTable{}, {}, cfg, 77, {});
    const auto rep = evaluate(result.model, train_view, 2, 1);
    CHECK(rep.accuracy >= 0.99);
}

TEST_CASE("all-equal weights reproduce the unweighted trajectory bit-exactly") {
    const auto ds = toy_dataset(24, 2);
    const auto train_view = view_of(ds, origin::kBaseline);
    RunConfig cfg = toy_config();
    cfg.train.epochs = 3;

    auto init = nn::build_model<float>(cfg.model, 6);
    auto unweighted = train(init, train_view, weighting::WeightTable{}, {}, cfg, 99, {});

    weighting::WeightTable ones;
    for (const auto* s : train_view) {
        weighting::WeightEntry e;
        e.sample_id = s->id;
        e.weight = 1.0;
        ones.entries[s->id] = e;
    }
    auto weighted = train(init, train_view, ones, {}, cfg, 99, {});
    auto pa = unweighted.model.parameters();
    auto pb = weighted.model.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data == pb[i]->value.data);
}

TEST_CASE("early stopping returns the best-validation checkpoint, not the last") {
    const auto ds = toy_dataset(32, 3);
    const auto train_view = view_of(ds, origin::kBaseline);
    // Adversarially noisy validation labels make accuracy fluctuate.
    Dataset noisy_val = toy_dataset(10, 4);
    Rng flip(5);
    for (auto& s : noisy_val.samples)
        if (flip.uniform() < 0.5) s.label = 1 - s.label;
    const auto val_view = view_of(noisy_val, origin::kBaseline);

    RunConfig cfg = toy_config();
    cfg.train.epochs = 8;
    cfg.train.patience = 50;  // run all epochs, keep the best snapshot
    auto init = nn::build_model<float>(cfg.model, 7);
    auto full = train(init, train_view, weighting::WeightTable{}, val_view, cfg, 123, {});
    REQUIRE(full.best_epoch >= 0);

    // Re-running with exactly best_epoch+1 epochs lands on the same params.
    RunConfig cfg_short = cfg;
    cfg_short.train.epochs = full.best_epoch + 1;
    auto replay = train(init, train_view, weighting::WeightTable{}, val_view, cfg_short, 123, {});
    auto pa = full.model.parameters();
    auto pb = replay.model.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data == pb[i]->value.data);
}

TEST_CASE("evaluate: constant predictor scores 1/L on a balanced set, trace equals accuracy") {
    RunConfig cfg = tiny_config();
    const auto ds = build_dataset(cfg, 21, 2);
    const auto test_view = view_of(ds, origin::kTest);
    auto model = nn::build_model<float>(cfg.model, 9);
    for (auto* p : model.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);
    const auto rep = evaluate(model, test_view, 3, 2);
    CHECK(rep.accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    int trace = 0, total = 0;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) {
            total += rep.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
            if (c == k) trace += rep.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        }
    CHECK(total == rep.count);
    CHECK(static_cast<double>(trace) / total == doctest::Approx(rep.accuracy));

    const auto rep2 = evaluate(model, test_view, 3, 1);
    CHECK(rep2.accuracy == rep.accuracy);
    CHECK(rep2.confusion == rep.confusion);
}

TEST_CASE("select_wrong returns exactly the misclassified samples with predictions attached") {
    RunConfig cfg = tiny_config();
    const auto ds = build_dataset(cfg, 22, 2);
    const auto eval_view = view_of(ds, origin::eval_session(1));
    auto model = nn::build_model<float>(cfg.model, 10);
    const auto wrong = select_wrong(model, eval_view, 2);
    const auto rep = evaluate(model, eval_view, 3, 2);
    const int correct = static_cast<int>(std::lround(rep.accuracy * rep.count));
    CHECK(static_cast<int>(wrong.size()) + correct == static_cast<int>(eval_view.size()));
    for (const auto& w : wrong) {
        CHECK(w.predicted != w.sample->label);
        CHECK(w.probabilities.size() == 3);
        double sum = 0.0;
        for (double p : w.probabilities) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }

    // A constant-class model is perfect on a set of only that class.
    auto zero_model = nn::build_model<float>(cfg.model, 11);
    for (auto* p : zero_model.parameters())
        std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);
    std::vector<const Sample*> only_zero;
    for (const auto* s : eval_view)
        if (s->label == 0) only_zero.push_back(s);
    CHECK(select_wrong(zero_model, only_zero, 1).empty());
}

TEST_CASE("test-split ids never reach a training batch (leak audit)") {
    const auto ds = toy_dataset(16, 8);
    const auto train_view = view_of(ds, origin::kBaseline);
    RunConfig cfg = toy_config();
    cfg.train.epochs = 1;
    auto init = nn::build_model<float>(cfg.model, 12);
    std::set<std::uint64_t> forbidden{train_view[3]->id};
    CHECK_THROWS_AS(train(init, train_view, weighting::WeightTable{}, {}, cfg, 5, forbidden),
                    DataError);
}

TEST_CASE("retrain_incremental follows the accumulation, warm-start and persistence contracts") {
    RunConfig cfg = tiny_config();
    cfg.weighting_method = "localize";
    cfg.train.epochs = 2;
    cfg.train.patience = 2;
    const auto ds = build_dataset(cfg, 31, 2);
    auto baseline = nn::build_model<float>(cfg.model, 13);
    // A deliberately under-trained baseline guarantees harvested samples.
    const std::string dir = "/tmp/srw_test_retrain";
    fs::remove_all(dir);
    const auto reports = retrain_incremental(baseline, ds, cfg, 777, dir, 2);

    REQUIRE(reports.size() == 3);  // baseline + 2 sessions
    CHECK(reports[0].session == 0);
    CHECK(reports[0].train_size == cfg.data.baseline_count);
    // Alg-1 accumulation: sizes grow by exactly the harvested counts.
    CHECK(reports[1].train_size == cfg.data.baseline_count + reports[1].harvested);
    CHECK(reports[2].train_size == reports[1].train_size + reports[2].harvested);

    for (int s = 1; s <= 2; ++s) {
        CHECK(fs::exists(dir + "/session_" + std::to_string(s) + ".ckpt"));
        CHECK(fs::exists(dir + "/weights_session_" + std::to_string(s) + ".csv"));
        CHECK(fs::exists(dir + "/metrics_session_" + std::to_string(s) + ".csv"));
    }
    // Weight tables carry every training sample of their session.
    const auto table1 = weighting::load_weight_table(dir + "/weights_session_1.csv");
    CHECK(static_cast<int>(table1.size()) == reports[1].train_size);
    const auto table2 = weighting::load_weight_table(dir + "/weights_session_2.csv");
    CHECK(static_cast<int>(table2.size()) == reports[2].train_size);
    // SHAP maps were persisted for the localize arm.
    if (reports[1].harvested > 0) CHECK(fs::exists(dir + "/shap_session_1.srws"));
    fs::remove_all(dir);
}

TEST_CASE("sessions warm-start from the previous checkpoint (zero-epoch identity)") {
    RunConfig cfg = tiny_config();
    cfg.weighting_method = "none";
    cfg.sessions = 1;
    cfg.train.epochs = 0;  // training is the identity, exposing the warm start
    const auto ds = build_dataset(cfg, 32, 2);
    auto baseline = nn::build_model<float>(cfg.model, 14);
    const std::string dir = "/tmp/srw_test_warmstart";
    fs::remove_all(dir);
    retrain_incremental(baseline, ds, cfg, 88, dir, 1);
    auto session1 = nn::load_checkpoint<float>(dir + "/session_1.ckpt");
    auto pa = baseline.parameters();
    auto pb = session1.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data == pb[i]->value.data);
    fs::remove_all(dir);
}

TEST_CASE("method none gives weight one to every sample in every session table") {
    RunConfig cfg = tiny_config();
    cfg.weighting_method = "none";
    cfg.sessions = 1;
    cfg.train.epochs = 1;
    const auto ds = build_dataset(cfg, 33, 2);
    auto baseline = nn::build_model<float>(cfg.model, 15);
    const std::string dir = "/tmp/srw_test_none";
    fs::remove_all(dir);
    retrain_incremental(baseline, ds, cfg, 99, dir, 2);
    const auto table = weighting::load_weight_table(dir + "/weights_session_1.csv");
    for (const auto& [id, e] : table.entries) CHECK(e.weight == doctest::Approx(1.0));
    fs::remove_all(dir);
}

TEST_CASE("sessions = 0 returns only the baseline evaluation") {
    RunConfig cfg = tiny_config();
    cfg.sessions = 0;
    const auto ds = build_dataset(cfg, 34, 2);
    auto baseline = nn::build_model<float>(cfg.model, 16);
    const std::string dir = "/tmp/srw_test_s0";
    fs::remove_all(dir);
    const auto reports = retrain_incremental(baseline, ds, cfg, 1, dir, 1);
    CHECK(reports.size() == 1);
    CHECK(reports[0].session == 0);
    fs::remove_all(dir);
}

TEST_CASE("experiment matrix: row counts, shared baselines, deterministic reports") {
    RunConfig cfg = tiny_config();
    cfg.sessions = 1;
    cfg.train.epochs = 2;
    cfg.train.patience = 2;
    cfg.data.baseline_count = 30;
    cfg.data.validation_count = 12;
    cfg.data.test_count = 12;
    cfg.data.eval_count = 12;
    const std::vector<MatrixArm> arms{{"none", false}, {"localize", false}};

    const std::string dir1 = "/tmp/srw_test_matrix1";
    const std::string dir2 = "/tmp/srw_test_matrix2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    const auto rep1 = run_experiment_matrix(cfg, arms, 2, dir1);
    CHECK(rep1.rows.size() == arms.size() * 2 * (static_cast<std::size_t>(cfg.sessions) + 1));

    // Session-0 rows are the shared baseline: equal across arms per repeat.
    for (int r = 0; r < 2; ++r) {
        double acc_none = -1, acc_loc = -2;
        for (const auto& row : rep1.rows)
            if (row.session == 0 && row.repeat == r) {
                if (row.arm == "none") acc_none = row.accuracy;
                if (row.arm == "localize") acc_loc = row.accuracy;
            }
        CHECK(acc_none == acc_loc);
    }

    run_experiment_matrix(cfg, arms, 2, dir2);
    CHECK(hash_file(dir1 + "/report.csv") == hash_file(dir2 + "/report.csv"));
    CHECK(hash_file(dir1 + "/summary.csv") == hash_file(dir2 + "/summary.csv"));
    CHECK(fs::exists(dir1 + "/plot_results.py"));
    CHECK(fs::exists(dir1 + "/manifest.json"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("arm none equals arm softmax when nothing is misclassified") {
    // A zero-parameter model predicts class 0 everywhere; eval splits that
    // contain only class 0 yield empty incremental sets, so the two methods
    // degenerate to identical runs.
    RunConfig cfg = tiny_config();
    cfg.sessions = 1;
    cfg.train.epochs = 2;

    Dataset ds;
    Rng rng(123);
    std::uint64_t id = 0;
    auto add = [&](std::uint8_t origin_tag, int label) {
        Sample s;
        s.id = id++;
        s.origin = origin_tag;
        s.label = label;
        s.x = Tensor<float>({16, 16, 4});
        for (auto& v : s.x.data) v = static_cast<float>(rng.normal());
        ds.samples.push_back(std::move(s));
    };
    for (int i = 0; i < 30; ++i) add(origin::kBaseline, i % 3);
    for (int i = 0; i < 12; ++i) add(origin::kValidation, i % 3);
    for (int i = 0; i < 12; ++i) add(origin::kTest, i % 3);
    for (int i = 0; i < 12; ++i) add(origin::eval_session(1), 0);  // all class 0
    ds.meta["num_classes"] = 3;

    auto baseline = nn::build_model<float>(cfg.model, 50);
    for (auto* p : baseline.parameters())
        std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);

    const std::string d_none = "/tmp/srw_test_arm_none", d_soft = "/tmp/srw_test_arm_soft";
    fs::remove_all(d_none);
    fs::remove_all(d_soft);
    RunConfig cfg_none = cfg, cfg_soft = cfg;
    cfg_none.weighting_method = "none";
    cfg_soft.weighting_method = "softmax";
    const auto rep_none = retrain_incremental(baseline, ds, cfg_none, 9, d_none, 1);
    const auto rep_soft = retrain_incremental(baseline, ds, cfg_soft, 9, d_soft, 1);
    CHECK(rep_none[1].harvested == 0);
    CHECK(rep_soft[1].harvested == 0);
    CHECK(rep_none[1].eval.accuracy == rep_soft[1].eval.accuracy);
    CHECK(hash_file(d_none + "/session_1.ckpt") == hash_file(d_soft + "/session_1.ckpt"));
    fs::remove_all(d_none);
    fs::remove_all(d_soft);
}

TEST_CASE("empty training or test sets are rejected") {
    RunConfig cfg = toy_config();
    auto init = nn::build_model<float>(cfg.model, 51);
    CHECK_THROWS_AS(train(init, {}, weighting::WeightTable{}, {}, cfg, 1, {}), DataError);
    CHECK_THROWS_AS(evaluate(init, {}, 2, 1), DataError);
}

TEST_CASE("run config round-trips through JSON with a stable hash") {
    RunConfig cfg = tiny_config();
    nlohmann::json j = cfg;
    const auto back = j.get<RunConfig>();
    nlohmann::json j2 = back;
    CHECK(j == j2);
    CHECK(cfg.config_hash() == back.config_hash());
    RunConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(other.config_hash() != cfg.config_hash());
}

TEST_CASE("malformed configs raise data errors") {
    const std::string path = "/tmp/srw_test_badcfg.json";
    write_text_file(path, "{ not json");
    CHECK_THROWS_AS(load_run_config(path), DataError);
    write_text_file(path, R"({"train": {"batch_size": "huge"}})");
    CHECK_THROWS_AS(load_run_config(path), DataError);
    fs::remove(path);
}

TEST_CASE("cifar reader parses the 3073-byte planar format") {
    const std::string path = "/tmp/srw_test_cifar.bin";
    {
        std::ofstream os(path, std::ios::binary);
        // Two records: label 3 with R=255 everywhere, label 7 with B=128.
        std::vector<unsigned char> rec1(3073, 0), rec2(3073, 0);
        rec1[0] = 3;
        for (int i = 0; i < 1024; ++i) rec1[static_cast<std::size_t>(1 + i)] = 255;
        rec2[0] = 7;
        for (int i = 0; i < 1024; ++i) rec2[static_cast<std::size_t>(1 + 2048 + i)] = 128;
        os.write(reinterpret_cast<const char*>(rec1.data()), 3073);
        os.write(reinterpret_cast<const char*>(rec2.data()), 3073);
    }
    const auto samples = cifar::read_cifar_file(path);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].label == 3);
    CHECK(samples[0].x.shape == std::vector<std::int64_t>{32, 32, 3});
    CHECK(samples[0].x.data[0] == doctest::Approx(1.0f));       // R channel of pixel (0,0)
    CHECK(samples[0].x.data[1] == doctest::Approx(0.0f));       // G
    CHECK(samples[1].label == 7);
    CHECK(samples[1].x.data[2] == doctest::Approx(128.0f / 255.0f));  // B channel
    fs::remove(path);
}

TEST_CASE("image dataset splits carve the shuffled pool with baseline statistics") {
    // Synthesize a CIFAR-format pool large enough for a tiny split plan.
    const std::string train_path = "/tmp/srw_test_cifar_train.bin";
    const std::string test_path = "/tmp/srw_test_cifar_test.bin";
    Rng rng(55);
    auto write_records = [&](const std::string& path, int n) {
        std::ofstream os(path, std::ios::binary);
        for (int i = 0; i < n; ++i) {
            std::vector<unsigned char> rec(3073);
            rec[0] = static_cast<unsigned char>(i % 10);
            for (std::size_t k = 1; k < rec.size(); ++k)
                rec[k] = static_cast<unsigned char>(rng.uniform_int(0, 255));
            os.write(reinterpret_cast<const char*>(rec.data()), 3073);
        }
    };
    write_records(train_path, 60);
    write_records(test_path, 20);

    cifar::ImageSplitPlan plan;
    plan.baseline = 20;
    plan.validation = 10;
    plan.eval_per_session = 10;
    plan.sessions = 2;
    plan.test = 10;
    const auto ds = cifar::build_image_dataset({train_path}, {test_path}, plan, 9);
    CHECK(ds.samples.size() == 60u);
    CHECK(ds.indices_of(origin::kBaseline).size() == 20);
    CHECK(ds.indices_of(origin::kValidation).size() == 10);
    CHECK(ds.indices_of(origin::eval_session(1)).size() == 10);
    CHECK(ds.indices_of(origin::eval_session(2)).size() == 10);
    CHECK(ds.indices_of(origin::kTest).size() == 10);
    CHECK(ds.num_classes() == 10);
    fs::remove(train_path);
    fs::remove(test_path);
}
