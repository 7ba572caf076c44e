#include "srw/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "srw/augment.hpp"
#include "srw/error.hpp"
#include "srw/io.hpp"
#include "srw/parallel.hpp"
#include "srw/train_loss.hpp"
#include "srw/version.hpp"

namespace srw::pipeline {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const TrainSettings& t) {
    j = nlohmann::json{{"batch_size", t.batch_size},
                       {"epochs", t.epochs},
                       {"patience", t.patience},
                       {"stability", t.stability},
                       {"sigma", t.sigma},
                       {"true_kl", t.true_kl},
                       {"metric_loss", t.metric_loss},
                       {"triplet_cap", t.triplet_cap},
                       {"augment", t.augment},
                       {"flip_prob", t.flip_prob},
                       {"max_shift", t.max_shift}};
}

void from_json(const nlohmann::json& j, TrainSettings& t) {
    t = TrainSettings{};
    j.at("batch_size").get_to(t.batch_size);
    j.at("epochs").get_to(t.epochs);
    if (j.contains("patience")) j.at("patience").get_to(t.patience);
    if (j.contains("stability")) j.at("stability").get_to(t.stability);
    if (j.contains("sigma")) j.at("sigma").get_to(t.sigma);
    if (j.contains("true_kl")) j.at("true_kl").get_to(t.true_kl);
    if (j.contains("metric_loss")) j.at("metric_loss").get_to(t.metric_loss);
    if (j.contains("triplet_cap")) j.at("triplet_cap").get_to(t.triplet_cap);
    if (j.contains("augment")) j.at("augment").get_to(t.augment);
    if (j.contains("flip_prob")) j.at("flip_prob").get_to(t.flip_prob);
    if (j.contains("max_shift")) j.at("max_shift").get_to(t.max_shift);
}

void to_json(nlohmann::json& j, const ShapSettings& s) {
    j = nlohmann::json{{"block_rows", s.block_rows},
                       {"block_cols", s.block_cols},
                       {"per_channel", s.per_channel},
                       {"mode", s.mode},
                       {"permutations", s.permutations},
                       {"explain_logit", s.explain_logit},
                       {"eval_batch", s.eval_batch}};
}

void from_json(const nlohmann::json& j, ShapSettings& s) {
    s = ShapSettings{};
    if (j.contains("block_rows")) j.at("block_rows").get_to(s.block_rows);
    if (j.contains("block_cols")) j.at("block_cols").get_to(s.block_cols);
    if (j.contains("per_channel")) j.at("per_channel").get_to(s.per_channel);
    if (j.contains("mode")) j.at("mode").get_to(s.mode);
    if (j.contains("permutations")) j.at("permutations").get_to(s.permutations);
    if (j.contains("explain_logit")) j.at("explain_logit").get_to(s.explain_logit);
    if (j.contains("eval_batch")) j.at("eval_batch").get_to(s.eval_batch);
}

void to_json(nlohmann::json& j, const DataSettings& d) {
    j = nlohmann::json{{"source", d.source},
                       {"radar", d.radar},
                       {"scene", d.scene},
                       {"baseline_count", d.baseline_count},
                       {"validation_count", d.validation_count},
                       {"test_count", d.test_count},
                       {"eval_count", d.eval_count},
                       {"train_files", d.train_files},
                       {"test_files", d.test_files}};
}

void from_json(const nlohmann::json& j, DataSettings& d) {
    d = DataSettings{};
    if (j.contains("source")) j.at("source").get_to(d.source);
    if (j.contains("radar")) j.at("radar").get_to(d.radar);
    if (j.contains("scene")) j.at("scene").get_to(d.scene);
    if (j.contains("baseline_count")) j.at("baseline_count").get_to(d.baseline_count);
    if (j.contains("validation_count")) j.at("validation_count").get_to(d.validation_count);
    if (j.contains("test_count")) j.at("test_count").get_to(d.test_count);
    if (j.contains("eval_count")) j.at("eval_count").get_to(d.eval_count);
    if (j.contains("train_files")) j.at("train_files").get_to(d.train_files);
    if (j.contains("test_files")) j.at("test_files").get_to(d.test_files);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"data", c.data},
                       {"model", c.model},
                       {"optimizer",
                        {{"lr", c.optimizer.lr},
                         {"beta1", c.optimizer.beta1},
                         {"beta2", c.optimizer.beta2},
                         {"eps", c.optimizer.eps}}},
                       {"train", c.train},
                       {"weighting_method", c.weighting_method},
                       {"weight_floor", c.weight_floor},
                       {"shap", c.shap},
                       {"sessions", c.sessions},
                       {"seed", c.seed},
                       {"threads", c.threads}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
    c = RunConfig{};
    if (j.contains("data")) j.at("data").get_to(c.data);
    if (j.contains("model")) j.at("model").get_to(c.model);
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        if (o.contains("lr")) o.at("lr").get_to(c.optimizer.lr);
        if (o.contains("beta1")) o.at("beta1").get_to(c.optimizer.beta1);
        if (o.contains("beta2")) o.at("beta2").get_to(c.optimizer.beta2);
        if (o.contains("eps")) o.at("eps").get_to(c.optimizer.eps);
    }
    if (j.contains("train")) j.at("train").get_to(c.train);
    if (j.contains("weighting_method")) j.at("weighting_method").get_to(c.weighting_method);
    if (j.contains("weight_floor")) j.at("weight_floor").get_to(c.weight_floor);
    if (j.contains("shap")) j.at("shap").get_to(c.shap);
    if (j.contains("sessions")) j.at("sessions").get_to(c.sessions);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
    if (j.contains("threads")) j.at("threads").get_to(c.threads);
}

std::uint64_t RunConfig::config_hash() const {
    nlohmann::json j = *this;
    return fnv1a64(j.dump());
}

RunConfig load_run_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config parse error in " + path + ": " + e.what());
    }
    try {
        return j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config schema error in " + path + ": " + e.what());
    }
}

Dataset build_dataset(const RunConfig& cfg, std::uint64_t data_seed, int threads) {
    if (cfg.data.source == "radar-sim") {
        std::vector<radar::SplitRequest> splits;
        splits.push_back({origin::kBaseline, cfg.data.baseline_count});
        splits.push_back({origin::kValidation, cfg.data.validation_count});
        splits.push_back({origin::kTest, cfg.data.test_count});
        for (int i = 1; i <= cfg.sessions; ++i)
            splits.push_back({origin::eval_session(i), cfg.data.eval_count});
        return radar::generate_dataset(cfg.data.radar, cfg.data.scene, splits, data_seed, threads);
    }
    if (cfg.data.source == "image-files") {
        cifar::ImageSplitPlan plan;
        plan.baseline = cfg.data.baseline_count;
        plan.validation = cfg.data.validation_count;
        plan.eval_per_session = cfg.data.eval_count;
        plan.sessions = cfg.sessions;
        plan.test = cfg.data.test_count;
        return cifar::build_image_dataset(cfg.data.train_files, cfg.data.test_files, plan, data_seed);
    }
    throw DataError("unknown data source '" + cfg.data.source + "'");
}

void save_metrics_csv(const std::vector<StepMetrics>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << "step,l0_emb,lstable_emb,l0_class,lstable_class,total\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.8f,%.8f,%.8f,%.8f,%.8f\n",
                      static_cast<long long>(r.step), r.breakdown.l0_emb, r.breakdown.lstable_emb,
                      r.breakdown.l0_class, r.breakdown.lstable_class, r.breakdown.total);
        os << buf;
    }
}

namespace {

Tensor<float> gather_batch(const std::vector<Sample>& staged) {
    const auto& shape = staged.front().x.shape;
    Tensor<float> batch(
        {static_cast<std::int64_t>(staged.size()), shape[0], shape[1], shape[2]});
    std::size_t off = 0;
    for (const auto& s : staged) {
        std::copy(s.x.data.begin(), s.x.data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(off));
        off += s.x.numel();
    }
    return batch;
}

}  // namespace

TrainResult train(const nn::Model<float>& start, const std::vector<const Sample*>& data,
                  const weighting::WeightTable& weights, const std::vector<const Sample*>& valid,
                  const RunConfig& cfg, std::uint64_t run_seed,
                  const std::set<std::uint64_t>& forbidden_ids) {
    if (data.empty()) throw DataError("train: empty dataset");
    const bool use_table = !weights.entries.empty();
    const int num_classes = start.desc.num_classes;
    const TrainSettings& ts = cfg.train;

    TrainResult result;
    nn::Model<float> model = start;
    model.set_train(true);
    nn::Model<float> best = model;
    double best_acc = -1.0;
    int since_best = 0;
    std::int64_t global_step = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < ts.epochs; ++epoch) {
        {
            Rng shuffle_rng(derive_seed(run_seed, 0x50F000 + static_cast<std::uint64_t>(epoch)));
            std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        }
        const std::uint64_t aug_seed = derive_seed(run_seed, 0xA06000 + static_cast<std::uint64_t>(epoch));
        Rng noise_rng(derive_seed(run_seed, 0x401000 + static_cast<std::uint64_t>(epoch)));
        Rng triplet_rng(derive_seed(run_seed, 0x791000 + static_cast<std::uint64_t>(epoch)));

        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(ts.batch_size)) {
            const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(ts.batch_size),
                                                        order.size() - at);
            std::vector<Sample> staged;
            staged.reserve(n);
            std::vector<int> labels(n);
            std::vector<double> batch_weights(n);
            for (std::size_t k = 0; k < n; ++k) {
                const Sample* s = data[order[at + k]];
                if (forbidden_ids.count(s->id))
                    throw DataError("test-split sample " + std::to_string(s->id) +
                                    " reached a training batch");
                Sample staged_sample = *s;
                if (ts.augment) {
                    Rng aug_rng(derive_seed(aug_seed, s->id));
                    const int shift = static_cast<int>(aug_rng.uniform_int(0, ts.max_shift));
                    staged_sample = augment::shift_range(staged_sample, shift);
                    if (aug_rng.uniform() < ts.flip_prob)
                        staged_sample = augment::flip_doppler(staged_sample);
                }
                labels[k] = s->label;
                batch_weights[k] = use_table ? weights.weight_of(s->id) : 1.0;
                staged.push_back(std::move(staged_sample));
            }
            Tensor<float> batch = gather_batch(staged);
            if (ts.stability) batch = augment::make_stability_batch(batch, ts.sigma, noise_rng);

            nn::Trace<float> trace;
            auto [emb, logits] = nn::forward(model, batch, &trace);

            LossOptions opt;
            opt.stability = ts.stability;
            opt.true_kl = ts.true_kl;
            opt.metric_loss = ts.metric_loss;
            opt.triplet_cap = ts.triplet_cap;
            opt.num_labels = num_classes;
            BatchLoss<float> loss =
                compute_batch_loss(emb, logits, labels, batch_weights, opt, triplet_rng);
            if (!std::isfinite(loss.breakdown.total))
                throw NumericError("non-finite training loss at step " +
                                   std::to_string(global_step));
            nn::backward_and_step(model, trace, loss.grads, cfg.optimizer);
            result.metrics.push_back({global_step, std::move(loss.breakdown)});
            ++global_step;
        }

        if (!valid.empty()) {
            const EvalReport val = evaluate(model, valid, num_classes, 1);
            if (val.accuracy > best_acc) {
                best_acc = val.accuracy;
                best = model;
                result.best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= ts.patience) {
                result.epochs_run = epoch + 1;
                break;
            }
        }
        result.epochs_run = epoch + 1;
    }

    if (valid.empty() || best_acc < 0.0) {
        result.model = std::move(model);
    } else {
        result.model = std::move(best);
        result.best_val_accuracy = best_acc;
    }
    return result;
}

EvalReport evaluate(const nn::Model<float>& model, const std::vector<const Sample*>& testset,
                    int num_classes, int threads) {
    if (testset.empty()) throw DataError("evaluate: empty test set");
    nn::Model<float> infer_model = model;
    infer_model.set_train(false);

    const std::size_t chunk = 64;
    const std::size_t n_chunks = (testset.size() + chunk - 1) / chunk;
    std::vector<int> predicted(testset.size());
    parallel_for(n_chunks, threads, [&](std::size_t ci) {
        const std::size_t begin = ci * chunk;
        const std::size_t end = std::min(begin + chunk, testset.size());
        std::vector<Sample> staged;
        staged.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) staged.push_back(*testset[i]);
        const auto pred = nn::predict(infer_model, gather_batch(staged));
        for (std::size_t i = begin; i < end; ++i) predicted[i] = pred.labels[i - begin];
    });

    EvalReport rep;
    rep.count = static_cast<int>(testset.size());
    rep.confusion.assign(static_cast<std::size_t>(num_classes),
                         std::vector<int>(static_cast<std::size_t>(num_classes), 0));
    int correct = 0;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        const int y = testset[i]->label;
        rep.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(predicted[i])]++;
        if (y == predicted[i]) ++correct;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(testset.size());
    rep.per_class_accuracy.assign(static_cast<std::size_t>(num_classes), 0.0);
    for (int c = 0; c < num_classes; ++c) {
        const auto& row = rep.confusion[static_cast<std::size_t>(c)];
        const int total = std::accumulate(row.begin(), row.end(), 0);
        if (total > 0)
            rep.per_class_accuracy[static_cast<std::size_t>(c)] =
                static_cast<double>(row[static_cast<std::size_t>(c)]) / total;
    }
    return rep;
}

std::vector<WrongSample> select_wrong(const nn::Model<float>& model,
                                      const std::vector<const Sample*>& eval_set, int threads) {
    nn::Model<float> infer_model = model;
    infer_model.set_train(false);

    const std::size_t chunk = 64;
    const std::size_t n_chunks = (eval_set.size() + chunk - 1) / chunk;
    std::vector<int> predicted(eval_set.size());
    std::vector<std::vector<double>> probs(eval_set.size());
    parallel_for(n_chunks, threads, [&](std::size_t ci) {
        const std::size_t begin = ci * chunk;
        const std::size_t end = std::min(begin + chunk, eval_set.size());
        if (begin >= end) return;
        std::vector<Sample> staged;
        staged.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) staged.push_back(*eval_set[i]);
        const auto pred = nn::predict(infer_model, gather_batch(staged));
        const std::int64_t L = pred.probabilities.dim(1);
        for (std::size_t i = begin; i < end; ++i) {
            predicted[i] = pred.labels[i - begin];
            probs[i].resize(static_cast<std::size_t>(L));
            for (std::int64_t j = 0; j < L; ++j)
                probs[i][static_cast<std::size_t>(j)] =
                    pred.probabilities.at2(static_cast<std::int64_t>(i - begin), j);
        }
    });

    std::vector<WrongSample> wrong;
    for (std::size_t i = 0; i < eval_set.size(); ++i)
        if (predicted[i] != eval_set[i]->label)
            wrong.push_back({eval_set[i], predicted[i], std::move(probs[i])});
    return wrong;
}

namespace {

std::vector<const Sample*> split_view(const Dataset& ds, std::uint8_t origin_tag) {
    std::vector<const Sample*> out;
    for (const auto& s : ds.samples)
        if (s.origin == origin_tag) out.push_back(&s);
    return out;
}

Tensor<float> mean_background(const std::vector<const Sample*>& samples) {
    Tensor<float> bg(samples.front()->x.shape);
    std::vector<double> acc(bg.numel(), 0.0);
    for (const auto* s : samples)
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s->x.data[i];
    for (std::size_t i = 0; i < acc.size(); ++i)
        bg.data[i] = static_cast<float>(acc[i] / static_cast<double>(samples.size()));
    return bg;
}

void weight_stats(const weighting::WeightTable& table, SessionReport& rep) {
    if (table.entries.empty()) return;
    double sum = 0.0, lo = 1e300, hi = -1e300;
    for (const auto& [id, e] : table.entries) {
        sum += e.weight;
        lo = std::min(lo, e.weight);
        hi = std::max(hi, e.weight);
    }
    rep.mean_weight = sum / static_cast<double>(table.entries.size());
    rep.min_weight = lo;
    rep.max_weight = hi;
}

}  // namespace

std::vector<SessionReport> retrain_incremental(const nn::Model<float>& baseline,
                                               const Dataset& dataset, const RunConfig& cfg,
                                               std::uint64_t run_seed, const std::string& out_dir,
                                               int threads) {
    fs::create_directories(out_dir);
    const weighting::Method method = weighting::method_from_string(cfg.weighting_method);
    const int num_classes = baseline.desc.num_classes;

    const auto train_base = split_view(dataset, origin::kBaseline);
    const auto valid = split_view(dataset, origin::kValidation);
    const auto test = split_view(dataset, origin::kTest);
    if (train_base.empty() || test.empty())
        throw DataError("retrain: dataset lacks baseline or test split");
    std::set<std::uint64_t> test_ids;
    for (const auto* s : test) test_ids.insert(s->id);

    // Weight 1 for every baseline sample; incremental entries accumulate.
    std::vector<std::pair<std::uint64_t, std::uint8_t>> base_ids;
    for (const auto* s : train_base) base_ids.emplace_back(s->id, s->origin);
    weighting::WeightTable table =
        weighting::finalize_weights(base_ids, {}, method, cfg.weight_floor);

    Tensor<float> background;
    if (method == weighting::Method::kMaskedDiff || method == weighting::Method::kLocalizeDiff)
        background = mean_background(train_base);

    std::vector<const Sample*> train_set = train_base;
    nn::Model<float> model = baseline;

    std::vector<SessionReport> reports;
    {
        SessionReport rep;
        rep.session = 0;
        rep.arm = weighting::method_name(method) + (cfg.train.stability ? "+stability" : "");
        rep.eval = evaluate(model, test, num_classes, threads);
        rep.train_size = static_cast<int>(train_set.size());
        rep.seed = run_seed;
        weight_stats(table, rep);
        reports.push_back(rep);
    }

    for (int session = 1; session <= cfg.sessions; ++session) {
        const auto t_start = std::chrono::steady_clock::now();
        const auto eval_set = split_view(dataset, origin::eval_session(session));
        if (eval_set.empty())
            throw DataError("retrain: dataset has no eval split for session " +
                            std::to_string(session));

        // Harvest the wrong predictions of the current model.
        const std::vector<WrongSample> wrong = select_wrong(model, eval_set, threads);

        std::vector<weighting::DeltaInput> deltas;
        deltas.reserve(wrong.size());
        if (!wrong.empty()) {
            if (method == weighting::Method::kMaskedDiff ||
                method == weighting::Method::kLocalizeDiff) {
                std::vector<const Sample*> samples;
                std::vector<int> predicted;
                for (const auto& w : wrong) {
                    samples.push_back(w.sample);
                    predicted.push_back(w.predicted);
                }
                shap::ExplainConfig ecfg;
                ecfg.block_rows = cfg.shap.block_rows;
                ecfg.block_cols = cfg.shap.block_cols;
                ecfg.per_channel = cfg.shap.per_channel;
                ecfg.mode = cfg.shap.mode;
                ecfg.permutations = cfg.shap.permutations;
                ecfg.explain_logit = cfg.shap.explain_logit;
                ecfg.eval_batch = cfg.shap.eval_batch;
                ecfg.seed = derive_seed(run_seed, 0x5A9000 + static_cast<std::uint64_t>(session));
                ecfg.threads = threads;
                const auto exps =
                    shap::explain_wrong_samples(model, samples, predicted, background, ecfg);
                const auto& shape = samples.front()->x.shape;
                save_explanations(exps, static_cast<int>(shape[0]), static_cast<int>(shape[1]),
                                  static_cast<int>(shape[2]), ecfg,
                                  out_dir + "/shap_session_" + std::to_string(session) + ".srws");
                for (const auto& e : exps) {
                    const double dw = method == weighting::Method::kMaskedDiff
                                          ? weighting::masked_difference(e.maps_predicted, e.maps_label)
                                          : weighting::localize_difference(e.maps_predicted, e.maps_label);
                    deltas.push_back({e.id, 0, dw});
                }
            } else if (method == weighting::Method::kSoftmax) {
                for (const auto& w : wrong) {
                    const double wi =
                        weighting::softmax_weight(w.probabilities, w.predicted, w.sample->label);
                    deltas.push_back({w.sample->id, 0, wi - 1.0});
                }
            } else {
                for (const auto& w : wrong) deltas.push_back({w.sample->id, 0, 0.0});
            }
            for (std::size_t i = 0; i < wrong.size(); ++i)
                deltas[i].origin = wrong[i].sample->origin;
            const weighting::WeightTable addition =
                weighting::finalize_weights({}, deltas, method, cfg.weight_floor);
            for (const auto& [id, e] : addition.entries) table.entries[id] = e;
            for (const auto& w : wrong) train_set.push_back(w.sample);
        }
        table.session = session;
        save_weight_table(table, out_dir + "/weights_session_" + std::to_string(session) + ".csv");

        // Warm start from the previous best checkpoint.
        RunConfig session_cfg = cfg;
        session_cfg.train.augment = cfg.data.source == "radar-sim";
        const std::uint64_t session_seed =
            derive_seed(run_seed, 0x7E5000 + static_cast<std::uint64_t>(session));
        TrainResult tr = train(model, train_set, table, valid, session_cfg, session_seed, test_ids);
        model = std::move(tr.model);
        save_metrics_csv(tr.metrics, out_dir + "/metrics_session_" + std::to_string(session) + ".csv");
        nn::save_checkpoint(model, out_dir + "/session_" + std::to_string(session) + ".ckpt");

        SessionReport rep;
        rep.session = session;
        rep.arm = weighting::method_name(method) + (cfg.train.stability ? "+stability" : "");
        rep.eval = evaluate(model, test, num_classes, threads);
        rep.train_size = static_cast<int>(train_set.size());
        rep.harvested = static_cast<int>(wrong.size());
        rep.seed = run_seed;
        weight_stats(table, rep);
        rep.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        reports.push_back(rep);
    }
    return reports;
}

MatrixReport run_experiment_matrix(const RunConfig& cfg, const std::vector<MatrixArm>& arms,
                                   int n_repeats, const std::string& out_dir) {
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    const int threads = resolve_threads(cfg.threads);

    std::vector<Dataset> datasets(static_cast<std::size_t>(n_repeats));
    parallel_for(static_cast<std::size_t>(n_repeats), threads, [&](std::size_t r) {
        datasets[r] = build_dataset(cfg, derive_seed(cfg.seed, 2000 + r), 1);
    });

    // Baselines are arm-independent: one per repeat, shared by every arm.
    std::vector<nn::Model<float>> baselines;
    for (int r = 0; r < n_repeats; ++r)
        baselines.push_back(
            nn::build_model<float>(cfg.model, derive_seed(cfg.seed, 4000 + static_cast<std::uint64_t>(r))));
    parallel_for(static_cast<std::size_t>(n_repeats), threads, [&](std::size_t r) {
        RunConfig bcfg = cfg;
        bcfg.train.stability = false;
        bcfg.train.augment = false;
        std::vector<const Sample*> train_set, valid, test;
        for (const auto& s : datasets[r].samples) {
            if (s.origin == origin::kBaseline) train_set.push_back(&s);
            else if (s.origin == origin::kValidation) valid.push_back(&s);
            else if (s.origin == origin::kTest) test.push_back(&s);
        }
        std::set<std::uint64_t> test_ids;
        for (const auto* s : test) test_ids.insert(s->id);
        const std::uint64_t run_seed = derive_seed(cfg.seed, 3000 + r);
        TrainResult tr = train(baselines[r], train_set, weighting::WeightTable{}, valid, bcfg,
                               derive_seed(run_seed, 0xBA5E), test_ids);
        baselines[r] = std::move(tr.model);
        const std::string dir = out_dir + "/baseline_rep" + std::to_string(r);
        fs::create_directories(dir);
        save_metrics_csv(tr.metrics, dir + "/metrics.csv");
        nn::save_checkpoint(baselines[r], dir + "/baseline.ckpt");
    });

    struct RunSlot {
        std::size_t arm_idx, repeat;
        std::vector<SessionReport> reports;
    };
    std::vector<RunSlot> runs;
    for (std::size_t a = 0; a < arms.size(); ++a)
        for (int r = 0; r < n_repeats; ++r) runs.push_back({a, static_cast<std::size_t>(r), {}});

    parallel_for(runs.size(), threads, [&](std::size_t i) {
        RunSlot& slot = runs[i];
        const MatrixArm& arm = arms[slot.arm_idx];
        RunConfig acfg = cfg;
        acfg.weighting_method = arm.method;
        acfg.train.stability = arm.stability;
        const std::string dir =
            out_dir + "/arm_" + arm.name() + "/rep" + std::to_string(slot.repeat);
        const std::uint64_t run_seed = derive_seed(cfg.seed, 3000 + slot.repeat);
        slot.reports = retrain_incremental(baselines[slot.repeat], datasets[slot.repeat], acfg,
                                           run_seed, dir, 1);
    });

    MatrixReport report;
    for (const auto& slot : runs)
        for (const auto& rep : slot.reports)
            report.rows.push_back({rep.session, arms[slot.arm_idx].name(),
                                   static_cast<int>(slot.repeat), rep.eval.accuracy});
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    save_matrix_report(report, arms, n_repeats, cfg.sessions, out_dir);
    write_manifest(cfg, {}, out_dir + "/manifest.json");
    return report;
}

void save_matrix_report(const MatrixReport& report, const std::vector<MatrixArm>& arms,
                        int n_repeats, int sessions, const std::string& out_dir) {
    {
        std::ofstream os(out_dir + "/report.csv");
        if (!os) throw DataError("cannot write report.csv in " + out_dir);
        os << "session,arm,repeat,accuracy\n";
        char buf[160];
        for (const auto& r : report.rows) {
            std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.6f\n", r.session, r.arm.c_str(), r.repeat,
                          r.accuracy);
            os << buf;
        }
    }
    {
        std::ofstream os(out_dir + "/summary.csv");
        os << "arm,session,mean_accuracy,std_accuracy,runs\n";
        char buf[200];
        for (const auto& arm : arms) {
            for (int s = 0; s <= sessions; ++s) {
                std::vector<double> accs;
                for (const auto& r : report.rows)
                    if (r.arm == arm.name() && r.session == s) accs.push_back(r.accuracy);
                if (accs.empty()) continue;
                const double mean =
                    std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
                double var = 0.0;
                for (double a : accs) var += (a - mean) * (a - mean);
                var = accs.size() > 1 ? var / static_cast<double>(accs.size() - 1) : 0.0;
                std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%zu\n", arm.name().c_str(), s, mean,
                              std::sqrt(var), accs.size());
                os << buf;
            }
        }
    }
    const std::string plot = R"PY(#!/usr/bin/env python3
"""Plot per-session accuracy per arm from report.csv."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("report.csv")))
arms = sorted({r["arm"] for r in rows})
fig, ax = plt.subplots(figsize=(7, 4.5))
for arm in arms:
    by_session = defaultdict(list)
    for r in rows:
        if r["arm"] == arm:
            by_session[int(r["session"])].append(float(r["accuracy"]))
    sessions = sorted(by_session)
    means = [sum(by_session[s]) / len(by_session[s]) for s in sessions]
    stds = [
        (sum((a - m) ** 2 for a in by_session[s]) / max(1, len(by_session[s]) - 1)) ** 0.5
        for s, m in zip(sessions, means)
    ]
    ax.errorbar(sessions, means, yerr=stds, marker="o", capsize=3, label=arm)
ax.set_xlabel("retraining session")
ax.set_ylabel("top-1 accuracy")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig("results.png", dpi=150)
print("wrote results.png")
)PY";
    write_text_file(out_dir + "/plot_results.py", plot);
    (void)n_repeats;
}

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& input_files,
                    const std::string& path) {
    nlohmann::json m;
    m["artifact_version"] = kVersion;
    m["format_version"] = kFormatVersion;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    m["config_hash"] = hex;
    m["seed"] = cfg.seed;
    m["threads"] = cfg.threads;
    m["config"] = cfg;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& f : input_files) {
        std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash_file(f)));
        inputs[f] = hex;
    }
    m["input_hashes"] = inputs;
    write_text_file(path, m.dump(2) + "\n");
}

}  // namespace srw::pipeline
