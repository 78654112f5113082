#include "parceldelin/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "parceldelin/common/error.hpp"
#include "parceldelin/common/rng.hpp"
#include "parceldelin/eval/metrics.hpp"

namespace parceldelin::train {

using nlohmann::json;
namespace fs = std::filesystem;

void validate(const TrainConfig& cfg) {
    std::vector<std::string> problems;
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        problems.push_back("learning_rate must be a finite non-negative number");
    }
    if (cfg.batch_size < 1) problems.push_back("batch_size must be >= 1");
    if (cfg.epochs < 1) problems.push_back("epochs must be >= 1");
    if (!problems.empty()) {
        std::string msg = "invalid training configuration: ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw ConfigError(msg);
    }
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, epoch));
    rng.shuffle(order);
    return order;
}

namespace {

constexpr const char* kMomentM = ".adam_m";
constexpr const char* kMomentV = ".adam_v";

json model_config_json(const model::UNetConfig& c) {
    return json{{"in_channels", c.in_channels},   {"depth", c.depth},
                {"base_filters", c.base_filters}, {"dilation_rates", c.dilation_rates},
                {"use_batchnorm", c.use_batchnorm}, {"size_px", c.size_px}};
}

model::UNetConfig model_config_from_json(const json& j) {
    model::UNetConfig c;
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.depth = j.at("depth").get<std::size_t>();
    c.base_filters = j.at("base_filters").get<std::size_t>();
    c.dilation_rates = j.at("dilation_rates").get<std::vector<std::size_t>>();
    c.use_batchnorm = j.at("use_batchnorm").get<bool>();
    c.size_px = j.at("size_px").get<std::size_t>();
    return c;
}

json history_json(const std::vector<EpochRecord>& history) {
    json arr = json::array();
    for (const auto& r : history) {
        arr.push_back(json{{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"val_dice", r.val_dice ? json(*r.val_dice) : json(nullptr)},
                           {"val_acc", r.val_acc}});
    }
    return arr;
}

std::vector<EpochRecord> history_from_json(const json& arr) {
    std::vector<EpochRecord> out;
    for (const auto& j : arr) {
        EpochRecord r;
        r.epoch = j.at("epoch").get<std::size_t>();
        r.train_loss = j.at("train_loss").get<double>();
        if (!j.at("val_dice").is_null()) r.val_dice = j.at("val_dice").get<double>();
        r.val_acc = j.at("val_acc").get<double>();
        out.push_back(r);
    }
    return out;
}

bool better(const std::optional<double>& candidate, const std::optional<double>& best, bool have_best) {
    if (!have_best) return true;
    if (!candidate) return false;
    return !best || *candidate > *best;
}

model::WeightEntry moment_entry(const std::string& name, const nn::Tensor<float>& t) {
    model::WeightEntry e;
    e.name = name;
    e.dims = t.shape();
    e.values.assign(t.data().begin(), t.data().end());
    return e;
}

eval::ConfusionCounts evaluate_batch(const nn::Tensor<float>& probs, const nn::Tensor<float>& targets,
                                     std::size_t item, int width, int height) {
    const std::size_t px = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::span<const float> p(probs.raw() + item * px, px);
    const auto pred = eval::threshold(p, width, height);
    raster::Mask gt(width, height);
    for (std::size_t i = 0; i < px; ++i) gt.bits()[i] = targets[item * px + i] >= 0.5f ? 1 : 0;
    return eval::confusion(pred, gt);
}

EpochRecord validate_epoch(model::UNet<float>& model, std::span<const dataset::Sample> val_set, Task task,
                           std::size_t batch_size) {
    std::vector<eval::ConfusionCounts> counts;
    for (std::size_t start = 0; start < val_set.size(); start += batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(val_set.size(), start + batch_size); ++i) idx.push_back(i);
        const auto batch = dataset::make_batch(val_set, idx, model.variant(), task);
        const auto probs = model.predict(batch.inputs);
        const int h = static_cast<int>(probs.dim(2));
        const int w = static_cast<int>(probs.dim(3));
        for (std::size_t k = 0; k < idx.size(); ++k) counts.push_back(evaluate_batch(probs, batch.targets, k, w, h));
    }
    const auto agg = eval::aggregate(counts, eval::Aggregation::Micro);
    EpochRecord r;
    r.val_dice = agg.dice;
    r.val_acc = agg.accuracy;
    return r;
}

}  // namespace

fs::path checkpoint_stem(const fs::path& p) {
    if (p.extension() == ".pswt" || p.extension() == ".json") {
        fs::path s = p;
        s.replace_extension();
        return s;
    }
    return p;
}

namespace {
fs::path with_ext(const fs::path& stem, const char* ext) { return fs::path(stem.string() + ext); }
}  // namespace

void save_checkpoint(const fs::path& stem, const model::UNet<float>& model, const AdamState<float>& adam,
                     const CheckpointMeta& meta) {
    auto entries = model.state();
    const auto& params = model.parameters();
    for (std::size_t k = 0; k < params.size() && k < adam.m.size(); ++k) {
        entries.push_back(moment_entry(params[k].name + kMomentM, adam.m[k]));
        entries.push_back(moment_entry(params[k].name + kMomentV, adam.v[k]));
    }
    model::write_weight_file(with_ext(stem, ".pswt"), entries);

    json j{{"epoch", meta.epoch},
           {"adam",
            {{"t", adam.t},
             {"beta1", adam.options.beta1},
             {"beta2", adam.options.beta2},
             {"eps", adam.options.eps}}},
           {"history", history_json(meta.history)},
           {"variant", std::string(to_string(meta.variant))},
           {"task", std::string(to_string(meta.task))},
           {"model", model_config_json(meta.model_config)},
           {"train",
            {{"learning_rate", meta.train_config.learning_rate},
             {"batch_size", meta.train_config.batch_size},
             {"epochs", meta.train_config.epochs},
             {"loss", std::string(to_string(meta.train_config.loss))},
             {"seed", meta.train_config.seed},
             {"checkpoint_every", meta.train_config.checkpoint_every}}}};
    const auto path = with_ext(stem, ".json");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

namespace {

json read_sidecar(const fs::path& stem, AdamOptions* adam_opts, std::uint64_t* adam_t, CheckpointMeta& meta) {
    const auto path = with_ext(stem, ".json");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint metadata '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
        meta.epoch = j.at("epoch").get<std::size_t>();
        meta.history = history_from_json(j.at("history"));
        meta.variant = parse_variant(j.at("variant").get<std::string>());
        meta.task = parse_task(j.at("task").get<std::string>());
        meta.model_config = model_config_from_json(j.at("model"));
        const auto& t = j.at("train");
        meta.train_config.learning_rate = t.at("learning_rate").get<double>();
        meta.train_config.batch_size = t.at("batch_size").get<std::size_t>();
        meta.train_config.epochs = t.at("epochs").get<std::size_t>();
        meta.train_config.loss = parse_loss(t.at("loss").get<std::string>());
        meta.train_config.seed = t.at("seed").get<std::uint64_t>();
        meta.train_config.checkpoint_every = t.at("checkpoint_every").get<std::size_t>();
        const auto& a = j.at("adam");
        if (adam_t) *adam_t = a.at("t").get<std::uint64_t>();
        if (adam_opts) {
            adam_opts->beta1 = a.at("beta1").get<double>();
            adam_opts->beta2 = a.at("beta2").get<double>();
            adam_opts->eps = a.at("eps").get<double>();
        }
    } catch (const json::exception& e) {
        throw FormatError("checkpoint metadata '" + path.string() + "': " + e.what());
    }
    return j;
}

}  // namespace

CheckpointMeta read_checkpoint_meta(const fs::path& stem) {
    CheckpointMeta meta;
    read_sidecar(checkpoint_stem(stem), nullptr, nullptr, meta);
    return meta;
}

CheckpointMeta load_checkpoint(const fs::path& stem_in, model::UNet<float>& model, AdamState<float>* adam) {
    const auto stem = checkpoint_stem(stem_in);
    CheckpointMeta meta;
    AdamOptions opts;
    std::uint64_t t = 0;
    read_sidecar(stem, &opts, &t, meta);
    if (meta.variant != model.variant()) {
        throw ConfigError("checkpoint holds a " + std::string(to_string(meta.variant)) + " model, not " +
                          std::string(to_string(model.variant())));
    }
    auto entries = model::read_weight_file(with_ext(stem, ".pswt"));
    std::vector<model::WeightEntry> weights;
    std::map<std::string, const model::WeightEntry*> moments;
    for (const auto& e : entries) {
        const auto ends_with = [&](const char* suffix) {
            const std::string s(suffix);
            return e.name.size() > s.size() && e.name.compare(e.name.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with(kMomentM) || ends_with(kMomentV)) {
            moments[e.name] = &e;
        } else {
            weights.push_back(e);
        }
    }
    model.load_state(weights, false);
    if (adam) {
        const auto& params = model.parameters();
        *adam = make_adam_state(params, opts);
        adam->t = t;
        for (std::size_t k = 0; k < params.size(); ++k) {
            for (int which = 0; which < 2; ++which) {
                const std::string name = params[k].name + (which == 0 ? kMomentM : kMomentV);
                auto it = moments.find(name);
                if (it == moments.end()) throw FormatError("checkpoint lacks optimizer entry '" + name + "'");
                auto& dst = which == 0 ? adam->m[k] : adam->v[k];
                if (it->second->dims != dst.shape()) {
                    throw ShapeError("optimizer entry '" + name + "' has dims " +
                                     nn::shape_str(it->second->dims) + ", expected " + nn::shape_str(dst.shape()));
                }
                std::copy(it->second->values.begin(), it->second->values.end(), dst.data().begin());
            }
        }
    }
    return meta;
}

model::UNet<float> model_from_checkpoint(const fs::path& stem) {
    const auto meta = read_checkpoint_meta(stem);
    model::UNet<float> m(meta.variant, meta.model_config, 0);
    load_checkpoint(stem, m, nullptr);
    return m;
}

TrainResult train(model::UNet<float>& model, std::span<const dataset::Sample> train_set,
                  std::span<const dataset::Sample> val_set, const TrainConfig& cfg, const TrainOptions& opt) {
    validate(cfg);
    if (train_set.empty()) throw ConfigError("training set is empty");
    if (val_set.empty()) throw ConfigError("validation set is empty");

    const auto& params = model.parameters();
    AdamState<float> adam = make_adam_state(params);
    TrainResult result;
    std::size_t start_epoch = 1;
    const bool checkpoints = !opt.checkpoint_dir.empty();
    const fs::path last_stem = opt.checkpoint_dir / "last";
    const fs::path best_stem = opt.checkpoint_dir / "best";
    if (checkpoints) fs::create_directories(opt.checkpoint_dir);

    if (opt.resume && checkpoints && fs::exists(with_ext(last_stem, ".json"))) {
        const auto meta = load_checkpoint(last_stem, model, &adam);
        result.history = meta.history;
        start_epoch = meta.epoch + 1;
        bool have = false;
        for (const auto& r : result.history) {
            if (better(r.val_dice, result.best_val_dice, have)) {
                result.best_val_dice = r.val_dice;
                result.best_epoch = r.epoch;
                have = true;
            }
        }
    }

    CheckpointMeta meta;
    meta.variant = model.variant();
    meta.task = opt.task;
    meta.model_config = model.config();
    meta.train_config = cfg;

    std::size_t ran = 0;
    for (std::size_t epoch = start_epoch; epoch <= cfg.epochs; ++epoch) {
        if (opt.max_epochs_this_run && ran >= *opt.max_epochs_this_run) break;
        const auto order = epoch_order(train_set.size(), cfg.seed, epoch);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            const auto batch = dataset::make_batch(train_set, idx, model.variant(), opt.task);
            nn::zero_grad(params);
            nn::Tape<float> tape;
            auto pred = model.forward(tape, nn::constant(batch.inputs), nn::BatchNormMode::Train);
            auto loss = compute_loss(cfg.loss, tape, pred, batch.targets);
            const double lv = static_cast<double>(loss->value[0]);
            if (!std::isfinite(lv)) {
                throw TrainingError("loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index));
            }
            tape.backward(loss);
            tape.clear();
            adam_step(params, adam, cfg.learning_rate);
            loss_sum += lv * static_cast<double>(idx.size());
        }
        EpochRecord rec = validate_epoch(model, val_set, opt.task, cfg.batch_size);
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        result.history.push_back(rec);
        ++ran;

        const bool is_best = better(rec.val_dice, result.best_val_dice, result.best_epoch != 0);
        if (is_best) {
            result.best_val_dice = rec.val_dice;
            result.best_epoch = epoch;
        }
        if (checkpoints) {
            meta.epoch = epoch;
            meta.history = result.history;
            save_checkpoint(last_stem, model, adam, meta);
            if (is_best) save_checkpoint(best_stem, model, adam, meta);
            if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
                char name[32];
                std::snprintf(name, sizeof name, "epoch_%04zu", epoch);
                save_checkpoint(opt.checkpoint_dir / name, model, adam, meta);
            }
        }
        if (opt.on_epoch) opt.on_epoch(rec);
    }
    return result;
}

}  // namespace parceldelin::train
