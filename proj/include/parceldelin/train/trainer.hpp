#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parceldelin/dataset/dataset.hpp"
#include "parceldelin/model/unet.hpp"
#include "parceldelin/train/adam.hpp"
#include "parceldelin/train/loss.hpp"

namespace parceldelin::train {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 6;
    std::size_t epochs = 200;
    LossKind loss = LossKind::Bce;
    std::uint64_t seed = 0;
    // Also keep a numbered checkpoint every N epochs (0 = only "last" and "best").
    std::size_t checkpoint_every = 0;
};

// Throws ConfigError listing violated constraints.
void validate(const TrainConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    std::optional<double> val_dice;  // empty when undefined for the whole split
    double val_acc = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainOptions {
    Task task = Task::Boundary;
    // Directory receiving last.pswt/.json and best.pswt/.json; empty disables.
    std::filesystem::path checkpoint_dir;
    // Continue from checkpoint_dir/last.* when present.
    bool resume = false;
    // Stops after this many epochs of the current call (simulates an interruption).
    std::optional<std::size_t> max_epochs_this_run;
    std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    std::optional<double> best_val_dice;
};

// Seeded per-epoch shuffle of the train set, fixed batch order, last partial
// batch kept. Validation Dice (micro, threshold 0.5) and accuracy after every
// epoch. Throws TrainingError on a non-finite loss, naming epoch and batch.
TrainResult train(model::UNet<float>& model, std::span<const dataset::Sample> train_set,
                  std::span<const dataset::Sample> val_set, const TrainConfig& cfg, const TrainOptions& opt);

// Order in which the train set is visited during `epoch` (1-based).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Checkpoint = weight file (model state plus ".adam_m"/".adam_v" moments) and
// a JSON sidecar with the epoch, optimizer scalars, history and the model and
// training configuration needed to rebuild the run.
struct CheckpointMeta {
    std::size_t epoch = 0;
    ModelVariant variant = ModelVariant::Spatial;
    Task task = Task::Boundary;
    model::UNetConfig model_config;
    TrainConfig train_config;
    std::vector<EpochRecord> history;
};

void save_checkpoint(const std::filesystem::path& stem, const model::UNet<float>& model,
                     const AdamState<float>& adam, const CheckpointMeta& meta);
// Reads only the sidecar.
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& stem);
// Restores model weights and, when `adam` is non-null, the optimizer state.
CheckpointMeta load_checkpoint(const std::filesystem::path& stem, model::UNet<float>& model,
                               AdamState<float>* adam);
// Builds the model described by the sidecar and loads its weights.
model::UNet<float> model_from_checkpoint(const std::filesystem::path& stem);

// "<stem>.pswt" / "<stem>.json"; a stem given with either extension is accepted.
std::filesystem::path checkpoint_stem(const std::filesystem::path& p);

}  // namespace parceldelin::train
