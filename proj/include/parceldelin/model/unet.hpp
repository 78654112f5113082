#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "parceldelin/common/rng.hpp"
#include "parceldelin/common/variant.hpp"
#include "parceldelin/model/weights.hpp"
#include "parceldelin/nn/ops.hpp"

namespace parceldelin::model {

struct UNetConfig {
    std::size_t in_channels = 3;  // 3 or 9; what the model consumes, before any adapter
    std::size_t depth = 4;
    std::size_t base_filters = 8;
    std::vector<std::size_t> dilation_rates{1, 2, 4, 8};
    bool use_batchnorm = false;
    std::size_t size_px = 96;
};

// Throws ConfigError naming every violated constraint.
void validate(const UNetConfig& cfg);
void validate(ModelVariant variant, const UNetConfig& cfg);

// Architecture defaults for a variant: dilation (1,2,4,8,...) and no BN for
// from-scratch variants; rates all 1 and BN for pretrained ones.
UNetConfig default_config(ModelVariant variant, std::size_t size_px, std::size_t base_filters,
                          std::size_t depth = 4);

std::size_t variant_input_channels(ModelVariant variant);

struct LoadReport {
    std::size_t loaded = 0;
    std::vector<std::string> missing;  // model entries absent from the file, left untouched
    std::vector<std::string> unused;   // file entries with no counterpart in the model
};

template <typename T>
class UNet {
public:
    UNet(ModelVariant variant, UNetConfig cfg, std::uint64_t init_seed = 0);
    // Copies would share parameter storage.
    UNet(const UNet&) = delete;
    UNet& operator=(const UNet&) = delete;
    UNet(UNet&&) noexcept = default;
    UNet& operator=(UNet&&) noexcept = default;

    ModelVariant variant() const noexcept { return variant_; }
    const UNetConfig& config() const noexcept { return cfg_; }

    // input: (N, in_channels, H, W) with H and W divisible by 2^depth.
    // Returns per-pixel probabilities (N, 1, H, W).
    nn::Var<T> forward(nn::Tape<T>& tape, const nn::Var<T>& input, nn::BatchNormMode mode);
    // Eval-mode forward without recording.
    nn::Tensor<T> predict(const nn::Tensor<T>& input);

    // 1x1 conv 9 -> 3, no activation. Only SpatioTemporalPretrained has one.
    nn::Var<T> adapter_forward(nn::Tape<T>& tape, const nn::Var<T>& x9);

    const std::vector<nn::Parameter<T>>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const;

    // Trainable parameters followed by BN running statistics, in a fixed order.
    std::vector<WeightEntry> state() const;
    LoadReport load_state(const std::vector<WeightEntry>& entries, bool allow_partial);

private:
    struct Unit {
        nn::Var<T> weight, bias, gamma, beta;
        std::size_t stats_index = 0;
        nn::ConvParams conv;
    };

    Unit make_unit(const std::string& name, std::size_t cin, std::size_t cout, std::size_t k,
                   std::size_t dilation, bool bn, bool he_init);
    nn::Var<T> run_unit(nn::Tape<T>& tape, Unit& u, const nn::Var<T>& x, nn::BatchNormMode mode,
                        bool activate);
    nn::Var<T> add_param(const std::string& name, nn::Tensor<T> value);

    ModelVariant variant_;
    UNetConfig cfg_;
    Rng rng_;
    std::vector<nn::Parameter<T>> params_;
    std::vector<std::string> stats_names_;
    std::vector<nn::BatchNormStats<T>> stats_;

    bool has_adapter_ = false;
    Unit adapter_;
    std::vector<Unit> enc_;  // two per level
    Unit bott1_, bott2_;
    std::vector<Unit> dec_;  // three per level, ordered from deepest level up
    Unit head_;
};

template <typename T>
void save_weights(const UNet<T>& model, const std::filesystem::path& path);
template <typename T>
LoadReport load_weights(UNet<T>& model, const std::filesystem::path& path, bool allow_partial);

extern template class UNet<float>;
extern template class UNet<double>;

}  // namespace parceldelin::model
