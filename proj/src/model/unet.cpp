#include "parceldelin/model/unet.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "parceldelin/common/error.hpp"

namespace parceldelin::model {

using nn::BatchNormMode;
using nn::Shape;
using nn::Tensor;
using nn::Var;

std::size_t variant_input_channels(ModelVariant variant) { return is_temporal(variant) ? 9 : 3; }

void validate(const UNetConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.in_channels != 3 && cfg.in_channels != 9) {
        problems.push_back("in_channels must be 3 or 9 (got " + std::to_string(cfg.in_channels) + ")");
    }
    if (cfg.depth < 2) problems.push_back("depth must be >= 2 (got " + std::to_string(cfg.depth) + ")");
    if (cfg.base_filters == 0) problems.push_back("base_filters must be positive");
    if (cfg.dilation_rates.size() != cfg.depth) {
        problems.push_back("dilation_rates has " + std::to_string(cfg.dilation_rates.size()) +
                           " entries, depth is " + std::to_string(cfg.depth));
    }
    for (auto d : cfg.dilation_rates) {
        if (d == 0) {
            problems.push_back("dilation rates must be positive");
            break;
        }
    }
    if (cfg.depth >= 2 && cfg.depth < 31) {
        const std::size_t unit = std::size_t{1} << cfg.depth;
        if (cfg.size_px == 0 || cfg.size_px % unit != 0) {
            problems.push_back("size_px " + std::to_string(cfg.size_px) + " is not divisible by 2^depth = " +
                               std::to_string(unit));
        }
    } else if (cfg.depth >= 31) {
        problems.push_back("depth is unreasonably large");
    }
    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid model configuration: ";
        for (std::size_t i = 0; i < problems.size(); ++i) os << (i ? "; " : "") << problems[i];
        throw ConfigError(os.str());
    }
}

void validate(ModelVariant variant, const UNetConfig& cfg) {
    validate(cfg);
    if (cfg.in_channels != variant_input_channels(variant)) {
        throw ConfigError("invalid model configuration: variant " + std::string(to_string(variant)) +
                          " takes " + std::to_string(variant_input_channels(variant)) +
                          " input channels, config says " + std::to_string(cfg.in_channels));
    }
    if (is_pretrained(variant)) {
        for (auto d : cfg.dilation_rates) {
            if (d != 1) {
                throw ConfigError("invalid model configuration: pretrained variants use dilation 1 at every level");
            }
        }
    }
}

UNetConfig default_config(ModelVariant variant, std::size_t size_px, std::size_t base_filters,
                          std::size_t depth) {
    UNetConfig cfg;
    cfg.in_channels = variant_input_channels(variant);
    cfg.depth = depth;
    cfg.base_filters = base_filters;
    cfg.size_px = size_px;
    cfg.use_batchnorm = is_pretrained(variant);
    cfg.dilation_rates.clear();
    for (std::size_t l = 0; l < depth; ++l) {
        cfg.dilation_rates.push_back(is_pretrained(variant) ? 1 : (std::size_t{1} << l));
    }
    return cfg;
}

template <typename T>
UNet<T>::UNet(ModelVariant variant, UNetConfig cfg, std::uint64_t init_seed)
    : variant_(variant), cfg_(std::move(cfg)), rng_(init_seed) {
    validate(variant_, cfg_);
    const bool bn = cfg_.use_batchnorm;
    std::size_t cin = cfg_.in_channels;
    if (variant_ == ModelVariant::SpatioTemporalPretrained) {
        has_adapter_ = true;
        // Starts as the temporal mean of each colour channel, so imported
        // 3-channel encoder weights see a plausible RGB image from step one.
        Tensor<T> w(Shape{3, 9, 1, 1});
        for (std::size_t o = 0; o < 3; ++o) {
            for (std::size_t s = 0; s < 3; ++s) w.at(o, s * 3 + o, 0, 0) = T(1) / T(3);
        }
        adapter_.weight = add_param("adapter.weight", std::move(w));
        adapter_.bias = add_param("adapter.bias", Tensor<T>(Shape{3}));
        cin = 3;
    }

    // Spatial extent at each level; the skip at level l must match the
    // upsampled map coming from level l+1.
    std::size_t extent = cfg_.size_px;
    std::vector<std::size_t> skip_extent;
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        const std::size_t f = cfg_.base_filters << l;
        const std::size_t d = cfg_.dilation_rates[l];
        const std::string p = "enc" + std::to_string(l);
        enc_.push_back(make_unit(p + ".conv1", cin, f, 3, d, bn, true));
        enc_.push_back(make_unit(p + ".conv2", f, f, 3, d, bn, true));
        skip_extent.push_back(extent);
        extent /= 2;
        cin = f;
    }
    const std::size_t fb = cfg_.base_filters << cfg_.depth;
    bott1_ = make_unit("bottleneck.conv1", cin, fb, 3, 1, bn, true);
    bott2_ = make_unit("bottleneck.conv2", fb, fb, 3, 1, bn, true);
    cin = fb;
    for (std::size_t i = 0; i < cfg_.depth; ++i) {
        const std::size_t l = cfg_.depth - 1 - i;
        const std::size_t f = cfg_.base_filters << l;
        const std::string p = "dec" + std::to_string(l);
        extent *= 2;
        if (extent != skip_extent[l]) {
            throw ConfigError("skip connection at level " + std::to_string(l) + " would join " +
                              std::to_string(skip_extent[l]) + " px with " + std::to_string(extent) + " px");
        }
        dec_.push_back(make_unit(p + ".up", cin, f, 3, 1, bn, true));
        dec_.push_back(make_unit(p + ".conv1", 2 * f, f, 3, 1, bn, true));
        dec_.push_back(make_unit(p + ".conv2", f, f, 3, 1, bn, true));
        cin = f;
    }
    head_ = make_unit("head", cin, 1, 1, 1, false, false);
}

template <typename T>
Var<T> UNet<T>::add_param(const std::string& name, Tensor<T> value) {
    auto v = nn::parameter(std::move(value));
    params_.push_back({name, v});
    return v;
}

template <typename T>
typename UNet<T>::Unit UNet<T>::make_unit(const std::string& name, std::size_t cin, std::size_t cout,
                                          std::size_t k, std::size_t dilation, bool bn, bool he_init) {
    Unit u;
    u.conv.dilation = dilation;
    u.conv.pad = dilation * (k / 2);
    Tensor<T> w(Shape{cout, cin, k, k});
    const double fan_in = static_cast<double>(cin * k * k);
    const double std_dev = std::sqrt((he_init ? 2.0 : 1.0) / fan_in);
    for (auto& x : w.data()) x = static_cast<T>(rng_.normal() * std_dev);
    if (bn) {
        // The conv bias would be cancelled by the normalization.
        u.weight = add_param(name + ".weight", std::move(w));
        u.gamma = add_param(name + ".bn.weight", Tensor<T>(Shape{cout}, T(1)));
        u.beta = add_param(name + ".bn.bias", Tensor<T>(Shape{cout}));
        u.stats_index = stats_.size();
        stats_.emplace_back(cout);
        stats_names_.push_back(name + ".bn");
    } else {
        u.weight = add_param(name + ".weight", std::move(w));
        u.bias = add_param(name + ".bias", Tensor<T>(Shape{cout}));
    }
    return u;
}

template <typename T>
Var<T> UNet<T>::run_unit(nn::Tape<T>& tape, Unit& u, const Var<T>& x, BatchNormMode mode, bool activate) {
    auto y = nn::conv2d(tape, x, u.weight, u.bias, u.conv);
    if (u.gamma) y = nn::batchnorm2d(tape, y, u.gamma, u.beta, stats_[u.stats_index], mode);
    return activate ? nn::relu(tape, y) : y;
}

template <typename T>
Var<T> UNet<T>::adapter_forward(nn::Tape<T>& tape, const Var<T>& x9) {
    if (!has_adapter_) {
        throw ConfigError("variant " + std::string(to_string(variant_)) + " has no input adapter");
    }
    const auto& s = x9->value.shape();
    if (s.size() != 4 || s[1] != 9) {
        throw ShapeError("adapter expects (N, 9, H, W), got " + nn::shape_str(s));
    }
    return nn::conv2d(tape, x9, adapter_.weight, adapter_.bias, nn::ConvParams{});
}

template <typename T>
Var<T> UNet<T>::forward(nn::Tape<T>& tape, const Var<T>& input, BatchNormMode mode) {
    const auto& s = input->value.shape();
    const std::size_t unit = std::size_t{1} << cfg_.depth;
    if (s.size() != 4 || s[1] != cfg_.in_channels || s[2] == 0 || s[3] == 0 || s[2] % unit != 0 ||
        s[3] % unit != 0) {
        throw ShapeError("model " + std::string(to_string(variant_)) + " expects (N, " +
                         std::to_string(cfg_.in_channels) + ", H, W) with H, W divisible by " +
                         std::to_string(unit) + ", got " + nn::shape_str(s));
    }
    Var<T> x = has_adapter_ ? adapter_forward(tape, input) : input;
    std::vector<Var<T>> skips;
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        x = run_unit(tape, enc_[2 * l], x, mode, true);
        x = run_unit(tape, enc_[2 * l + 1], x, mode, true);
        skips.push_back(x);
        x = nn::maxpool2x(tape, x);
    }
    x = run_unit(tape, bott1_, x, mode, true);
    x = run_unit(tape, bott2_, x, mode, true);
    for (std::size_t i = 0; i < cfg_.depth; ++i) {
        const std::size_t l = cfg_.depth - 1 - i;
        x = nn::upsample_nearest2x(tape, x);
        x = run_unit(tape, dec_[3 * i], x, mode, true);
        x = nn::concat_channels(tape, skips[l], x);
        skips[l].reset();
        x = run_unit(tape, dec_[3 * i + 1], x, mode, true);
        x = run_unit(tape, dec_[3 * i + 2], x, mode, true);
    }
    x = run_unit(tape, head_, x, mode, false);
    return nn::sigmoid(tape, x);
}

template <typename T>
Tensor<T> UNet<T>::predict(const Tensor<T>& input) {
    nn::Tape<T> tape(false);
    return forward(tape, nn::constant(input), BatchNormMode::Eval)->value;
}

template <typename T>
std::size_t UNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var->value.numel();
    return n;
}

namespace {

template <typename T>
WeightEntry to_entry(const std::string& name, const Tensor<T>& t) {
    WeightEntry e;
    e.name = name;
    e.dims = t.shape();
    e.values.reserve(t.numel());
    for (auto v : t.data()) e.values.push_back(static_cast<float>(v));
    return e;
}

}  // namespace

template <typename T>
std::vector<WeightEntry> UNet<T>::state() const {
    std::vector<WeightEntry> out;
    for (const auto& p : params_) out.push_back(to_entry(p.name, p.var->value));
    for (std::size_t i = 0; i < stats_.size(); ++i) {
        out.push_back(to_entry(stats_names_[i] + ".running_mean", stats_[i].running_mean));
        out.push_back(to_entry(stats_names_[i] + ".running_var", stats_[i].running_var));
    }
    return out;
}

template <typename T>
LoadReport UNet<T>::load_state(const std::vector<WeightEntry>& entries, bool allow_partial) {
    std::vector<std::pair<std::string, Tensor<T>*>> targets;
    for (auto& p : params_) targets.emplace_back(p.name, &p.var->value);
    for (std::size_t i = 0; i < stats_.size(); ++i) {
        targets.emplace_back(stats_names_[i] + ".running_mean", &stats_[i].running_mean);
        targets.emplace_back(stats_names_[i] + ".running_var", &stats_[i].running_var);
    }
    std::map<std::string, const WeightEntry*> by_name;
    for (const auto& e : entries) {
        if (!by_name.emplace(e.name, &e).second) throw FormatError("duplicate weight entry '" + e.name + "'");
    }

    LoadReport report;
    std::map<std::string, bool> used;
    for (auto& [name, tensor] : targets) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            report.missing.push_back(name);
            continue;
        }
        if (it->second->dims != tensor->shape()) {
            throw ShapeError("weight '" + name + "' has dims " + nn::shape_str(it->second->dims) +
                             ", model expects " + nn::shape_str(tensor->shape()));
        }
        used[name] = true;
    }
    for (const auto& e : entries) {
        if (!used.count(e.name)) report.unused.push_back(e.name);
    }
    if (!allow_partial && (!report.missing.empty() || !report.unused.empty())) {
        std::ostringstream os;
        os << "weight file does not match model " << to_string(variant_) << ":";
        if (!report.missing.empty()) os << " missing '" << report.missing.front() << "'";
        if (report.missing.size() > 1) os << " (+" << report.missing.size() - 1 << " more)";
        if (!report.unused.empty()) os << " unexpected '" << report.unused.front() << "'";
        if (report.unused.size() > 1) os << " (+" << report.unused.size() - 1 << " more)";
        throw FormatError(os.str());
    }
    // Shapes were all checked above, so nothing is modified on failure.
    for (auto& [name, tensor] : targets) {
        auto it = by_name.find(name);
        if (it == by_name.end()) continue;
        const auto& vals = it->second->values;
        for (std::size_t i = 0; i < vals.size(); ++i) (*tensor)[i] = static_cast<T>(vals[i]);
        ++report.loaded;
    }
    return report;
}

template <typename T>
void save_weights(const UNet<T>& model, const std::filesystem::path& path) {
    const auto entries = model.state();
    write_weight_file(path, entries);
}

template <typename T>
LoadReport load_weights(UNet<T>& model, const std::filesystem::path& path, bool allow_partial) {
    return model.load_state(read_weight_file(path), allow_partial);
}

template class UNet<float>;
template class UNet<double>;
template void save_weights(const UNet<float>&, const std::filesystem::path&);
template void save_weights(const UNet<double>&, const std::filesystem::path&);
template LoadReport load_weights(UNet<float>&, const std::filesystem::path&, bool);
template LoadReport load_weights(UNet<double>&, const std::filesystem::path&, bool);

}  // namespace parceldelin::model
