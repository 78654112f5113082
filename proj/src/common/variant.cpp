#include "parceldelin/common/variant.hpp"

#include "parceldelin/common/error.hpp"

namespace parceldelin {

std::string_view to_string(ModelVariant v) {
    switch (v) {
        case ModelVariant::Spatial: return "spatial";
        case ModelVariant::SpatialPretrained: return "spatial-pretrained";
        case ModelVariant::SpatioTemporal: return "spatiotemporal";
        case ModelVariant::SpatioTemporalPretrained: return "spatiotemporal-pretrained";
    }
    return "?";
}

std::string_view to_string(Task t) { return t == Task::Boundary ? "boundary" : "area"; }

ModelVariant parse_variant(std::string_view name) {
    for (auto v : {ModelVariant::Spatial, ModelVariant::SpatialPretrained, ModelVariant::SpatioTemporal,
                   ModelVariant::SpatioTemporalPretrained}) {
        if (name == to_string(v)) return v;
    }
    throw ConfigError("unknown model variant '" + std::string(name) +
                      "' (expected spatial, spatial-pretrained, spatiotemporal, spatiotemporal-pretrained)");
}

Task parse_task(std::string_view name) {
    if (name == "boundary") return Task::Boundary;
    if (name == "area") return Task::Area;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected boundary or area)");
}

std::string_view display_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::Spatial: return "Spatial U-Net";
        case ModelVariant::SpatialPretrained: return "U-Net (Pretrained on ImageNet)";
        case ModelVariant::SpatioTemporal: return "Spatio-temporal U-Net";
        case ModelVariant::SpatioTemporalPretrained: return "Spatio-temporal U-Net (Pretrained on ImageNet)";
    }
    return "?";
}

}  // namespace parceldelin
