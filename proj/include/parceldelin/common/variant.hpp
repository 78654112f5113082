#pragma once

#include <string>
#include <string_view>

namespace parceldelin {

enum class ModelVariant { Spatial, SpatialPretrained, SpatioTemporal, SpatioTemporalPretrained };

// Which ground-truth mask a model is trained against.
enum class Task { Boundary, Area };

std::string_view to_string(ModelVariant v);
std::string_view to_string(Task t);
// Throw ConfigError for unknown names.
ModelVariant parse_variant(std::string_view name);
Task parse_task(std::string_view name);

// Human-readable column title used in result tables.
std::string_view display_name(ModelVariant v);

inline bool is_pretrained(ModelVariant v) {
    return v == ModelVariant::SpatialPretrained || v == ModelVariant::SpatioTemporalPretrained;
}
inline bool is_temporal(ModelVariant v) {
    return v == ModelVariant::SpatioTemporal || v == ModelVariant::SpatioTemporalPretrained;
}

}  // namespace parceldelin
