#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace parceldelin::cli {

// Parsed flags of each subcommand. Field names mirror the long flag names so
// the effective-config JSON can be replayed as command-line arguments.

struct BuildDatasetArgs {
    std::string shapefile;
    std::string geojson;
    std::string images_dir;
    std::string out;
    std::size_t n_tiles = 2000;
    int size_px = 224;
    std::uint64_t seed = 0;
    std::size_t max_attempts = 0;  // 0 = 50 * n_tiles
    std::size_t jobs = 1;
};

struct SynthArgs {
    std::string out;
    std::string profile = "desk";
    std::size_t n_tiles = 200;
    std::optional<int> size_px;
    std::uint64_t seed = 0;
    int sites_min = 8;
    int sites_max = 16;
    double farm_fraction = 0.7;
    double noise_sigma = 0.03;
    double cell_drift = 0.25;
    std::vector<double> slot_offsets{-0.05, 0.0, 0.05};
    int palette_size = 2;
    double cloud_prob = 0.0;
    double cloud_radius_min = 0.15;
    double cloud_radius_max = 0.35;
    bool cloud_allow_slot1 = false;
    std::size_t jobs = 1;
};

struct TrainArgs {
    std::string data;
    std::string out;
    std::string profile = "desk";
    std::string variant = "spatial";
    std::string task = "boundary";
    std::string loss = "bce";
    std::optional<std::size_t> epochs;
    double lr = 1e-4;
    std::size_t batch = 6;
    std::uint64_t seed = 0;
    std::optional<std::size_t> base_filters;
    std::size_t depth = 4;
    std::string pretrained_weights;
    std::size_t checkpoint_every = 0;
    bool resume = false;
};

struct EvalArgs {
    std::vector<std::string> checkpoint;
    std::string data;
    std::string split = "test";
    std::string out;
    std::string aggregation = "micro";
    double threshold = 0.5;
    std::size_t overlays = 0;
};

struct PredictArgs {
    std::string checkpoint;
    std::string data;
    int tile = 0;
    std::string out;
    double threshold = 0.5;
};

struct ProjectArgs {
    std::string from = "lambert93";
    std::string to = "wgs84";
    std::vector<double> coords;
};

int cmd_build_dataset(const BuildDatasetArgs& a, std::ostream& out);
int cmd_synth(const SynthArgs& a, std::ostream& out);
int cmd_train(const TrainArgs& a, std::ostream& out);
int cmd_eval(const EvalArgs& a, std::ostream& out);
int cmd_predict(const PredictArgs& a, std::ostream& out);
int cmd_project(const ProjectArgs& a, std::ostream& out);

// Effective configuration of a run, replayable through --config.
nlohmann::json to_json(const BuildDatasetArgs& a);
nlohmann::json to_json(const SynthArgs& a);
nlohmann::json to_json(const TrainArgs& a);
nlohmann::json to_json(const EvalArgs& a);
nlohmann::json to_json(const PredictArgs& a);

// Writes {"command": ..., "options": ...} to <dir>/effective_config.json.
void write_effective_config(const std::string& dir, const std::string& command, const nlohmann::json& options);

}  // namespace parceldelin::cli
