#include "parceldelin/cli/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "parceldelin/common/error.hpp"

namespace parceldelin::cli {

using nlohmann::json;

namespace {

void setup_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_logger_mt("parceldelin");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
        spdlog::set_level(spdlog::level::info);
        if (const char* env = std::getenv("PARCELDELIN_LOG")) {
            spdlog::set_level(spdlog::level::from_str(env));
        }
        return true;
    }();
    (void)once;
}

// Expands --config FILE into the flags it records. Flags given explicitly on
// the command line win over recorded ones.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config requires a file");
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw CLI::ValidationError("--config", "cannot open '" + config_path + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", std::string("not valid JSON: ") + e.what());
    }
    if (!cfg.contains("command") || !cfg.contains("options") || !cfg["options"].is_object()) {
        throw CLI::ValidationError("--config", "expected {\"command\": ..., \"options\": {...}}");
    }
    const std::string command = cfg["command"].get<std::string>();
    if (rest.empty()) {
        rest.push_back(command);
    } else if (rest.front() != command) {
        throw CLI::ValidationError("--config", "file records command '" + command + "', not '" + rest.front() + "'");
    }
    std::set<std::string> given;
    for (std::size_t i = 1; i < rest.size(); ++i) {
        const auto& a = rest[i];
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                                                : a.find('=') - 2));
    }
    std::vector<std::string> out{rest.front()};
    const auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [key, value] : cfg["options"].items()) {
        if (given.count(key)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back("--" + key);
        } else if (value.is_array()) {
            out.push_back("--" + key);
            for (const auto& v : value) out.push_back(scalar(v));
        } else if (!value.is_null()) {
            out.push_back("--" + key);
            out.push_back(scalar(value));
        }
    }
    out.insert(out.end(), rest.begin() + 1, rest.end());
    return out;
}

const std::vector<std::string> kVariants{"spatial", "spatial-pretrained", "spatiotemporal",
                                         "spatiotemporal-pretrained"};
const std::vector<std::string> kTasks{"boundary", "area"};
const std::vector<std::string> kProfiles{"desk", "paper"};
const std::vector<std::string> kSplits{"train", "val", "test"};

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    setup_logging();

    CLI::App app{"Farm parcel delineation toolkit: vector-to-mask datasets, U-Net training and evaluation"};
    app.name("parceldelin");
    app.require_subcommand(1);

    BuildDatasetArgs bd;
    auto* c_bd = app.add_subcommand("build-dataset", "Sample tiles over a parcel layer and rasterize masks");
    auto* o_shp = c_bd->add_option("--shapefile", bd.shapefile, "Polygon shapefile (.shp) in Lambert-93");
    auto* o_gj = c_bd->add_option("--geojson", bd.geojson, "GeoJSON FeatureCollection in WGS84 degrees");
    o_shp->excludes(o_gj);
    c_bd->add_option("--images-dir", bd.images_dir, "Directory with {tile_id}_s{0,1,2}.png images");
    c_bd->add_option("--out", bd.out, "Output directory")->required();
    c_bd->add_option("--n-tiles", bd.n_tiles, "Number of tile footprints")->capture_default_str();
    c_bd->add_option("--size-px", bd.size_px, "Tile size in pixels")->capture_default_str();
    c_bd->add_option("--seed", bd.seed, "Sampling and split seed")->capture_default_str();
    c_bd->add_option("--max-attempts", bd.max_attempts, "Sampling attempts (0 = 50 per tile)");
    c_bd->add_option("--jobs", bd.jobs, "Worker threads")->check(CLI::PositiveNumber);

    SynthArgs sy;
    std::optional<int> sy_size;
    auto* c_sy = app.add_subcommand("synth", "Generate a synthetic Voronoi parcel dataset");
    c_sy->add_option("--out", sy.out, "Output directory")->required();
    c_sy->add_option("--profile", sy.profile, "desk (96 px) or paper (224 px)")->check(CLI::IsMember(kProfiles));
    c_sy->add_option("--n-tiles", sy.n_tiles)->capture_default_str();
    c_sy->add_option("--size-px", sy_size, "Tile size (default from profile)");
    c_sy->add_option("--seed", sy.seed)->capture_default_str();
    c_sy->add_option("--sites-min", sy.sites_min)->capture_default_str();
    c_sy->add_option("--sites-max", sy.sites_max)->capture_default_str();
    c_sy->add_option("--farm-fraction", sy.farm_fraction)->capture_default_str();
    c_sy->add_option("--noise-sigma", sy.noise_sigma)->capture_default_str();
    c_sy->add_option("--cell-drift", sy.cell_drift, "Per-cell colour drift in slots 0 and 2")->capture_default_str();
    c_sy->add_option("--slot-offsets", sy.slot_offsets, "Seasonal brightness offset per slot")->expected(3);
    c_sy->add_option("--palette-size", sy.palette_size, "Slot1 colours shared by farmland cells")
        ->capture_default_str();
    c_sy->add_option("--cloud-prob", sy.cloud_prob, "Per-tile cloud probability")->capture_default_str();
    c_sy->add_option("--cloud-radius-min", sy.cloud_radius_min, "Fraction of tile size")->capture_default_str();
    c_sy->add_option("--cloud-radius-max", sy.cloud_radius_max, "Fraction of tile size")->capture_default_str();
    c_sy->add_flag("--cloud-allow-slot1", sy.cloud_allow_slot1, "Let clouds fall on Slot1 too");
    c_sy->add_option("--jobs", sy.jobs, "Worker threads")->check(CLI::PositiveNumber);

    TrainArgs tr;
    std::optional<std::size_t> tr_epochs, tr_base;
    auto* c_tr = app.add_subcommand("train", "Train one model variant for one task");
    c_tr->add_option("--data", tr.data, "Dataset directory holding manifest.json")->required();
    c_tr->add_option("--out", tr.out, "Checkpoint directory")->required();
    c_tr->add_option("--profile", tr.profile)->check(CLI::IsMember(kProfiles));
    c_tr->add_option("--variant", tr.variant)->check(CLI::IsMember(kVariants))->capture_default_str();
    c_tr->add_option("--task", tr.task)->check(CLI::IsMember(kTasks))->capture_default_str();
    c_tr->add_option("--loss", tr.loss)->check(CLI::IsMember({"bce", "dice"}))->capture_default_str();
    c_tr->add_option("--epochs", tr_epochs, "Epochs (default from profile)");
    c_tr->add_option("--lr", tr.lr)->capture_default_str();
    c_tr->add_option("--batch", tr.batch)->capture_default_str();
    c_tr->add_option("--seed", tr.seed)->capture_default_str();
    c_tr->add_option("--base-filters", tr_base, "Filters at the first level (default from profile)");
    c_tr->add_option("--depth", tr.depth)->capture_default_str();
    c_tr->add_option("--pretrained-weights", tr.pretrained_weights, "Weight file imported by matching names");
    c_tr->add_option("--checkpoint-every", tr.checkpoint_every, "Extra numbered checkpoint every N epochs");
    c_tr->add_flag("--resume", tr.resume, "Continue from <out>/last.*");

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("eval", "Evaluate checkpoints on a dataset split");
    c_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint stem or .pswt (repeatable)")->required();
    c_ev->add_option("--data", ev.data)->required();
    c_ev->add_option("--split", ev.split)->check(CLI::IsMember(kSplits))->capture_default_str();
    c_ev->add_option("--out", ev.out, "Directory for metrics.json, table.txt and overlays");
    c_ev->add_option("--aggregation", ev.aggregation)->check(CLI::IsMember({"micro", "macro"}))->capture_default_str();
    c_ev->add_option("--threshold", ev.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_ev->add_option("--overlays", ev.overlays, "Number of overlay PNGs per checkpoint");

    PredictArgs pr;
    auto* c_pr = app.add_subcommand("predict", "Predict one tile");
    c_pr->add_option("--checkpoint", pr.checkpoint)->required();
    c_pr->add_option("--data", pr.data)->required();
    c_pr->add_option("--tile", pr.tile)->required();
    c_pr->add_option("--out", pr.out)->required();
    c_pr->add_option("--threshold", pr.threshold)->check(CLI::Range(0.0, 1.0))->capture_default_str();

    ProjectArgs pj;
    auto* c_pj = app.add_subcommand("project", "Convert one coordinate pair");
    c_pj->add_option("--from", pj.from)->check(CLI::IsMember({"lambert93", "wgs84"}))->capture_default_str();
    c_pj->add_option("--to", pj.to)->check(CLI::IsMember({"lambert93", "wgs84"}))->capture_default_str();
    c_pj->add_option("coords", pj.coords, "x y (easting northing, or lon lat)")->expected(2)->required();

    try {
        auto args = expand_config(raw_args);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_bd->parsed()) return cmd_build_dataset(bd, out);
        if (c_sy->parsed()) {
            sy.size_px = sy_size;
            return cmd_synth(sy, out);
        }
        if (c_tr->parsed()) {
            tr.epochs = tr_epochs;
            tr.base_filters = tr_base;
            return cmd_train(tr, out);
        }
        if (c_ev->parsed()) return cmd_eval(ev, out);
        if (c_pr->parsed()) return cmd_predict(pr, out);
        if (c_pj->parsed()) return cmd_project(pj, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace parceldelin::cli
