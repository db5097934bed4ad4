// occrec command line: synthetic data generation, training, neighbourhood
// search, reconstruction and evaluation as reproducible pipeline stages.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "occrec/config.hpp"
#include "occrec/core.hpp"
#include "occrec/encoder.hpp"
#include "occrec/eval.hpp"
#include "occrec/gradcheck.hpp"
#include "occrec/io.hpp"
#include "occrec/manifest.hpp"
#include "occrec/neighborhood.hpp"
#include "occrec/occlusion.hpp"
#include "occrec/orgnn.hpp"
#include "occrec/synth.hpp"

namespace fs = std::filesystem;
using namespace occrec;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<int> m, d, k_train, k_infer, t, epochs, batch_persons, sets_per_person;
    std::optional<int> enc_batch_persons, enc_images_per_person, threads;
    std::optional<double> theta_train, theta_infer, eta, learning_rate;
    std::optional<std::string> lr_decay_epochs;
    std::optional<std::uint64_t> seed;
    std::optional<bool> reconstruct_gallery, filter_same_camera;

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (m) cfg.m = *m;
        if (d) cfg.d = *d;
        if (k_train) cfg.k_train = *k_train;
        if (k_infer) cfg.k_infer = *k_infer;
        if (theta_train) cfg.theta_train = *theta_train;
        if (theta_infer) cfg.theta_infer = *theta_infer;
        if (t) cfg.t = *t;
        if (eta) cfg.eta = *eta;
        if (learning_rate) cfg.learning_rate = *learning_rate;
        if (lr_decay_epochs) cfg.lr_decay_epochs = detail::parse_int_list(*lr_decay_epochs);
        if (epochs) cfg.epochs = *epochs;
        if (batch_persons) cfg.batch_persons = *batch_persons;
        if (sets_per_person) cfg.sets_per_person = *sets_per_person;
        if (enc_batch_persons) cfg.enc_batch_persons = *enc_batch_persons;
        if (enc_images_per_person) cfg.enc_images_per_person = *enc_images_per_person;
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (reconstruct_gallery) cfg.reconstruct_gallery = *reconstruct_gallery;
        if (filter_same_camera) cfg.filter_same_camera = *filter_same_camera;
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "flat key=value config file; flags override it");
    cmd->add_option("--m", o.m, "number of parts");
    cmd->add_option("--d", o.d, "per-part feature dimension (encoder target)");
    cmd->add_option("--k-train", o.k_train, "neighbourhood size for training");
    cmd->add_option("--k-infer", o.k_infer, "neighbourhood size for inference");
    cmd->add_option("--theta-train", o.theta_train, "similarity threshold for training");
    cmd->add_option("--theta-infer", o.theta_infer, "similarity threshold for inference");
    cmd->add_option("--t", o.t, "GNN layers");
    cmd->add_option("--eta", o.eta, "triplet margin");
    cmd->add_option("--learning-rate", o.learning_rate, "Adam learning rate");
    cmd->add_option("--lr-decay-epochs", o.lr_decay_epochs, "comma list of decay epochs");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--batch-persons", o.batch_persons, "GNN batch: persons");
    cmd->add_option("--sets-per-person", o.sets_per_person, "GNN batch: neighbour sets per person");
    cmd->add_option("--enc-batch-persons", o.enc_batch_persons, "encoder batch: persons");
    cmd->add_option("--enc-images-per-person", o.enc_images_per_person, "encoder batch: images per person");
    cmd->add_option("--seed", o.seed, "RNG seed")->envname("OCCREC_SEED");
    cmd->add_option("--threads", o.threads, "worker cap; 1 is bit-deterministic");
    cmd->add_option("--reconstruct-gallery", o.reconstruct_gallery,
                    "also reconstruct gallery entries (default true)");
    cmd->add_option("--filter-same-camera", o.filter_same_camera,
                    "exclude same-camera same-id gallery items (default false)");
}

void write_manifest(const std::string& command, const PipelineConfig& cfg,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                    const StageTimer& timer, const fs::path& dir) {
    RunManifest man;
    man.command = command;
    man.config = cfg.to_json();
    man.seed = cfg.seed;
    man.inputs = inputs;
    man.outputs = outputs;
    man.elapsed_ms = timer.elapsed_ms();
    man.write((dir / ("manifest_" + command + ".json")).string());
}

struct GenOpts {
    CommonOpts common;
    std::string out_dir;
    SynthSpec spec;
    bool json_flavour = false;
};

void run_gen(const GenOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    SynthSpec spec = o.spec;
    spec.seed = cfg.seed;
    spec.validate();
    fs::create_directories(o.out_dir);
    SynthOutput data = generate(spec);

    const std::string ext = o.json_flavour ? ".json" : ".feat";
    const fs::path dir(o.out_dir);
    const std::string train_path = (dir / ("train" + ext)).string();
    const std::string query_path = (dir / ("query" + ext)).string();
    const std::string gallery_path = (dir / ("gallery" + ext)).string();
    const std::string truth_path = (dir / "truth.json").string();
    write_feature_file(data.train, train_path);
    write_feature_file(data.query, query_path);
    write_feature_file(data.gallery, gallery_path);
    std::vector<PartFeatureSet> everything;
    for (const auto* ds : {&data.train, &data.query, &data.gallery})
        everything.insert(everything.end(), ds->items.begin(), ds->items.end());
    write_truth_json(truth_path, everything, data.visibility_truth);

    std::cout << "gen: " << data.train.items.size() << " train / " << data.query.items.size()
              << " query / " << data.gallery.items.size() << " gallery images, "
              << spec.num_identities << " identities, D_raw=" << spec.raw_dim << "\n";
    write_manifest("gen", cfg, {}, {train_path, query_path, gallery_path, truth_path}, timer, dir);
}

struct MasksOpts {
    CommonOpts common;
    std::string out_dir;
    int count = 500;
    int frame_h = 64;
    int frame_w = 32;
    bool rle = false;
};

void run_masks(const MasksOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    auto fixtures = generate_masks(o.count, cfg.seed, o.frame_h, o.frame_w);
    nlohmann::json truth;
    truth["masks"] = nlohmann::json::array();
    std::vector<std::string> outputs;
    for (const auto& fx : fixtures) {
        const std::string file = fx.name + (o.rle ? ".json" : ".pgm");
        const std::string path = (dir / file).string();
        if (o.rle)
            write_mask_rle_json(fx.mask, path);
        else
            write_pgm(fx.mask, path);
        truth["masks"].push_back({{"file", file}, {"m", fx.truth}});
        outputs.push_back(path);
    }
    const std::string truth_path = (dir / "masks_truth.json").string();
    std::ofstream out(truth_path);
    out << truth.dump(1) << '\n';
    outputs.push_back(truth_path);
    std::cout << "masks: wrote " << fixtures.size() << " fixtures to " << o.out_dir << "\n";
    write_manifest("masks", cfg, {}, outputs, timer, dir);
}

struct TrainEncoderOpts {
    CommonOpts common;
    std::string train_path, out_path;
};

void run_train_encoder(const TrainEncoderOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset train = read_feature_file(o.train_path, Split::train);
    auto result = train_encoder(train, cfg);
    save_encoder(result.params, o.out_path);
    if (!result.epoch_loss.empty())
        std::cout << "train-encoder: loss " << result.epoch_loss.front() << " -> "
                  << result.epoch_loss.back() << " over " << result.epoch_loss.size() << " epochs\n";
    else
        std::cout << "train-encoder: 0 epochs, wrote initialization\n";
    write_manifest("train-encoder", cfg, {o.train_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct EncodeOpts {
    CommonOpts common;
    std::string in_path, ckpt_path, out_path;
};

void run_encode(const EncodeOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset raw = read_feature_file(o.in_path);
    EncoderParams params = load_encoder(o.ckpt_path);
    Dataset encoded = encode_dataset(raw, params);
    for (auto& it : encoded.items) quantize_f32(it);
    write_feature_file(encoded, o.out_path);
    std::cout << "encode: " << encoded.items.size() << " images -> D=" << params.dim << "\n";
    write_manifest("encode", cfg, {o.in_path, o.ckpt_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct OcclusionOpts {
    CommonOpts common;
    std::vector<std::string> masks;
    std::string out_path;
};

void run_occlusion(const OcclusionOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    nlohmann::json out = nlohmann::json::array();
    for (const auto& path : o.masks) {
        BodyMask mask = read_mask(path);
        auto layout = PartLayout::stripes(mask.height, mask.width);
        auto state = estimate_visibility(mask, layout);
        out.push_back({{"file", path},
                       {"scores", state.scores},
                       {"mask", state.mask},
                       {"empty", state.empty_mask}});
    }
    std::ofstream f(o.out_path);
    if (!f) throw std::runtime_error("occlusion: cannot open '" + o.out_path + "' for writing");
    f << out.dump(1) << '\n';
    std::cout << "occlusion: estimated " << o.masks.size() << " masks\n";
    write_manifest("occlusion", cfg, o.masks, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct IndexOpts {
    CommonOpts common;
    std::string gallery_path, out_path;
};

void run_index(const IndexOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset gallery = read_feature_file(o.gallery_path);
    GalleryIndex index = build_index(gallery);
    nlohmann::json j;
    j["images"] = index.images.size();
    j["dim"] = index.dim;
    j["parts"] = nlohmann::json::array();
    for (int p = 0; p < index.num_parts; ++p)
        j["parts"].push_back({{"part", p}, {"rows", index.parts[p].ids.size()}});
    std::ofstream f(o.out_path);
    if (!f) throw std::runtime_error("index: cannot open '" + o.out_path + "' for writing");
    f << j.dump(1) << '\n';
    std::cout << "index: " << index.images.size() << " gallery images indexed\n";
    write_manifest("index", cfg, {o.gallery_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct NeighborsOpts {
    CommonOpts common;
    std::string query_path, gallery_path, out_path;
    bool all_parts = false;
};

void run_neighbors(const NeighborsOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset query = read_feature_file(o.query_path, Split::query);
    Dataset gallery = read_feature_file(o.gallery_path);
    if (o.all_parts) {
        query = assume_all_visible(query);
        gallery = assume_all_visible(gallery);
    }
    GalleryIndex index = build_index(gallery);
    std::ofstream out(o.out_path);
    if (!out) throw std::runtime_error("neighbors: cannot open '" + o.out_path + "' for writing");
    for (const auto& q : query.items) {
        NeighborSet ns = image_neighborhood(index, q, cfg.k_infer, cfg.theta_infer);
        nlohmann::json j;
        j["query"] = ns.target_id;
        j["members"] = ns.members;
        j["fallback"] = ns.fallback;
        out << j.dump() << '\n';
    }
    std::cout << "neighbors: wrote " << query.items.size() << " neighbourhoods\n";
    write_manifest("neighbors", cfg, {o.query_path, o.gallery_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct TrainGnnOpts {
    CommonOpts common;
    std::string train_path, out_path;
    std::string mode = "orgnn";
};

AggMode parse_mode(const std::string& mode) {
    if (mode == "orgnn") return AggMode::outlier_removable;
    if (mode == "gnn") return AggMode::plain_gnn;
    if (mode == "avgagg") return AggMode::average;
    throw std::runtime_error("unknown aggregation mode '" + mode + "' (want orgnn|gnn|avgagg)");
}

void run_train_gnn(const TrainGnnOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset train = read_feature_file(o.train_path, Split::train);
    auto result = train_orgnn(train, cfg, parse_mode(o.mode));
    save_orgnn(result.params, o.out_path);
    if (!result.epoch_loss.empty())
        std::cout << "train-gnn[" << o.mode << "]: loss " << result.epoch_loss.front() << " -> "
                  << result.epoch_loss.back() << " over " << result.epoch_loss.size() << " epochs"
                  << (result.aborted ? " (aborted on non-finite loss)" : "") << "\n";
    else
        std::cout << "train-gnn: 0 epochs, wrote initialization\n";
    write_manifest("train-gnn", cfg, {o.train_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct ReconstructOpts {
    CommonOpts common;
    std::string in_path, gallery_path, ckpt_path, out_path;
    std::string mode = "orgnn";
};

void run_reconstruct(const ReconstructOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset input = read_feature_file(o.in_path, Split::query);
    Dataset gallery = read_feature_file(o.gallery_path);
    ORGNNParams params = load_orgnn(o.ckpt_path);
    const AggMode mode = parse_mode(o.mode);
    GalleryIndex index = build_index(gallery);

    std::vector<PartFeatureSet> items(input.items.size());
    std::vector<int> fallbacks(input.items.size(), 0);
    parallel_for(static_cast<int>(input.items.size()), cfg.threads, [&](int i) {
        const auto& item = input.items[i];
        NeighborSet ns = image_neighborhood(index, item, cfg.k_infer, cfg.theta_infer);
        PartFeatureSet out = item;
        if (ns.fallback) {
            fallbacks[i] = 1;
            for (int p = 0; p < item.parts(); ++p)
                if (!item.visibility_mask[p]) out.features[p].assign(item.dim(), 0.0);
        } else {
            std::vector<const PartFeatureSet*> neighbors;
            for (const auto& id : ns.members) neighbors.push_back(index.find(id));
            out.features = reconstruct(item, neighbors, params, params.layers, mode);
            out.visibility_scores.assign(item.parts(), 1.0);
            out.visibility_mask.assign(item.parts(), true);
        }
        out = l2_normalize_parts(out);
        quantize_f32(out);
        items[i] = std::move(out);
    });
    int fallback_count = 0;
    for (int f : fallbacks) fallback_count += f;

    Dataset out_ds = make_dataset(std::move(items), input.split, input.num_parts, input.feature_dim);
    write_feature_file(out_ds, o.out_path);
    std::cout << "reconstruct: " << out_ds.items.size() << " images, " << fallback_count
              << " fallbacks\n";
    write_manifest("reconstruct", cfg, {o.in_path, o.gallery_path, o.ckpt_path}, {o.out_path}, timer,
                   fs::path(o.out_path).parent_path());
}

struct EvalOpts {
    CommonOpts common;
    std::string query_path, gallery_path, out_path, csv_path;
    std::string variant = "oan+orgnn";
    std::string orgnn_ckpt, gnn_ckpt;
};

void run_eval(const EvalOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    Dataset query = read_feature_file(o.query_path, Split::query);
    Dataset gallery = read_feature_file(o.gallery_path);

    VariantContext ctx;
    ctx.query = &query;
    ctx.gallery = &gallery;
    ctx.cfg = cfg;
    ORGNNParams orgnn_params, gnn_params;
    if (!o.orgnn_ckpt.empty()) {
        orgnn_params = load_orgnn(o.orgnn_ckpt);
        ctx.orgnn = &orgnn_params;
    }
    if (!o.gnn_ckpt.empty()) {
        gnn_params = load_orgnn(o.gnn_ckpt);
        ctx.gnn = &gnn_params;
    }

    EvalReport report = run_variant(parse_variant(o.variant), ctx);
    nlohmann::json j = report_to_json(report);
    validate_report_json(j);
    std::ofstream out(o.out_path);
    if (!out) throw std::runtime_error("eval: cannot open '" + o.out_path + "' for writing");
    out << j.dump(1) << '\n';
    std::vector<std::string> outputs = {o.out_path};
    if (!o.csv_path.empty()) {
        std::ofstream csv(o.csv_path);
        csv << report_csv_header() << '\n' << report_csv_row(report) << '\n';
        outputs.push_back(o.csv_path);
    }
    std::cout << report.variant << ": mAP " << report.mean_ap << ", rank-1 " << report.cmc1()
              << ", fallbacks " << report.fallbacks << "\n";
    std::vector<std::string> inputs = {o.query_path, o.gallery_path};
    if (!o.orgnn_ckpt.empty()) inputs.push_back(o.orgnn_ckpt);
    if (!o.gnn_ckpt.empty()) inputs.push_back(o.gnn_ckpt);
    write_manifest("eval", cfg, inputs, outputs, timer, fs::path(o.out_path).parent_path());
}

struct AblateOpts {
    CommonOpts common;
    std::string query_path, gallery_path, train_path, out_dir;
    bool with_encoder = false;
};

void run_ablate(const AblateOpts& o) {
    StageTimer timer;
    PipelineConfig cfg = o.common.resolve();
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);

    Dataset train = read_feature_file(o.train_path, Split::train);
    Dataset query = read_feature_file(o.query_path, Split::query);
    Dataset gallery = read_feature_file(o.gallery_path);

    std::vector<std::string> outputs;
    if (o.with_encoder) {
        auto enc = train_encoder(train, cfg);
        const std::string enc_path = (dir / "encoder.ckpt").string();
        save_encoder(enc.params, enc_path);
        outputs.push_back(enc_path);
        train = encode_dataset(train, enc.params);
        query = encode_dataset(query, enc.params);
        gallery = encode_dataset(gallery, enc.params);
    }

    std::cout << "ablate: training OR-GNN...\n";
    auto orgnn_result = train_orgnn(train, cfg, AggMode::outlier_removable);
    std::cout << "ablate: training GNN (no outlier module)...\n";
    auto gnn_result = train_orgnn(train, cfg, AggMode::plain_gnn);
    const std::string orgnn_path = (dir / "orgnn.ckpt").string();
    const std::string gnn_path = (dir / "gnn.ckpt").string();
    save_orgnn(orgnn_result.params, orgnn_path);
    save_orgnn(gnn_result.params, gnn_path);
    outputs.push_back(orgnn_path);
    outputs.push_back(gnn_path);

    VariantContext ctx;
    ctx.query = &query;
    ctx.gallery = &gallery;
    ctx.orgnn = &orgnn_result.params;
    ctx.gnn = &gnn_result.params;
    ctx.cfg = cfg;

    const std::string csv_path = (dir / "ablate.csv").string();
    std::ofstream csv(csv_path);
    csv << report_csv_header() << '\n';
    for (Variant v : all_variants()) {
        EvalReport report = run_variant(v, ctx);
        nlohmann::json j = report_to_json(report);
        validate_report_json(j);
        std::string name = report.variant;
        for (auto& c : name)
            if (c == '+') c = '_';
        const std::string report_path = (dir / ("report_" + name + ".json")).string();
        std::ofstream out(report_path);
        out << j.dump(1) << '\n';
        outputs.push_back(report_path);
        csv << report_csv_row(report) << '\n';
        std::cout << "  " << report.variant << ": mAP " << report.mean_ap << ", rank-1 "
                  << report.cmc1() << "\n";
    }
    csv.close();
    outputs.push_back(csv_path);
    write_manifest("ablate", cfg, {o.query_path, o.gallery_path, o.train_path}, outputs, timer, dir);
}

void run_gradcheck(const CommonOpts& common) {
    PipelineConfig cfg = common.resolve();
    auto reports = run_all_gradchecks(cfg.seed);
    bool all_pass = true;
    for (const auto& r : reports) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << ": max rel error "
                  << r.max_rel_error << " (tolerance " << r.tolerance << ", " << r.instances
                  << " instances, " << r.resampled << " resampled)\n";
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) throw std::runtime_error("gradient check exceeded tolerance");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occluded-instance retrieval: part features, neighbourhood search and "
                 "outlier-removable GNN reconstruction"};
    app.require_subcommand(1);

    GenOpts gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic benchmark");
    add_common(gen_cmd, gen.common);
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--num-identities", gen.spec.num_identities, "identities (train+test)");
    gen_cmd->add_option("--images-per-identity", gen.spec.images_per_identity, "images per identity");
    gen_cmd->add_option("--d-raw", gen.spec.raw_dim, "raw feature dimension");
    gen_cmd->add_option("--occlusion-rate", gen.spec.occlusion_rate, "per-part occlusion probability");
    gen_cmd->add_option("--sigma-id", gen.spec.sigma_id, "intra-identity noise");
    gen_cmd->add_option("--num-obstacle-clusters", gen.spec.num_obstacle_clusters, "obstacle clusters");
    gen_cmd->add_option("--obstacle-noise", gen.spec.obstacle_noise, "obstacle cluster spread");
    gen_cmd->add_option("--camera-count", gen.spec.camera_count, "cameras");
    gen_cmd->add_flag("--json", gen.json_flavour, "emit the pure-JSON feature flavour");
    gen_cmd->callback([&] {
        gen.spec.num_parts = gen.common.m.value_or(kDefaultParts);
        gen.spec.dim = gen.common.d.value_or(gen.spec.dim);
        run_gen(gen);
    });

    MasksOpts masks;
    auto* masks_cmd = app.add_subcommand("masks", "generate body-mask fixtures with ground truth");
    add_common(masks_cmd, masks.common);
    masks_cmd->add_option("--out", masks.out_dir, "output directory")->required();
    masks_cmd->add_option("--count", masks.count, "number of fixtures");
    masks_cmd->add_option("--frame-h", masks.frame_h, "frame height (pixels)");
    masks_cmd->add_option("--frame-w", masks.frame_w, "frame width (pixels)");
    masks_cmd->add_flag("--rle", masks.rle, "emit RLE JSON masks instead of PGM");
    masks_cmd->callback([&] { run_masks(masks); });

    TrainEncoderOpts tenc;
    auto* tenc_cmd = app.add_subcommand("train-encoder", "train the per-part linear encoder");
    add_common(tenc_cmd, tenc.common);
    tenc_cmd->add_option("--train", tenc.train_path, "training feature file (raw)")->required();
    tenc_cmd->add_option("--out", tenc.out_path, "encoder checkpoint (OCCENC1)")->required();
    tenc_cmd->callback([&] { run_train_encoder(tenc); });

    EncodeOpts enc;
    auto* enc_cmd = app.add_subcommand("encode", "apply an encoder checkpoint to a feature file");
    add_common(enc_cmd, enc.common);
    enc_cmd->add_option("--in", enc.in_path, "input feature file (raw)")->required();
    enc_cmd->add_option("--ckpt", enc.ckpt_path, "encoder checkpoint")->required();
    enc_cmd->add_option("--out", enc.out_path, "output feature file")->required();
    enc_cmd->callback([&] { run_encode(enc); });

    OcclusionOpts occ;
    auto* occ_cmd = app.add_subcommand("occlusion", "estimate per-part visibility from body masks");
    add_common(occ_cmd, occ.common);
    occ_cmd->add_option("--mask", occ.masks, "mask file(s): PGM or RLE JSON")->required();
    occ_cmd->add_option("--out", occ.out_path, "output JSON")->required();
    occ_cmd->callback([&] { run_occlusion(occ); });

    IndexOpts idx;
    auto* idx_cmd = app.add_subcommand("index", "build the gallery index and report statistics");
    add_common(idx_cmd, idx.common);
    idx_cmd->add_option("--gallery", idx.gallery_path, "gallery feature file")->required();
    idx_cmd->add_option("--out", idx.out_path, "index statistics JSON")->required();
    idx_cmd->callback([&] { run_index(idx); });

    NeighborsOpts nbr;
    auto* nbr_cmd = app.add_subcommand("neighbors", "emit per-query neighbourhoods as JSON lines");
    add_common(nbr_cmd, nbr.common);
    nbr_cmd->add_option("--query", nbr.query_path, "query feature file")->required();
    nbr_cmd->add_option("--gallery", nbr.gallery_path, "gallery feature file")->required();
    nbr_cmd->add_option("--out", nbr.out_path, "output JSONL")->required();
    nbr_cmd->add_flag("--all-parts", nbr.all_parts, "search with every part, ignoring visibility");
    nbr_cmd->callback([&] { run_neighbors(nbr); });

    TrainGnnOpts tgnn;
    auto* tgnn_cmd = app.add_subcommand("train-gnn", "train the outlier-removable GNN");
    add_common(tgnn_cmd, tgnn.common);
    tgnn_cmd->add_option("--train", tgnn.train_path, "training feature file")->required();
    tgnn_cmd->add_option("--out", tgnn.out_path, "GNN checkpoint (OCCGNN1)")->required();
    tgnn_cmd->add_option("--mode", tgnn.mode, "orgnn | gnn");
    tgnn_cmd->callback([&] { run_train_gnn(tgnn); });

    ReconstructOpts rec;
    auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct representations via neighbourhoods");
    add_common(rec_cmd, rec.common);
    rec_cmd->add_option("--in", rec.in_path, "feature file to reconstruct")->required();
    rec_cmd->add_option("--gallery", rec.gallery_path, "gallery feature file")->required();
    rec_cmd->add_option("--ckpt", rec.ckpt_path, "GNN checkpoint")->required();
    rec_cmd->add_option("--out", rec.out_path, "output feature file")->required();
    rec_cmd->add_option("--mode", rec.mode, "orgnn | gnn | avgagg");
    rec_cmd->callback([&] { run_reconstruct(rec); });

    EvalOpts ev;
    auto* ev_cmd = app.add_subcommand("eval", "rank a query split against a gallery and score it");
    add_common(ev_cmd, ev.common);
    ev_cmd->add_option("--query", ev.query_path, "query feature file")->required();
    ev_cmd->add_option("--gallery", ev.gallery_path, "gallery feature file")->required();
    ev_cmd->add_option("--out", ev.out_path, "report JSON")->required();
    ev_cmd->add_option("--csv", ev.csv_path, "also write a one-row CSV");
    ev_cmd->add_option("--variant", ev.variant,
                       "baseline | oan | oan+avgagg | oan+gnn | oan+orgnn | oan+orgnn+ub | gnn_no_oan");
    ev_cmd->add_option("--orgnn", ev.orgnn_ckpt, "OR-GNN checkpoint");
    ev_cmd->add_option("--gnn", ev.gnn_ckpt, "plain-GNN checkpoint");
    ev_cmd->callback([&] { run_eval(ev); });

    AblateOpts ab;
    auto* ab_cmd = app.add_subcommand("ablate", "train both GNNs and run the full variant matrix");
    add_common(ab_cmd, ab.common);
    ab_cmd->add_option("--train", ab.train_path, "training feature file")->required();
    ab_cmd->add_option("--query", ab.query_path, "query feature file")->required();
    ab_cmd->add_option("--gallery", ab.gallery_path, "gallery feature file")->required();
    ab_cmd->add_option("--out", ab.out_dir, "output directory")->required();
    ab_cmd->add_flag("--with-encoder", ab.with_encoder, "train the encoder and encode all splits first");
    ab_cmd->callback([&] { run_ablate(ab); });

    CommonOpts gc_common;
    auto* gc_cmd = app.add_subcommand("gradcheck", "run the finite-difference gradient oracles");
    add_common(gc_cmd, gc_common);
    gc_cmd->callback([&] { run_gradcheck(gc_common); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
