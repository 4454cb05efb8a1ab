#include "mfm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfm/checkpoint.hpp"
#include "mfm/errors.hpp"
#include "mfm/manifest.hpp"
#include "mfm/metrics.hpp"
#include "mfm/pipeline.hpp"
#include "mfm/synthetic.hpp"
#include "mfm/training.hpp"

namespace mfm {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool g_quiet = false;

void info(const std::string& line) {
    if (!g_quiet) std::cout << line << "\n";
}

std::string motion_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "motion_%05zu.motion", index);
    return buf;
}

std::vector<MotionSequence> load_dataset_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".motion") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no .motion files in '" + dir.string() + "'");
    std::vector<MotionSequence> motions;
    motions.reserve(files.size());
    for (const fs::path& f : files) motions.push_back(read_motion(f));
    return motions;
}

std::size_t dataset_vocab(const std::vector<MotionSequence>& motions) {
    int max_label = -1;
    for (const MotionSequence& m : motions) {
        if (m.condition_id) max_label = std::max(max_label, *m.condition_id);
    }
    return max_label >= 0 ? static_cast<std::size_t>(max_label) + 1 : 1;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void dump_trajectory(const fs::path& jsonl_path, const fs::path& x1_dir, const Trajectory& traj,
                     const ModelBundle& bundle, const std::optional<int>& label) {
    ensure_dir(x1_dir);
    std::string out;
    for (std::size_t step = 0; step < traj.x1_estimates.size(); ++step) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03zu.motion", step);
        const fs::path x1_path = x1_dir / name;
        MotionSequence est(bundle.layout, bundle.norm.denormalize(traj.x1_estimates[step]),
                           label);
        write_motion(x1_path, est);
        nlohmann::json line{{"step", step},
                            {"t", traj.times[step]},
                            {"state_norm", l2_norm(traj.states[step])},
                            {"x1hat_path", x1_path.string()}};
        out += line.dump();
        out += '\n';
    }
    atomic_write_text(jsonl_path, out);
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
    std::string family = "sine-walker";
    std::size_t joints = 22;
    std::size_t frames = 60;
    std::size_t classes = 2;
    std::size_t samples_per_class = 32;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double shift = 3.0;
    double noise_sigma = 1.0;
    double fps = 20.0;
    std::string out;
};

int run_gen_data(const GenDataOpts& o) {
    const auto start = Clock::now();
    SyntheticDatasetSpec spec;
    spec.family = dataset_family_from_string(o.family);
    spec.joints = o.joints;
    spec.frames = o.frames;
    spec.classes = o.classes;
    spec.samples_per_class = o.samples_per_class;
    spec.seed = o.seed;
    spec.sample_stream = o.stream;
    spec.class_shift = o.shift;
    spec.noise_sigma = o.noise_sigma;
    spec.frame_rate = o.fps;

    const std::vector<MotionSequence> motions = gen_synthetic_dataset(spec);
    ensure_dir(o.out);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < motions.size(); ++i) {
        const std::string name = motion_file_name(i);
        write_motion(fs::path(o.out) / name, motions[i]);
        files.push_back(name);
    }

    nlohmann::json index{{"family", o.family},
                         {"joints", spec.joints},
                         {"frames", spec.frames},
                         {"classes", spec.classes},
                         {"samples_per_class", spec.samples_per_class},
                         {"seed", spec.seed},
                         {"sample_stream", spec.sample_stream},
                         {"class_shift", spec.class_shift},
                         {"noise_sigma", spec.noise_sigma},
                         {"frame_rate", spec.frame_rate},
                         {"files", files}};
    atomic_write_text(fs::path(o.out) / "dataset.json", index.dump(2) + "\n");

    RunManifest manifest;
    manifest.command = "gen-data";
    manifest.resolved_config = index;
    manifest.resolved_config.erase("files");
    manifest.outputs = {(fs::path(o.out) / "dataset.json").string(),
                        o.out + " (" + std::to_string(motions.size()) + " motion files)"};
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);
    info("wrote " + std::to_string(motions.size()) + " motions to " + o.out);
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainOpts {
    std::string data;
    std::string out;
    std::string config_path;
    ModelConfig model;
    TrainConfig train;
    // flag presence markers for config-file merging
    CLI::App* cmd = nullptr;
};

void merge_train_config(const nlohmann::json& j, TrainConfig& cfg, const CLI::App* cmd) {
    auto use = [&](const char* flag, const char* key) {
        return j.contains(key) && cmd->count(flag) == 0;
    };
    if (use("--steps", "steps")) cfg.steps = j["steps"].get<std::size_t>();
    if (use("--batch", "batch_size")) cfg.batch_size = j["batch_size"].get<std::size_t>();
    if (use("--lr", "lr")) cfg.lr = j["lr"].get<double>();
    if (use("--beta1", "beta1")) cfg.beta1 = j["beta1"].get<double>();
    if (use("--beta2", "beta2")) cfg.beta2 = j["beta2"].get<double>();
    if (use("--weight-decay", "weight_decay")) cfg.weight_decay = j["weight_decay"].get<double>();
    if (use("--p-drop", "p_drop")) cfg.p_drop = j["p_drop"].get<double>();
    if (use("--sigma-min", "sigma_min")) cfg.path.sigma_min = j["sigma_min"].get<double>();
    if (use("--literal-target", "literal_target")) {
        cfg.path.literal_target = j["literal_target"].get<bool>();
    }
    if (use("--seed", "seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (use("--log-every", "log_every")) cfg.log_every = j["log_every"].get<std::size_t>();
}

int run_train(TrainOpts& o) {
    const auto start = Clock::now();
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw IoError("cannot open config '" + o.config_path + "'");
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed config JSON: " + std::string(e.what()));
        }
        merge_train_config(j, o.train, o.cmd);
    }

    const std::vector<MotionSequence> dataset = load_dataset_dir(o.data);
    o.model.feature_dim = dataset.front().dim();
    o.model.frames = dataset.front().frames;
    o.model.cond_vocab = dataset_vocab(dataset);

    info("training " + architecture_name(o.model.arch) + " on " +
         std::to_string(dataset.size()) + " sequences (D=" +
         std::to_string(o.model.feature_dim) + ", T=" + std::to_string(o.model.frames) + ")");

    TrainResult result = train(dataset, o.model, o.train);

    ensure_dir(o.out);
    const fs::path prefix = fs::path(o.out) / "checkpoint";
    save_bundle(prefix, ModelBundle{result.model, result.layout, result.norm});
    write_train_log(fs::path(o.out) / "train_log.csv", result.log);

    RunManifest manifest;
    manifest.command = "train";
    manifest.resolved_config = {
        {"data", o.data},
        {"steps", o.train.steps},
        {"batch_size", o.train.batch_size},
        {"lr", o.train.lr},
        {"beta1", o.train.beta1},
        {"beta2", o.train.beta2},
        {"weight_decay", o.train.weight_decay},
        {"p_drop", o.train.p_drop},
        {"sigma_min", o.train.path.sigma_min},
        {"literal_target", o.train.path.literal_target},
        {"seed", o.train.seed},
        {"arch", architecture_name(o.model.arch)},
        {"d_model", o.model.d_model},
        {"layers", o.model.layers},
        {"heads", o.model.heads},
        {"d_ff", o.model.d_ff},
        {"cond_dim", o.model.cond_dim},
        {"time_dim", o.model.time_dim}};
    manifest.inputs = {o.data};
    manifest.outputs = {bundle_param_path(prefix).string(), bundle_meta_path(prefix).string(),
                        (fs::path(o.out) / "train_log.csv").string()};
    manifest.checkpoint_sha1 = git_blob_sha1(bundle_param_path(prefix));
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);

    if (result.diverged) {
        std::cerr << "error: category=numeric message=\"loss diverged at step "
                  << result.diverged_at_step << "; last good checkpoint written\"\n";
        return 4;
    }
    if (!result.log.empty()) {
        info("final loss " + std::to_string(result.log.back().loss) + " at step " +
             std::to_string(result.log.back().step));
    }
    info("checkpoint written to " + bundle_param_path(prefix).string());
    return 0;
}

// ------------------------------------------------------------------ sample

struct SampleOpts {
    std::string ckpt;
    std::string out;
    std::size_t count = 4;
    std::size_t steps = 10;
    double guidance = 1.0;
    std::string solver = "euler";
    int label = -1;  // -1: cycle over the vocabulary
    bool uncond = false;
    std::uint64_t seed = 0;
    bool traj = false;
};

int run_sample(const SampleOpts& o) {
    const auto start = Clock::now();
    const ModelBundle bundle = load_bundle(o.ckpt);
    ensure_dir(o.out);

    Rng root(o.seed);
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < o.count; ++i) {
        SamplerConfig cfg;
        cfg.solver = solver_from_string(o.solver);
        cfg.steps = o.steps;
        cfg.guidance = o.guidance;
        cfg.seed = root.child(i + 1).seed();
        std::optional<int> label;
        if (!o.uncond) {
            label = o.label >= 0 ? o.label
                                 : static_cast<int>(i % bundle.model.config().cond_vocab);
        }
        const SampleOutput result = sample_motion(bundle, label, cfg);

        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04zu", i);
        const fs::path motion_path = fs::path(o.out) / (std::string(name) + ".motion");
        write_motion(motion_path, result.motion);
        outputs.push_back(motion_path.string());
        if (o.traj) {
            dump_trajectory(fs::path(o.out) / (std::string(name) + ".traj.jsonl"),
                            fs::path(o.out) / (std::string(name) + "_x1hat"),
                            result.trajectory, bundle, label);
        }
    }

    RunManifest manifest;
    manifest.command = "sample";
    manifest.resolved_config = {{"ckpt", o.ckpt},     {"n", o.count},
                                {"steps", o.steps},   {"guidance", o.guidance},
                                {"solver", o.solver}, {"label", o.label},
                                {"uncond", o.uncond}, {"seed", o.seed},
                                {"traj", o.traj}};
    manifest.inputs = {o.ckpt};
    manifest.outputs = outputs;
    manifest.checkpoint_sha1 = git_blob_sha1(bundle_param_path(
        fs::path(o.ckpt).extension() == ".mfm" ? fs::path(o.ckpt).replace_extension()
                                               : fs::path(o.ckpt)));
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);
    info("wrote " + std::to_string(o.count) + " samples to " + o.out);
    return 0;
}

// -------------------------------------------------------------------- edit

struct EditOpts {
    std::string ckpt;
    std::string motion;
    std::string out;
    std::string task = "prediction";
    std::size_t prefix_frames = 0;
    std::size_t suffix_frames = 0;
    std::size_t stride = 2;
    std::string upper_joints;
    double sigma = 0.2;
    std::size_t steps = 30;
    double guidance = 1.0;
    std::uint64_t seed = 0;
    int label = -2;  // -2: use the motion's condition, -1: unconditional
    bool traj = false;
};

std::vector<std::size_t> parse_index_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        const std::string token = csv.substr(pos, next - pos);
        if (!token.empty()) out.push_back(static_cast<std::size_t>(std::stoull(token)));
        pos = next + 1;
    }
    return out;
}

int run_edit(const EditOpts& o) {
    const auto start = Clock::now();
    const ModelBundle bundle = load_bundle(o.ckpt);
    const MotionSequence reference = read_motion(o.motion);
    ensure_dir(o.out);

    MaskParams params;
    params.prefix_frames = o.prefix_frames;
    params.suffix_frames = o.suffix_frames;
    params.stride = o.stride;
    params.upper_joints = parse_index_list(o.upper_joints);
    const EditMask mask =
        build_mask(edit_task_from_string(o.task), reference.layout, reference.frames, params);

    EditConfig cfg;
    cfg.steps = o.steps;
    cfg.threshold = o.sigma;
    cfg.guidance = o.guidance;
    cfg.seed = o.seed;

    std::optional<int> label;
    if (o.label >= 0) {
        label = o.label;
    } else if (o.label == -2) {
        label = reference.condition_id;
    }

    const SampleOutput result = edit_motion(bundle, reference, mask, label, cfg);
    const fs::path motion_path = fs::path(o.out) / "edited.motion";
    write_motion(motion_path, result.motion);
    if (o.traj) {
        dump_trajectory(fs::path(o.out) / "edited.traj.jsonl", fs::path(o.out) / "edited_x1hat",
                        result.trajectory, bundle, label);
    }

    RunManifest manifest;
    manifest.command = "edit";
    manifest.resolved_config = {{"ckpt", o.ckpt},
                                {"motion", o.motion},
                                {"task", o.task},
                                {"prefix_frames", o.prefix_frames},
                                {"suffix_frames", o.suffix_frames},
                                {"stride", o.stride},
                                {"upper_joints", o.upper_joints},
                                {"sigma", o.sigma},
                                {"steps", o.steps},
                                {"guidance", o.guidance},
                                {"seed", o.seed}};
    manifest.inputs = {o.ckpt, o.motion};
    manifest.outputs = {motion_path.string()};
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);
    info("edited motion written to " + motion_path.string());
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
    std::string gen;
    std::string ref;
    std::string ckpt;
    std::string out;
    std::string extractor = "random_projection";
    std::size_t feature_dim = 16;
    std::size_t s_dis = 300;
    std::size_t reps = 20;
    std::uint64_t seed = 0;
};

int run_eval(const EvalOpts& o) {
    const auto start = Clock::now();
    const std::vector<MotionSequence> gen = load_dataset_dir(o.gen);
    const std::vector<MotionSequence> ref = load_dataset_dir(o.ref);
    ensure_dir(o.out);

    const ExtractorKind kind = extractor_kind_from_string(o.extractor);
    const FeatureExtractor extractor =
        kind == ExtractorKind::random_projection
            ? make_random_projection(ref.front().dim(), o.feature_dim, o.seed)
            : train_encoder_extractor(ref, o.feature_dim, o.seed);

    const FeatureSet f_gen = extract_features(gen, extractor, "pred");
    const FeatureSet f_ref = extract_features(ref, extractor, "gt");

    MetricsReport report;
    report.extractor_kind = extractor_kind_name(kind);
    report.extractor_seed = o.seed;
    report.feature_dim = o.feature_dim;

    report.metrics["fid"] =
        repeat_metric([&](Rng&) { return fid(f_gen, f_ref); }, o.reps, o.seed + 1);
    report.metrics["diversity_gen"] = repeat_metric(
        [&](Rng& rng) { return diversity(f_gen, o.s_dis, rng).value; }, o.reps, o.seed + 2);
    report.metrics["diversity_ref"] = repeat_metric(
        [&](Rng& rng) { return diversity(f_ref, o.s_dis, rng).value; }, o.reps, o.seed + 3);

    if (!o.ckpt.empty()) {
        const ModelBundle bundle = load_bundle(o.ckpt);
        std::vector<DenseArray> embeddings;
        bool labels_ok = true;
        for (const MotionSequence& m : gen) {
            if (!m.condition_id ||
                static_cast<std::size_t>(*m.condition_id) >= bundle.model.config().cond_vocab) {
                labels_ok = false;
                break;
            }
            embeddings.push_back(bundle.model.embed_condition(*m.condition_id).vector);
        }
        if (labels_ok && !embeddings.empty()) {
            const FeatureSet f_text = text_features(embeddings, extractor);
            report.metrics["mm_dist"] =
                repeat_metric([&](Rng&) { return mm_dist(f_gen, f_text); }, o.reps, o.seed + 4);
            if (gen.size() >= 32) {
                report.metrics["r_precision_top3"] = repeat_metric(
                    [&](Rng& rng) { return r_precision_top3(f_gen, f_text, rng); }, o.reps,
                    o.seed + 5);
            }
        }
        // MModality needs >= 20 generations per condition
        std::map<int, std::vector<std::size_t>> by_label;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            if (gen[i].condition_id) by_label[*gen[i].condition_id].push_back(i);
        }
        bool enough = !by_label.empty();
        for (const auto& [lbl, ids] : by_label) enough = enough && ids.size() >= 20;
        if (enough) {
            std::vector<DenseArray> grouped;
            for (const auto& [lbl, ids] : by_label) {
                DenseArray g({ids.size(), o.feature_dim});
                for (std::size_t r = 0; r < ids.size(); ++r) {
                    for (std::size_t c = 0; c < o.feature_dim; ++c) {
                        g.at2(r, c) = f_gen.features.at2(ids[r], c);
                    }
                }
                grouped.push_back(std::move(g));
            }
            report.metrics["mmodality"] = repeat_metric(
                [&](Rng& rng) { return mmodality(grouped, rng); }, o.reps, o.seed + 6);
        }
    }

    atomic_write_text(fs::path(o.out) / "report.json", report.to_json() + "\n");

    RunManifest manifest;
    manifest.command = "eval";
    manifest.resolved_config = {{"gen", o.gen},           {"ref", o.ref},
                                {"ckpt", o.ckpt},         {"extractor", o.extractor},
                                {"feature_dim", o.feature_dim}, {"s_dis", o.s_dis},
                                {"reps", o.reps},         {"seed", o.seed}};
    manifest.inputs = {o.gen, o.ref};
    manifest.outputs = {(fs::path(o.out) / "report.json").string()};
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);
    info("report written to " + (fs::path(o.out) / "report.json").string());
    return 0;
}

// --------------------------------------------------------------- nfe-curve

struct NfeOpts {
    std::string ckpt;
    std::string ref;
    std::string out;
    std::string steps = "1,2,5,10,50,100";
    std::size_t count = 256;
    double guidance = 1.0;
    std::uint64_t seed = 0;
    std::size_t feature_dim = 16;
    std::string extractor = "random_projection";
};

int run_nfe_curve(const NfeOpts& o) {
    const auto start = Clock::now();
    const ModelBundle bundle = load_bundle(o.ckpt);
    const std::vector<MotionSequence> ref = load_dataset_dir(o.ref);
    const std::vector<std::size_t> steps_list = parse_index_list(o.steps);
    if (steps_list.empty()) throw ConfigError("nfe-curve: empty steps list");
    ensure_dir(o.out);

    const ExtractorKind kind = extractor_kind_from_string(o.extractor);
    const FeatureExtractor extractor =
        kind == ExtractorKind::random_projection
            ? make_random_projection(ref.front().dim(), o.feature_dim, o.seed)
            : train_encoder_extractor(ref, o.feature_dim, o.seed);
    const FeatureSet f_ref = extract_features(ref, extractor, "gt");

    std::string csv = "nfe,fid,avg_infer_seconds\n";
    for (std::size_t n_steps : steps_list) {
        if (n_steps == 0) throw ConfigError("nfe-curve: steps must be >= 1");
        SamplerConfig cfg;
        cfg.steps = n_steps;
        cfg.guidance = o.guidance;
        cfg.seed = o.seed;
        const auto t0 = Clock::now();
        const std::vector<MotionSequence> gens = generate_motions(bundle, o.count, cfg);
        const double avg_seconds = seconds_since(t0) / static_cast<double>(o.count);
        const FeatureSet f_gen = extract_features(gens, extractor, "pred");
        const double value = fid(f_gen, f_ref);
        char row[96];
        std::snprintf(row, sizeof(row), "%zu,%.10g,%.6g\n", n_steps, value, avg_seconds);
        csv += row;
        info("nfe=" + std::to_string(n_steps) + " fid=" + std::to_string(value));
    }
    atomic_write_text(fs::path(o.out) / "nfe_curve.csv", csv);

    RunManifest manifest;
    manifest.command = "nfe-curve";
    manifest.resolved_config = {{"ckpt", o.ckpt},   {"ref", o.ref},
                                {"steps", o.steps}, {"n", o.count},
                                {"guidance", o.guidance}, {"seed", o.seed},
                                {"feature_dim", o.feature_dim}, {"extractor", o.extractor}};
    manifest.inputs = {o.ckpt, o.ref};
    manifest.outputs = {(fs::path(o.out) / "nfe_curve.csv").string()};
    manifest.checkpoint_sha1 = git_blob_sha1(bundle_param_path(
        fs::path(o.ckpt).extension() == ".mfm" ? fs::path(o.ckpt).replace_extension()
                                               : fs::path(o.ckpt)));
    manifest.wall_seconds = seconds_since(start);
    write_manifest(o.out, manifest);
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Motion flow matching: data generation, training, sampling, editing, metrics"};
    app.name("mfm");
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress progress output");

    GenDataOpts gen_opts;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic motion dataset");
    gen->add_option("--family", gen_opts.family, "point | sine-walker | gaussian-shift");
    gen->add_option("--joints", gen_opts.joints, "joint count (>= 2)");
    gen->add_option("--frames", gen_opts.frames, "frames per sequence");
    gen->add_option("--classes", gen_opts.classes, "number of condition classes");
    gen->add_option("--samples-per-class", gen_opts.samples_per_class, "samples per class");
    gen->add_option("--seed", gen_opts.seed, "dataset seed (fixes class structure)");
    gen->add_option("--stream", gen_opts.stream,
                    "sample stream; same seed + new stream = held-out split of one dataset");
    gen->add_option("--shift", gen_opts.shift, "gaussian-shift class mean separation");
    gen->add_option("--noise-sigma", gen_opts.noise_sigma, "gaussian-shift noise scale");
    gen->add_option("--fps", gen_opts.fps, "sine-walker frame rate");
    gen->add_option("--out", gen_opts.out, "output directory")->required();

    TrainOpts train_opts;
    std::string train_arch = "transformer";
    CLI::App* tr = app.add_subcommand("train", "train the vector field on a dataset directory");
    tr->add_option("--data", train_opts.data, "dataset directory")->required();
    tr->add_option("--out", train_opts.out, "output directory")->required();
    tr->add_option("--config", train_opts.config_path, "JSON file mirroring TrainConfig fields");
    tr->add_option("--steps", train_opts.train.steps, "optimizer steps");
    tr->add_option("--batch", train_opts.train.batch_size, "batch size");
    tr->add_option("--lr", train_opts.train.lr, "learning rate");
    tr->add_option("--beta1", train_opts.train.beta1, "Adam beta1");
    tr->add_option("--beta2", train_opts.train.beta2, "Adam beta2");
    tr->add_option("--weight-decay", train_opts.train.weight_decay, "decoupled weight decay");
    tr->add_option("--p-drop", train_opts.train.p_drop, "condition dropout probability");
    tr->add_option("--sigma-min", train_opts.train.path.sigma_min, "interpolant sigma_min");
    tr->add_flag("--literal-target", train_opts.train.path.literal_target,
                 "regress the unnormalized target x1 - (1-sigma_min)*x_t");
    tr->add_option("--seed", train_opts.train.seed, "training seed");
    tr->add_option("--log-every", train_opts.train.log_every, "logging stride");
    tr->add_option("--arch", train_arch, "transformer | mlp");
    tr->add_option("--d-model", train_opts.model.d_model, "model width");
    tr->add_option("--layers", train_opts.model.layers, "encoder layers");
    tr->add_option("--heads", train_opts.model.heads, "attention heads");
    tr->add_option("--d-ff", train_opts.model.d_ff, "feed-forward width");
    tr->add_option("--cond-dim", train_opts.model.cond_dim, "condition embedding width");
    tr->add_option("--time-dim", train_opts.model.time_dim, "time feature width");

    SampleOpts sample_opts;
    CLI::App* sa = app.add_subcommand("sample", "sample motions from a checkpoint");
    sa->add_option("--ckpt", sample_opts.ckpt, "checkpoint (.mfm or prefix)")->required();
    sa->add_option("--out", sample_opts.out, "output directory")->required();
    sa->add_option("--n", sample_opts.count, "number of samples");
    sa->add_option("--steps", sample_opts.steps, "ODE steps N");
    sa->add_option("--guidance", sample_opts.guidance, "guidance strength s");
    sa->add_option("--solver", sample_opts.solver, "euler | midpoint | rk4");
    sa->add_option("--label", sample_opts.label, "condition label (default: cycle)");
    sa->add_flag("--uncond", sample_opts.uncond, "sample unconditionally");
    sa->add_option("--seed", sample_opts.seed, "sampling seed");
    sa->add_flag("--traj", sample_opts.traj, "dump per-step trajectory and x1 estimates");

    EditOpts edit_opts;
    CLI::App* ed = app.add_subcommand("edit", "edit a motion via sampling trajectory rewriting");
    ed->add_option("--ckpt", edit_opts.ckpt, "checkpoint (.mfm or prefix)")->required();
    ed->add_option("--motion", edit_opts.motion, "reference motion file")->required();
    ed->add_option("--out", edit_opts.out, "output directory")->required();
    ed->add_option("--task", edit_opts.task,
                   "in-between | prediction | interpolation | upper-body");
    ed->add_option("--prefix-frames", edit_opts.prefix_frames, "known prefix frames");
    ed->add_option("--suffix-frames", edit_opts.suffix_frames, "known suffix frames");
    ed->add_option("--stride", edit_opts.stride, "interpolation stride");
    ed->add_option("--upper-joints", edit_opts.upper_joints, "comma-separated joint indices");
    ed->add_option("--sigma", edit_opts.sigma, "rewriting threshold");
    ed->add_option("--steps", edit_opts.steps, "ODE steps N");
    ed->add_option("--guidance", edit_opts.guidance, "guidance strength s");
    ed->add_option("--seed", edit_opts.seed, "editing seed");
    ed->add_option("--label", edit_opts.label, "condition label (-1 unconditional)");
    ed->add_flag("--traj", edit_opts.traj, "dump per-step trajectory and x1 estimates");

    EvalOpts eval_opts;
    CLI::App* ev = app.add_subcommand("eval", "compute the metric report for generated motions");
    ev->add_option("--gen", eval_opts.gen, "generated motion directory")->required();
    ev->add_option("--ref", eval_opts.ref, "reference motion directory")->required();
    ev->add_option("--ckpt", eval_opts.ckpt, "checkpoint for condition embeddings (optional)");
    ev->add_option("--out", eval_opts.out, "output directory")->required();
    ev->add_option("--extractor", eval_opts.extractor, "random_projection | trained_encoder");
    ev->add_option("--feature-dim", eval_opts.feature_dim, "extractor output width");
    ev->add_option("--s-dis", eval_opts.s_dis, "diversity pair count");
    ev->add_option("--reps", eval_opts.reps, "evaluation repetitions");
    ev->add_option("--seed", eval_opts.seed, "evaluation seed");

    NfeOpts nfe_opts;
    CLI::App* nf = app.add_subcommand("nfe-curve", "FID versus sampling step count");
    nf->add_option("--ckpt", nfe_opts.ckpt, "checkpoint (.mfm or prefix)")->required();
    nf->add_option("--ref", nfe_opts.ref, "held-out motion directory")->required();
    nf->add_option("--out", nfe_opts.out, "output directory")->required();
    nf->add_option("--steps", nfe_opts.steps, "comma-separated N values");
    nf->add_option("--n", nfe_opts.count, "samples per N");
    nf->add_option("--guidance", nfe_opts.guidance, "guidance strength s");
    nf->add_option("--seed", nfe_opts.seed, "sampling seed");
    nf->add_option("--feature-dim", nfe_opts.feature_dim, "extractor output width");
    nf->add_option("--extractor", nfe_opts.extractor, "random_projection | trained_encoder");

    // global flags (--quiet) remain usable after a subcommand name
    for (CLI::App* sub : {gen, tr, sa, ed, ev, nf}) sub->fallthrough();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("mfm");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: category=usage message=\"" << e.what() << "\"\n";
        std::cerr << app.help() << "\n";
        return 2;
    }
    g_quiet = quiet;

    try {
        train_opts.model.arch = architecture_from_string(train_arch);
        train_opts.cmd = tr;
        if (gen->parsed()) return run_gen_data(gen_opts);
        if (tr->parsed()) return run_train(train_opts);
        if (sa->parsed()) return run_sample(sample_opts);
        if (ed->parsed()) return run_edit(edit_opts);
        if (ev->parsed()) return run_eval(eval_opts);
        if (nf->parsed()) return run_nfe_curve(nfe_opts);
        std::cerr << "error: category=usage message=\"no subcommand\"\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: category=io message=\"" << e.what() << "\"\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: category=numeric message=\"" << e.what() << "\"\n";
        return 4;
    } catch (const ShapeError& e) {
        std::cerr << "error: category=numeric message=\"" << e.what() << "\"\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "error: category=usage message=\"" << e.what() << "\"\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: category=internal message=\"" << e.what() << "\"\n";
        return 1;
    }
}

}  // namespace mfm
