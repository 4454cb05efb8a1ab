#include "mfm/model.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "mfm/checkpoint.hpp"
#include "mfm/errors.hpp"
#include "mfm/rng.hpp"

namespace mfm {

Architecture architecture_from_string(const std::string& name) {
    if (name == "transformer") return Architecture::transformer;
    if (name == "mlp") return Architecture::mlp;
    throw ConfigError("unknown architecture '" + name + "'");
}

std::string architecture_name(Architecture arch) {
    return arch == Architecture::transformer ? "transformer" : "mlp";
}

void ModelConfig::validate() const {
    if (feature_dim == 0) throw ConfigError("ModelConfig: feature_dim must be positive");
    if (frames == 0) throw ConfigError("ModelConfig: frames must be positive");
    if (layers == 0) throw ConfigError("ModelConfig: layers must be >= 1");
    if (d_model == 0 || d_ff == 0) throw ConfigError("ModelConfig: widths must be positive");
    if (arch == Architecture::transformer && (heads == 0 || d_model % heads != 0)) {
        throw ConfigError("ModelConfig: d_model must be divisible by heads");
    }
    if (cond_vocab == 0) throw ConfigError("ModelConfig: cond_vocab must be >= 1");
    if (cond_dim == 0) throw ConfigError("ModelConfig: cond_dim must be positive");
    if (time_dim < 2 || time_dim % 2 != 0) {
        throw ConfigError("ModelConfig: time_dim must be even and >= 2");
    }
}

DenseArray time_features(double t, std::size_t dim) {
    DenseArray feats({1, dim});
    const std::size_t half = dim / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double exponent =
            half > 1 ? static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
        const double freq = std::pow(1000.0, exponent);
        feats[i] = std::sin(freq * t);
        feats[half + i] = std::cos(freq * t);
    }
    return feats;
}

DenseArray condition_onehot(const ModelConfig& config, const std::optional<int>& label) {
    DenseArray onehot({1, config.cond_vocab + 1});
    if (label.has_value()) {
        if (*label < 0 || static_cast<std::size_t>(*label) >= config.cond_vocab) {
            throw ConfigError("condition label " + std::to_string(*label) +
                              " out of range [0, " + std::to_string(config.cond_vocab) + ")");
        }
        onehot[static_cast<std::size_t>(*label)] = 1.0;
    } else {
        onehot[config.cond_vocab] = 1.0;  // learned null row
    }
    return onehot;
}

namespace {

// Shared trunk: declares inputs/params and returns the field node [T, D].
NodeId build_field(Tape& tape, const ModelConfig& cfg) {
    const std::size_t T = cfg.frames;
    const std::size_t D = cfg.feature_dim;
    const std::size_t d = cfg.d_model;

    const NodeId x = tape.input("x_t", {T, D});
    const NodeId tf = tape.input("time_feats", {1, cfg.time_dim});
    const NodeId onehot = tape.input("cond_onehot", {1, cfg.cond_vocab + 1});

    // time embedding: 2-layer MLP over sinusoidal features
    NodeId et = tape.matmul(tf, tape.param("time_mlp.w1", {cfg.time_dim, d}));
    et = tape.add(et, tape.broadcast(tape.param("time_mlp.b1", {d}), {1, d}));
    et = tape.gelu(et);
    et = tape.matmul(et, tape.param("time_mlp.w2", {d, d}));
    et = tape.add(et, tape.broadcast(tape.param("time_mlp.b2", {d}), {1, d}));

    // condition embedding: one-hot row lookup so the table receives gradients
    const NodeId table = tape.param("cond.table", {cfg.cond_vocab + 1, cfg.cond_dim});
    NodeId ec = tape.matmul(onehot, table);
    ec = tape.matmul(ec, tape.param("cond.proj.w", {cfg.cond_dim, d}));
    ec = tape.add(ec, tape.broadcast(tape.param("cond.proj.b", {d}), {1, d}));

    const NodeId prefix = tape.add(et, ec);  // [1, d]

    NodeId h = tape.matmul(x, tape.param("token_proj.w", {D, d}));
    h = tape.add(h, tape.broadcast(tape.param("token_proj.b", {d}), {T, d}));

    if (cfg.arch == Architecture::mlp) {
        // frame-wise MLP; the aggregated (t, c) embedding is added per frame
        h = tape.add(h, tape.broadcast(prefix, {T, d}));
        for (std::size_t l = 0; l < cfg.layers; ++l) {
            const std::string base = "hidden." + std::to_string(l) + ".";
            h = tape.matmul(h, tape.param(base + "w", {d, d}));
            h = tape.add(h, tape.broadcast(tape.param(base + "b", {d}), {T, d}));
            h = tape.gelu(h);
        }
        NodeId v = tape.matmul(h, tape.param("out_proj.w", {d, D}));
        v = tape.add(v, tape.broadcast(tape.param("out_proj.b", {D}), {T, D}));
        return v;
    }

    // transformer encoder over [prefix token, frame tokens]
    const std::size_t S = T + 1;
    const std::size_t dh = d / cfg.heads;
    NodeId tok = tape.concat({prefix, h}, 0);
    tok = tape.add(tok, tape.param("pos_embed", {S, d}));

    const NodeId scale =
        tape.broadcast(tape.constant(DenseArray::scalar(1.0 / std::sqrt(double(dh))), "attn_scale"),
                       {S, S});

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::string base = "blocks." + std::to_string(l) + ".";
        // pre-LN attention
        NodeId a = tape.layer_norm(tok, tape.param(base + "ln1.gamma", {d}),
                                   tape.param(base + "ln1.beta", {d}));
        NodeId q = tape.matmul(a, tape.param(base + "attn.wq", {d, d}));
        q = tape.add(q, tape.broadcast(tape.param(base + "attn.bq", {d}), {S, d}));
        NodeId k = tape.matmul(a, tape.param(base + "attn.wk", {d, d}));
        k = tape.add(k, tape.broadcast(tape.param(base + "attn.bk", {d}), {S, d}));
        NodeId v = tape.matmul(a, tape.param(base + "attn.wv", {d, d}));
        v = tape.add(v, tape.broadcast(tape.param(base + "attn.bv", {d}), {S, d}));

        std::vector<NodeId> head_outs;
        head_outs.reserve(cfg.heads);
        for (std::size_t hh = 0; hh < cfg.heads; ++hh) {
            const NodeId qh = tape.slice(q, {0, hh * dh}, {S, dh});
            const NodeId kh = tape.slice(k, {0, hh * dh}, {S, dh});
            const NodeId vh = tape.slice(v, {0, hh * dh}, {S, dh});
            NodeId scores = tape.matmul(qh, kh, false, true);
            scores = tape.mul(scores, scale);
            const NodeId att = tape.softmax(scores);
            head_outs.push_back(tape.matmul(att, vh));
        }
        NodeId o = tape.concat(head_outs, 1);
        o = tape.matmul(o, tape.param(base + "attn.wo", {d, d}));
        o = tape.add(o, tape.broadcast(tape.param(base + "attn.bo", {d}), {S, d}));
        tok = tape.add(tok, o);

        // pre-LN feed-forward
        NodeId f = tape.layer_norm(tok, tape.param(base + "ln2.gamma", {d}),
                                   tape.param(base + "ln2.beta", {d}));
        f = tape.matmul(f, tape.param(base + "ff.w1", {d, cfg.d_ff}));
        f = tape.add(f, tape.broadcast(tape.param(base + "ff.b1", {cfg.d_ff}), {S, cfg.d_ff}));
        f = tape.gelu(f);
        f = tape.matmul(f, tape.param(base + "ff.w2", {cfg.d_ff, d}));
        f = tape.add(f, tape.broadcast(tape.param(base + "ff.b2", {d}), {S, d}));
        tok = tape.add(tok, f);
    }

    tok = tape.layer_norm(tok, tape.param("final_ln.gamma", {d}),
                          tape.param("final_ln.beta", {d}));
    const NodeId frames_repr = tape.slice(tok, {1, 0}, {T, d});
    NodeId out = tape.matmul(frames_repr, tape.param("out_proj.w", {d, D}));
    out = tape.add(out, tape.broadcast(tape.param("out_proj.b", {D}), {T, D}));
    return out;
}

Tape build_forward_tape(const ModelConfig& cfg) {
    Tape tape;
    build_field(tape, cfg);
    return tape;
}

Tape build_loss_tape(const ModelConfig& cfg) {
    Tape tape;
    const NodeId v = build_field(tape, cfg);
    const NodeId target = tape.input("target", {cfg.frames, cfg.feature_dim});
    tape.sum(tape.square(tape.sub(v, target)));
    return tape;
}

}  // namespace

VectorFieldModel::VectorFieldModel(ModelConfig config, ParamMap params)
    : config_(config),
      params_(std::move(params)),
      forward_tape_(build_forward_tape(config_)),
      loss_tape_(build_loss_tape(config_)) {
    config_.validate();
    // every tape parameter leaf must be present with the declared shape
    for (const auto& [name, id] : loss_tape_.leaves()) {
        if (loss_tape_.node(id).kind != OpKind::param) continue;
        auto it = params_.find(name);
        if (it == params_.end()) {
            throw ConfigError("VectorFieldModel: missing parameter '" + name + "'");
        }
        if (it->second.shape() != loss_tape_.node(id).shape) {
            throw ShapeError("VectorFieldModel: parameter '" + name + "' has shape " +
                             shape_str(it->second.shape()) + ", tape declares " +
                             shape_str(loss_tape_.node(id).shape));
        }
    }
}

VectorFieldModel VectorFieldModel::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    const Tape tape = build_forward_tape(config);
    Rng rng(seed);

    ParamMap params;
    // declaration order of tape leaves is canonical; draw each parameter from
    // its own child stream so values do not depend on map iteration order
    std::vector<std::pair<std::string, Shape>> order;
    for (const auto& n : tape.nodes()) {
        if (n.kind == OpKind::param) order.emplace_back(n.name, n.shape);
    }
    std::uint64_t salt = 0;
    for (const auto& [name, shape] : order) {
        Rng prng = rng.child(++salt);
        DenseArray value(shape);
        const bool is_bias = name.ends_with(".b") || name.ends_with(".b1") ||
                             name.ends_with(".b2") || name.ends_with(".bq") ||
                             name.ends_with(".bk") || name.ends_with(".bv") ||
                             name.ends_with(".bo") || name.ends_with(".beta");
        if (name.starts_with("out_proj.")) {
            // zero-init output head: v == 0 at initialization
        } else if (name.ends_with(".gamma")) {
            for (double& x : value.vec()) x = 1.0;
        } else if (is_bias) {
            // zeros
        } else if (name == "pos_embed" || name == "cond.table") {
            for (double& x : value.vec()) x = 0.02 * prng.normal();
        } else {
            // Xavier-normal for the matmul weights
            const double fan_in = static_cast<double>(shape[0]);
            const double fan_out = static_cast<double>(shape.size() > 1 ? shape[1] : shape[0]);
            const double std = std::sqrt(2.0 / (fan_in + fan_out));
            for (double& x : value.vec()) x = std * prng.normal();
        }
        params.emplace(name, std::move(value));
    }
    return VectorFieldModel(config, std::move(params));
}

std::size_t VectorFieldModel::param_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p.numel();
    return n;
}

Bindings VectorFieldModel::param_bindings() const {
    Bindings b;
    for (const auto& [name, p] : params_) b.emplace(name, &p);
    return b;
}

DenseArray VectorFieldModel::predict_field(const DenseArray& x_t, double t,
                                           const std::optional<int>& label) const {
    if (t < 0.0 || t > 1.0) {
        throw ConfigError("predict_field: t=" + std::to_string(t) + " outside [0,1]");
    }
    const Shape expected{config_.frames, config_.feature_dim};
    if (x_t.shape() != expected) {
        throw ShapeError("predict_field: x_t has shape " + shape_str(x_t.shape()) +
                         ", model expects " + shape_str(expected));
    }
    const DenseArray tf = time_features(t, config_.time_dim);
    const DenseArray onehot = condition_onehot(config_, label);
    Bindings bindings = param_bindings();
    bindings.emplace("x_t", &x_t);
    bindings.emplace("time_feats", &tf);
    bindings.emplace("cond_onehot", &onehot);
    return forward(forward_tape_, bindings);
}

ConditionEmbedding VectorFieldModel::embed_condition(const std::optional<int>& label) const {
    const DenseArray& table = params_.at("cond.table");
    std::size_t row;
    if (label.has_value()) {
        if (*label < 0 || static_cast<std::size_t>(*label) >= config_.cond_vocab) {
            throw ConfigError("embed_condition: label " + std::to_string(*label) +
                              " out of range [0, " + std::to_string(config_.cond_vocab) + ")");
        }
        row = static_cast<std::size_t>(*label);
    } else {
        row = config_.cond_vocab;
    }
    DenseArray vec({config_.cond_dim});
    for (std::size_t i = 0; i < config_.cond_dim; ++i) vec[i] = table.at2(row, i);
    return ConditionEmbedding{std::move(vec), !label.has_value()};
}

// ---------------------------------------------------------------------------
// normalization + bundle I/O

DenseArray NormStats::normalize(const DenseArray& values) const {
    const std::size_t d = mean.numel();
    if (values.rank() != 2 || values.shape()[1] != d) {
        throw ShapeError("normalize: values shape " + shape_str(values.shape()) +
                         " does not match stats dim " + std::to_string(d));
    }
    DenseArray out(values.shape());
    for (std::size_t i = 0; i < values.shape()[0]; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.at2(i, j) = (values.at2(i, j) - mean[j]) / stddev[j];
        }
    }
    return out;
}

DenseArray NormStats::denormalize(const DenseArray& values) const {
    const std::size_t d = mean.numel();
    if (values.rank() != 2 || values.shape()[1] != d) {
        throw ShapeError("denormalize: values shape " + shape_str(values.shape()) +
                         " does not match stats dim " + std::to_string(d));
    }
    DenseArray out(values.shape());
    for (std::size_t i = 0; i < values.shape()[0]; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out.at2(i, j) = values.at2(i, j) * stddev[j] + mean[j];
        }
    }
    return out;
}

namespace {

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"feature_dim", c.feature_dim}, {"frames", c.frames},
                          {"arch", architecture_name(c.arch)}, {"d_model", c.d_model},
                          {"layers", c.layers},             {"heads", c.heads},
                          {"d_ff", c.d_ff},                 {"cond_vocab", c.cond_vocab},
                          {"cond_dim", c.cond_dim},         {"time_dim", c.time_dim}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.frames = j.at("frames").get<std::size_t>();
    c.arch = architecture_from_string(j.at("arch").get<std::string>());
    c.d_model = j.at("d_model").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.cond_vocab = j.at("cond_vocab").get<std::size_t>();
    c.cond_dim = j.at("cond_dim").get<std::size_t>();
    c.time_dim = j.at("time_dim").get<std::size_t>();
    return c;
}

}  // namespace

std::filesystem::path bundle_param_path(const std::filesystem::path& prefix) {
    std::filesystem::path p = prefix;
    p += ".mfm";
    return p;
}

std::filesystem::path bundle_meta_path(const std::filesystem::path& prefix) {
    std::filesystem::path p = prefix;
    p += ".meta.json";
    return p;
}

void save_bundle(const std::filesystem::path& prefix, const ModelBundle& bundle) {
    write_params(bundle_param_path(prefix), bundle.model.params());

    nlohmann::json meta;
    meta["model"] = config_to_json(bundle.model.config());
    meta["layout"] = {{"joints", bundle.layout.joints}};
    meta["normalization"] = {{"mean", bundle.norm.mean.vec()},
                             {"std", bundle.norm.stddev.vec()}};
    std::ofstream f(bundle_meta_path(prefix), std::ios::trunc);
    if (!f) throw IoError("cannot write '" + bundle_meta_path(prefix).string() + "'");
    f << meta.dump(2) << '\n';
}

ModelBundle load_bundle(const std::filesystem::path& checkpoint_path) {
    std::filesystem::path prefix = checkpoint_path;
    if (prefix.extension() == ".mfm") prefix.replace_extension();

    ParamMap params = read_params(bundle_param_path(prefix));

    std::ifstream f(bundle_meta_path(prefix));
    if (!f) throw IoError("cannot open '" + bundle_meta_path(prefix).string() + "'");
    nlohmann::json meta;
    try {
        f >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint sidecar: " + std::string(e.what()));
    }

    const ModelConfig config = config_from_json(meta.at("model"));
    PoseLayout layout{meta.at("layout").at("joints").get<std::size_t>()};
    NormStats norm;
    const auto mean = meta.at("normalization").at("mean").get<std::vector<double>>();
    const auto stddev = meta.at("normalization").at("std").get<std::vector<double>>();
    norm.mean = DenseArray({mean.size()}, mean);
    norm.stddev = DenseArray({stddev.size()}, stddev);

    return ModelBundle{VectorFieldModel(config, std::move(params)), layout, std::move(norm)};
}

}  // namespace mfm
