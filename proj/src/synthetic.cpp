#include "mfm/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "mfm/errors.hpp"
#include "mfm/rng.hpp"

namespace mfm {

DatasetFamily dataset_family_from_string(const std::string& name) {
    if (name == "point") return DatasetFamily::point;
    if (name == "sine-walker") return DatasetFamily::sine_walker;
    if (name == "gaussian-shift") return DatasetFamily::gaussian_shift;
    throw ConfigError("unknown dataset family '" + name + "'");
}

std::string dataset_family_name(DatasetFamily family) {
    switch (family) {
        case DatasetFamily::point: return "point";
        case DatasetFamily::sine_walker: return "sine-walker";
        case DatasetFamily::gaussian_shift: return "gaussian-shift";
    }
    return "?";
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Class-level sine-walker parameters, drawn once per class.
struct WalkerClass {
    double omega;       // phase advance per frame
    double amplitude;   // base oscillation amplitude
    double root_vx, root_vz;
    std::vector<double> base;     // [3(j-1)] joint rest positions
    std::vector<double> amp;      // [3(j-1)] per-coordinate amplitudes
    std::vector<double> phase;    // [3(j-1)] per-coordinate phase offsets
    std::vector<double> rot_amp;  // [j-1] joint rotation swing
};

WalkerClass make_walker_class(std::size_t cls, std::size_t joints, Rng rng) {
    WalkerClass w;
    w.omega = kTwoPi * (0.04 + 0.02 * static_cast<double>(cls));
    w.amplitude = 0.5 + 0.25 * static_cast<double>(cls);
    w.root_vx = rng.uniform(-1.0, 1.0);
    w.root_vz = rng.uniform(-1.0, 1.0);
    const std::size_t coords = 3 * (joints - 1);
    w.base.resize(coords);
    w.amp.resize(coords);
    w.phase.resize(coords);
    for (std::size_t i = 0; i < coords; ++i) {
        w.base[i] = rng.uniform(-1.0, 1.0);
        w.amp[i] = w.amplitude * rng.uniform(0.5, 1.5);
        w.phase[i] = rng.uniform(0.0, kTwoPi);
    }
    w.rot_amp.resize(joints - 1);
    for (std::size_t i = 0; i + 1 < joints; ++i) w.rot_amp[i] = rng.uniform(0.2, 0.8);
    return w;
}

MotionSequence make_walker_sample(const SyntheticDatasetSpec& spec, const WalkerClass& w,
                                  int cls, double phi) {
    const PoseLayout layout{spec.joints};
    const std::size_t d = feature_dim(layout);
    const std::size_t j = spec.joints;
    const double fps = spec.frame_rate;
    DenseArray values({spec.frames, d});

    auto joint_pos = [&](std::size_t coord, double frame) {
        return w.base[coord] + w.amp[coord] * std::sin(w.omega * frame + phi + w.phase[coord]);
    };

    // proxy joints for the heel/toe contact channels
    const std::size_t proxy_a = j - 1;
    const std::size_t proxy_b = j >= 3 ? j - 2 : j - 1;
    const double contact_tau = 0.5 * w.amplitude * w.omega * fps;

    for (std::size_t m = 0; m < spec.frames; ++m) {
        const double fm = static_cast<double>(m);
        double* row = values.data() + m * d;
        row[layout.root_angular_offset()] = 0.1 * w.amplitude * std::cos(w.omega * fm + phi);
        row[layout.root_linear_offset()] = w.root_vx;
        row[layout.root_linear_offset() + 1] = w.root_vz;
        row[layout.root_height_offset()] = 0.9 + 0.05 * std::sin(w.omega * fm + phi);

        double* jp = row + layout.positions_offset();
        double* jv = row + layout.velocities_offset();
        double* jr = row + layout.rotations_offset();
        // root velocity occupies the first jv triple
        jv[0] = w.root_vx;
        jv[1] = 0.0;
        jv[2] = w.root_vz;
        for (std::size_t coord = 0; coord < 3 * (j - 1); ++coord) {
            jp[coord] = joint_pos(coord, fm);
            jv[3 + coord] = fps * (jp[coord] - joint_pos(coord, fm - 1.0));
        }
        for (std::size_t i = 0; i + 1 < j; ++i) {
            const double beta =
                w.rot_amp[i] * std::sin(w.omega * fm + phi + w.phase[3 * i]);
            const double cb = std::cos(beta);
            const double sb = std::sin(beta);
            double* r6 = jr + 6 * i;
            r6[0] = cb;
            r6[1] = sb;
            r6[2] = 0.0;
            r6[3] = -sb;
            r6[4] = cb;
            r6[5] = 0.0;
        }

        auto joint_speed = [&](std::size_t joint) {
            const double* v = jv + 3 * joint;  // non-root joint index >= 1
            return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        };
        double* cf = row + layout.contacts_offset();
        const double speed_a = joint_speed(proxy_a);
        const double speed_b = joint_speed(proxy_b);
        cf[0] = speed_a < contact_tau ? 1.0 : 0.0;
        cf[1] = speed_a < 2.0 * contact_tau ? 1.0 : 0.0;
        cf[2] = speed_b < contact_tau ? 1.0 : 0.0;
        cf[3] = speed_b < 2.0 * contact_tau ? 1.0 : 0.0;
    }
    return MotionSequence(layout, std::move(values), cls);
}

}  // namespace

std::vector<MotionSequence> gen_synthetic_dataset(const SyntheticDatasetSpec& spec) {
    if (spec.classes < 1) throw ConfigError("gen_synthetic_dataset: class count must be >= 1");
    if (spec.samples_per_class == 0) {
        throw ConfigError("gen_synthetic_dataset: zero samples per class");
    }
    if (spec.frames == 0) throw ConfigError("gen_synthetic_dataset: zero frames");
    const PoseLayout layout{spec.joints};
    const std::size_t d = feature_dim(layout);

    Rng root(spec.seed);
    // class structure depends on the seed only; per-sample draws also mix in
    // the stream so held-out splits share classes with the training split
    Rng stream_root = root.child(0x57ULL + spec.sample_stream);
    std::vector<MotionSequence> out;
    out.reserve(spec.classes * spec.samples_per_class);

    for (std::size_t k = 0; k < spec.classes; ++k) {
        Rng class_rng = root.child(1000 + k);
        switch (spec.family) {
            case DatasetFamily::point: {
                DenseArray anchor = class_rng.normal_array({spec.frames, d});
                for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
                    out.emplace_back(layout, anchor, static_cast<int>(k));
                }
                break;
            }
            case DatasetFamily::gaussian_shift: {
                // classes sit symmetrically around 0, class_shift apart per dim
                const double mu = spec.class_shift *
                                  (static_cast<double>(k) -
                                   0.5 * static_cast<double>(spec.classes - 1));
                for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
                    Rng sample_rng = stream_root.child((k << 32) ^ (0xA0000000ULL + s));
                    DenseArray values({spec.frames, d});
                    for (double& v : values.vec()) v = mu + spec.noise_sigma * sample_rng.normal();
                    out.emplace_back(layout, std::move(values), static_cast<int>(k));
                }
                break;
            }
            case DatasetFamily::sine_walker: {
                const WalkerClass w = make_walker_class(k, spec.joints, class_rng);
                for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
                    Rng sample_rng = stream_root.child((k << 32) ^ (0xB0000000ULL + s));
                    const double phi = sample_rng.uniform(0.0, kTwoPi);
                    out.push_back(make_walker_sample(spec, w, static_cast<int>(k), phi));
                }
                break;
            }
        }
    }
    return out;
}

}  // namespace mfm
