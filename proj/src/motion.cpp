#include "mfm/motion.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "mfm/errors.hpp"

namespace mfm {

std::size_t feature_dim(const PoseLayout& layout) {
    if (layout.joints < 2) {
        throw ConfigError("feature_dim: joint count must be at least 2, got " +
                          std::to_string(layout.joints));
    }
    const std::size_t j = layout.joints;
    return 4 + 3 * (j - 1) + 3 * j + 6 * (j - 1) + 4;
}

MotionSequence::MotionSequence(PoseLayout lay, DenseArray vals, std::optional<int> condition)
    : layout(lay), values(std::move(vals)), condition_id(condition) {
    const std::size_t d = feature_dim(layout);
    if (values.rank() != 2 || values.shape()[1] != d) {
        throw ShapeError("MotionSequence: values must be [frames, " + std::to_string(d) +
                         "], got " + shape_str(values.shape()));
    }
    frames = values.shape()[0];
    if (frames == 0) throw ShapeError("MotionSequence: frame count must be positive");
    if (!values.all_finite()) throw NumericError("MotionSequence: non-finite values");
}

void write_motion(const std::filesystem::path& path, const MotionSequence& motion) {
    if (motion.frames == 0) throw ShapeError("write_motion: empty frame count");
    const std::size_t d = motion.dim();

    nlohmann::json header;
    header["frames"] = motion.frames;
    header["joints"] = motion.layout.joints;
    header["dim"] = d;
    if (motion.condition_id) {
        header["condition"] = *motion.condition_id;
    } else {
        header["condition"] = nullptr;
    }

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << header.dump() << '\n';

    char buf[40];
    for (std::size_t i = 0; i < motion.frames; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            // %.17g round-trips any finite double exactly
            std::snprintf(buf, sizeof(buf), "%.17g", motion.values.at2(i, j));
            if (j) f << ',';
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw IoError("short write to '" + path.string() + "'");
}

MotionSequence read_motion(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(f, line)) throw IoError("'" + path.string() + "': missing header line");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path.string() + "': malformed header: " + e.what());
    }
    if (!header.contains("frames") || !header.contains("joints") || !header.contains("dim")) {
        throw IoError("'" + path.string() + "': header missing frames/joints/dim");
    }

    const std::size_t frames = header["frames"].get<std::size_t>();
    PoseLayout layout{header["joints"].get<std::size_t>()};
    const std::size_t dim = header["dim"].get<std::size_t>();
    const std::size_t expected = feature_dim(layout);
    if (dim != expected) {
        throw IoError("'" + path.string() + "': dimension mismatch, header dim " +
                      std::to_string(dim) + " but layout with " + std::to_string(layout.joints) +
                      " joints implies " + std::to_string(expected));
    }
    std::optional<int> condition;
    if (header.contains("condition") && !header["condition"].is_null()) {
        condition = header["condition"].get<int>();
    }

    DenseArray values({frames, dim});
    for (std::size_t i = 0; i < frames; ++i) {
        if (!std::getline(f, line)) {
            throw IoError("'" + path.string() + "': expected " + std::to_string(frames) +
                          " frame rows, got " + std::to_string(i));
        }
        const char* p = line.c_str();
        for (std::size_t j = 0; j < dim; ++j) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) {
                throw IoError("'" + path.string() + "': bad value at frame " + std::to_string(i) +
                              " column " + std::to_string(j));
            }
            values.at2(i, j) = v;
            p = end;
            if (j + 1 < dim) {
                if (*p != ',') {
                    throw IoError("'" + path.string() + "': row " + std::to_string(i) + " has " +
                                  std::to_string(j + 1) + " values, expected " +
                                  std::to_string(dim));
                }
                ++p;
            }
        }
    }
    return MotionSequence(layout, std::move(values), condition);
}

}  // namespace mfm
