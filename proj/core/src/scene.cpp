#include "pointadapt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pointadapt/texture.hpp"
#include "pointadapt/util.hpp"

namespace pointadapt {

namespace {

// Object footprints are kept comfortably above the encoder stride so every
// instance owns at least a few fully covered feature cells; thinner shapes
// would exist only as partially covered cells and carry no stable texture
// response.
constexpr int kRectMin = 8, kRectMax = 16;
constexpr double kEllipseAxisMin = 4.0, kEllipseAxisMax = 8.0;
constexpr double kRingOuterMin = 6.0, kRingOuterMax = 9.0;
constexpr double kRingThicknessMin = 3.0, kRingThicknessMax = 4.5;

enum class ShapeFamily { rectangle, ellipse, ring };

ShapeFamily sample_family(const GeneratorSpec& spec, Rng& rng) {
    const double total = spec.weight_rectangle + spec.weight_ellipse + spec.weight_ring;
    if (!(total > 0.0)) {
        throw DataError("generator spec: shape weights sum to " + std::to_string(total));
    }
    const double t = rng.uniform01() * total;
    if (t < spec.weight_rectangle) return ShapeFamily::rectangle;
    if (t < spec.weight_rectangle + spec.weight_ellipse) return ShapeFamily::ellipse;
    return ShapeFamily::ring;
}

BinaryMask rasterize_rectangle(int size, int x0, int y0, int w, int h) {
    BinaryMask m(size, size);
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) m.set(y, x, true);
    }
    return m;
}

BinaryMask rasterize_ellipse(int size, double cx, double cy, double ax, double ay) {
    BinaryMask m(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = (x - cx) / ax;
            const double dy = (y - cy) / ay;
            if (dx * dx + dy * dy <= 1.0) m.set(y, x, true);
        }
    }
    return m;
}

BinaryMask rasterize_ring(int size, double cx, double cy, double outer, double inner) {
    BinaryMask m(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double d2 = dx * dx + dy * dy;
            if (d2 <= outer * outer && d2 > inner * inner) m.set(y, x, true);
        }
    }
    return m;
}

BinaryMask sample_shape(const GeneratorSpec& spec, Rng& rng) {
    const int size = spec.image_size;
    switch (sample_family(spec, rng)) {
        case ShapeFamily::rectangle: {
            const int w = kRectMin + static_cast<int>(rng.uniform_int(kRectMax - kRectMin + 1));
            const int h = kRectMin + static_cast<int>(rng.uniform_int(kRectMax - kRectMin + 1));
            const int x0 = 1 + static_cast<int>(rng.uniform_int(std::max(1, size - w - 2)));
            const int y0 = 1 + static_cast<int>(rng.uniform_int(std::max(1, size - h - 2)));
            return rasterize_rectangle(size, x0, y0, w, h);
        }
        case ShapeFamily::ellipse: {
            const double ax = rng.uniform(kEllipseAxisMin, kEllipseAxisMax);
            const double ay = rng.uniform(kEllipseAxisMin, kEllipseAxisMax);
            const double cx = rng.uniform(ax + 1.0, size - ax - 1.0);
            const double cy = rng.uniform(ay + 1.0, size - ay - 1.0);
            return rasterize_ellipse(size, cx, cy, ax, ay);
        }
        case ShapeFamily::ring: {
            const double outer = rng.uniform(kRingOuterMin, kRingOuterMax);
            const double thickness = rng.uniform(kRingThicknessMin, kRingThicknessMax);
            const double cx = rng.uniform(outer + 1.0, size - outer - 1.0);
            const double cy = rng.uniform(outer + 1.0, size - outer - 1.0);
            return rasterize_ring(size, cx, cy, outer, outer - thickness);
        }
    }
    throw std::logic_error("unreachable shape family");
}

void paint_textured(Image& image, const BinaryMask& m, double level, double amplitude,
                    int word) {
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (m.get(y, x)) {
                image.at(0, y, x) = level + amplitude * texture_sign(word, y, x);
            }
        }
    }
}

bool intersects(const BinaryMask& a, const BinaryMask& b) {
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        if (a.bits[i] & b.bits[i]) return true;
    }
    return false;
}

void mark_dilated(BinaryMask& blocked, const BinaryMask& shape, int gap) {
    for (int y = 0; y < shape.height; ++y) {
        for (int x = 0; x < shape.width; ++x) {
            if (!shape.get(y, x)) continue;
            for (int dy = -gap; dy <= gap; ++dy) {
                for (int dx = -gap; dx <= gap; ++dx) {
                    const int ny = y + dy;
                    const int nx = x + dx;
                    if (ny >= 0 && ny < blocked.height && nx >= 0 && nx < blocked.width) {
                        blocked.set(ny, nx, true);
                    }
                }
            }
        }
    }
}

void draw_clutter(Image& image, const BinaryMask& occupied, const GeneratorSpec& spec,
                  Rng& rng) {
    const int size = spec.image_size;
    const double level = spec.background + spec.contrast * 0.6;
    for (int b = 0; b < spec.clutter_blobs; ++b) {
        const double ax = rng.uniform(kEllipseAxisMin, kEllipseAxisMax);
        const double ay = rng.uniform(kEllipseAxisMin, kEllipseAxisMax);
        const double cx = rng.uniform(0.0, static_cast<double>(size));
        const double cy = rng.uniform(0.0, static_cast<double>(size));
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                if (occupied.get(y, x)) continue;
                const double dx = (x - cx) / ax;
                const double dy = (y - cy) / ay;
                if (dx * dx + dy * dy <= 1.0) image.at(0, y, x) = level;
            }
        }
    }
}

}  // namespace

std::string domain_name(DomainTag tag) {
    switch (tag) {
        case DomainTag::clean: return "clean";
        case DomainTag::cluttered: return "cluttered";
        case DomainTag::speckled: return "speckled";
    }
    throw std::logic_error("unreachable domain tag");
}

DomainTag parse_domain(const std::string& name) {
    if (name == "clean") return DomainTag::clean;
    if (name == "cluttered") return DomainTag::cluttered;
    if (name == "speckled") return DomainTag::speckled;
    throw DataError("unknown domain tag: " + name);
}

std::vector<PointPrompt> InstancePromptSet::all() const {
    std::vector<PointPrompt> out(positives);
    out.insert(out.end(), negatives.begin(), negatives.end());
    return out;
}

InstancePromptSet sample_prompts(const BinaryMask& gt, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_prompts: n must be positive");
    std::vector<std::pair<int, int>> inside, outside;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            (gt.get(y, x) ? inside : outside).emplace_back(y, x);
        }
    }
    if (inside.empty()) throw std::invalid_argument("sample_prompts: empty mask");
    if (outside.size() < static_cast<std::size_t>(n)) {
        throw std::invalid_argument("sample_prompts: mask complement smaller than n");
    }
    InstancePromptSet set;
    if (inside.size() >= static_cast<std::size_t>(n)) {
        for (std::size_t idx : rng.sample_indices(inside.size(), static_cast<std::size_t>(n))) {
            set.positives.push_back({inside[idx].second, inside[idx].first, Polarity::positive});
        }
    } else {
        for (int i = 0; i < n; ++i) {
            const auto& p = inside[rng.uniform_int(inside.size())];
            set.positives.push_back({p.second, p.first, Polarity::positive});
        }
    }
    for (std::size_t idx : rng.sample_indices(outside.size(), static_cast<std::size_t>(n))) {
        set.negatives.push_back({outside[idx].second, outside[idx].first, Polarity::negative});
    }
    return set;
}

Scene generate_scene(const GeneratorSpec& spec, std::uint64_t seed) {
    if (spec.image_size < 16 || spec.min_objects < 1 || spec.max_objects < spec.min_objects) {
        throw DataError("generator spec: inconsistent sizes or object counts");
    }
    if (spec.contrast_jitter < 0.0 || spec.contrast_jitter >= 1.0) {
        throw DataError("generator spec: contrast_jitter must be in [0, 1)");
    }
    if (spec.texture_amplitude < 0.0 || spec.distractor_rings < 0) {
        throw DataError("generator spec: negative texture amplitude or ring count");
    }
    Rng rng = Rng::substream(seed, "scene-gen");
    const int size = spec.image_size;

    const int wanted =
        spec.min_objects +
        static_cast<int>(rng.uniform_int(spec.max_objects - spec.min_objects + 1));

    Scene scene;
    scene.seed = seed;
    scene.domain = spec.domain;
    scene.image = Image(1, size, size);

    BinaryMask occupied(size, size);
    BinaryMask blocked(size, size);
    for (int k = 0; k < wanted; ++k) {
        for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
            BinaryMask shape = sample_shape(spec, rng);
            if (shape.count() == 0 || intersects(shape, blocked)) continue;
            mark_dilated(blocked, shape, spec.min_gap);
            for (std::size_t i = 0; i < occupied.bits.size(); ++i) {
                occupied.bits[i] |= shape.bits[i];
            }
            SceneInstance inst;
            inst.id = static_cast<int>(scene.instances.size());
            inst.gt_mask = std::move(shape);
            scene.instances.push_back(std::move(inst));
            break;
        }
    }
    if (scene.instances.empty()) {
        throw DataError("generate_scene: no object placed after " +
                        std::to_string(spec.max_attempts) + " attempts each");
    }

    // Instance appearance: a per-instance intensity level plus a tiled sign
    // texture. Words are dealt without replacement, so no two instances in a
    // scene share a texture (the vocabulary covers the maximum object count).
    // Speckle imaging washes texture out: the speckled domain renders every
    // instance at a reduced amplitude, which is the domain gap an adapted
    // model has to close.
    const double amplitude =
        spec.texture_amplitude * (spec.domain == DomainTag::speckled ? 0.65 : 1.0);
    const std::vector<std::size_t> word_order =
        rng.sample_indices(kNumTextureWords, kNumTextureWords);
    for (double& v : scene.image.values) v = spec.background;
    for (const SceneInstance& inst : scene.instances) {
        const double mult =
            1.0 + spec.contrast_jitter * (2.0 * rng.uniform01() - 1.0);
        const double level = spec.background + spec.contrast * mult;
        const int word = static_cast<int>(word_order[inst.id % kNumTextureWords]);
        paint_textured(scene.image, inst.gt_mask, level, amplitude, word);
    }

    switch (spec.domain) {
        case DomainTag::clean:
            break;
        case DomainTag::cluttered:
            draw_clutter(scene.image, occupied, spec, rng);
            break;
        case DomainTag::speckled: {
            // Unannotated hollow rings drawn as bare intensity offsets, no
            // texture word: they are imaging artifacts, not objects, so they
            // must not borrow any instance's appearance. Then multiplicative
            // speckle over the whole frame.
            for (int q = 0; q < spec.distractor_rings; ++q) {
                const double mult =
                    1.0 + spec.contrast_jitter * (2.0 * rng.uniform01() - 1.0);
                const double level = spec.background + spec.contrast * mult;
                for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
                    const double outer = rng.uniform(kRingOuterMin, kRingOuterMax);
                    const double thickness =
                        rng.uniform(kRingThicknessMin, kRingThicknessMax);
                    const double cx = rng.uniform(outer + 1.0, size - outer - 1.0);
                    const double cy = rng.uniform(outer + 1.0, size - outer - 1.0);
                    BinaryMask ring =
                        rasterize_ring(size, cx, cy, outer, outer - thickness);
                    if (ring.count() == 0 || intersects(ring, blocked)) continue;
                    mark_dilated(blocked, ring, spec.min_gap);
                    paint_textured(scene.image, ring, level, 0.0, 0);
                    break;
                }
            }
            for (double& v : scene.image.values) {
                v *= 1.0 + spec.speckle_sigma * rng.normal();
            }
            break;
        }
    }
    for (double& v : scene.image.values) v = std::clamp(v, 0.0, 1.0);

    Rng prompt_rng = Rng::substream(seed, "scene-prompts");
    for (SceneInstance& inst : scene.instances) {
        inst.prompts = sample_prompts(inst.gt_mask, spec.points_per_instance, prompt_rng);
        inst.prompts.instance_id = inst.id;
    }
    return scene;
}

}  // namespace pointadapt
