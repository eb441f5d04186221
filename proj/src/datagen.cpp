#include "pcw/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pcw/error.hpp"

namespace pcw::data {

namespace {

constexpr double kShadeVehicle = 0.72;
constexpr double kShadeWindow = 0.50;
constexpr double kShadeHead = 0.82;
constexpr double kShadeTorso = 0.88;
constexpr double kShadeLegs = 0.85;
constexpr double kShadeRider = 0.80;
constexpr double kShadeWheel = 0.35;
constexpr double kNoiseSigma = 0.06;

// Road edges are linear in y between the horizon row and the bottom row.
struct RoadGeometry {
    std::size_t horizon;
    std::size_t height;
    double top_cx, top_halfw;
    double bot_cx, bot_halfw;

    double blend(std::size_t y) const {
        return static_cast<double>(y - horizon) / static_cast<double>(height - 1 - horizon);
    }
    double left(std::size_t y) const {
        const double t = blend(y);
        return (top_cx + (bot_cx - top_cx) * t) - (top_halfw + (bot_halfw - top_halfw) * t);
    }
    double right(std::size_t y) const {
        const double t = blend(y);
        return (top_cx + (bot_cx - top_cx) * t) + (top_halfw + (bot_halfw - top_halfw) * t);
    }
};

// A pixel column x sits on the road when left(y) <= x+0.5 < right(y); the
// warning label tests the agent's bottom row of pixels against this.
bool footprint_on_road(const RoadGeometry& road, std::size_t y, long x0, long x1, std::size_t w) {
    if (y < road.horizon) return false;
    const double l = road.left(y);
    const double r = road.right(y);
    for (long x = std::max<long>(0, x0); x <= std::min<long>(static_cast<long>(w) - 1, x1); ++x) {
        const double c = static_cast<double>(x) + 0.5;
        if (l <= c && c < r) return true;
    }
    return false;
}

struct Painter {
    Image& img;
    std::vector<std::uint8_t>& seg;
    std::size_t w, h;

    void pixel(long x, long y, double shade, std::uint8_t cls) {
        if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return;
        img.pixels[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = shade;
        seg[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = cls;
    }

    void rect(long x0, long y0, long x1, long y1, double shade, std::uint8_t cls) {
        for (long y = std::max<long>(0, y0); y <= std::min<long>(static_cast<long>(h) - 1, y1); ++y) {
            for (long x = std::max<long>(0, x0); x <= std::min<long>(static_cast<long>(w) - 1, x1);
                 ++x) {
                pixel(x, y, shade, cls);
            }
        }
    }

    void disc(double cx, double cy, double r, double shade, std::uint8_t cls) {
        for (long y = static_cast<long>(std::floor(cy - r)); y <= static_cast<long>(std::ceil(cy + r));
             ++y) {
            for (long x = static_cast<long>(std::floor(cx - r));
                 x <= static_cast<long>(std::ceil(cx + r)); ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                if (dx * dx + dy * dy <= r * r) pixel(x, y, shade, cls);
            }
        }
    }
};

struct AgentPlan {
    bool cyclist = false;
    std::size_t y_b = 0;  // bottom pixel row
    double height = 0.0;
    double width = 0.0;
    double shade = 1.0;   // per-instance brightness factor
    long x0 = 0, x1 = 0;  // occupied pixel columns

    void set_center(double x_c) {
        x0 = std::lround(x_c - width / 2.0);
        x1 = std::max(x0 + 1, std::lround(x_c + width / 2.0));
    }
};

AgentPlan sample_agent_size(Rng& rng, const RoadGeometry& road, std::size_t h, bool allow_cyclist) {
    AgentPlan a;
    a.cyclist = allow_cyclist && rng.uniform() < 0.3;
    // Ground-anchored perspective: agents near the bottom are larger.
    const double t = rng.uniform(0.55, 1.0);
    const double span = static_cast<double>(h - 1 - road.horizon);
    a.y_b = road.horizon + static_cast<std::size_t>(std::lround(t * span));
    a.height = t * static_cast<double>(h) * rng.uniform(0.50, 0.75);
    const double aspect = a.cyclist ? rng.uniform(0.55, 0.75) : rng.uniform(0.30, 0.40);
    a.width = a.height * aspect;
    a.shade = rng.uniform(0.78, 1.12);
    return a;
}

AgentPlan place_on_road(Rng& rng, const RoadGeometry& road, std::size_t w, std::size_t h) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        AgentPlan a = sample_agent_size(rng, road, h, true);
        const double l = road.left(a.y_b);
        const double r = road.right(a.y_b);
        double x_c;
        if (r - l > a.width + 1.0) {
            const double lo = l + a.width / 2.0;
            const double hi = r - a.width / 2.0;
            if (rng.uniform() < 0.4) {
                // Hard positive: hug one road edge from the inside.
                const double push = rng.uniform(0.0, 1.5);
                x_c = rng.uniform() < 0.5 ? std::min(hi, lo + push) : std::max(lo, hi - push);
            } else {
                x_c = rng.uniform(lo, hi);
            }
        } else {
            x_c = (l + r) / 2.0;
        }
        a.set_center(x_c);
        if (footprint_on_road(road, a.y_b, a.x0, a.x1, w)) return a;
    }
    AgentPlan a = sample_agent_size(rng, road, h, false);
    a.set_center((road.left(a.y_b) + road.right(a.y_b)) / 2.0);
    check_contract(footprint_on_road(road, a.y_b, a.x0, a.x1, w),
                   "scene generator: road centre placement failed");
    return a;
}

AgentPlan place_off_road(Rng& rng, const RoadGeometry& road, std::size_t w, std::size_t h) {
    for (int attempt = 0; attempt < 24; ++attempt) {
        AgentPlan a = sample_agent_size(rng, road, h, true);
        const double l = road.left(a.y_b);
        const double r = road.right(a.y_b);
        const bool left_side = rng.uniform() < 0.5;
        const double margin = left_side ? l : static_cast<double>(w) - r;
        if (margin < a.width + 2.0) continue;
        double x_c;
        if (rng.uniform() < 0.45) {
            // Hard negative: stand on the sidewalk just clear of the road edge.
            const double gap = 1.0 + rng.uniform(0.0, 2.0);
            x_c = left_side ? l - a.width / 2.0 - gap : r + a.width / 2.0 + gap;
            x_c = std::min(std::max(x_c, a.width / 2.0),
                           static_cast<double>(w) - a.width / 2.0);
        } else {
            x_c = left_side ? rng.uniform(a.width / 2.0, l - a.width / 2.0 - 1.0)
                            : rng.uniform(r + a.width / 2.0 + 1.0,
                                          static_cast<double>(w) - a.width / 2.0);
        }
        a.set_center(x_c);
        if (!footprint_on_road(road, a.y_b, a.x0, a.x1, w)) return a;
    }
    // The row closest to the horizon we allow has the most room beside the
    // road; force a pedestrian there on the wider side.
    AgentPlan a;
    a.cyclist = false;
    const double span = static_cast<double>(h - 1 - road.horizon);
    a.y_b = road.horizon + static_cast<std::size_t>(std::lround(0.55 * span));
    a.height = 0.55 * static_cast<double>(h) * 0.55;
    a.width = a.height * 0.32;
    const double l = road.left(a.y_b);
    const double r = road.right(a.y_b);
    const bool left_side = l > static_cast<double>(w) - r;
    a.set_center(left_side ? l / 2.0 : (r + static_cast<double>(w)) / 2.0);
    check_contract(!footprint_on_road(road, a.y_b, a.x0, a.x1, w),
                   "scene generator: no off-road space for an agent");
    return a;
}

void draw_pedestrian(Painter& p, const AgentPlan& a) {
    const long y1 = static_cast<long>(a.y_b);
    const long y0 = std::max<long>(0, y1 - std::lround(a.height) + 1);
    const long rows = y1 - y0 + 1;
    const long head_end = y0 + std::max<long>(1, std::lround(0.18 * static_cast<double>(rows)));
    const long torso_end = y0 + std::max<long>(head_end - y0 + 1,
                                               std::lround(0.60 * static_cast<double>(rows)));
    const long bw = a.x1 - a.x0 + 1;
    const long head_inset = std::max<long>(0, std::lround(0.25 * static_cast<double>(bw)));
    p.rect(a.x0 + head_inset, y0, a.x1 - head_inset, head_end - 1, a.shade * kShadeHead, kPedestrian);
    p.rect(a.x0, head_end, a.x1, torso_end - 1, a.shade * kShadeTorso, kPedestrian);
    // Two legs with a visible gap between them.
    const long leg_w = std::max<long>(1, std::lround(0.38 * static_cast<double>(bw)));
    p.rect(a.x0, torso_end, a.x0 + leg_w - 1, y1, a.shade * kShadeLegs, kPedestrian);
    p.rect(a.x1 - leg_w + 1, torso_end, a.x1, y1, a.shade * kShadeLegs, kPedestrian);
}

void draw_cyclist(Painter& p, const AgentPlan& a) {
    const long y1 = static_cast<long>(a.y_b);
    const long y0 = std::max<long>(0, y1 - std::lround(a.height) + 1);
    const double x_c = (static_cast<double>(a.x0) + static_cast<double>(a.x1)) / 2.0;
    const double r = std::max(1.0, 0.22 * a.height);
    const double wheel_dx = 0.28 * a.width;
    p.disc(x_c - wheel_dx, static_cast<double>(y1) - r, r, a.shade * kShadeWheel, kCyclist);
    p.disc(x_c + wheel_dx, static_cast<double>(y1) - r, r, a.shade * kShadeWheel, kCyclist);
    const long bar_y = y1 - std::lround(0.45 * a.height);
    const long bar_h = std::max<long>(1, std::lround(0.05 * a.height));
    p.rect(std::lround(x_c - wheel_dx), bar_y - bar_h + 1, std::lround(x_c + wheel_dx), bar_y,
           a.shade * kShadeRider, kCyclist);
    const long rider_w = std::max<long>(1, std::lround(0.35 * a.width));
    p.rect(std::lround(x_c) - rider_w / 2, y0, std::lround(x_c) + rider_w / 2,
           y1 - std::lround(0.40 * a.height), a.shade * kShadeRider, kCyclist);
}

void vehicle_box(Painter& p, double x_c, std::size_t y_b, double vh, double vw, double s) {
    const long y1 = static_cast<long>(y_b);
    const long y0 = y1 - std::max<long>(2, std::lround(vh)) + 1;
    const long x0 = std::lround(x_c - vw / 2.0);
    const long x1 = std::max(x0 + 2, std::lround(x_c + vw / 2.0));
    const long cabin_top = y0;
    const long cabin_bot = y0 + std::max<long>(1, std::lround(0.45 * vh)) - 1;
    const long inset = std::max<long>(1, std::lround(0.15 * vw));
    p.rect(x0, cabin_bot + 1, x1, y1, s * kShadeVehicle, kVehicle);
    p.rect(x0 + inset, cabin_top, x1 - inset, cabin_bot, s * kShadeVehicle, kVehicle);
    if (cabin_bot > cabin_top) {
        p.rect(x0 + inset + 1, cabin_top + 1, x1 - inset - 1, cabin_bot - 1, s * kShadeWindow, kVehicle);
    }
}

void draw_vehicle(Painter& p, Rng& rng, const RoadGeometry& road, std::size_t /*w*/, std::size_t h) {
    const double t = rng.uniform(0.30, 0.95);
    const double span = static_cast<double>(h - 1 - road.horizon);
    const std::size_t y_b = road.horizon + static_cast<std::size_t>(std::lround(t * span));
    const double l = road.left(y_b);
    const double r = road.right(y_b);
    if (r - l < 4.0) return;
    const double vh = t * static_cast<double>(h) * rng.uniform(0.16, 0.24);
    const double vw = std::min(vh * rng.uniform(1.4, 1.9), 0.9 * (r - l));
    const double x_c = r - l > vw + 1.0 ? rng.uniform(l + vw / 2.0, r - vw / 2.0) : (l + r) / 2.0;
    vehicle_box(p, x_c, y_b, vh, vw, rng.uniform(0.80, 1.15));
}

std::string index_name(const char* stem, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%05zu.pgm", stem, i);
    return buf;
}

}  // namespace

Scene make_scene(std::size_t width, std::size_t height, std::uint64_t seed, bool want_warning) {
    check_contract(width >= 16 && height >= 16, "make_scene: frame too small");
    Rng rng(seed);

    Scene scene;
    scene.image = Image(width, height, 1);
    scene.seg.assign(width * height, kBackground);
    Painter paint{scene.image, scene.seg, width, height};

    RoadGeometry road;
    road.height = height;
    road.horizon = static_cast<std::size_t>(
        std::lround(static_cast<double>(height) * rng.uniform(0.25, 0.45)));
    road.bot_cx = static_cast<double>(width) * rng.uniform(0.35, 0.65);
    road.top_cx = road.bot_cx + static_cast<double>(width) * rng.uniform(-0.18, 0.18);
    // The corridor half-width varies per scene around the perspective span,
    // so the edge position cannot be derived from the horizon row and the
    // centre line alone: locating it to pixel precision requires finding the
    // actual road/sidewalk transition in the image.
    road.top_halfw = 0.06 * static_cast<double>(width);
    road.bot_halfw = static_cast<double>(height - road.horizon) * rng.uniform(0.60, 1.00);

    // Surface brightness is drawn per scene with sign-symmetric road/sidewalk
    // contrast: locally the two surfaces are indistinguishable on average, so
    // telling them apart requires the scene geometry; the class map stays
    // exact regardless.
    const double road_shade = rng.uniform(0.22, 0.40);
    const double walk_shade = road_shade + rng.uniform(-0.10, 0.10);
    const double ground_shade = walk_shade + rng.uniform(-0.08, 0.08);
    const double lane_shade = std::min(0.95, road_shade + rng.uniform(0.25, 0.45));

    // Sky above the horizon, ground below, then the road corridor and its
    // sidewalk bands rasterised row by row.
    for (std::size_t y = 0; y < road.horizon; ++y) {
        const double shade = 0.70 - 0.06 * static_cast<double>(y) / static_cast<double>(height);
        for (std::size_t x = 0; x < width; ++x) paint.pixel(static_cast<long>(x), static_cast<long>(y), shade, kBackground);
    }
    const double sidewalk_w = static_cast<double>(width) * rng.uniform(0.07, 0.13);
    for (std::size_t y = road.horizon; y < height; ++y) {
        const double l = road.left(y);
        const double r = road.right(y);
        for (std::size_t x = 0; x < width; ++x) {
            const double c = static_cast<double>(x) + 0.5;
            if (l <= c && c < r) {
                paint.pixel(static_cast<long>(x), static_cast<long>(y), road_shade, kRoad);
            } else if ((l - sidewalk_w <= c && c < l) || (r <= c && c < r + sidewalk_w)) {
                paint.pixel(static_cast<long>(x), static_cast<long>(y), walk_shade, kSidewalk);
            } else {
                paint.pixel(static_cast<long>(x), static_cast<long>(y), ground_shade, kBackground);
            }
        }
    }
    // Dashed centre line; stays class road.
    for (std::size_t y = road.horizon; y < height; ++y) {
        if ((y - road.horizon) % 4 >= 2) continue;
        const long cx = static_cast<long>(std::floor((road.left(y) + road.right(y)) / 2.0));
        if (cx >= 0 && cx < static_cast<long>(width) &&
            scene.seg[y * width + static_cast<std::size_t>(cx)] == kRoad) {
            scene.image.pixels[y * width + static_cast<std::size_t>(cx)] = lane_shade;
        }
    }

    const std::size_t n_vehicles = rng.uniform_below(3);
    for (std::size_t i = 0; i < n_vehicles; ++i) draw_vehicle(paint, rng, road, width, height);

    // Agents are drawn after vehicles so they are never occluded. The first
    // one carries the warning label; the rest follow the same constraint so a
    // non-warning scene has nobody on the road.
    const std::size_t n_agents = 1 + rng.uniform_below(3);
    std::vector<AgentPlan> agents;
    agents.reserve(n_agents);
    agents.push_back(want_warning ? place_on_road(rng, road, width, height)
                                  : place_off_road(rng, road, width, height));
    for (std::size_t i = 1; i < n_agents; ++i) {
        const bool on_road = want_warning && rng.uniform() < 0.3;
        agents.push_back(on_road ? place_on_road(rng, road, width, height)
                                 : place_off_road(rng, road, width, height));
    }
    for (const AgentPlan& a : agents) {
        if (a.cyclist) {
            draw_cyclist(paint, a);
        } else {
            draw_pedestrian(paint, a);
        }
    }

    int warning = 0;
    for (const AgentPlan& a : agents) {
        if (footprint_on_road(road, a.y_b, a.x0, a.x1, width)) warning = 1;
        scene.footprints.push_back({a.y_b, a.x0, a.x1});
    }
    check_contract(warning == (want_warning ? 1 : 0),
                   "scene generator: constructed label disagrees with request");
    scene.warning = warning;

    scene.road_left.assign(height, 0.0);
    scene.road_right.assign(height, 0.0);
    for (std::size_t y = road.horizon; y < height; ++y) {
        scene.road_left[y] = road.left(y);
        scene.road_right[y] = road.right(y);
    }

    for (double& v : scene.image.pixels) {
        v = std::min(1.0, std::max(0.0, v + rng.normal(0.0, kNoiseSigma)));
    }
    return scene;
}

void DatasetConfig::validate() const {
    if (width < 16 || height < 16) throw ConfigError("dataset: width/height must be at least 16");
    if (train_count == 0 || eval_count == 0) throw ConfigError("dataset: empty split");
    if (!(warning_fraction > 0.0 && warning_fraction < 1.0)) {
        throw ConfigError("dataset: warning_fraction must lie strictly between 0 and 1");
    }
    for (std::size_t count : {train_count, eval_count}) {
        const auto quota = static_cast<std::size_t>(
            std::lround(static_cast<double>(count) * warning_fraction));
        if (quota == 0 || quota >= count) {
            throw ConfigError("dataset: warning_fraction leaves a split single-class");
        }
    }
}

namespace {

void generate_split(const DatasetConfig& cfg, const std::string& out_dir, const std::string& split,
                    std::size_t count, std::uint64_t split_seed) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / split / "images");
    fs::create_directories(fs::path(out_dir) / split / "seg");

    // Exactly round(count * fraction) warning labels, order shuffled.
    const auto quota =
        static_cast<std::size_t>(std::lround(static_cast<double>(count) * cfg.warning_fraction));
    std::vector<int> labels(count, 0);
    for (std::size_t i = 0; i < quota; ++i) labels[i] = 1;
    Rng shuffle_rng(derive_seed(split_seed, "labels"));
    for (std::size_t i = count; i > 1; --i) {
        std::size_t j = shuffle_rng.uniform_below(i);
        std::swap(labels[i - 1], labels[j]);
    }

    std::string csv = "image,seg,warning\n";
    for (std::size_t i = 0; i < count; ++i) {
        Scene scene = make_scene(cfg.width, cfg.height, derive_seed(split_seed, "scene", i),
                                 labels[i] == 1);
        const std::string img_rel = split + "/images/" + index_name("img", i);
        const std::string seg_rel = split + "/seg/" + index_name("seg", i);
        write_pnm((fs::path(out_dir) / img_rel).string(), scene.image);

        Image seg_img(cfg.width, cfg.height, 1);
        for (std::size_t p = 0; p < scene.seg.size(); ++p) {
            seg_img.pixels[p] = static_cast<double>(scene.seg[p]) * 51.0 / 255.0;
        }
        write_pnm((fs::path(out_dir) / seg_rel).string(), seg_img);

        csv += img_rel + "," + seg_rel + "," + std::to_string(scene.warning) + "\n";
    }
    std::ofstream f(fs::path(out_dir) / (split + ".csv"), std::ios::trunc);
    if (!f) throw ConfigError("cannot write manifest for split " + split);
    f << csv;
}

}  // namespace

void generate_dataset(const DatasetConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    generate_split(cfg, out_dir, "train", cfg.train_count, derive_seed(cfg.seed, "train"));
    generate_split(cfg, out_dir, "eval", cfg.eval_count, derive_seed(cfg.seed, "eval"));
}

std::vector<SampleRef> load_manifest(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw ConfigError("cannot open manifest " + csv_path);
    std::string line;
    if (!std::getline(f, line) || line != "image,seg,warning") {
        throw ParseError(csv_path + ": expected header 'image,seg,warning'", 0);
    }
    std::vector<SampleRef> refs;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            throw ParseError(csv_path + ": line " + std::to_string(line_no) + " needs 3 fields",
                             line_no);
        }
        SampleRef ref;
        ref.image_path = line.substr(0, c1);
        ref.seg_path = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string w = line.substr(c2 + 1);
        if (w != "0" && w != "1") {
            throw ParseError(csv_path + ": line " + std::to_string(line_no) + " warning must be 0/1",
                             line_no);
        }
        ref.warning = w == "1" ? 1 : 0;
        refs.push_back(std::move(ref));
    }
    if (refs.empty()) throw ParseError(csv_path + ": manifest has no samples", line_no);
    return refs;
}

Sample load_sample(const std::string& dataset_dir, const SampleRef& ref) {
    namespace fs = std::filesystem;
    Sample s;
    s.image = image_to_tensor(read_pnm((fs::path(dataset_dir) / ref.image_path).string()));
    const Image seg_img = read_pnm((fs::path(dataset_dir) / ref.seg_path).string());
    check_contract(seg_img.channels == 1, "segmentation maps must be grayscale");
    s.seg = Tensor({seg_img.width * seg_img.height});
    for (std::size_t i = 0; i < s.seg.numel(); ++i) {
        // Stored as class*51 out of 255, i.e. class/5 of full scale.
        const double v = seg_img.pixels[i] * 255.0 / 51.0;
        const long cls = std::lround(v);
        check_contract(cls >= 0 && cls < kSceneClassCount && std::abs(v - static_cast<double>(cls)) < 1e-9,
                       ref.seg_path + ": pixel is not a valid class id");
        s.seg[i] = static_cast<double>(cls) / 5.0;
    }
    s.warning = ref.warning;
    return s;
}

SampleSet load_split(const std::string& dataset_dir, const std::string& manifest_name) {
    namespace fs = std::filesystem;
    const std::vector<SampleRef> refs =
        load_manifest((fs::path(dataset_dir) / manifest_name).string());
    SampleSet set;
    set.samples.reserve(refs.size());
    for (const SampleRef& ref : refs) {
        Sample s = load_sample(dataset_dir, ref);
        if (set.samples.empty()) {
            set.height = s.image.dim(1);
            set.width = s.image.dim(2);
        } else {
            check_contract(s.image.dim(1) == set.height && s.image.dim(2) == set.width,
                           "dataset mixes image sizes");
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

std::vector<std::size_t> balanced_indices(const std::vector<int>& labels) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        check_contract(labels[i] == 0 || labels[i] == 1, "balanced_indices: labels must be 0/1");
        (labels[i] == 1 ? pos : neg).push_back(i);
    }
    check_contract(!pos.empty() && !neg.empty(), "balanced_indices: need both classes");

    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = i;
    const std::vector<std::size_t>& minority = pos.size() < neg.size() ? pos : neg;
    const std::size_t maj = std::max(pos.size(), neg.size());
    const std::size_t min_n = minority.size();
    if (maj == min_n) return out;

    // floor(maj/min)-1 extra copies of every minority index, then one more
    // for the first maj%min of them, so both classes end up with maj entries.
    const std::size_t base = maj / min_n;
    const std::size_t rem = maj % min_n;
    for (std::size_t i = 0; i < min_n; ++i) {
        const std::size_t copies = base - 1 + (i < rem ? 1 : 0);
        for (std::size_t c = 0; c < copies; ++c) out.push_back(minority[i]);
    }
    return out;
}

std::vector<AgentBox> agent_boxes(const std::vector<std::uint8_t>& seg, std::size_t width,
                                  std::size_t height) {
    check_contract(seg.size() == width * height, "agent_boxes: map size mismatch");
    std::vector<std::uint8_t> seen(seg.size(), 0);
    std::vector<AgentBox> boxes;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < seg.size(); ++start) {
        const std::uint8_t cls = seg[start];
        if (seen[start] || (cls != kPedestrian && cls != kCyclist)) continue;
        AgentBox box{start % width, start / width, start % width, start / width, cls};
        stack.assign(1, start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const std::size_t x = p % width;
            const std::size_t y = p / width;
            box.x0 = std::min(box.x0, x);
            box.x1 = std::max(box.x1, x);
            box.y0 = std::min(box.y0, y);
            box.y1 = std::max(box.y1, y);
            const std::size_t neighbours[4] = {
                x > 0 ? p - 1 : p, x + 1 < width ? p + 1 : p,
                y > 0 ? p - width : p, y + 1 < height ? p + width : p};
            for (std::size_t q : neighbours) {
                if (q != p && !seen[q] && seg[q] == cls) {
                    seen[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        boxes.push_back(box);
    }
    return boxes;
}

}  // namespace pcw::data
