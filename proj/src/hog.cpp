#include "pcw/hog.hpp"

#include <algorithm>
#include <cmath>

#include "pcw/error.hpp"
#include "pcw/rng.hpp"

namespace pcw::hog {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic cap on the descriptor pools so full-size datasets cannot blow
// up memory; the desk profile never hits these.
constexpr std::size_t kMaxPositives = 1500;
constexpr std::size_t kMaxRandomNegatives = 2000;
constexpr std::size_t kMaxHardNegatives = 600;
constexpr std::size_t kMaxMiningImages = 150;

double l2hys_norm(std::vector<double>& v, double clip, double eps) {
    double sq = eps * eps;
    for (double x : v) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x = std::min(x * inv, clip);
    sq = eps * eps;
    for (double x : v) sq += x * x;
    const double inv2 = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv2;
    return inv2;
}

}  // namespace

void HogConfig::validate() const {
    if (cell == 0 || block == 0 || bins < 2) throw ConfigError("hog: degenerate configuration");
    if (window_w % cell != 0 || window_h % cell != 0) {
        throw ConfigError("hog: window must be a whole number of cells");
    }
    if (cells_x() < block || cells_y() < block) {
        throw ConfigError("hog: window smaller than one block");
    }
    if (!(l2hys_clip > 0.0) || !(norm_eps > 0.0)) throw ConfigError("hog: bad normalisation");
}

CellGrid cell_histograms(const Image& gray, const HogConfig& cfg) {
    cfg.validate();
    check_contract(gray.channels == 1, "hog: image must be grayscale");
    check_contract(gray.width >= cfg.cell && gray.height >= cfg.cell, "hog: image below one cell");

    CellGrid grid;
    grid.cx = gray.width / cfg.cell;
    grid.cy = gray.height / cfg.cell;
    grid.bins = cfg.bins;
    grid.hist.assign(grid.cx * grid.cy * cfg.bins, 0.0);

    const double bin_width = 180.0 / static_cast<double>(cfg.bins);
    const std::size_t w = gray.width, h = gray.height;
    for (std::size_t y = 0; y < grid.cy * cfg.cell; ++y) {
        const std::size_t ym = y == 0 ? 0 : y - 1;
        const std::size_t yp = y + 1 == h ? h - 1 : y + 1;
        for (std::size_t x = 0; x < grid.cx * cfg.cell; ++x) {
            const std::size_t xm = x == 0 ? 0 : x - 1;
            const std::size_t xp = x + 1 == w ? w - 1 : x + 1;
            const double gx = gray.at(y, xp) - gray.at(y, xm);
            const double gy = gray.at(yp, x) - gray.at(ym, x);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            // Unsigned orientation in [0,180), split between the two
            // neighbouring bin centres (k * bin_width), wrapping at the top.
            double deg = std::atan2(gy, gx) * 180.0 / kPi;
            deg = std::fmod(deg + 180.0, 180.0);
            const double pos = deg / bin_width;
            const std::size_t k0 = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(k0);
            const std::size_t b0 = k0 % cfg.bins;
            const std::size_t b1 = (k0 + 1) % cfg.bins;
            double* cell = grid.hist.data() + ((y / cfg.cell) * grid.cx + x / cfg.cell) * cfg.bins;
            cell[b0] += mag * (1.0 - frac);
            cell[b1] += mag * frac;
        }
    }
    return grid;
}

BlockGrid normalized_blocks(const CellGrid& cells, const HogConfig& cfg) {
    check_contract(cells.bins == cfg.bins, "hog: cell grid does not match configuration");
    check_contract(cells.cx >= cfg.block && cells.cy >= cfg.block, "hog: grid below one block");
    BlockGrid blocks;
    blocks.bx = cells.cx - cfg.block + 1;
    blocks.by = cells.cy - cfg.block + 1;
    blocks.len = cfg.block_len();
    blocks.data.assign(blocks.bx * blocks.by * blocks.len, 0.0);

    std::vector<double> scratch(blocks.len);
    for (std::size_t by = 0; by < blocks.by; ++by) {
        for (std::size_t bx = 0; bx < blocks.bx; ++bx) {
            std::size_t o = 0;
            for (std::size_t cy = 0; cy < cfg.block; ++cy) {
                for (std::size_t cx = 0; cx < cfg.block; ++cx) {
                    const double* src =
                        cells.hist.data() + ((by + cy) * cells.cx + bx + cx) * cfg.bins;
                    for (std::size_t b = 0; b < cfg.bins; ++b) scratch[o++] = src[b];
                }
            }
            l2hys_norm(scratch, cfg.l2hys_clip, cfg.norm_eps);
            std::copy(scratch.begin(), scratch.end(),
                      blocks.data.begin() +
                          static_cast<std::ptrdiff_t>((by * blocks.bx + bx) * blocks.len));
        }
    }
    return blocks;
}

void window_descriptor(const BlockGrid& blocks, std::size_t cell_x, std::size_t cell_y,
                       const HogConfig& cfg, double* out) {
    check_contract(cell_x + cfg.blocks_x() <= blocks.bx && cell_y + cfg.blocks_y() <= blocks.by,
                   "hog: window exceeds the block grid");
    std::size_t o = 0;
    for (std::size_t wy = 0; wy < cfg.blocks_y(); ++wy) {
        for (std::size_t wx = 0; wx < cfg.blocks_x(); ++wx) {
            const double* src =
                blocks.data.data() + ((cell_y + wy) * blocks.bx + cell_x + wx) * blocks.len;
            for (std::size_t i = 0; i < blocks.len; ++i) out[o++] = src[i];
        }
    }
}

std::vector<double> compute_descriptor(const Image& window, const HogConfig& cfg) {
    check_contract(window.width == cfg.window_w && window.height == cfg.window_h,
                   "hog: image is not window-sized");
    const CellGrid cells = cell_histograms(window, cfg);
    const BlockGrid blocks = normalized_blocks(cells, cfg);
    std::vector<double> out(cfg.descriptor_length());
    window_descriptor(blocks, 0, 0, cfg, out.data());
    return out;
}

double LinearModel::score(const std::vector<double>& x) const {
    check_contract(x.size() == w.size(), "hog: descriptor length does not match the model");
    double s = b;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
}

LinearModel train_hinge(const std::vector<std::vector<double>>& positives,
                        const std::vector<std::vector<double>>& negatives,
                        const HingeTrainConfig& cfg) {
    check_contract(!positives.empty() && !negatives.empty(), "hinge: need both classes");
    const std::size_t dim = positives[0].size();
    for (const auto& v : positives) check_contract(v.size() == dim, "hinge: ragged descriptors");
    for (const auto& v : negatives) check_contract(v.size() == dim, "hinge: ragged descriptors");

    const std::size_t n = positives.size() + negatives.size();
    std::vector<const std::vector<double>*> xs(n);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < positives.size(); ++i) {
        xs[i] = &positives[i];
        ys[i] = 1.0;
    }
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        xs[positives.size() + i] = &negatives[i];
        ys[positives.size() + i] = -1.0;
    }

    LinearModel model;
    model.w.assign(dim, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> gw(dim);

    Rng rng(cfg.seed);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate / (1.0 + 0.05 * static_cast<double>(epoch));
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = rng.uniform_below(i);
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, n);
            const double inv_m = 1.0 / static_cast<double>(end - start);
            for (std::size_t j = 0; j < dim; ++j) gw[j] = cfg.l2 * model.w[j];
            double gb = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const std::vector<double>& x = *xs[order[i]];
                const double y = ys[order[i]];
                if (y * model.score(x) < 1.0) {
                    for (std::size_t j = 0; j < dim; ++j) gw[j] -= y * inv_m * x[j];
                    gb -= y * inv_m;
                }
            }
            for (std::size_t j = 0; j < dim; ++j) model.w[j] -= lr * gw[j];
            model.b -= lr * gb;
        }
    }
    return model;
}

double iou(const Detection& a, const Detection& b) {
    const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y0 != b.y0) return a.y0 < b.y0;
        if (a.x0 != b.x0) return a.x0 < b.x0;
        return a.x1 < b.x1;
    });
    std::vector<Detection> kept;
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (iou(d, k) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> detect(const Image& frame, const LinearModel& model, const HogConfig& cfg,
                              const DetectConfig& det) {
    cfg.validate();
    check_contract(frame.channels == 1, "detect: frame must be grayscale");
    check_contract(model.w.size() == cfg.descriptor_length(), "detect: model/descriptor mismatch");

    std::vector<Detection> found;
    std::vector<double> desc(cfg.descriptor_length());
    for (double s : det.scales) {
        check_contract(s > 0.0, "detect: scales must be positive");
        const std::size_t sw =
            static_cast<std::size_t>(std::lround(static_cast<double>(frame.width) * s));
        const std::size_t sh =
            static_cast<std::size_t>(std::lround(static_cast<double>(frame.height) * s));
        if (sw < cfg.window_w || sh < cfg.window_h) continue;
        const Image level = resize_bilinear(frame, sw, sh);
        const CellGrid cells = cell_histograms(level, cfg);
        if (cells.cx < cfg.cells_x() || cells.cy < cfg.cells_y()) continue;
        const BlockGrid blocks = normalized_blocks(cells, cfg);
        for (std::size_t cy = 0; cy + cfg.cells_y() <= cells.cy; ++cy) {
            for (std::size_t cx = 0; cx + cfg.cells_x() <= cells.cx; ++cx) {
                window_descriptor(blocks, cx, cy, cfg, desc.data());
                double score = model.b;
                for (std::size_t i = 0; i < desc.size(); ++i) score += model.w[i] * desc[i];
                if (score <= det.keep_threshold) continue;
                const double px = static_cast<double>(cx * cfg.cell);
                const double py = static_cast<double>(cy * cfg.cell);
                found.push_back({px / s, py / s, (px + static_cast<double>(cfg.window_w)) / s,
                                 (py + static_cast<double>(cfg.window_h)) / s, score});
            }
        }
    }
    return nms(std::move(found), det.nms_iou);
}

RoiRule RoiRule::centered(std::size_t frame_w, std::size_t frame_h) {
    const double w = static_cast<double>(frame_w);
    return {w / 4.0, 0.0, 3.0 * w / 4.0, static_cast<double>(frame_h)};
}

bool RoiRule::contains_center(const Detection& d) const {
    const double cx = (d.x0 + d.x1) / 2.0;
    const double cy = (d.y0 + d.y1) / 2.0;
    return x0 <= cx && cx < x1 && y0 <= cy && cy < y1;
}

double warning_score(const std::vector<Detection>& dets, const RoiRule& roi) {
    double best = kNoDetectionScore;
    for (const Detection& d : dets) {
        if (roi.contains_center(d) && d.score > best) best = d.score;
    }
    return best;
}

namespace {

Image sample_frame(const data::Sample& s, std::size_t frame_w, std::size_t frame_h) {
    return resize_bilinear(tensor_to_image(s.image), frame_w, frame_h);
}

std::vector<Detection> truth_boxes(const data::Sample& s, std::size_t raw_w, std::size_t raw_h,
                                   std::size_t frame_w, std::size_t frame_h) {
    std::vector<std::uint8_t> ids(s.seg.numel());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = static_cast<std::uint8_t>(std::lround(s.seg[i] * 5.0));
    }
    const double fx = static_cast<double>(frame_w) / static_cast<double>(raw_w);
    const double fy = static_cast<double>(frame_h) / static_cast<double>(raw_h);
    std::vector<Detection> out;
    for (const data::AgentBox& b : data::agent_boxes(ids, raw_w, raw_h)) {
        out.push_back({static_cast<double>(b.x0) * fx, static_cast<double>(b.y0) * fy,
                       static_cast<double>(b.x1 + 1) * fx, static_cast<double>(b.y1 + 1) * fy,
                       0.0});
    }
    return out;
}

// Pad 10% around the box, then stretch the short axis to the window's 1:2
// aspect so the resized crop is not distorted.
Detection padded_to_aspect(const Detection& b, const HogConfig& hog) {
    const double aspect =
        static_cast<double>(hog.window_w) / static_cast<double>(hog.window_h);  // 0.5
    double cw = (b.x1 - b.x0) * 1.2;
    double ch = (b.y1 - b.y0) * 1.2;
    if (cw / ch < aspect) {
        cw = ch * aspect;
    } else {
        ch = cw / aspect;
    }
    const double cx = (b.x0 + b.x1) / 2.0;
    const double cy = (b.y0 + b.y1) / 2.0;
    return {cx - cw / 2.0, cy - ch / 2.0, cx + cw / 2.0, cy + ch / 2.0, 0.0};
}

bool clear_of(const std::vector<Detection>& truth, const Detection& box, double max_iou) {
    for (const Detection& t : truth) {
        if (iou(t, box) >= max_iou) return false;
    }
    return true;
}

}  // namespace

BaselineModel train_baseline(const data::SampleSet& train, std::uint64_t seed) {
    check_contract(!train.samples.empty(), "baseline: empty sample set");
    BaselineModel bm;
    bm.hog.validate();

    Rng rng(derive_seed(seed, "baseline"));
    std::vector<std::vector<double>> pos, neg;

    for (const data::Sample& s : train.samples) {
        const Image frame = sample_frame(s, bm.frame_w, bm.frame_h);
        const std::vector<Detection> truth =
            truth_boxes(s, train.width, train.height, bm.frame_w, bm.frame_h);
        for (const Detection& t : truth) {
            if (pos.size() >= kMaxPositives) break;
            const Detection c = padded_to_aspect(t, bm.hog);
            pos.push_back(compute_descriptor(
                crop_resize(frame, c.x0, c.y0, c.x1, c.y1, bm.hog.window_w, bm.hog.window_h),
                bm.hog));
        }
        for (int k = 0; k < 2 && neg.size() < kMaxRandomNegatives; ++k) {
            for (int attempt = 0; attempt < 10; ++attempt) {
                const double nh = rng.uniform(100.0, 240.0);
                const double nw = nh / 2.0;
                const double nx = rng.uniform(0.0, static_cast<double>(bm.frame_w) - nw);
                const double ny = rng.uniform(0.0, static_cast<double>(bm.frame_h) - nh);
                const Detection box{nx, ny, nx + nw, ny + nh, 0.0};
                if (!clear_of(truth, box, 0.2)) continue;
                neg.push_back(compute_descriptor(
                    crop_resize(frame, box.x0, box.y0, box.x1, box.y1, bm.hog.window_w,
                                bm.hog.window_h),
                    bm.hog));
                break;
            }
        }
    }

    HingeTrainConfig round1;
    round1.seed = derive_seed(seed, "hinge-1");
    const LinearModel first = train_hinge(pos, neg, round1);

    // One round of hard negative mining: rerun the detector on training
    // frames and add confident false positives to the pool.
    DetectConfig mine;
    mine.keep_threshold = 0.0;
    std::size_t hard = 0;
    for (std::size_t i = 0; i < std::min(train.samples.size(), kMaxMiningImages); ++i) {
        if (hard >= kMaxHardNegatives) break;
        const data::Sample& s = train.samples[i];
        const Image frame = sample_frame(s, bm.frame_w, bm.frame_h);
        const std::vector<Detection> truth =
            truth_boxes(s, train.width, train.height, bm.frame_w, bm.frame_h);
        std::size_t taken = 0;
        for (const Detection& d : detect(frame, first, bm.hog, mine)) {
            if (taken >= 2 || hard >= kMaxHardNegatives) break;
            if (!clear_of(truth, d, 0.2)) continue;
            neg.push_back(compute_descriptor(
                crop_resize(frame, d.x0, d.y0, d.x1, d.y1, bm.hog.window_w, bm.hog.window_h),
                bm.hog));
            ++taken;
            ++hard;
        }
    }

    HingeTrainConfig round2;
    round2.seed = derive_seed(seed, "hinge-2");
    bm.model = train_hinge(pos, neg, round2);
    return bm;
}

double score_frame(const BaselineModel& bm, const Tensor& image) {
    const Image frame = resize_bilinear(tensor_to_image(image), bm.frame_w, bm.frame_h);
    const std::vector<Detection> dets = detect(frame, bm.model, bm.hog, bm.det);
    return warning_score(dets, RoiRule::centered(bm.frame_w, bm.frame_h));
}

std::vector<double> baseline_scores(const BaselineModel& bm, const data::SampleSet& set) {
    std::vector<double> scores;
    scores.reserve(set.samples.size());
    for (const data::Sample& s : set.samples) scores.push_back(score_frame(bm, s.image));
    return scores;
}

}  // namespace pcw::hog
