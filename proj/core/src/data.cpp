#include "dcr/data.hpp"

#include "dcr/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace dcr {

namespace fs = std::filesystem;

namespace {

constexpr int kHarmonics = 4;

struct Contour {
    double amp[kHarmonics];
    double phase[kHarmonics];

    // boundary radius multiplier at angle theta, in (0.66, 1.34)
    double radius_factor(double theta) const {
        double f = 1.0;
        for (int h = 0; h < kHarmonics; ++h) {
            f += amp[h] * std::cos((h + 1) * theta + phase[h]);
        }
        return f;
    }
};

Contour draw_contour(Rng& rng) {
    Contour c;
    for (int h = 0; h < kHarmonics; ++h) {
        c.amp[h] = rng.uniform(-0.085, 0.085);
        c.phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return c;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<Sample> synth_generate(const SynthConfig& cfg) {
    if (cfg.count < 1 || cfg.prototypes < 1 || cfg.min_blobs < 1 ||
        cfg.max_blobs < cfg.min_blobs || cfg.scale_min <= 0.0 || cfg.scale_max >= 1.0 ||
        cfg.scale_min > cfg.scale_max) {
        throw ConfigError("synth_generate: invalid configuration");
    }
    const std::int64_t h = cfg.height, w = cfg.width;
    const double min_extent = static_cast<double>(std::min(h, w));

    Rng proto_rng(Rng::mix(cfg.seed, 0x5107));
    std::vector<Contour> library;
    for (int k = 0; k < cfg.prototypes; ++k) library.push_back(draw_contour(proto_rng));

    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(cfg.count));
    for (std::int64_t idx = 0; idx < cfg.count; ++idx) {
        Rng rng(Rng::mix(cfg.seed, 0x1000 + static_cast<std::uint64_t>(idx)));

        // muted mucosa-like background; blobs get a distinct reddish hue below
        double base[3];
        base[0] = rng.uniform(0.30, 0.45);
        base[1] = rng.uniform(0.35, 0.55);
        base[2] = rng.uniform(0.30, 0.50);

        std::vector<double> img(static_cast<std::size_t>(3 * h * w));
        for (std::int64_t c = 0; c < 3; ++c) {
            std::fill(img.begin() + c * h * w, img.begin() + (c + 1) * h * w, base[c]);
        }
        std::vector<double> mask(static_cast<std::size_t>(h * w), 0.0);

        const std::int64_t blobs = rng.uniform_int(cfg.min_blobs, cfg.max_blobs);
        for (std::int64_t blob = 0; blob < blobs; ++blob) {
            Contour contour = cfg.shared_prototypes
                                  ? library[static_cast<std::size_t>(
                                        rng.uniform_int(0, cfg.prototypes - 1))]
                                  : draw_contour(rng);
            const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
            const double radius = scale * min_extent / 2.0;
            const double reach = radius * 1.34 + 3.0 * cfg.blur_sigma;
            const double cx = reach * 2.0 < static_cast<double>(w)
                                  ? rng.uniform(reach, static_cast<double>(w) - 1.0 - reach)
                                  : static_cast<double>(w - 1) / 2.0;
            const double cy = reach * 2.0 < static_cast<double>(h)
                                  ? rng.uniform(reach, static_cast<double>(h) - 1.0 - reach)
                                  : static_cast<double>(h - 1) / 2.0;
            const double rot = rng.uniform(0.0, 2.0 * std::numbers::pi);

            const double brightness = rng.uniform(cfg.brightness_min, cfg.brightness_max);
            const double hue[3] = {0.78, 0.42, 0.46};  // nominal lesion color
            double color[3];
            for (int c = 0; c < 3; ++c) {
                color[c] = std::clamp(hue[c] * brightness +
                                          rng.uniform(-cfg.color_jitter, cfg.color_jitter),
                                      0.05, 0.95);
            }

            // Directional fade inside the blob ("color inconsistency / low
            // contrast"): one side blends toward the background, with
            // strength tied to color_jitter. At high jitter the faded side
            // is only recoverable from the contour shape, not local color.
            const double fade_phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double fade_strength = std::min(1.0, cfg.color_jitter * 1.6);

            const auto y0 = static_cast<std::int64_t>(std::floor(std::max(0.0, cy - reach)));
            const auto y1 = static_cast<std::int64_t>(
                std::ceil(std::min(static_cast<double>(h - 1), cy + reach)));
            const auto x0 = static_cast<std::int64_t>(std::floor(std::max(0.0, cx - reach)));
            const auto x1 = static_cast<std::int64_t>(
                std::ceil(std::min(static_cast<double>(w - 1), cx + reach)));
            for (std::int64_t y = y0; y <= y1; ++y) {
                for (std::int64_t x = x0; x <= x1; ++x) {
                    const double dx = static_cast<double>(x) - cx;
                    const double dy = static_cast<double>(y) - cy;
                    const double dist = std::hypot(dx, dy);
                    const double theta = std::atan2(dy, dx) - rot;
                    const double edge = radius * contour.radius_factor(theta);
                    if (dist <= edge) mask[y * w + x] = 1.0;
                    // image blending softens the boundary; mask stays hard
                    const double alpha =
                        clamp01(0.5 + (edge - dist) / (2.0 * cfg.blur_sigma));
                    if (alpha > 0.0) {
                        const double t =
                            (dx * std::cos(fade_phi) + dy * std::sin(fade_phi)) /
                            std::max(edge, 1.0);
                        const double mix =
                            fade_strength * clamp01(0.5 + 0.5 * t);
                        for (std::int64_t c = 0; c < 3; ++c) {
                            double& px = img[(c * h + y) * w + x];
                            const double blob = (1.0 - mix) * color[c] + mix * base[c];
                            px = alpha * blob + (1.0 - alpha) * px;
                        }
                    }
                }
            }
        }

        // low-frequency illumination texture plus pixel noise
        double fx[3], fy[3], ph[3], amp[3];
        for (int k = 0; k < 3; ++k) {
            fx[k] = rng.uniform(0.5, 2.5) / static_cast<double>(w);
            fy[k] = rng.uniform(0.5, 2.5) / static_cast<double>(h);
            ph[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
            amp[k] = rng.uniform(0.02, 0.05);
        }
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                double t = 0.0;
                for (int k = 0; k < 3; ++k) {
                    t += amp[k] * std::sin(2.0 * std::numbers::pi *
                                               (fx[k] * static_cast<double>(x) +
                                                fy[k] * static_cast<double>(y)) +
                                           ph[k]);
                }
                for (std::int64_t c = 0; c < 3; ++c) {
                    double& px = img[(c * h + y) * w + x];
                    px = clamp01(px + t + rng.uniform(-0.02, 0.02));
                }
            }
        }

        Sample s;
        char id[32];
        std::snprintf(id, sizeof(id), "synth_%05lld", static_cast<long long>(idx));
        s.id = id;
        s.image = Tensor(Shape{3, h, w}, std::move(img));
        s.mask = Tensor(Shape{1, h, w}, std::move(mask));
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

struct PnmParser {
    std::vector<unsigned char> bytes;
    std::size_t pos = 0;
    std::string path;

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path + ": " + what + " at byte offset " + std::to_string(pos));
    }

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            const unsigned char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(c)) {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::int64_t read_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) fail("expected integer");
        std::int64_t v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
        }
        return v;
    }
};

PnmParser read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    PnmParser p;
    p.path = path;
    p.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return p;
}

// Parses a P5 or P6 body; returns channels x h x w values in [0, 255].
std::vector<double> parse_pnm(PnmParser& p, int expected_channels, std::int64_t& h,
                              std::int64_t& w) {
    if (p.bytes.size() < 2 || p.bytes[0] != 'P' ||
        p.bytes[1] != (expected_channels == 3 ? '6' : '5')) {
        p.fail(std::string("expected magic P") + (expected_channels == 3 ? "6" : "5"));
    }
    p.pos = 2;
    w = p.read_int();
    h = p.read_int();
    const std::int64_t maxval = p.read_int();
    if (w < 1 || h < 1) p.fail("invalid dimensions");
    if (maxval != 255) p.fail("expected maxval 255, got " + std::to_string(maxval));
    if (p.pos >= p.bytes.size() || !std::isspace(p.bytes[p.pos])) {
        p.fail("expected single whitespace before raster");
    }
    ++p.pos;
    const std::size_t need = static_cast<std::size_t>(expected_channels * h * w);
    if (p.bytes.size() - p.pos < need) p.fail("truncated raster");

    // interleaved -> planar
    std::vector<double> out(need);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (int c = 0; c < expected_channels; ++c) {
                out[(c * h + y) * w + x] =
                    static_cast<double>(p.bytes[p.pos + (y * w + x) * expected_channels + c]);
            }
        }
    }
    return out;
}

std::vector<double> resize_bilinear(const std::vector<double>& src, std::int64_t channels,
                                    std::int64_t h, std::int64_t w, std::int64_t oh,
                                    std::int64_t ow) {
    std::vector<double> out(static_cast<std::size_t>(channels * oh * ow));
    for (std::int64_t c = 0; c < channels; ++c) {
        for (std::int64_t oy = 0; oy < oh; ++oy) {
            double sy = (static_cast<double>(oy) + 0.5) * static_cast<double>(h) /
                            static_cast<double>(oh) -
                        0.5;
            sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
            const auto y0 = static_cast<std::int64_t>(std::floor(sy));
            const std::int64_t y1 = std::min(y0 + 1, h - 1);
            const double fy = sy - static_cast<double>(y0);
            for (std::int64_t ox = 0; ox < ow; ++ox) {
                double sx = (static_cast<double>(ox) + 0.5) * static_cast<double>(w) /
                                static_cast<double>(ow) -
                            0.5;
                sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
                const auto x0 = static_cast<std::int64_t>(std::floor(sx));
                const std::int64_t x1 = std::min(x0 + 1, w - 1);
                const double fxv = sx - static_cast<double>(x0);
                const double* plane = src.data() + c * h * w;
                const double top = plane[y0 * w + x0] * (1 - fxv) + plane[y0 * w + x1] * fxv;
                const double bot = plane[y1 * w + x0] * (1 - fxv) + plane[y1 * w + x1] * fxv;
                out[(c * oh + oy) * ow + ox] = top * (1 - fy) + bot * fy;
            }
        }
    }
    return out;
}

std::vector<double> resize_nearest(const std::vector<double>& src, std::int64_t h, std::int64_t w,
                                   std::int64_t oh, std::int64_t ow) {
    std::vector<double> out(static_cast<std::size_t>(oh * ow));
    for (std::int64_t oy = 0; oy < oh; ++oy) {
        auto sy = static_cast<std::int64_t>(
            std::floor((static_cast<double>(oy) + 0.5) * static_cast<double>(h) /
                       static_cast<double>(oh)));
        sy = std::clamp<std::int64_t>(sy, 0, h - 1);
        for (std::int64_t ox = 0; ox < ow; ++ox) {
            auto sx = static_cast<std::int64_t>(
                std::floor((static_cast<double>(ox) + 0.5) * static_cast<double>(w) /
                           static_cast<double>(ow)));
            sx = std::clamp<std::int64_t>(sx, 0, w - 1);
            out[oy * ow + ox] = src[sy * w + sx];
        }
    }
    return out;
}

}  // namespace

Sample load_netpbm(const std::string& image_path, const std::string& mask_path,
                   std::int64_t target_h, std::int64_t target_w) {
    PnmParser ip = read_file(image_path);
    std::int64_t ih, iw;
    std::vector<double> img = parse_pnm(ip, 3, ih, iw);

    PnmParser mp = read_file(mask_path);
    std::int64_t mh, mw;
    std::vector<double> msk = parse_pnm(mp, 1, mh, mw);

    if (ih != mh || iw != mw) {
        throw ContractError("load_netpbm: image " + std::to_string(iw) + "x" +
                            std::to_string(ih) + " vs mask " + std::to_string(mw) + "x" +
                            std::to_string(mh));
    }
    for (auto& v : img) v /= 255.0;
    for (auto& v : msk) v = v >= 128.0 ? 1.0 : 0.0;

    const std::int64_t oh = target_h > 0 ? target_h : ih;
    const std::int64_t ow = target_w > 0 ? target_w : iw;
    if (oh != ih || ow != iw) {
        img = resize_bilinear(img, 3, ih, iw, oh, ow);
        msk = resize_nearest(msk, mh, mw, oh, ow);
    }

    Sample s;
    fs::path p(image_path);
    s.id = p.stem().string();
    s.image = Tensor(Shape{3, oh, ow}, std::move(img));
    s.mask = Tensor(Shape{1, oh, ow}, std::move(msk));
    return s;
}

void save_netpbm(const Sample& sample, const std::string& dir) {
    const std::int64_t h = sample.image.dim(1), w = sample.image.dim(2);
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "masks");

    {
        std::ofstream out(fs::path(dir) / "images" / (sample.id + ".ppm"), std::ios::binary);
        out << "P6\n" << w << " " << h << "\n255\n";
        const auto& v = sample.image.values();
        std::vector<unsigned char> raster(static_cast<std::size_t>(3 * h * w));
        for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
                for (std::int64_t c = 0; c < 3; ++c) {
                    const double q = std::clamp(v[(c * h + y) * w + x], 0.0, 1.0) * 255.0;
                    raster[(y * w + x) * 3 + c] = static_cast<unsigned char>(std::llround(q));
                }
            }
        }
        out.write(reinterpret_cast<const char*>(raster.data()),
                  static_cast<std::streamsize>(raster.size()));
    }
    {
        std::ofstream out(fs::path(dir) / "masks" / (sample.id + ".pgm"), std::ios::binary);
        out << "P5\n" << w << " " << h << "\n255\n";
        const auto& v = sample.mask.values();
        std::vector<unsigned char> raster(static_cast<std::size_t>(h * w));
        for (std::int64_t i = 0; i < h * w; ++i) raster[i] = v[i] >= 0.5 ? 255 : 0;
        out.write(reinterpret_cast<const char*>(raster.data()),
                  static_cast<std::streamsize>(raster.size()));
    }
}

std::vector<Sample> load_dataset(const std::string& dir, std::int64_t target_h,
                                 std::int64_t target_w) {
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw FormatError(dir + ": missing manifest.txt");
    std::vector<Sample> samples;
    std::string id;
    while (std::getline(manifest, id)) {
        if (id.empty()) continue;
        samples.push_back(load_netpbm((fs::path(dir) / "images" / (id + ".ppm")).string(),
                                      (fs::path(dir) / "masks" / (id + ".pgm")).string(),
                                      target_h, target_w));
        samples.back().id = id;
    }
    if (samples.empty()) throw ConfigError(dir + ": manifest lists no samples");
    return samples;
}

void save_dataset(const std::vector<Sample>& samples, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    for (const auto& s : samples) {
        save_netpbm(s, dir);
        manifest << s.id << "\n";
    }
}

AugmentDraw draw_augment(Rng& rng) {
    AugmentDraw d;
    d.hflip = rng.uniform() < 0.5;
    d.vflip = rng.uniform() < 0.5;
    d.zoom = rng.uniform(0.9, 1.1);
    d.shift_x = rng.uniform(-0.1, 0.1);
    d.shift_y = rng.uniform(-0.1, 0.1);
    d.rot_deg = rng.uniform(-15.0, 15.0);
    return d;
}

Sample apply_augment(const Sample& s, const AugmentDraw& draw) {
    const std::int64_t h = s.image.dim(1), w = s.image.dim(2);
    const double cx = static_cast<double>(w - 1) / 2.0;
    const double cy = static_cast<double>(h - 1) / 2.0;
    const double theta = draw.rot_deg * std::numbers::pi / 180.0;
    const double cos_t = std::cos(-theta), sin_t = std::sin(-theta);

    // inverse map: undo shift, rotation, zoom, then flips
    auto source_of = [&](std::int64_t ox, std::int64_t oy, double& ix, double& iy) {
        const double u = static_cast<double>(ox) - cx - draw.shift_x * static_cast<double>(w);
        const double v = static_cast<double>(oy) - cy - draw.shift_y * static_cast<double>(h);
        const double a = (cos_t * u - sin_t * v) / draw.zoom;
        const double b = (sin_t * u + cos_t * v) / draw.zoom;
        ix = draw.hflip ? cx - a : cx + a;
        iy = draw.vflip ? cy - b : cy + b;
    };

    const auto& img = s.image.values();
    const auto& msk = s.mask.values();
    std::vector<double> out_img(img.size());
    std::vector<double> out_msk(msk.size());
    for (std::int64_t oy = 0; oy < h; ++oy) {
        for (std::int64_t ox = 0; ox < w; ++ox) {
            double ix, iy;
            source_of(ox, oy, ix, iy);

            // image: bilinear, edge clamp
            const double sx = std::clamp(ix, 0.0, static_cast<double>(w - 1));
            const double sy = std::clamp(iy, 0.0, static_cast<double>(h - 1));
            const auto x0 = static_cast<std::int64_t>(std::floor(sx));
            const auto y0 = static_cast<std::int64_t>(std::floor(sy));
            const std::int64_t x1 = std::min(x0 + 1, w - 1);
            const std::int64_t y1 = std::min(y0 + 1, h - 1);
            const double fx = sx - static_cast<double>(x0);
            const double fy = sy - static_cast<double>(y0);
            for (std::int64_t c = 0; c < 3; ++c) {
                const double* plane = img.data() + c * h * w;
                const double top = plane[y0 * w + x0] * (1 - fx) + plane[y0 * w + x1] * fx;
                const double bot = plane[y1 * w + x0] * (1 - fx) + plane[y1 * w + x1] * fx;
                out_img[(c * h + oy) * w + ox] = top * (1 - fy) + bot * fy;
            }

            // mask: nearest, zero outside the frame, re-binarized
            const auto nx = static_cast<std::int64_t>(std::llround(ix));
            const auto ny = static_cast<std::int64_t>(std::llround(iy));
            double mv = 0.0;
            if (nx >= 0 && nx < w && ny >= 0 && ny < h) mv = msk[ny * w + nx];
            out_msk[oy * w + ox] = mv >= 0.5 ? 1.0 : 0.0;
        }
    }

    Sample out;
    out.id = s.id;
    out.image = Tensor(s.image.shape(), std::move(out_img));
    out.mask = Tensor(s.mask.shape(), std::move(out_msk));
    return out;
}

Sample augment_sample(const Sample& s, std::uint64_t seed) {
    Rng rng(seed);
    return apply_augment(s, draw_augment(rng));
}

Splits split_dataset(std::vector<Sample> samples, double f_train, double f_val, double f_test,
                     std::uint64_t seed) {
    if (f_train < 0 || f_val < 0 || f_test < 0 ||
        std::fabs(f_train + f_val + f_test - 1.0) > 1e-9) {
        throw ConfigError("split_dataset: fractions must be non-negative and sum to 1");
    }
    Rng rng(Rng::mix(seed, 0x5B17));
    const auto n = static_cast<std::int64_t>(samples.size());
    for (std::int64_t i = n - 1; i > 0; --i) {
        std::swap(samples[i], samples[rng.uniform_int(0, i)]);
    }
    auto n_train = std::llround(f_train * static_cast<double>(n));
    auto n_val = std::llround(f_val * static_cast<double>(n));
    n_train = std::min<long long>(n_train, n);
    n_val = std::min<long long>(n_val, n - n_train);

    Splits out;
    out.train.assign(samples.begin(), samples.begin() + n_train);
    out.val.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
    out.test.assign(samples.begin() + n_train + n_val, samples.end());
    return out;
}

}  // namespace dcr
