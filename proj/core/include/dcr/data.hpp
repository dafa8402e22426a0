#pragma once

#include <string>
#include <vector>

#include "dcr/rng.hpp"
#include "dcr/tensor.hpp"

namespace dcr {

struct Sample {
    Tensor image;  // [3 x H x W], values in [0,1]
    Tensor mask;   // [1 x H x W], strictly binary
    std::string id;
};

struct SynthConfig {
    std::int64_t count = 300;
    std::int64_t height = 64;
    std::int64_t width = 64;
    int prototypes = 6;  // shared contour templates
    int min_blobs = 1;
    int max_blobs = 3;
    double scale_min = 0.18;  // blob diameter as a fraction of min(H,W)
    double scale_max = 0.4;
    double blur_sigma = 1.5;  // boundary softness in pixels
    double brightness_min = 0.75;
    double brightness_max = 1.25;
    double color_jitter = 0.12;
    bool shared_prototypes = true;  // false = independent contour per blob
    std::uint64_t seed = 0;
};

// Polyp-like blobs with contours drawn from a shared prototype library,
// composited on textured backgrounds. Fully determined by the seed.
std::vector<Sample> synth_generate(const SynthConfig& cfg);

// Reads a binary P6 image and binary P5 mask (maxval 255), rescales the
// image to [0,1], binarizes the mask at 128, and resizes both to the target
// size (bilinear image, nearest mask). target <= 0 keeps the native size.
Sample load_netpbm(const std::string& image_path, const std::string& mask_path,
                   std::int64_t target_h = -1, std::int64_t target_w = -1);

// Writes images/<id>.ppm and masks/<id>.pgm under `dir`.
void save_netpbm(const Sample& sample, const std::string& dir);

// Dataset directory layout: images/<id>.ppm, masks/<id>.pgm, manifest file
// listing ids one per line.
std::vector<Sample> load_dataset(const std::string& dir, std::int64_t target_h,
                                 std::int64_t target_w);
void save_dataset(const std::vector<Sample>& samples, const std::string& dir);

struct AugmentDraw {
    bool hflip = false;
    bool vflip = false;
    double zoom = 1.0;
    double shift_x = 0.0;  // fraction of width
    double shift_y = 0.0;
    double rot_deg = 0.0;
};

AugmentDraw draw_augment(Rng& rng);
// Same geometric transform on image (bilinear, edge clamp) and mask
// (nearest, zero fill, re-binarized).
Sample apply_augment(const Sample& s, const AugmentDraw& draw);
Sample augment_sample(const Sample& s, std::uint64_t seed);

struct Splits {
    std::vector<Sample> train, val, test;
};

// Seeded shuffle then partition; disjoint and exhaustive.
Splits split_dataset(std::vector<Sample> samples, double f_train, double f_val, double f_test,
                     std::uint64_t seed);

}  // namespace dcr
