#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dcr/data.hpp"

using namespace dcr;
namespace fs = std::filesystem;

namespace {

SynthConfig tiny_synth(std::uint64_t seed, std::int64_t count = 6) {
    SynthConfig cfg;
    cfg.count = count;
    cfg.height = 32;
    cfg.width = 32;
    cfg.seed = seed;
    return cfg;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dcr_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

double mask_fg_fraction(const Tensor& mask) {
    double s = 0.0;
    for (std::int64_t i = 0; i < mask.size(); ++i) s += mask.at(i);
    return s / static_cast<double>(mask.size());
}

}  // namespace

TEST_CASE("synthetic generation is a pure function of the seed") {
    const auto a = synth_generate(tiny_synth(7));
    const auto b = synth_generate(tiny_synth(7));
    const auto c = synth_generate(tiny_synth(8));
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].image.values() == b[i].image.values());
        CHECK(a[i].mask.values() == b[i].mask.values());
    }
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].image.values() != c[i].image.values()) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("synthetic samples satisfy the data contract") {
    const auto samples = synth_generate(tiny_synth(3, 12));
    std::set<std::string> ids;
    for (const auto& s : samples) {
        CHECK(s.image.shape() == Shape{3, 32, 32});
        CHECK(s.mask.shape() == Shape{1, 32, 32});
        CHECK(ids.insert(s.id).second);
        for (std::int64_t i = 0; i < s.image.size(); ++i) {
            CHECK(s.image.at(i) >= 0.0);
            CHECK(s.image.at(i) <= 1.0);
        }
        for (std::int64_t i = 0; i < s.mask.size(); ++i) {
            const double v = s.mask.at(i);
            CHECK((v == 0.0 || v == 1.0));
        }
        // every sample has at least one blob, so some foreground must exist,
        // and blobs are bounded so the mask can never cover everything
        const double fg = mask_fg_fraction(s.mask);
        CHECK(fg > 0.0);
        CHECK(fg < 0.9);
    }
}

TEST_CASE("single shared prototype yields related contours across samples") {
    SynthConfig cfg = tiny_synth(11, 8);
    cfg.prototypes = 1;
    cfg.min_blobs = 1;
    cfg.max_blobs = 1;
    const auto samples = synth_generate(cfg);
    for (const auto& s : samples) CHECK(mask_fg_fraction(s.mask) > 0.0);
    // independent-prototype mode must still work
    cfg.shared_prototypes = false;
    CHECK(synth_generate(cfg).size() == 8);
}

TEST_CASE("netpbm round trip preserves image and mask") {
    TempDir dir;
    const auto samples = synth_generate(tiny_synth(21, 2));
    save_dataset(samples, dir.path.string());
    const auto loaded = load_dataset(dir.path.string(), 32, 32);
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].id == samples[i].id);
        CHECK(loaded[i].mask.values() == samples[i].mask.values());
        // image went through 8-bit quantization: half-step tolerance
        for (std::int64_t j = 0; j < samples[i].image.size(); ++j) {
            CHECK(std::fabs(loaded[i].image.at(j) - samples[i].image.at(j)) <= 0.5 / 255.0 + 1e-9);
        }
    }
}

TEST_CASE("mask binarization threshold sits exactly at 128") {
    TempDir dir;
    fs::create_directories(dir.path / "images");
    fs::create_directories(dir.path / "masks");
    {
        std::ofstream img(dir.path / "images" / "t.ppm", std::ios::binary);
        img << "P6\n2 1\n255\n";
        const unsigned char px[6] = {10, 20, 30, 40, 50, 60};
        img.write(reinterpret_cast<const char*>(px), 6);
        std::ofstream msk(dir.path / "masks" / "t.pgm", std::ios::binary);
        msk << "P5\n2 1\n255\n";
        const unsigned char mv[2] = {127, 128};
        msk.write(reinterpret_cast<const char*>(mv), 2);
    }
    const Sample s = load_netpbm((dir.path / "images" / "t.ppm").string(),
                                 (dir.path / "masks" / "t.pgm").string());
    CHECK(s.mask.at(0) == 0.0);
    CHECK(s.mask.at(1) == 1.0);
    // planar layout: channel 0 holds the two red bytes
    CHECK(s.image.at(0) == doctest::Approx(10.0 / 255.0).epsilon(1e-9));
    CHECK(s.image.at(1) == doctest::Approx(40.0 / 255.0).epsilon(1e-9));
}

TEST_CASE("parser rejects malformed files with positioned errors") {
    TempDir dir;
    auto write_file = [&](const std::string& name, const std::string& bytes) {
        std::ofstream f(dir.path / name, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        return (dir.path / name).string();
    };
    const std::string good_mask = write_file("m.pgm", std::string("P5\n1 1\n255\n") + char(200));

    // wrong magic
    const std::string bad_magic = write_file("a.ppm", "P3\n1 1\n255\n0 0 0\n");
    CHECK_THROWS_AS(load_netpbm(bad_magic, good_mask), FormatError);
    // unsupported maxval
    const std::string bad_maxval =
        write_file("b.ppm", std::string("P6\n1 1\n65535\n") + std::string(6, '\0'));
    CHECK_THROWS_AS(load_netpbm(bad_maxval, good_mask), FormatError);
    // truncated payload
    const std::string truncated = write_file("c.ppm", std::string("P6\n2 2\n255\n") + "abc");
    CHECK_THROWS_AS(load_netpbm(truncated, good_mask), FormatError);
    // image/mask size mismatch
    const std::string img_2x1 =
        write_file("d.ppm", std::string("P6\n2 1\n255\n") + std::string(6, '\x40'));
    const std::string mask_1x1 = good_mask;
    CHECK_THROWS_AS(load_netpbm(img_2x1, mask_1x1), ContractError);
    // missing file
    CHECK_THROWS_AS(load_netpbm((dir.path / "nope.ppm").string(), good_mask), FormatError);

    // error messages carry a byte offset
    try {
        load_netpbm(bad_magic, good_mask);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("identity augmentation leaves the sample bitwise unchanged") {
    const auto samples = synth_generate(tiny_synth(31, 1));
    AugmentDraw identity;  // defaults: no flip, zoom 1, no shift, no rotation
    const Sample out = apply_augment(samples[0], identity);
    CHECK(out.image.values() == samples[0].image.values());
    CHECK(out.mask.values() == samples[0].mask.values());
}

TEST_CASE("horizontal flip is an involution") {
    const auto samples = synth_generate(tiny_synth(32, 1));
    AugmentDraw flip;
    flip.hflip = true;
    const Sample once = apply_augment(samples[0], flip);
    const Sample twice = apply_augment(once, flip);
    bool changed = once.image.values() != samples[0].image.values();
    CHECK(changed);
    CHECK(twice.image.values() == samples[0].image.values());
    CHECK(twice.mask.values() == samples[0].mask.values());
}

TEST_CASE("masks stay strictly binary through arbitrary transforms") {
    const auto samples = synth_generate(tiny_synth(33, 2));
    Rng rng(99);
    for (int k = 0; k < 10; ++k) {
        const Sample out = apply_augment(samples[k % 2], draw_augment(rng));
        CHECK(out.image.shape() == samples[0].image.shape());
        CHECK(out.mask.shape() == samples[0].mask.shape());
        for (std::int64_t i = 0; i < out.mask.size(); ++i) {
            const double v = out.mask.at(i);
            CHECK((v == 0.0 || v == 1.0));
        }
        for (std::int64_t i = 0; i < out.image.size(); ++i) {
            CHECK(out.image.at(i) >= 0.0);
            CHECK(out.image.at(i) <= 1.0);
        }
    }
    // seeded convenience wrapper is deterministic
    const Sample a = augment_sample(samples[0], 123);
    const Sample b = augment_sample(samples[0], 123);
    CHECK(a.image.values() == b.image.values());
}

TEST_CASE("draw_augment respects the documented parameter ranges") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const AugmentDraw d = draw_augment(rng);
        CHECK(d.zoom >= 0.9);
        CHECK(d.zoom <= 1.1);
        CHECK(std::fabs(d.shift_x) <= 0.1);
        CHECK(std::fabs(d.shift_y) <= 0.1);
        CHECK(std::fabs(d.rot_deg) <= 15.0);
    }
}

TEST_CASE("split sizes, determinism, and partition property") {
    auto samples = synth_generate(tiny_synth(41, 20));
    const Splits s = split_dataset(samples, 0.6, 0.2, 0.2, 77);
    CHECK(s.train.size() == 12);
    CHECK(s.val.size() == 4);
    CHECK(s.test.size() == 4);

    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
        for (const auto& x : *part) CHECK(seen.insert(x.id).second);
    }
    CHECK(seen.size() == 20);

    const Splits s2 = split_dataset(samples, 0.6, 0.2, 0.2, 77);
    for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s.train[i].id == s2.train[i].id);
    const Splits s3 = split_dataset(samples, 0.6, 0.2, 0.2, 78);
    bool differs = false;
    for (std::size_t i = 0; i < s.train.size(); ++i) {
        if (s.train[i].id != s3.train[i].id) differs = true;
    }
    CHECK(differs);

    const Splits all = split_dataset(samples, 1.0, 0.0, 0.0, 1);
    CHECK(all.train.size() == 20);
    CHECK(all.val.empty());
    CHECK(all.test.empty());

    CHECK_THROWS_AS(split_dataset(samples, 0.5, 0.2, 0.2, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(samples, -0.2, 0.6, 0.6, 1), ConfigError);
}

TEST_CASE("desk-preset fractions 2/3, 1/6, 1/6 land on 200/50/50 of 300") {
    std::vector<Sample> samples(300);
    for (int i = 0; i < 300; ++i) {
        samples[i].image = Tensor({3, 1, 1}, {0.0, 0.0, 0.0});
        samples[i].mask = Tensor({1, 1, 1}, {0.0});
        samples[i].id = "s" + std::to_string(i);
    }
    const Splits s = split_dataset(samples, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 0);
    CHECK(s.train.size() == 200);
    CHECK(s.val.size() == 50);
    CHECK(s.test.size() == 50);
}
