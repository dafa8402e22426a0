#pragma once

#include <map>
#include <string>

#include "dcr/data.hpp"
#include "dcr/network.hpp"

namespace dcr {

struct RunConfig {
    std::string dataset_dir;  // empty -> generate synthetic data
    SynthConfig synth;
    double f_train = 2.0 / 3.0;
    double f_val = 1.0 / 6.0;
    double f_test = 1.0 / 6.0;
    bool augment = true;

    NetworkConfig net;
    std::int64_t batch_size = 4;
    double learning_rate = 1e-4;
    std::int64_t epochs = 150;
    int ablate_seeds = 3;

    std::uint64_t seed = 0;
    std::string out_dir = "runs/default";
    std::string checkpoint_path;

    void validate() const;
};

// key=value lines, '#' comments, dotted section keys. Later duplicates win.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Unknown keys and malformed values raise ConfigError.
void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv);

RunConfig load_run_config(const std::string& path);

}  // namespace dcr
