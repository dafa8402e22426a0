#include "dcr/config.hpp"

#include <fstream>
#include <sstream>

#include "dcr/error.hpp"

namespace dcr {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    std::int64_t out;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) {
        throw ConfigError(key + ": expected integer, got '" + v + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) {
        throw ConfigError(key + ": expected number, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::array<std::int64_t, 4> parse_channels(const std::string& key, const std::string& v) {
    std::array<std::int64_t, 4> out{};
    std::stringstream ss(v);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 4) throw ConfigError(key + ": expected 4 comma-separated values");
        out[i++] = parse_int(key, trim(part));
    }
    if (i != 4) throw ConfigError(key + ": expected 4 comma-separated values");
    return out;
}

}  // namespace

void RunConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (ablate_seeds < 1) throw ConfigError("ablate.seeds must be >= 1");
    if (net.memory_capacity < 1) throw ConfigError("net.memory_capacity must be >= 1");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_config(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "data.dir") {
            cfg.dataset_dir = v;
        } else if (key == "data.count") {
            cfg.synth.count = parse_int(key, v);
        } else if (key == "data.height") {
            cfg.synth.height = parse_int(key, v);
            cfg.net.height = cfg.synth.height;
        } else if (key == "data.width") {
            cfg.synth.width = parse_int(key, v);
            cfg.net.width = cfg.synth.width;
        } else if (key == "data.seed") {
            cfg.synth.seed = static_cast<std::uint64_t>(parse_int(key, v));
        } else if (key == "data.prototypes") {
            cfg.synth.prototypes = static_cast<int>(parse_int(key, v));
        } else if (key == "data.shared_prototypes") {
            cfg.synth.shared_prototypes = parse_bool(key, v);
        } else if (key == "data.train_fraction") {
            cfg.f_train = parse_double(key, v);
        } else if (key == "data.val_fraction") {
            cfg.f_val = parse_double(key, v);
        } else if (key == "data.test_fraction") {
            cfg.f_test = parse_double(key, v);
        } else if (key == "data.augment") {
            cfg.augment = parse_bool(key, v);
        } else if (key == "net.stage_channels") {
            cfg.net.stage_channels = parse_channels(key, v);
        } else if (key == "net.memory_capacity") {
            cfg.net.memory_capacity = parse_int(key, v);
        } else if (key == "net.use_icr") {
            cfg.net.use_icr = parse_bool(key, v);
        } else if (key == "net.use_ecr") {
            cfg.net.use_ecr = parse_bool(key, v);
        } else if (key == "net.use_rom") {
            cfg.net.use_rom = parse_bool(key, v);
        } else if (key == "train.batch_size") {
            cfg.batch_size = parse_int(key, v);
        } else if (key == "train.learning_rate") {
            cfg.learning_rate = parse_double(key, v);
        } else if (key == "train.epochs") {
            cfg.epochs = parse_int(key, v);
        } else if (key == "ablate.seeds") {
            cfg.ablate_seeds = static_cast<int>(parse_int(key, v));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, v));
        } else if (key == "out") {
            cfg.out_dir = v;
        } else if (key == "checkpoint") {
            cfg.checkpoint_path = v;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config(cfg, parse_config_text(buf.str()));
    return cfg;
}

}  // namespace dcr
