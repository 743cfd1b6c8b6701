#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "network.hpp"

namespace p3m {

// Flat key = value configuration ('#' comments). Unknown keys are rejected.
// Canonical serialization (sorted keys) backs the config hash stored in
// checkpoints and logs.
class Config {
public:
    static Config defaults();
    static Config load(const std::string& path);           // defaults + file
    void apply_override(const std::string& key_eq_value);  // "key=value"
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    std::string get_string(const std::string& key) const;
    int get_int(const std::string& key) const;
    int64_t get_int64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    std::string canonical() const;
    uint64_t hash() const;  // FNV-1a over the canonical text

    net::P3MNetConfig net_config() const;

private:
    std::map<std::string, std::string> kv_;
    static void check_known(const std::string& key);
};

struct TrainConfig {
    std::vector<int> crop_choices{512, 768, 1024};
    int target_size = 512;
    double flip_prob = 0.5;
    double learning_rate = 1e-5;
    int batch_size = 8;
    int epochs = 150;
    uint64_t seed = 0;
    double weight_decay = 0.0;
    int log_every = 1;
    int checkpoint_every = 1;  // epochs
};

TrainConfig train_config_from(const Config& cfg);

}  // namespace p3m
