#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace p3m {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "net.base_channels", "net.encoder_blocks", "net.dilation_radius",
        "net.use_tfi",       "net.use_sbfi",       "net.use_dbfi",
        "train.crop_choices", "train.target_size",  "train.flip_prob",
        "train.learning_rate", "train.batch_size",  "train.epochs",
        "train.seed",         "train.weight_decay", "train.log_every",
        "train.checkpoint_every",
        "metrics.connectivity",
    };
    return keys;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void Config::check_known(const std::string& key) {
    if (!known_keys().count(key))
        fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

Config Config::defaults() {
    Config c;
    c.kv_["net.base_channels"] = "64";
    c.kv_["net.encoder_blocks"] = "3,4,6,3";
    c.kv_["net.dilation_radius"] = "25";
    c.kv_["net.use_tfi"] = "true";
    c.kv_["net.use_sbfi"] = "true";
    c.kv_["net.use_dbfi"] = "true";
    c.kv_["train.crop_choices"] = "512,768,1024";
    c.kv_["train.target_size"] = "512";
    c.kv_["train.flip_prob"] = "0.5";
    c.kv_["train.learning_rate"] = "1e-05";
    c.kv_["train.batch_size"] = "8";
    c.kv_["train.epochs"] = "150";
    c.kv_["train.seed"] = "0";
    c.kv_["train.weight_decay"] = "0";
    c.kv_["train.log_every"] = "1";
    c.kv_["train.checkpoint_every"] = "1";
    c.kv_["metrics.connectivity"] = "4";
    return c;
}

Config Config::load(const std::string& path) {
    Config c = defaults();
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::InvalidArgument,
                 path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

void Config::apply_override(const std::string& key_eq_value) {
    auto eq = key_eq_value.find('=');
    if (eq == std::string::npos)
        fail(ErrorCode::InvalidArgument, "override must look like key=value");
    set(trim(key_eq_value.substr(0, eq)), trim(key_eq_value.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    check_known(key);
    kv_[key] = value;
}

std::string Config::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) fail(ErrorCode::InvalidArgument, "missing config key '" + key + "'");
    return it->second;
}

int Config::get_int(const std::string& key) const {
    return static_cast<int>(get_int64(key));
}

int64_t Config::get_int64(const std::string& key) const {
    std::string v = get_string(key);
    try {
        size_t pos = 0;
        int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "config key '" + key + "' is not an integer: " + v);
    }
}

double Config::get_double(const std::string& key) const {
    std::string v = get_string(key);
    try {
        size_t pos = 0;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "config key '" + key + "' is not a number: " + v);
    }
}

bool Config::get_bool(const std::string& key) const {
    std::string v = get_string(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::InvalidArgument, "config key '" + key + "' is not a boolean: " + v);
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    std::string v = get_string(key);
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "config key '" + key + "' has a bad list entry: " + item);
        }
    }
    if (out.empty()) fail(ErrorCode::InvalidArgument, "config key '" + key + "' is an empty list");
    return out;
}

std::string Config::canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
    return os.str();
}

uint64_t Config::hash() const {
    // FNV-1a 64
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

net::P3MNetConfig Config::net_config() const {
    net::P3MNetConfig nc;
    nc.base_channels = get_int("net.base_channels");
    std::vector<int> blocks = get_int_list("net.encoder_blocks");
    if (blocks.size() != 4)
        fail(ErrorCode::InvalidArgument, "net.encoder_blocks must have 4 entries");
    std::copy(blocks.begin(), blocks.end(), nc.encoder_blocks.begin());
    nc.dilation_radius = get_int("net.dilation_radius");
    nc.use_tfi = get_bool("net.use_tfi");
    nc.use_sbfi = get_bool("net.use_sbfi");
    nc.use_dbfi = get_bool("net.use_dbfi");
    nc.validate();
    return nc;
}

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig t;
    t.crop_choices = cfg.get_int_list("train.crop_choices");
    t.target_size = cfg.get_int("train.target_size");
    t.flip_prob = cfg.get_double("train.flip_prob");
    t.learning_rate = cfg.get_double("train.learning_rate");
    t.batch_size = cfg.get_int("train.batch_size");
    t.epochs = cfg.get_int("train.epochs");
    t.seed = static_cast<uint64_t>(cfg.get_int64("train.seed"));
    t.weight_decay = cfg.get_double("train.weight_decay");
    t.log_every = cfg.get_int("train.log_every");
    t.checkpoint_every = cfg.get_int("train.checkpoint_every");
    if (t.target_size % 32 != 0)
        fail(ErrorCode::InvalidArgument, "train.target_size must be divisible by 32");
    if (t.batch_size < 1 || t.epochs < 0 || t.log_every < 1 || t.checkpoint_every < 1)
        fail(ErrorCode::InvalidArgument, "train config values out of range");
    for (int c : t.crop_choices)
        if (c < 1) fail(ErrorCode::InvalidArgument, "train.crop_choices must be positive");
    return t;
}

}  // namespace p3m
