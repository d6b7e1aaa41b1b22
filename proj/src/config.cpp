#include "v2v/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "v2v/io.hpp"

namespace v2v {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ContractError("invalid number for " + key + ": " + v);
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ContractError("invalid integer for " + key + ": " + v);
    return out;
}

std::size_t parse_count(const std::string& key, const std::string& v, std::size_t min_value) {
    const std::uint64_t out = parse_u64(key, v);
    if (out < min_value)
        throw ContractError(key + " must be at least " + std::to_string(min_value));
    return static_cast<std::size_t>(out);
}

bool parse_on_off(const std::string& key, const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw ContractError(key + " must be 'on' or 'off', got: " + v);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t comma = v.find(',', start);
        if (comma == std::string::npos) comma = v.size();
        const std::string item = trim(v.substr(start, comma - start));
        if (item.empty()) throw ContractError("empty entry in " + key);
        out.push_back(parse_double(key, item));
        if (comma == v.size()) break;
        start = comma + 1;
    }
    if (out.empty()) throw ContractError(key + " must be a nonempty list");
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

} // namespace

void RunConfig::apply_profile(const std::string& profile) {
    if (profile == "desk") {
        sample_rate_ = 8000;
        fft_size_ = 256;
        hidden_ = {128, 128};
        n_train_ = 200;
        n_test_ = 40;
        duration_s_ = 1.0;
    } else if (profile == "paper") {
        sample_rate_ = 16000;
        fft_size_ = 512;
        hidden_ = {800, 800, 800, 800, 800, 1600};
        n_train_ = 1000;
        n_test_ = 100;
        duration_s_ = 2.0;
    } else {
        throw ContractError("unknown profile: " + profile + " (expected desk or paper)");
    }
    profile_ = profile;
}

RunConfig RunConfig::defaults(const std::string& profile) {
    RunConfig cfg;
    cfg.apply_profile(profile);
    return cfg;
}

RunConfig RunConfig::from_text(const std::string& text) {
    // Two passes so stft.profile applies its defaults before other keys
    // override them, regardless of line order.
    std::string profile = "desk";
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = trim(text.substr(start, end - start));
        if (!line.empty() && line[0] != '#') {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ContractError("config line is not key = value: " + line);
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ContractError("empty config key in line: " + line);
            if (key == "stft.profile")
                profile = value;
            else
                pairs.emplace_back(key, value);
        }
        if (end == text.size()) break;
        start = end + 1;
    }

    RunConfig cfg = defaults(profile);
    for (const auto& [key, value] : pairs) cfg.set(key, value);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_text(read_file(path));
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "stft.profile") {
        apply_profile(value);
    } else if (key == "train.loss") {
        train_loss_ = loss_kind_from_string(value);
    } else if (key == "train.lr") {
        lr_ = parse_double(key, value);
        if (lr_ <= 0.0) throw ContractError("train.lr must be positive");
    } else if (key == "train.momentum") {
        momentum_ = parse_double(key, value);
        if (momentum_ < 0.0 || momentum_ >= 1.0)
            throw ContractError("train.momentum must be in [0,1)");
    } else if (key == "train.max_epochs") {
        max_epochs_ = parse_count(key, value, 1);
    } else if (key == "train.batch") {
        batch_ = parse_count(key, value, 1);
    } else if (key == "train.seed") {
        train_seed_ = parse_u64(key, value);
    } else if (key == "train.patience") {
        patience_ = parse_count(key, value, 1);
    } else if (key == "train.weight_decay") {
        weight_decay_ = parse_double(key, value);
        if (weight_decay_ < 0.0) throw ContractError("train.weight_decay cannot be negative");
    } else if (key == "train.lr_decay") {
        lr_decay_ = parse_double(key, value);
        if (lr_decay_ <= 0.0 || lr_decay_ > 1.0)
            throw ContractError("train.lr_decay must be in (0,1]");
    } else if (key == "train.val_fraction") {
        val_fraction_ = parse_double(key, value);
        if (val_fraction_ <= 0.0 || val_fraction_ >= 1.0)
            throw ContractError("train.val_fraction must be in (0,1)");
    } else if (key == "data.seed") {
        data_seed_ = parse_u64(key, value);
    } else if (key == "data.n_train") {
        n_train_ = parse_count(key, value, 1);
    } else if (key == "data.n_test") {
        n_test_ = parse_count(key, value, 1);
    } else if (key == "data.snr_list") {
        snr_train_ = parse_double_list(key, value);
    } else if (key == "data.snr_list_test") {
        snr_test_ = parse_double_list(key, value);
    } else if (key == "data.duration_s") {
        duration_s_ = parse_double(key, value);
        if (duration_s_ < 0.5) throw ContractError("data.duration_s must be >= 0.5");
    } else if (key == "data.noise_kinds") {
        std::vector<NoiseKind> kinds;
        std::size_t begin = 0;
        while (begin <= value.size()) {
            std::size_t comma = value.find(',', begin);
            if (comma == std::string::npos) comma = value.size();
            const std::string item = trim(value.substr(begin, comma - begin));
            if (item.empty() || item == "file")
                throw ContractError("data.noise_kinds entries must be white|pink|babble");
            kinds.push_back(noise_kind_from_string(item));
            if (comma == value.size()) break;
            begin = comma + 1;
        }
        if (kinds.empty()) throw ContractError("data.noise_kinds must be nonempty");
        noise_kinds_ = std::move(kinds);
    } else if (key == "features.context") {
        context_ = parse_count(key, value, 1);
        if (context_ % 2 == 0) throw ContractError("features.context must be odd");
    } else if (key == "features.nat") {
        nat_ = parse_on_off(key, value);
    } else if (key == "features.nat_lead") {
        nat_lead_ = parse_count(key, value, 1);
    } else if (key == "features.norm") {
        if (value == "global")
            norm_ = NormMode::Global;
        else if (value == "per_utt")
            norm_ = NormMode::PerUtterance;
        else
            throw ContractError("features.norm must be 'global' or 'per_utt'");
    } else if (key == "enhance.gv") {
        gv_ = parse_on_off(key, value);
    } else if (key == "alpha.source") {
        if (value == "target_std")
            alpha_target_std_ = true;
        else if (value == "unit")
            alpha_target_std_ = false;
        else
            throw ContractError("alpha.source must be 'target_std' or 'unit'");
    } else if (key == "verify.trials") {
        verify_trials_ = parse_count(key, value, 1);
    } else if (key == "verify.draws") {
        verify_draws_ = parse_count(key, value, 1);
    } else if (key == "verify.instances") {
        verify_instances_ = parse_count(key, value, 1);
    } else if (key == "verify.pairs") {
        verify_pairs_ = parse_count(key, value, 1);
    } else if (key == "verify.train_utts") {
        verify_train_utts_ = parse_count(key, value, 4);
    } else if (key == "verify.train_epochs") {
        verify_train_epochs_ = parse_count(key, value, 1);
    } else {
        throw ContractError("unknown config key: " + key);
    }
}

std::vector<std::string> RunConfig::keys() {
    return {
        "alpha.source",     "data.duration_s",     "data.n_test",
        "data.n_train",     "data.noise_kinds",    "data.seed",
        "data.snr_list",    "data.snr_list_test",  "enhance.gv",
        "features.context", "features.nat",        "features.nat_lead",
        "features.norm",    "stft.profile",        "train.batch",
        "train.loss",       "train.lr",            "train.lr_decay",
        "train.max_epochs", "train.momentum",      "train.patience",
        "train.seed",       "train.val_fraction",  "train.weight_decay",
        "verify.draws",     "verify.instances",    "verify.pairs",
        "verify.train_epochs", "verify.train_utts", "verify.trials",
    };
}

std::string RunConfig::get(const std::string& key) const {
    if (key == "stft.profile") return profile_;
    if (key == "train.loss") return to_string(train_loss_);
    if (key == "train.lr") return format_double(lr_);
    if (key == "train.lr_decay") return format_double(lr_decay_);
    if (key == "train.momentum") return format_double(momentum_);
    if (key == "train.max_epochs") return std::to_string(max_epochs_);
    if (key == "train.batch") return std::to_string(batch_);
    if (key == "train.seed") return std::to_string(train_seed_);
    if (key == "train.patience") return std::to_string(patience_);
    if (key == "train.val_fraction") return format_double(val_fraction_);
    if (key == "train.weight_decay") return format_double(weight_decay_);
    if (key == "data.seed") return std::to_string(data_seed_);
    if (key == "data.n_train") return std::to_string(n_train_);
    if (key == "data.n_test") return std::to_string(n_test_);
    if (key == "data.snr_list") return join_doubles(snr_train_);
    if (key == "data.snr_list_test") return join_doubles(snr_test_);
    if (key == "data.duration_s") return format_double(duration_s_);
    if (key == "data.noise_kinds") {
        std::string out;
        for (std::size_t i = 0; i < noise_kinds_.size(); ++i) {
            if (i) out += ',';
            out += to_string(noise_kinds_[i]);
        }
        return out;
    }
    if (key == "features.context") return std::to_string(context_);
    if (key == "features.nat") return nat_ ? "on" : "off";
    if (key == "features.nat_lead") return std::to_string(nat_lead_);
    if (key == "features.norm") return norm_ == NormMode::Global ? "global" : "per_utt";
    if (key == "enhance.gv") return gv_ ? "on" : "off";
    if (key == "alpha.source") return alpha_target_std_ ? "target_std" : "unit";
    if (key == "verify.trials") return std::to_string(verify_trials_);
    if (key == "verify.draws") return std::to_string(verify_draws_);
    if (key == "verify.instances") return std::to_string(verify_instances_);
    if (key == "verify.pairs") return std::to_string(verify_pairs_);
    if (key == "verify.train_utts") return std::to_string(verify_train_utts_);
    if (key == "verify.train_epochs") return std::to_string(verify_train_epochs_);
    throw ContractError("unknown config key: " + key);
}

std::string RunConfig::echo() const {
    std::string out;
    for (const std::string& key : keys()) {
        out += key;
        out += " = ";
        out += get(key);
        out += '\n';
    }
    return out;
}

StftConfig RunConfig::stft() const {
    StftConfig cfg;
    cfg.sample_rate = sample_rate_;
    cfg.fft_size = fft_size_;
    cfg.hop = fft_size_ / 2;
    return cfg;
}

std::vector<LayerSpec> RunConfig::net_spec() const {
    std::vector<LayerSpec> spec;
    std::size_t in = input_dim();
    for (std::size_t h : hidden_) {
        spec.push_back({in, h, Activation::ReLU});
        in = h;
    }
    spec.push_back({in, bins(), Activation::Linear});
    return spec;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig t;
    t.loss = train_loss_;
    t.learning_rate = lr_;
    t.momentum = momentum_;
    t.max_epochs = max_epochs_;
    t.batch_size = batch_;
    t.validation_fraction = val_fraction_;
    t.patience = patience_;
    t.weight_decay = weight_decay_;
    t.lr_decay = lr_decay_;
    t.seed = train_seed_;
    return t;
}

void RunConfig::override_seed(std::uint64_t seed) {
    train_seed_ = seed;
    data_seed_ = seed;
}

} // namespace v2v
