#include "iarn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace iarn {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

int64_t parse_int(const std::string& key, const std::string& value) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
    return v;
}

uint64_t parse_uint(const std::string& key, const std::string& value) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError("key '" + key + "': cannot parse '" + value + "' as an integer");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "': cannot parse '" + value + "' as a boolean");
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
    TrainConfig cfg = base;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");

        if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "patch_size") cfg.patch_size = static_cast<int>(parse_int(key, value));
        else if (key == "iterations") cfg.iterations = parse_int(key, value);
        else if (key == "base_lr") cfg.base_lr = parse_double(key, value);
        else if (key == "lr_halving_period") cfg.lr_halving_period = parse_int(key, value);
        else if (key == "scale_min") cfg.scale_min = parse_double(key, value);
        else if (key == "scale_max") cfg.scale_max = parse_double(key, value);
        else if (key == "asymmetric") cfg.asymmetric = parse_bool(key, value);
        else if (key == "seed") cfg.seed = parse_uint(key, value);
        else if (key == "hflip") cfg.hflip = parse_bool(key, value);
        else if (key == "zhat_gaussian") cfg.zhat_gaussian = parse_bool(key, value);
        else if (key == "grad_clip") cfg.grad_clip = parse_double(key, value);
        else if (key == "min_lr_side") cfg.min_lr_side = static_cast<int>(parse_int(key, value));
        else if (key == "channel_split") cfg.channel_split = parse_bool(key, value);
        else if (key == "method") cfg.method = resample_method_from_string(value);
        else if (key == "weight_r") cfg.loss.r = parse_double(key, value);
        else if (key == "weight_g") cfg.loss.g = parse_double(key, value);
        else if (key == "weight_d") cfg.loss.d = parse_double(key, value);
        else if (key == "weight_i") cfg.loss.i = parse_double(key, value);
        else if (key == "num_blocks")
            cfg.backbone.num_blocks = static_cast<int>(parse_int(key, value));
        else if (key == "atrous_layers")
            cfg.backbone.atrous_layers = static_cast<int>(parse_int(key, value));
        else if (key == "feature_width")
            cfg.backbone.feature_width = static_cast<int>(parse_int(key, value));
        else if (key == "clamp_amplitude")
            cfg.backbone.clamp_amplitude = parse_double(key, value);
        else if (key == "use_atrous") cfg.backbone.use_atrous = parse_bool(key, value);
        else if (key == "encoding_mode")
            cfg.backbone.encoding_mode = encoding_mode_from_string(value);
        else if (key == "channels")
            cfg.backbone.channels = static_cast<int>(parse_int(key, value));
        else
            throw ConfigError("unknown key '" + key + "'");
    }
    return cfg;
}

TrainConfig load_train_config(const std::string& path, TrainConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str(), base);
}

std::string serialize_train_config(const TrainConfig& cfg) {
    std::ostringstream os;
    os << "batch_size = " << cfg.batch_size << '\n';
    os << "patch_size = " << cfg.patch_size << '\n';
    os << "iterations = " << cfg.iterations << '\n';
    os << "base_lr = " << format_double(cfg.base_lr) << '\n';
    os << "lr_halving_period = " << cfg.lr_halving_period << '\n';
    os << "scale_min = " << format_double(cfg.scale_min) << '\n';
    os << "scale_max = " << format_double(cfg.scale_max) << '\n';
    os << "asymmetric = " << (cfg.asymmetric ? "true" : "false") << '\n';
    os << "seed = " << cfg.seed << '\n';
    os << "hflip = " << (cfg.hflip ? "true" : "false") << '\n';
    os << "zhat_gaussian = " << (cfg.zhat_gaussian ? "true" : "false") << '\n';
    os << "grad_clip = " << format_double(cfg.grad_clip) << '\n';
    os << "min_lr_side = " << cfg.min_lr_side << '\n';
    os << "channel_split = " << (cfg.channel_split ? "true" : "false") << '\n';
    os << "method = " << to_string(cfg.method) << '\n';
    os << "weight_r = " << format_double(cfg.loss.r) << '\n';
    os << "weight_g = " << format_double(cfg.loss.g) << '\n';
    os << "weight_d = " << format_double(cfg.loss.d) << '\n';
    os << "weight_i = " << format_double(cfg.loss.i) << '\n';
    os << "num_blocks = " << cfg.backbone.num_blocks << '\n';
    os << "atrous_layers = " << cfg.backbone.atrous_layers << '\n';
    os << "feature_width = " << cfg.backbone.feature_width << '\n';
    os << "clamp_amplitude = " << format_double(cfg.backbone.clamp_amplitude) << '\n';
    os << "use_atrous = " << (cfg.backbone.use_atrous ? "true" : "false") << '\n';
    os << "encoding_mode = " << to_string(cfg.backbone.encoding_mode) << '\n';
    os << "channels = " << cfg.backbone.channels << '\n';
    return os.str();
}

namespace {

double parse_scale_number(const std::string& s) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        if (!(v > 0.0) || !std::isfinite(v))
            throw UsageError("scale factor must be positive, got '" + s + "'");
        return v;
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("malformed scale '" + s + "'");
    }
}

}  // namespace

ScalePair parse_scale(const std::string& arg) {
    size_t x = arg.find('x');
    if (x == std::string::npos) {
        double v = parse_scale_number(arg);
        return {v, v};
    }
    double h = parse_scale_number(arg.substr(0, x));
    double v = parse_scale_number(arg.substr(x + 1));
    return {h, v};
}

std::vector<ScalePair> parse_scale_list(const std::string& arg) {
    std::vector<ScalePair> out;
    std::istringstream in(arg);
    std::string piece;
    while (std::getline(in, piece, ',')) {
        piece = trim(piece);
        if (piece.empty()) throw UsageError("empty entry in scale list '" + arg + "'");
        size_t c1 = piece.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_scale(piece));
            continue;
        }
        size_t c2 = piece.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw UsageError("sweep must be lo:hi:step, got '" + piece + "'");
        double lo = parse_scale_number(piece.substr(0, c1));
        double hi = parse_scale_number(piece.substr(c1 + 1, c2 - c1 - 1));
        double step = parse_scale_number(piece.substr(c2 + 1));
        if (hi < lo) throw UsageError("sweep hi < lo in '" + piece + "'");
        int64_t count = static_cast<int64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (int64_t k = 0; k < count; ++k) {
            double v = lo + static_cast<double>(k) * step;
            out.push_back({v, v});
        }
    }
    if (out.empty()) throw UsageError("empty scale list");
    return out;
}

}  // namespace iarn
