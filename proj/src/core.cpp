#include "reactgen/core.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace reactgen {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(x);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

} // namespace

void Config::validate() const {
    auto bad = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
    if (D <= 0) bad("D must be positive");
    if (d <= 0) bad("d must be positive");
    if (d % 2 != 0) bad("d must be even (sin/cos positional pairing)");
    if (d_a <= 0) bad("d_a must be positive");
    if (d_z < 0) bad("d_z must be non-negative");
    if (w < 2) bad("w must be at least 2");
    if (k <= 0) bad("k must be positive");
    if (p <= 0) bad("p must be positive");
    if (heads <= 0) bad("heads must be positive");
    if (d % heads != 0) bad("d must be divisible by heads");
    if (layers <= 0) bad("layers must be positive");
    if (alpha < 0.0 || alpha > 1.0) bad("alpha must lie in [0, 1]");
    if (lambda_kl < 0.0) bad("lambda_kl must be non-negative");
    if (lambda_smo < 0.0) bad("lambda_smo must be non-negative");
    if (lambda_div < 0.0) bad("lambda_div must be non-negative");
    if (sigma_d < 0.0) bad("sigma_d must be non-negative");
    if (M < 2) bad("M must be at least 2");
    if (lr <= 0.0) bad("lr must be positive");
    if (weight_decay < 0.0) bad("weight_decay must be non-negative");
    if (grad_clip < 0.0) bad("grad_clip must be non-negative");
    if (batch_size <= 0) bad("batch_size must be positive");
    if (epochs_stage1 < 0) bad("epochs_stage1 must be non-negative");
    if (epochs_stage2 < 0) bad("epochs_stage2 must be non-negative");
    if (n_sessions <= 0) bad("n_sessions must be positive");
    if (session_frames < w) bad("session_frames must be at least w");
    if (session_frames % w != 0) bad("session_frames must be a multiple of w");
    if (n_classes <= 0) bad("n_classes must be positive");
    if (lag_min < 0) bad("lag_min must be non-negative");
    if (lag_max < lag_min) bad("lag_max must be >= lag_min");
    if (lag_max > w) bad("lag_max must be within [0, w]");
    if (n_sessions < n_classes) bad("n_sessions must be at least n_classes");
    if (frame_rate <= 0) bad("frame_rate must be positive");
    if (noise_scale < 0.0) bad("noise_scale must be non-negative");
}

void apply_override(Config& cfg, const std::string& key, const std::string& value) {
    if (key == "D") cfg.D = parse_int(key, value);
    else if (key == "d") cfg.d = parse_int(key, value);
    else if (key == "d_a") cfg.d_a = parse_int(key, value);
    else if (key == "d_z") cfg.d_z = parse_int(key, value);
    else if (key == "w") cfg.w = parse_int(key, value);
    else if (key == "k") cfg.k = parse_int(key, value);
    else if (key == "p") cfg.p = parse_int(key, value);
    else if (key == "heads") cfg.heads = parse_int(key, value);
    else if (key == "layers") cfg.layers = parse_int(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "lambda_kl") cfg.lambda_kl = parse_double(key, value);
    else if (key == "lambda_smo") cfg.lambda_smo = parse_double(key, value);
    else if (key == "lambda_div") cfg.lambda_div = parse_double(key, value);
    else if (key == "sigma_d") cfg.sigma_d = parse_double(key, value);
    else if (key == "M") cfg.M = parse_int(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "grad_clip") cfg.grad_clip = parse_double(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
    else if (key == "epochs_stage1") cfg.epochs_stage1 = parse_int(key, value);
    else if (key == "epochs_stage2") cfg.epochs_stage2 = parse_int(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "n_sessions") cfg.n_sessions = parse_int(key, value);
    else if (key == "session_frames") cfg.session_frames = parse_int(key, value);
    else if (key == "n_classes") cfg.n_classes = parse_int(key, value);
    else if (key == "lag_min") cfg.lag_min = parse_int(key, value);
    else if (key == "lag_max") cfg.lag_max = parse_int(key, value);
    else if (key == "noise_scale") cfg.noise_scale = parse_double(key, value);
    else if (key == "frame_rate") cfg.frame_rate = parse_int(key, value);
    else if (key == "split_seed") cfg.split_seed = parse_u64(key, value);
    else if (key == "disable_audio_sync") cfg.disable_audio_sync = parse_bool(key, value);
    else if (key == "disable_face_sync") cfg.disable_face_sync = parse_bool(key, value);
    else if (key == "disable_neighbor_min") cfg.disable_neighbor_min = parse_bool(key, value);
    else if (key == "disable_sampling") cfg.disable_sampling = parse_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        apply_override(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    return cfg;
}

std::string config_to_string(const Config& c) {
    std::ostringstream o;
    o << "D=" << c.D << "\nd=" << c.d << "\nd_a=" << c.d_a << "\nd_z=" << c.d_z << "\nw=" << c.w
      << "\nk=" << c.k << "\np=" << c.p << "\nheads=" << c.heads << "\nlayers=" << c.layers
      << "\nalpha=" << c.alpha << "\nlambda_kl=" << c.lambda_kl << "\nlambda_smo=" << c.lambda_smo
      << "\nlambda_div=" << c.lambda_div << "\nsigma_d=" << c.sigma_d << "\nM=" << c.M
      << "\nlr=" << c.lr << "\nweight_decay=" << c.weight_decay << "\ngrad_clip=" << c.grad_clip
      << "\nbatch_size=" << c.batch_size << "\nepochs_stage1=" << c.epochs_stage1
      << "\nepochs_stage2=" << c.epochs_stage2 << "\nseed=" << c.seed
      << "\nn_sessions=" << c.n_sessions << "\nsession_frames=" << c.session_frames
      << "\nn_classes=" << c.n_classes << "\nlag_min=" << c.lag_min << "\nlag_max=" << c.lag_max
      << "\nnoise_scale=" << c.noise_scale << "\nframe_rate=" << c.frame_rate
      << "\nsplit_seed=" << c.split_seed
      << "\ndisable_audio_sync=" << (c.disable_audio_sync ? "true" : "false")
      << "\ndisable_face_sync=" << (c.disable_face_sync ? "true" : "false")
      << "\ndisable_neighbor_min=" << (c.disable_neighbor_min ? "true" : "false")
      << "\ndisable_sampling=" << (c.disable_sampling ? "true" : "false") << "\n";
    return o.str();
}

std::vector<std::string> validate_session(const Session& s, const Config& cfg) {
    std::vector<std::string> report;
    const Eigen::Index T = s.speaker_coeffs.rows();
    if (T < 1) report.push_back("T must be at least 1");
    if (s.speaker_coeffs.cols() != cfg.D)
        report.push_back("speaker coefficient dim != D");
    if (s.listener_coeffs.rows() != T || s.listener_coeffs.cols() != s.speaker_coeffs.cols())
        report.push_back("listener shape differs from speaker shape");
    if (s.k != cfg.k) report.push_back("session rate ratio != configured k");
    if (s.speaker_audio.rows() != static_cast<Eigen::Index>(s.k) * T)
        report.push_back("audio length != k*T");
    if (s.speaker_audio.cols() != cfg.d_a) report.push_back("audio feature dim != d_a");
    if (s.frame_rate <= 0) report.push_back("frame_rate must be positive");
    if (!s.speaker_coeffs.allFinite() || !s.listener_coeffs.allFinite() ||
        !s.speaker_audio.allFinite())
        report.push_back("non-finite entries present");
    bool self_found = false;
    for (const auto& n : s.neighbor_ids) self_found = self_found || (n == s.id);
    if (!self_found) report.push_back("self not in neighbor set");
    return report;
}

} // namespace reactgen
