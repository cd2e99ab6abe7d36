#include "reactgen/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "reactgen/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "session files are little-endian; this build targets LE hosts");

namespace reactgen::data {

namespace {

namespace fs = std::filesystem;

constexpr char kMagic[8] = {'R', 'F', 'S', 'E', 'S', 'S', '0', '1'};
constexpr int kSinusoids = 4;

struct ClassParams {
    // s_c(t) = sum_h amp[h] * sin(2*pi*freq[h]*t/frame_rate + phase[h])
    std::vector<double> freq, amp, phase;
    std::vector<double> mix;    // per-dim weight of the trajectory
    std::vector<double> base;   // per-dim speaker offset
    std::vector<double> offset; // per-dim listener offset
};

ClassParams class_params(const Config& cfg, int c) {
    ClassParams cp;
    for (int h = 0; h < kSinusoids; ++h) {
        Rng r = make_stream(cfg.seed, "class", {static_cast<std::uint64_t>(c),
                                                static_cast<std::uint64_t>(h)});
        cp.freq.push_back(r.uniform(0.3, 1.8));
        cp.amp.push_back(r.uniform(0.4, 1.0));
        cp.phase.push_back(r.uniform(0.0, 2.0 * std::numbers::pi));
    }
    for (int j = 0; j < cfg.D; ++j) {
        Rng r = make_stream(cfg.seed, "dims", {static_cast<std::uint64_t>(c),
                                               static_cast<std::uint64_t>(j)});
        cp.mix.push_back(r.uniform(0.5, 1.5));
        cp.base.push_back(r.uniform(-0.5, 0.5));
        cp.offset.push_back(r.uniform(-1.0, 1.0));
    }
    return cp;
}

double trajectory(const ClassParams& cp, double t_frames, int frame_rate) {
    double s = 0.0;
    for (int h = 0; h < kSinusoids; ++h)
        s += cp.amp[static_cast<std::size_t>(h)] *
             std::sin(2.0 * std::numbers::pi * cp.freq[static_cast<std::size_t>(h)] * t_frames /
                          frame_rate +
                      cp.phase[static_cast<std::size_t>(h)]);
    return s;
}

// Exponentially smoothed unit noise, one independent stream per column.
MatD smoothed_noise(const Config& cfg, const char* label, int session, int rows, int cols) {
    MatD out(rows, cols);
    for (int j = 0; j < cols; ++j) {
        Rng r = make_stream(cfg.seed, label, {static_cast<std::uint64_t>(session),
                                              static_cast<std::uint64_t>(j)});
        double state = 0.0;
        for (int t = 0; t < rows; ++t) {
            state = 0.7 * state + 0.3 * r.normal();
            out(t, j) = state;
        }
    }
    return out;
}

std::string session_id(int index) {
    std::ostringstream o;
    o << "s" << std::setw(4) << std::setfill('0') << index;
    return o.str();
}

void write_exact(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

} // namespace

int injected_lag(const Config& cfg, int session_index) {
    Rng r = make_stream(cfg.seed, "lag", {static_cast<std::uint64_t>(session_index)});
    return r.uniform_int(cfg.lag_min, cfg.lag_max);
}

std::vector<Session> generate_dataset(const Config& cfg) {
    cfg.validate();
    const int T = cfg.session_frames, D = cfg.D, C = cfg.n_classes;

    std::vector<ClassParams> classes;
    for (int c = 0; c < C; ++c) classes.push_back(class_params(cfg, c));

    // One fixed audio projection for the whole dataset.
    MatD audio_proj(cfg.d_a, D);
    {
        Rng r = make_stream(cfg.seed, "audio_proj", {});
        const double scale = 1.0 / std::sqrt(static_cast<double>(D));
        for (int i = 0; i < cfg.d_a; ++i)
            for (int j = 0; j < D; ++j) audio_proj(i, j) = scale * r.uniform(-1.0, 1.0);
    }

    std::vector<std::vector<std::string>> ids_by_class(static_cast<std::size_t>(C));
    for (int i = 0; i < cfg.n_sessions; ++i)
        ids_by_class[static_cast<std::size_t>(i % C)].push_back(session_id(i));

    std::vector<Session> out;
    out.reserve(static_cast<std::size_t>(cfg.n_sessions));
    for (int i = 0; i < cfg.n_sessions; ++i) {
        const int c = i % C;
        const ClassParams& cp = classes[static_cast<std::size_t>(c)];
        const int lag = injected_lag(cfg, i);

        MatD spk(T, D), lst(T, D);
        const MatD ns = cfg.noise_scale > 0.0 ? smoothed_noise(cfg, "spk_noise", i, T, D)
                                              : MatD::Zero(T, D);
        const MatD nl = cfg.noise_scale > 0.0 ? smoothed_noise(cfg, "lst_noise", i, T, D)
                                              : MatD::Zero(T, D);
        for (int t = 0; t < T; ++t) {
            const double s_now = trajectory(cp, t, cfg.frame_rate);
            const double s_lag = trajectory(cp, t - lag, cfg.frame_rate);
            for (int j = 0; j < D; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                spk(t, j) = s_now * cp.mix[ju] + cp.base[ju] + cfg.noise_scale * ns(t, j);
                lst(t, j) = 0.8 * s_lag * cp.mix[ju] + cp.offset[ju] + cfg.noise_scale * nl(t, j);
            }
        }

        MatD aud(cfg.k * T, cfg.d_a);
        {
            Rng r = make_stream(cfg.seed, "audio_noise", {static_cast<std::uint64_t>(i)});
            for (int j = 0; j < cfg.k * T; ++j) {
                Eigen::VectorXd face = spk.row(j / cfg.k).transpose();
                Eigen::VectorXd a = audio_proj * face;
                for (int q = 0; q < cfg.d_a; ++q)
                    aud(j, q) = a(q) + cfg.noise_scale * r.normal();
            }
        }

        Session s;
        s.id = session_id(i);
        s.frame_rate = cfg.frame_rate;
        s.k = cfg.k;
        s.speaker_coeffs = spk.cast<float>();
        s.listener_coeffs = lst.cast<float>();
        s.speaker_audio = aud.cast<float>();
        s.neighbor_ids = ids_by_class[static_cast<std::size_t>(c)];
        out.push_back(std::move(s));
    }
    return out;
}

void save_session(const Session& s, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / (s.id + ".rfs");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write session file: " + path.string());
    write_exact(out, kMagic, sizeof(kMagic));
    std::ostringstream hdr;
    hdr << "id " << s.id << "\n";
    hdr << "T " << s.speaker_coeffs.rows() << "\n";
    hdr << "D " << s.speaker_coeffs.cols() << "\n";
    hdr << "k " << s.k << "\n";
    hdr << "d_a " << s.speaker_audio.cols() << "\n";
    hdr << "frame_rate " << s.frame_rate << "\n";
    hdr << "neighbor_ids ";
    for (std::size_t i = 0; i < s.neighbor_ids.size(); ++i)
        hdr << (i ? "," : "") << s.neighbor_ids[i];
    hdr << "\n\n";
    const std::string h = hdr.str();
    write_exact(out, h.data(), h.size());
    auto write_mat = [&](const MatF& m) {
        write_exact(out, m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
    };
    write_mat(s.speaker_coeffs);
    write_mat(s.listener_coeffs);
    write_mat(s.speaker_audio);
    if (!out) throw DataError("short write on session file: " + path.string());
}

namespace {

std::string header_field(std::istream& in, const std::string& key, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": malformed header, missing " + key);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key)
        throw DataError(path + ": malformed header, expected '" + key + "', got '" + line + "'");
    return line.substr(sp + 1);
}

long header_long(std::istream& in, const std::string& key, const std::string& path) {
    const std::string v = header_field(in, key, path);
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError(path + ": malformed header value for " + key + ": '" + v + "'");
    }
}

} // namespace

Session load_session(const std::string& dir, const std::string& id) {
    const fs::path path = fs::path(dir) / (id + ".rfs");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing session file: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError(path.string() + ": bad magic, not a session file");

    Session s;
    s.id = header_field(in, "id", path.string());
    const long T = header_long(in, "T", path.string());
    const long D = header_long(in, "D", path.string());
    s.k = static_cast<int>(header_long(in, "k", path.string()));
    const long d_a = header_long(in, "d_a", path.string());
    s.frame_rate = static_cast<int>(header_long(in, "frame_rate", path.string()));
    const std::string nbrs = header_field(in, "neighbor_ids", path.string());
    {
        std::stringstream ss(nbrs);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) s.neighbor_ids.push_back(tok);
    }
    std::string blank;
    if (!std::getline(in, blank) || !(blank.empty() || blank == "\r"))
        throw DataError(path.string() + ": malformed header, expected blank line");
    if (T < 1 || D < 1 || s.k < 1 || d_a < 1)
        throw DataError(path.string() + ": malformed header, non-positive dimension");

    auto read_mat = [&](long rows, long cols, const char* what) {
        MatF m(rows, cols);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(m.size())));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(float) * m.size()))
            throw DataError(path.string() + ": payload shorter than header promises (" + what +
                            ")");
        return m;
    };
    s.speaker_coeffs = read_mat(T, D, "speaker_coeffs");
    s.listener_coeffs = read_mat(T, D, "listener_coeffs");
    s.speaker_audio = read_mat(static_cast<long>(s.k) * T, d_a, "speaker_audio");
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw DataError(path.string() + ": trailing bytes beyond payload");
    return s;
}

std::vector<Session> load_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a dataset directory: " + dir);
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".rfs") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw DataError("no session files in " + dir);
    std::vector<Session> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(load_session(dir, id));
    return out;
}

bool is_test_session(const std::string& id, std::uint64_t split_seed) {
    Rng r = make_stream(split_seed, "split-" + id, {});
    return r.uniform() < 0.2;
}

} // namespace reactgen::data
