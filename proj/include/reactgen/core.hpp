#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reactgen/errors.hpp"

namespace reactgen {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// All tunables in one flat struct; the config file and --set overrides use
// these field names verbatim as keys.
struct Config {
    // model dimensions
    int D = 56;   // facial coefficients per frame
    int d = 128;  // model width
    int d_a = 26; // audio features per audio frame
    int d_z = 0;  // latent width; 0 means "same as d"
    int w = 8;    // sliding-window length (face frames)
    int k = 2;    // audio frames per face frame
    int p = 2;    // temporal bias period (face frames per attention step)
    int heads = 4;
    int layers = 2;
    double alpha = 0.5; // past-latent weight in the momentum blend

    // losses
    double lambda_kl = 1e-4;
    double lambda_smo = 10.0;
    double lambda_div = 100.0;
    double sigma_d = 0.0; // diversity bandwidth; 0 means "window frames * D"
    int M = 2;            // samples drawn per window in stage two

    // optimization
    double lr = 1e-4;
    double weight_decay = 0.01;
    double grad_clip = 1.0;
    int batch_size = 8;
    int epochs_stage1 = 100;
    int epochs_stage2 = 50;
    std::uint64_t seed = 0;

    // synthetic data
    int n_sessions = 100;
    int session_frames = 256;
    int n_classes = 4;
    int lag_min = 2;
    int lag_max = 6;
    double noise_scale = 0.05;
    int frame_rate = 25;
    std::uint64_t split_seed = 0;

    // ablation switches
    bool disable_audio_sync = false;   // skip the audio-alignment attention steps
    bool disable_face_sync = false;    // skip the face-alignment attention steps
    bool disable_neighbor_min = false; // score stage-2 reconstruction against own GT only
    bool disable_sampling = false;     // deterministic latents: use the mean, no noise

    int latent_dim() const { return d_z > 0 ? d_z : d; }
    // Diversity kernel bandwidth; defaults to the element count of one
    // compared sequence so exp(-||Δ||²/σ_d) sits in a useful range.
    double diversity_bandwidth(int T) const {
        return sigma_d > 0.0 ? sigma_d : static_cast<double>(T) * static_cast<double>(D);
    }

    void validate() const;
};

// Parse "key=value" lines (# comments, blank lines allowed). Unknown keys and
// malformed values are configuration errors.
Config parse_config_file(const std::string& path);
void apply_override(Config& cfg, const std::string& key, const std::string& value);
std::string config_to_string(const Config& cfg);

// One recorded dyadic session.
struct Session {
    std::string id;
    int frame_rate = 25;
    MatF speaker_coeffs;  // T x D
    MatF listener_coeffs; // T x D
    MatF speaker_audio;   // (k*T) x d_a
    int k = 2;            // audio frames per face frame
    std::vector<std::string> neighbor_ids; // sessions whose listener reaction is
                                           // also appropriate for this speaker
};

// Diagnostic check of every session invariant; returns one line per violation,
// empty when the session is usable for training. Never throws.
std::vector<std::string> validate_session(const Session& s, const Config& cfg);

} // namespace reactgen
