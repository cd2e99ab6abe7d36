#pragma once

#include <string>
#include <vector>

#include "reactgen/core.hpp"

namespace reactgen::data {

// Build the synthetic dyadic corpus described by the config's synthesis
// keys. Session i belongs to class i % n_classes; the speaker trajectory is
// a class-specific sum of sinusoids mixed per dimension plus smoothed noise;
// the listener is the class response template delayed by a per-session lag
// from [lag_min, lag_max] plus its own noise; audio features are a fixed
// projection of the speaker coefficients repeated k times per frame plus
// noise; neighbors are all sessions of the same class (self included).
// Deterministic given cfg.seed.
std::vector<Session> generate_dataset(const Config& cfg);

// The lag a given session was generated with (same derivation the generator
// uses); exposed so tests can assert exact synchrony recovery.
int injected_lag(const Config& cfg, int session_index);

// One file per session, "<id>.rfs": an 8-byte magic, a text header
// (id, T, D, k, d_a, frame_rate, neighbor_ids), a blank line, then
// little-endian 32-bit floats row-major in order speaker_coeffs,
// listener_coeffs, speaker_audio.
void save_session(const Session& s, const std::string& dir);
Session load_session(const std::string& dir, const std::string& id);

// All sessions in a directory, ordered by id.
std::vector<Session> load_dataset(const std::string& dir);

// Seeded deterministic split on the session id (roughly 20% test).
bool is_test_session(const std::string& id, std::uint64_t split_seed);

} // namespace reactgen::data
