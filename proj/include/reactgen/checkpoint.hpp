#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "reactgen/nn.hpp"

// Checkpoint archive: one file holding every parameter keyed by its
// module-qualified name. Layout: 8-byte magic "RFCKPT01", text meta lines
// (dtype, stage, epoch, step, adam_t, arrays), a manifest line per array
// ("name rows cols"), a blank line, then raw little-endian payloads in
// manifest order. Parameter values are 32-bit floats by default; a training
// run at 64-bit stores dtype f64 so checkpoint resume stays bit-identical.
// Optimizer moments ride along as "<name>#m" / "<name>#v" arrays.

namespace reactgen::ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; this build targets LE hosts");

struct Meta {
    int stage = 1;
    long epoch = 0;
    long step = 0;
    long adam_t = 0;
};

namespace detail {

inline std::string scalar_tag(std::size_t bytes) { return bytes == 4 ? "f32" : "f64"; }

inline std::string meta_field(std::istream& in, const std::string& key, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": malformed checkpoint, missing " + key);
    const auto sp = line.find(' ');
    if (sp == std::string::npos || line.substr(0, sp) != key)
        throw DataError(path + ": malformed checkpoint, expected '" + key + "'");
    return line.substr(sp + 1);
}

inline long meta_long(std::istream& in, const std::string& key, const std::string& path) {
    const std::string v = meta_field(in, key, path);
    try {
        return std::stol(v);
    } catch (const std::exception&) {
        throw DataError(path + ": malformed checkpoint value for " + key);
    }
}

} // namespace detail

template <class S>
void save_checkpoint(const std::string& path, const nn::ParamStore<S>& ps, const Meta& meta,
                     bool with_moments) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write("RFCKPT01", 8);
    std::ostringstream hdr;
    hdr << "\ndtype " << detail::scalar_tag(sizeof(S)) << "\n";
    hdr << "stage " << meta.stage << "\n";
    hdr << "epoch " << meta.epoch << "\n";
    hdr << "step " << meta.step << "\n";
    hdr << "adam_t " << meta.adam_t << "\n";
    const std::size_t arrays = ps.entries().size() * (with_moments ? 3 : 1);
    hdr << "arrays " << arrays << "\n";
    for (const auto& [name, e] : ps.entries()) {
        hdr << name << " " << e.value.rows() << " " << e.value.cols() << "\n";
        if (with_moments) {
            hdr << name << "#m " << e.m.rows() << " " << e.m.cols() << "\n";
            hdr << name << "#v " << e.v.rows() << " " << e.v.cols() << "\n";
        }
    }
    hdr << "\n";
    const std::string h = hdr.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    auto write_mat = [&](const ad::Mat<S>& m) {
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(S) * static_cast<std::size_t>(m.size())));
    };
    for (const auto& [name, e] : ps.entries()) {
        write_mat(e.value);
        if (with_moments) {
            write_mat(e.m);
            write_mat(e.v);
        }
    }
    if (!out) throw DataError("short write on checkpoint: " + path);
}

// Loads into an already-registered store; every array must match a known
// parameter and shape. Returns the stored meta.
template <class S>
Meta load_checkpoint(const std::string& path, nn::ParamStore<S>& ps) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, "RFCKPT01", 8) != 0)
        throw DataError(path + ": bad magic, not a checkpoint");
    std::string nl;
    std::getline(in, nl); // rest of the magic line
    const std::string dtype = detail::meta_field(in, "dtype", path);
    if (dtype != detail::scalar_tag(sizeof(S)))
        throw DataError(path + ": checkpoint dtype " + dtype + " does not match this build's " +
                        detail::scalar_tag(sizeof(S)));
    Meta meta;
    meta.stage = static_cast<int>(detail::meta_long(in, "stage", path));
    meta.epoch = detail::meta_long(in, "epoch", path);
    meta.step = detail::meta_long(in, "step", path);
    meta.adam_t = detail::meta_long(in, "adam_t", path);
    const long arrays = detail::meta_long(in, "arrays", path);

    struct Row {
        std::string name;
        long rows, cols;
    };
    std::vector<Row> manifest;
    for (long i = 0; i < arrays; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw DataError(path + ": truncated manifest");
        std::istringstream ls(line);
        Row r;
        if (!(ls >> r.name >> r.rows >> r.cols))
            throw DataError(path + ": malformed manifest line: " + line);
        manifest.push_back(std::move(r));
    }
    std::string blank;
    if (!std::getline(in, blank) || !blank.empty())
        throw DataError(path + ": expected blank line after manifest");

    for (const auto& r : manifest) {
        std::string base = r.name;
        int which = 0; // 0 value, 1 m, 2 v
        if (const auto hash = base.find('#'); hash != std::string::npos) {
            const std::string suffix = base.substr(hash + 1);
            base = base.substr(0, hash);
            if (suffix == "m") which = 1;
            else if (suffix == "v") which = 2;
            else throw DataError(path + ": unknown array suffix on " + r.name);
        }
        if (!ps.has(base)) throw DataError(path + ": unknown parameter " + base);
        auto& e = ps.at(base);
        ad::Mat<S>& target = which == 0 ? e.value : (which == 1 ? e.m : e.v);
        if (target.rows() != r.rows || target.cols() != r.cols)
            throw DataError(path + ": shape mismatch for " + r.name);
        in.read(reinterpret_cast<char*>(target.data()),
                static_cast<std::streamsize>(sizeof(S) *
                                             static_cast<std::size_t>(target.size())));
        if (in.gcount() !=
            static_cast<std::streamsize>(sizeof(S) * static_cast<std::size_t>(target.size())))
            throw DataError(path + ": payload shorter than manifest promises");
    }
    return meta;
}

} // namespace reactgen::ckpt
