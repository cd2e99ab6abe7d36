#include "reactgen/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "reactgen/checkpoint.hpp"
#include "reactgen/data.hpp"
#include "reactgen/errors.hpp"
#include "reactgen/pipeline.hpp"
#include "reactgen/plot.hpp"

namespace reactgen::cli {

namespace fs = std::filesystem;

namespace {

// Training and inference run at 32-bit; tests exercise the 64-bit paths.
using Scalar = float;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    int workers = 1;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--config", o.config_path, "config file (key = value lines)");
    sub->add_option("--set", o.sets, "override a config key, e.g. --set w=8")
        ->take_all();
    sub->add_option("--out", o.out_dir, "output directory")->required();
    sub->add_option("--workers", o.workers, "worker threads for synthesis/evaluation");
}

// defaults -> config file -> --set overrides (in order) -> REACTGEN_SEED.
Config resolve_config(const CommonOpts& o) {
    Config cfg;
    if (!o.config_path.empty()) cfg = parse_config_file(o.config_path);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got: " + kv);
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (const char* env = std::getenv("REACTGEN_SEED")) {
        try {
            std::size_t used = 0;
            const std::string s(env);
            cfg.seed = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ConfigError("REACTGEN_SEED must be an unsigned integer");
        }
    }
    if (o.workers < 1) throw ConfigError("--workers must be at least 1");
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write on " + path.string());
}

fs::path prepare_out(const CommonOpts& o, const Config& cfg) {
    fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_file(dir / "config_resolved.txt", config_to_string(cfg));
    return dir;
}

std::vector<Session> load_corpus(const std::string& data_dir) {
    auto sessions = data::load_dataset(data_dir);
    if (sessions.empty()) throw DataError("no sessions found in " + data_dir);
    return sessions;
}

std::vector<Session> train_split(const std::vector<Session>& all, const Config& cfg) {
    std::vector<Session> out;
    for (const auto& s : all)
        if (!data::is_test_session(s.id, cfg.split_seed)) out.push_back(s);
    return out;
}

std::vector<Session> test_split(const std::vector<Session>& all, const Config& cfg) {
    std::vector<Session> out;
    for (const auto& s : all)
        if (data::is_test_session(s.id, cfg.split_seed)) out.push_back(s);
    return out;
}

const Session& find_session(const std::vector<Session>& all, const std::string& id) {
    for (const auto& s : all)
        if (s.id == id) return s;
    throw DataError("session not found: " + id);
}

nn::ParamStore<Scalar> load_model(const Config& cfg, const std::string& ckpt_path) {
    nn::ParamStore<Scalar> ps(cfg.seed);
    pipe::def_model(ps, cfg);
    ckpt::load_checkpoint(ckpt_path, ps);
    return ps;
}

// Little-endian 32-bit float coefficient sequence with a text header.
void write_coeff_file(const fs::path& path, const Session& s, int sample, std::uint64_t seed,
                      const MatF& coeffs) {
    std::ostringstream o;
    o << "RFCOEF01\n";
    o << "id " << s.id << "\n";
    o << "T " << coeffs.rows() << "\n";
    o << "D " << coeffs.cols() << "\n";
    o << "frame_rate " << s.frame_rate << "\n";
    o << "sample " << sample << "\n";
    o << "seed " << seed << "\n\n";
    std::string head = o.str();
    head.append(reinterpret_cast<const char*>(coeffs.data()),
                sizeof(float) * static_cast<std::size_t>(coeffs.size()));
    write_file(path, head);
}

int cmd_synth(const CommonOpts& o) {
    const Config cfg = resolve_config(o);
    const fs::path dir = prepare_out(o, cfg);
    auto sessions = data::generate_dataset(cfg);
    for (const auto& s : sessions) data::save_session(s, dir.string());
    std::cout << "wrote " << sessions.size() << " sessions to " << dir.string() << "\n";
    return kExitOk;
}

// One stage of training: stage 1 starts from a fresh model (or --resume),
// stage 2 starts from the stage-1 checkpoint next to it (or --init).
int cmd_train(const CommonOpts& o, const std::string& data_dir, int stage,
              const std::string& init_path, const std::string& resume_path) {
    if (stage != 1 && stage != 2) throw ConfigError("--stage must be 1 or 2");
    const Config cfg = resolve_config(o);
    const fs::path dir = prepare_out(o, cfg);
    auto all = load_corpus(data_dir);
    auto train = train_split(all, cfg);
    if (train.empty()) throw DataError("training split is empty");

    nn::ParamStore<Scalar> ps(cfg.seed);
    pipe::def_model(ps, cfg);
    ckpt::Meta meta;
    if (!resume_path.empty()) {
        meta = ckpt::load_checkpoint(resume_path, ps);
        if (meta.stage != stage)
            throw ConfigError("resume checkpoint is for stage " + std::to_string(meta.stage));
    } else if (stage == 2) {
        const std::string from = init_path.empty() ? (dir / "stage1.ckpt").string() : init_path;
        if (!fs::exists(from)) throw ConfigError("stage 1 checkpoint required (" + from + ")");
        ckpt::load_checkpoint(from, ps);
        // Fresh optimizer and schedule for the new objective.
        for (auto& [name, e] : ps.entries()) {
            e.m.setZero();
            e.v.setZero();
        }
    }

    const fs::path ckpt_path = dir / ("stage" + std::to_string(stage) + ".ckpt");
    std::ofstream log(dir / "train_log.txt", std::ios::trunc);
    if (!log) throw DataError("cannot write train log");
    pipe::TrainHooks hooks;
    hooks.on_step = [&](long step, const loss::LossReport& r) { log << r.line(step) << "\n"; };
    hooks.on_epoch = [&](const ckpt::Meta& m) {
        ckpt::save_checkpoint(ckpt_path.string(), ps, m, true);
    };
    const long epochs = stage == 1 ? cfg.epochs_stage1 : cfg.epochs_stage2;
    meta = pipe::train_stage(ps, cfg, train, all, stage, epochs, meta, hooks);
    ckpt::save_checkpoint(ckpt_path.string(), ps, meta, true);
    std::cout << "stage " << stage << " done: " << meta.step << " steps, checkpoint "
              << ckpt_path.string() << "\n";
    return kExitOk;
}

int cmd_generate(const CommonOpts& o, const std::string& data_dir, const std::string& session_id,
                 int samples, std::uint64_t seed, bool seed_given, const std::string& ckpt_path) {
    const Config cfg = resolve_config(o);
    if (samples < 1) throw ConfigError("--samples must be at least 1");
    const fs::path dir = prepare_out(o, cfg);
    auto all = load_corpus(data_dir);
    const Session& s = find_session(all, session_id);
    auto ps = load_model(cfg, ckpt_path);
    const std::uint64_t use_seed = seed_given ? seed : cfg.seed;
    for (int m = 0; m < samples; ++m) {
        const MatF coeffs = pipe::generate_reaction(ps, cfg, s, use_seed, m);
        write_coeff_file(dir / (s.id + ".gen" + std::to_string(m) + ".rfc"), s, m, use_seed,
                         coeffs);
    }
    std::cout << "wrote " << samples << " reaction files for " << s.id << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonOpts& o, const std::string& data_dir, const std::string& ckpt_path,
                 int samples, std::uint64_t seed, bool seed_given) {
    if (samples < 2) throw ConfigError("--samples must be at least 2 to score sample variation");
    const Config cfg = resolve_config(o);
    const fs::path dir = prepare_out(o, cfg);
    auto all = load_corpus(data_dir);
    auto test = test_split(all, cfg);
    if (test.empty()) throw DataError("test split is empty");
    auto ps = load_model(cfg, ckpt_path);
    const std::uint64_t use_seed = seed_given ? seed : cfg.seed;
    auto rep = pipe::evaluate(ps, cfg, test, all, samples, use_seed, o.workers);
    write_file(dir / "report.txt", rep.text());
    write_file(dir / "summary.json", rep.json());
    std::cout << "evaluated " << test.size() << " sessions -> " << (dir / "report.txt").string()
              << "\n";
    return kExitOk;
}

// Named ablation axes. The tokens are part of the interface; each one maps
// onto the config mutation that removes the corresponding mechanism:
//   mim   - no listener-to-audio attention (cross-rate sync off)
//   vim   - no listener-to-face attention (same-rate sync off)
//   div   - diversity loss weight zeroed
//   kl    - KL regularizer weight zeroed
//   smo   - smoothness loss weight zeroed
//   rec_a - neighbor-set min replaced by own-ground-truth reconstruction
//   sampling - deterministic generator (latent mean, no draw)
void apply_ablation(Config& cfg, const std::string& token) {
    if (token == "mim") cfg.disable_audio_sync = true;
    else if (token == "vim") cfg.disable_face_sync = true;
    else if (token == "div") cfg.lambda_div = 0.0;
    else if (token == "kl") cfg.lambda_kl = 0.0;
    else if (token == "smo") cfg.lambda_smo = 0.0;
    else if (token == "rec_a") cfg.disable_neighbor_min = true;
    else if (token == "sampling") cfg.disable_sampling = true;
    else throw ConfigError("unknown ablation token: " + token);
}

int cmd_ablate(const CommonOpts& o, const std::string& data_dir, const std::string& token,
               int samples) {
    if (samples < 2) throw ConfigError("--samples must be at least 2 to score sample variation");
    Config cfg = resolve_config(o);
    apply_ablation(cfg, token);
    cfg.validate();
    CommonOpts o2 = o; // echo the mutated config, not the pre-ablation one
    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_file(dir / "ablation.txt", "disable " + token + "\n");
    write_file(dir / "config_resolved.txt", config_to_string(cfg));

    auto all = load_corpus(data_dir);
    auto train = train_split(all, cfg);
    auto test = test_split(all, cfg);
    if (train.empty() || test.empty()) throw DataError("ablation needs both splits non-empty");

    nn::ParamStore<Scalar> ps(cfg.seed);
    pipe::def_model(ps, cfg);
    std::ofstream log(dir / "train_log.txt", std::ios::trunc);
    if (!log) throw DataError("cannot write train log");
    pipe::TrainHooks hooks;
    hooks.on_step = [&](long step, const loss::LossReport& r) { log << r.line(step) << "\n"; };
    ckpt::Meta meta = pipe::train_stage(ps, cfg, train, all, 1, cfg.epochs_stage1, {}, hooks);
    ckpt::save_checkpoint((dir / "stage1.ckpt").string(), ps, meta, true);
    for (auto& [name, e] : ps.entries()) {
        e.m.setZero();
        e.v.setZero();
    }
    meta = pipe::train_stage(ps, cfg, train, all, 2, cfg.epochs_stage2, {}, hooks);
    ckpt::save_checkpoint((dir / "stage2.ckpt").string(), ps, meta, true);

    auto rep = pipe::evaluate(ps, cfg, test, all, samples, cfg.seed, o.workers);
    write_file(dir / "report.txt", rep.text());
    write_file(dir / "summary.json", rep.json());
    std::cout << "ablation '" << token << "' done -> " << (dir / "report.txt").string() << "\n";
    return kExitOk;
}

int cmd_plot(const CommonOpts& o, const std::string& data_dir, const std::string& session_id,
             const std::string& ckpt_path, std::uint64_t seed, bool seed_given, int dims) {
    const Config cfg = resolve_config(o);
    if (dims < 1) throw ConfigError("--dims must be at least 1");
    const fs::path dir = prepare_out(o, cfg);
    auto all = load_corpus(data_dir);
    const Session& s = find_session(all, session_id);
    auto ps = load_model(cfg, ckpt_path);
    const std::uint64_t use_seed = seed_given ? seed : cfg.seed;
    const MatF gen = pipe::generate_reaction(ps, cfg, s, use_seed, 0);
    const std::string svg =
        plot::traces_svg(s.speaker_coeffs.cast<double>(), gen.cast<double>(), dims);
    write_file(dir / (s.id + "_traces.svg"), svg);
    std::cout << "wrote " << (dir / (s.id + "_traces.svg")).string() << "\n";
    return kExitOk;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"listener facial reaction generation from speaker audio-visual behaviour"};
    app.require_subcommand(1);

    CommonOpts synth_o, train_o, gen_o, eval_o, abl_o, plot_o;
    std::string train_data, gen_data, eval_data, abl_data, plot_data;
    std::string gen_session, plot_session;
    std::string gen_ckpt, eval_ckpt, plot_ckpt;
    std::string train_init, train_resume, abl_token;
    int train_stage = 1, gen_samples = 2, eval_samples = 2, abl_samples = 2, plot_dims = 4;
    std::uint64_t gen_seed = 0, eval_seed = 0, plot_seed = 0;

    auto* synth = app.add_subcommand("synth", "write a synthetic dyadic dataset");
    add_common(synth, synth_o);

    auto* train = app.add_subcommand("train", "train one stage");
    add_common(train, train_o);
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--stage", train_stage, "training stage (1 or 2)")->required();
    train->add_option("--init", train_init, "stage-1 checkpoint to start stage 2 from");
    train->add_option("--resume", train_resume, "checkpoint to resume the same stage from");

    auto* gen = app.add_subcommand("generate", "generate reactions for one session");
    add_common(gen, gen_o);
    gen->add_option("--data", gen_data, "dataset directory")->required();
    gen->add_option("--session", gen_session, "session id")->required();
    gen->add_option("--ckpt", gen_ckpt, "model checkpoint")->required();
    gen->add_option("--samples", gen_samples, "number of reactions to generate");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "generation seed");

    auto* eval = app.add_subcommand("evaluate", "score the test split");
    add_common(eval, eval_o);
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
    eval->add_option("--samples", eval_samples, "samples per session");
    auto* eval_seed_opt = eval->add_option("--seed", eval_seed, "generation seed");

    auto* abl = app.add_subcommand("ablate", "train + evaluate one ablated configuration");
    add_common(abl, abl_o);
    abl->add_option("--data", abl_data, "dataset directory")->required();
    abl->add_option("--disable", abl_token, "mim|vim|div|kl|smo|rec_a|sampling")->required();
    abl->add_option("--samples", abl_samples, "samples per session for evaluation");

    auto* plt = app.add_subcommand("plot", "render speaker vs generated listener traces");
    add_common(plt, plot_o);
    plt->add_option("--data", plot_data, "dataset directory")->required();
    plt->add_option("--session", plot_session, "session id")->required();
    plt->add_option("--ckpt", plot_ckpt, "model checkpoint")->required();
    plt->add_option("--dims", plot_dims, "number of coefficient dimensions to draw");
    auto* plot_seed_opt = plt->add_option("--seed", plot_seed, "generation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_o);
        if (train->parsed())
            return cmd_train(train_o, train_data, train_stage, train_init, train_resume);
        if (gen->parsed())
            return cmd_generate(gen_o, gen_data, gen_session, gen_samples, gen_seed,
                                !gen_seed_opt->empty(), gen_ckpt);
        if (eval->parsed())
            return cmd_evaluate(eval_o, eval_data, eval_ckpt, eval_samples, eval_seed,
                                !eval_seed_opt->empty());
        if (abl->parsed()) return cmd_ablate(abl_o, abl_data, abl_token, abl_samples);
        if (plt->parsed())
            return cmd_plot(plot_o, plot_data, plot_session, plot_ckpt, plot_seed,
                            !plot_seed_opt->empty(), plot_dims);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace reactgen::cli
