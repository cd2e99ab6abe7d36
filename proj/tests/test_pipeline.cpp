#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "reactgen/data.hpp"
#include "reactgen/pipeline.hpp"
#include "test_util.hpp"

using namespace reactgen;
namespace fs = std::filesystem;

namespace {

Config tiny_cfg() {
    Config cfg;
    cfg.d = 16;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.D = 4;
    cfg.d_a = 6;
    cfg.w = 4;
    cfg.M = 2;
    cfg.n_sessions = 4;
    cfg.session_frames = 16;
    cfg.n_classes = 2;
    cfg.lag_min = 1;
    cfg.lag_max = 3;
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.validate();
    return cfg;
}

template <class S>
nn::ParamStore<S> fresh_model(const Config& cfg) {
    nn::ParamStore<S> ps(cfg.seed);
    pipe::def_model(ps, cfg);
    return ps;
}

template <class S>
bool stores_identical(const nn::ParamStore<S>& a, const nn::ParamStore<S>& b) {
    for (const auto& [name, e] : a.entries())
        if (e.value != b.at(name).value || e.m != b.at(name).m || e.v != b.at(name).v)
            return false;
    return true;
}

} // namespace

TEST_CASE("training is a pure function of config, store, and meta") {
    const Config cfg = tiny_cfg();
    const auto corpus = data::generate_dataset(cfg);

    auto ps1 = fresh_model<double>(cfg);
    auto ps2 = fresh_model<double>(cfg);
    auto m1 = pipe::train_stage(ps1, cfg, corpus, corpus, 1, 2, {});
    auto m2 = pipe::train_stage(ps2, cfg, corpus, corpus, 1, 2, {});
    CHECK(stores_identical(ps1, ps2));
    CHECK(m1.step == m2.step);
    CHECK(m1.step == 2); // 4 sessions, batch 8 -> one step per epoch
    CHECK(m1.epoch == 2);
}

TEST_CASE("interrupt at an epoch boundary and resume reproduces the straight run") {
    const Config cfg = tiny_cfg();
    const auto corpus = data::generate_dataset(cfg);
    const fs::path tmp =
        fs::temp_directory_path() / ("rg-resume-" + std::to_string(::getpid()) + ".ckpt");

    auto straight = fresh_model<double>(cfg);
    pipe::train_stage(straight, cfg, corpus, corpus, 1, 4, {});

    auto half = fresh_model<double>(cfg);
    auto meta = pipe::train_stage(half, cfg, corpus, corpus, 1, 2, {});
    ckpt::save_checkpoint(tmp.string(), half, meta, true);

    auto resumed = fresh_model<double>(cfg);
    auto loaded_meta = ckpt::load_checkpoint(tmp.string(), resumed);
    CHECK(loaded_meta.epoch == 2);
    pipe::train_stage(resumed, cfg, corpus, corpus, 1, 4, loaded_meta);

    CHECK(stores_identical(straight, resumed));
    fs::remove(tmp);
}

TEST_CASE("absurd learning rate raises a divergence error") {
    Config cfg = tiny_cfg();
    cfg.lr = 1e12;
    cfg.grad_clip = 1e12;
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    CHECK_THROWS_AS(pipe::train_stage(ps, cfg, corpus, corpus, 1, 20, {}), DivergenceError);
}

TEST_CASE("stage losses are finite and diversity is a valid kernel mean") {
    const Config cfg = tiny_cfg();
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    testutil::randomize_store(ps, 77, 0.05);
    const auto by_id = pipe::index_by_id(corpus);

    ad::Tape<double> tape(false);
    nn::Bind<double> bind(ps, tape);
    auto eps = [&](int m, Eigen::Index n) {
        return pipe::train_eps<double>(cfg, corpus[0].id, 2, 0, m, n);
    };
    auto parts = pipe::stage2_session_loss<double>(bind, cfg, corpus[0],
                                                   pipe::neighbor_listeners(corpus[0], by_id), eps);
    for (double v : {parts.rec_a.scalar(), parts.kl.scalar(), parts.div.scalar(),
                     parts.smo.scalar()})
        CHECK(std::isfinite(v));
    CHECK(parts.div.scalar() > 0.0);
    CHECK(parts.div.scalar() <= 1.0);
    CHECK(parts.rec_a.scalar() > 0.0);

    SUBCASE("a fresh zero-output model produces identical samples: diversity exactly 1") {
        auto ps0 = fresh_model<double>(cfg);
        ad::Tape<double> t0(false);
        nn::Bind<double> b0(ps0, t0);
        auto p0 = pipe::stage2_session_loss<double>(b0, cfg, corpus[0],
                                                    pipe::neighbor_listeners(corpus[0], by_id), eps);
        CHECK(p0.div.scalar() == 1.0);
        CHECK(p0.kl.scalar() == 0.0);
    }
    SUBCASE("missing neighbor ids fail fast") {
        Session orphan = corpus[0];
        orphan.neighbor_ids = {"no-such-session"};
        CHECK_THROWS_AS(pipe::neighbor_listeners(orphan, by_id), DataError);
        std::vector<const MatF*> none;
        ad::Tape<double> t1(false);
        nn::Bind<double> b1(ps, t1);
        CHECK_THROWS_AS(
            pipe::stage2_session_loss<double>(b1, cfg, corpus[0], none, eps), DataError);
    }
}

TEST_CASE("reported losses match an independent recomputation of the first step") {
    Config cfg = tiny_cfg();
    cfg.batch_size = 1;
    const auto corpus = data::generate_dataset(cfg);
    const std::vector<Session> one = {corpus[0], };

    auto ps = fresh_model<double>(cfg);
    const auto before = ps; // copy: parameters as of the first forward pass

    std::vector<loss::LossReport> reps;
    pipe::TrainHooks hooks;
    hooks.on_step = [&](long, const loss::LossReport& r) { reps.push_back(r); };
    hooks.max_steps = 1;
    pipe::train_stage(ps, cfg, one, corpus, 1, 1, {}, hooks);
    REQUIRE(reps.size() == 1);

    ad::Tape<double> tape(false);
    nn::Bind<double> bind(before, tape);
    auto parts = pipe::stage1_session_loss<double>(bind, cfg, one[0], [&](Eigen::Index n) {
        return pipe::train_eps<double>(cfg, one[0].id, 1, 0, 0, n);
    });
    CHECK(reps[0].rec == parts.rec.scalar());
    CHECK(reps[0].kl == parts.kl.scalar());
    CHECK(reps[0].smo == parts.smo.scalar());
    const double total = parts.rec.scalar() + cfg.lambda_kl * parts.kl.scalar() +
                         cfg.lambda_smo * parts.smo.scalar();
    CHECK(reps[0].total == doctest::Approx(total).epsilon(1e-15));
    CHECK(reps[0].stage == 1);
    CHECK(reps[0].rec_a == 0.0);
    CHECK(reps[0].div == 0.0);
}

TEST_CASE("stage-2 report weighting matches the configured lambdas") {
    Config cfg = tiny_cfg();
    cfg.epochs_stage2 = 1;
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    testutil::randomize_store(ps, 78, 0.05);

    std::vector<loss::LossReport> reps;
    pipe::TrainHooks hooks;
    hooks.on_step = [&](long, const loss::LossReport& r) { reps.push_back(r); };
    hooks.max_steps = 1;
    pipe::train_stage(ps, cfg, corpus, corpus, 2, 1, {}, hooks);
    REQUIRE(reps.size() == 1);
    const auto& r = reps[0];
    CHECK(r.stage == 2);
    CHECK(r.rec == 0.0);
    CHECK(r.total == doctest::Approx(r.rec_a + cfg.lambda_kl * r.kl + cfg.lambda_div * r.div +
                                     cfg.lambda_smo * r.smo)
                         .epsilon(1e-12));
}

TEST_CASE("max_steps stops mid-epoch and reports honest progress") {
    Config cfg = tiny_cfg();
    cfg.batch_size = 1; // 4 steps per epoch
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    pipe::TrainHooks hooks;
    hooks.max_steps = 3;
    auto meta = pipe::train_stage(ps, cfg, corpus, corpus, 1, 5, {}, hooks);
    CHECK(meta.step == 3);
    CHECK(meta.epoch == 0); // first epoch never finished
}

TEST_CASE("latent sampling drives sample-to-sample variation once trained") {
    const Config cfg = tiny_cfg();
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    pipe::train_stage(ps, cfg, corpus, corpus, 1, 3, {});

    const auto a = pipe::generate_reaction(ps, cfg, corpus[0], cfg.seed, 0);
    const auto b = pipe::generate_reaction(ps, cfg, corpus[0], cfg.seed, 1);
    CHECK(a != b); // different sample index, different noise stream

    Config det = cfg;
    det.disable_sampling = true;
    const auto c = pipe::generate_reaction(ps, det, corpus[0], det.seed, 0);
    const auto d = pipe::generate_reaction(ps, det, corpus[0], det.seed, 1);
    CHECK(c == d); // mean latents ignore the sample index entirely
}

TEST_CASE("sequences that do not tile into windows are rejected") {
    const Config cfg = tiny_cfg();
    CHECK_THROWS_AS(pipe::window_count(13, cfg.w), DataError);
    CHECK_THROWS_AS(pipe::window_count(0, cfg.w), DataError);
    CHECK(pipe::window_count(16, cfg.w) == 4);

    const auto corpus = data::generate_dataset(cfg);
    Session bad = corpus[0];
    bad.speaker_coeffs = bad.speaker_coeffs.topRows(13).eval();
    bad.listener_coeffs = bad.listener_coeffs.topRows(13).eval();
    bad.speaker_audio = bad.speaker_audio.topRows(26).eval();
    auto ps = fresh_model<double>(cfg);
    CHECK_THROWS_AS(pipe::generate_reaction(ps, cfg, bad, cfg.seed, 0), DataError);
}

TEST_CASE("evaluation is deterministic across worker counts") {
    const Config cfg = tiny_cfg();
    const auto corpus = data::generate_dataset(cfg);
    auto ps = fresh_model<double>(cfg);
    testutil::randomize_store(ps, 79, 0.05);

    const auto r1 = pipe::evaluate(ps, cfg, corpus, corpus, 2, cfg.seed, 1);
    const auto r4 = pipe::evaluate(ps, cfg, corpus, corpus, 2, cfg.seed, 4);
    CHECK(r1.text() == r4.text());
    CHECK(std::isfinite(r1.frd));
    CHECK(std::isfinite(r1.frc));
    CHECK(r1.s_mse >= 0.0);
    CHECK(r1.per_session.size() == corpus.size());

    SUBCASE("input validation") {
        CHECK_THROWS_AS(pipe::evaluate(ps, cfg, {}, corpus, 2, cfg.seed, 1), DataError);
        CHECK_THROWS_AS(pipe::evaluate(ps, cfg, corpus, corpus, 1, cfg.seed, 1), ConfigError);
    }
}
