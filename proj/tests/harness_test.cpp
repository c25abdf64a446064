#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "acube/checkpoint.hpp"
#include "acube/config.hpp"
#include "acube/optimizer.hpp"
#include "acube/train.hpp"

#include "test_support.hpp"

#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

using namespace acube;
using namespace testsupport;

namespace {

std::string temp_dir(const std::string& name) {
    std::string d = "harness_tmp/" + name;
    std::filesystem::create_directories(d);
    return d;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ImageBuffer training_image(uint64_t seed) {
    StreamRng rng(seed, "train-img");
    ImageBuffer img(64, 64, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            img.at(0, y, x) =
                std::clamp(0.5 + 0.3 * std::sin(0.4 * x) * std::cos(0.3 * y) +
                               0.1 * (rng.next_double() - 0.5),
                           0.0, 1.0);
    return img;
}

TrainConfig tiny_train_cfg(const std::string& overrides = "") {
    std::map<std::string, std::string> kv = {
        {"task", "denoise"}, {"sigma", "30"},    {"channels", "8"}, {"groups", "1"},
        {"units", "1"},      {"bottleneck_ratio", "4"}, {"batch", "2"},    {"patch", "16"},
        {"max_iters", "6"},  {"log_every", "2"}, {"seed", "3"}};
    for (const auto& [k, v] : parse_key_values(overrides)) kv[k] = v;
    std::string text;
    for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
    return parse_train_config(text);
}

} // namespace

TEST_CASE("lr schedule follows the halving law") {
    CHECK(lr_at(0, 2e-4, 200000) == 2e-4);
    CHECK(lr_at(199999, 2e-4, 200000) == 2e-4);
    CHECK(lr_at(200000, 2e-4, 200000) == doctest::Approx(1e-4));
    CHECK(lr_at(399999, 2e-4, 200000) == doctest::Approx(1e-4));
    CHECK(lr_at(400000, 2e-4, 200000) == doctest::Approx(5e-5));
    // non-increasing, piecewise constant
    double prev = lr_at(0, 2e-4, 1000);
    for (uint64_t i = 1; i < 5000; i += 37) {
        double cur = lr_at(i, 2e-4, 1000);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("optimizer first step and zero-gradient behavior") {
    Parameter p("w", Tensor::scalar(1.0));
    AdamOptimizer opt({&p});
    p.grad()[0] = 1.0;
    opt.step(2e-4);
    // bias-corrected first step moves by almost exactly -lr
    CHECK(p.value().item() == doctest::Approx(1.0 - 2e-4).epsilon(1e-6));
    CHECK(opt.step_count() == 1);

    // zero gradient into zero moments: the value stays put
    Parameter q("q", Tensor::scalar(0.5));
    AdamOptimizer opt2({&q});
    opt2.step(2e-4);
    CHECK(q.value().item() == 0.5);
    CHECK(opt2.step_count() == 1);

    CHECK_THROWS(opt.step(0.0));
    CHECK_THROWS(opt.step(-1.0));
}

TEST_CASE("optimizer trajectories are bit-identical across runs") {
    auto run = [](std::vector<double>& history) {
        Parameter p("w", Tensor::scalar(0.7));
        AdamOptimizer opt({&p});
        StreamRng rng(4, "opt");
        for (int i = 0; i < 50; ++i) {
            p.grad()[0] = rng.next_gaussian();
            opt.step(1e-3);
            history.push_back(p.value().item());
        }
    };
    std::vector<double> h1, h2;
    run(h1);
    run(h2);
    CHECK(h1 == h2);
}

TEST_CASE("frozen parameters are skipped by the optimizer") {
    Parameter frozen("a", Tensor::scalar(1.0), false);
    AdamOptimizer opt({&frozen});
    frozen.grad()[0] = 5.0;
    opt.step(1e-2);
    CHECK(frozen.value().item() == 1.0);
}

TEST_CASE("config parsing round trip and errors") {
    TrainConfig cfg = tiny_train_cfg();
    CHECK(cfg.model.task == Task::denoise);
    CHECK(cfg.model.trunk_channels == 8);
    CHECK(cfg.loss == LossKind::l2); // task default
    CHECK(cfg.degradation.kind == DegradationSpec::Kind::awgn);
    CHECK(cfg.degradation.sigma255 == 30);

    TrainConfig sr = parse_train_config("task=sr\nscale=3\n");
    CHECK(sr.loss == LossKind::l1);
    CHECK(sr.degradation.scale == 3);

    CHECK_THROWS(parse_train_config("task=flying\n"));
    CHECK_THROWS(parse_train_config("unknown_key=1\n"));
    CHECK_THROWS(parse_train_config("batch\n"));
    CHECK_THROWS(parse_train_config("batch=1\nbatch=2\n"));

    TrainConfig echo = parse_train_config(cfg.canonical_text());
    CHECK(echo.canonical_text() == cfg.canonical_text());
}

TEST_CASE("degradation spec strings") {
    DegradationSpec a = parse_degradation("awgn:50", 7);
    CHECK(a.kind == DegradationSpec::Kind::awgn);
    CHECK(a.sigma255 == 50);
    CHECK(a.seed == 7);
    DegradationSpec b = parse_degradation("bicubic:3", 0);
    CHECK(b.scale == 3);
    DegradationSpec j = parse_degradation("jpeg:20", 0);
    CHECK(j.quality == 20);
    CHECK_THROWS(parse_degradation("sparkle:1", 0));
    CHECK_THROWS(parse_degradation("jpeg:0", 0));
}

TEST_CASE("checkpoint round trip is byte-identical") {
    TrainConfig cfg = tiny_train_cfg();
    Model m = build_model(cfg.model, cfg.seed);
    AdamOptimizer opt(m.parameters());
    // one training-ish step so moments are nonzero
    Tensor x = random_tensor({1, 1, 16, 16}, 1);
    Tensor t = random_tensor({1, 1, 16, 16}, 2);
    {
        autograd::GradMode on(true);
        backward(l2_loss(m.forward(x), t));
    }
    opt.step(1e-3);

    std::string dir = temp_dir("ckpt");
    Checkpoint ck = snapshot(m, &opt, 17, cfg.seed, cfg.canonical_text());
    save_checkpoint(ck, dir + "/a.ckpt");
    Checkpoint loaded = load_checkpoint(dir + "/a.ckpt");
    CHECK(loaded.iteration == 17);
    CHECK(loaded.config_text == cfg.canonical_text());
    save_checkpoint(loaded, dir + "/b.ckpt");
    CHECK(read_bytes(dir + "/a.ckpt") == read_bytes(dir + "/b.ckpt"));

    // load -> forward equality
    Model m2 = build_model(cfg.model, 999); // different init, then restored
    restore_into(m2, nullptr, loaded);
    Tensor probe = random_tensor({1, 1, 12, 12}, 3);
    CHECK(bit_equal(m.forward(probe), m2.forward(probe)));
}

TEST_CASE("checkpoint validation errors") {
    TrainConfig cfg = tiny_train_cfg();
    Model m = build_model(cfg.model, cfg.seed);
    Checkpoint ck = snapshot(m, nullptr, 0, cfg.seed, cfg.canonical_text());

    TrainConfig other = tiny_train_cfg("channels=16\n");
    Model wrong = build_model(other.model, 1);
    CHECK_THROWS(restore_into(wrong, nullptr, ck));

    std::string dir = temp_dir("ckpt_bad");
    std::ofstream(dir + "/bad.ckpt", std::ios::binary) << "NOTACKPT";
    CHECK_THROWS(load_checkpoint(dir + "/bad.ckpt"));
}

TEST_CASE("training runs, logs and improves on a tiny job") {
    std::string data = temp_dir("train_data");
    save_image(training_image(1), data + "/img.pgm");
    TrainConfig cfg = tiny_train_cfg("max_iters=40\nlog_every=10\n");
    std::ostringstream log;
    TrainReport report = train(cfg, data, temp_dir("train_out") + "/m.ckpt", log);
    CHECK(report.iterations == 40);
    CHECK(std::isfinite(report.final_loss));
    std::string lines = log.str();
    CHECK(lines.find("iter=10 lr=0.0002 loss=") != std::string::npos);
    CHECK(lines.find("psnr=") != std::string::npos);
}

TEST_CASE("max_iters=0 leaves the checkpoint at initialization") {
    std::string data = temp_dir("noop_data");
    save_image(training_image(2), data + "/img.pgm");
    TrainConfig cfg = tiny_train_cfg("max_iters=0\n");
    std::ostringstream log;
    std::string out = temp_dir("noop_out") + "/m.ckpt";
    train(cfg, data, out, log);
    Checkpoint ck = load_checkpoint(out);
    CHECK(ck.iteration == 0);
    Model fresh = build_model(cfg.model, cfg.seed);
    size_t idx = 0;
    bool same = true;
    fresh.visit_params([&](Parameter& p) {
        same = same && bit_equal(p.value(), ck.params[idx].second);
        ++idx;
    });
    CHECK(same);
}

TEST_CASE("resumed training is bit-identical to an unbroken run") {
    std::string data = temp_dir("resume_data");
    save_image(training_image(3), data + "/img.pgm");

    TrainConfig full = tiny_train_cfg("max_iters=12\nlog_every=3\n");
    std::ostringstream log_full;
    std::string out_full = temp_dir("resume_out") + "/full.ckpt";
    train(full, data, out_full, log_full);

    TrainConfig half = tiny_train_cfg("max_iters=6\nlog_every=3\n");
    std::ostringstream log_a;
    std::string out_half = temp_dir("resume_out") + "/half.ckpt";
    train(half, data, out_half, log_a);
    TrainConfig rest = tiny_train_cfg("max_iters=12\nlog_every=3\n");
    std::ostringstream log_b;
    std::string out_rest = temp_dir("resume_out") + "/rest.ckpt";
    train(rest, data, out_rest, log_b, out_half);

    CHECK(read_bytes(out_full) == read_bytes(out_rest));
    // the second half of the log matches the unbroken log tail
    std::string tail = log_b.str();
    CHECK(log_full.str().find(tail.substr(0, tail.find('\n'))) != std::string::npos);
}

TEST_CASE("training aborts on unreadable data") {
    TrainConfig cfg = tiny_train_cfg();
    std::ostringstream log;
    CHECK_THROWS(train(cfg, temp_dir("empty_data"), "x.ckpt", log));
}

TEST_CASE("evaluate is deterministic and beats the degraded input after training") {
    std::string data = temp_dir("eval_data");
    save_image(training_image(4), data + "/img.pgm");

    TrainConfig cfg = tiny_train_cfg("max_iters=400\nlog_every=100\npatch=32\nbatch=4\nsigma=50\n");
    std::ostringstream log;
    std::string out = temp_dir("eval_out") + "/m.ckpt";
    train(cfg, data, out, log);

    Checkpoint ck = load_checkpoint(out);
    Model m = build_model(cfg.model, cfg.seed);
    restore_into(m, nullptr, ck);

    DegradationSpec spec = cfg.degradation;
    EvalReport r1 = evaluate(m, data, spec);
    EvalReport r2 = evaluate(m, data, spec);
    CHECK(r1.to_tsv() == r2.to_tsv());
    REQUIRE(r1.rows.size() == 1);
    CHECK(r1.rows[0].psnr_restored > r1.rows[0].psnr_degraded);

    DegradationSpec wrong;
    wrong.kind = DegradationSpec::Kind::jpeg;
    CHECK_THROWS(evaluate(m, data, wrong));
}
