// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Work products (datasets, checkpoints, reports) land in a scratch
// directory; set PSF_ACCEPT_DIR to keep or reuse them between runs.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "psf/config.hpp"
#include "psf/dataset.hpp"
#include "psf/error.hpp"
#include "psf/manipulations.hpp"
#include "psf/models.hpp"
#include "psf/nn/gradcheck.hpp"
#include "psf/printscan.hpp"
#include "psf/trainer.hpp"

namespace fs = std::filesystem;
using namespace psf;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++g_failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: gradient correctness ----

void criterion_gradients() {
    const auto start = Clock::now();
    double worst = 0.0;
    std::string worst_at = "none";
    auto track = [&](const char* name, double err) {
        if (err > worst) {
            worst = err;
            worst_at = name;
        }
    };

    using nn::Tensor;
    auto random_input = [](std::vector<int> shape, std::uint64_t seed) {
        Rng rng(seed);
        Tensor<double> t(std::move(shape));
        for (double& v : t.v)
            v = rng.normal();
        return t;
    };
    auto head = [](std::unique_ptr<nn::Layer<double>> layer, int flat, int classes,
                   std::uint64_t seed) {
        auto model = std::make_unique<nn::Model<double>>();
        model->add(std::move(layer));
        model->add(std::make_unique<nn::Flatten<double>>());
        model->add(std::make_unique<nn::Linear<double>>("head", flat, classes));
        Rng rng(seed);
        model->layers().back()->init_weights(rng);
        return model;
    };

    Rng rng(11);
    {
        auto conv = std::make_unique<nn::Conv2d<double>>("c", 2, 3, 3, 1, 1);
        conv->init_weights(rng);
        auto m = head(std::move(conv), 3 * 6 * 6, 2, 1);
        track("conv2d", nn::gradcheck(*m, random_input({2, 2, 6, 6}, 2), {0, 1}));
    }
    {
        auto conv = std::make_unique<nn::ConstrainedConv2d<double>>("c", 1, 2);
        conv->init_weights(rng);
        auto m = head(std::move(conv), 2 * 4 * 4, 2, 3);
        track("constrained_conv2d", nn::gradcheck(*m, random_input({2, 1, 8, 8}, 4), {1, 0}));
    }
    {
        auto sep = std::make_unique<nn::SeparableConv2d<double>>("s", 2, 3, 3, 1);
        sep->init_weights(rng);
        auto m = head(std::move(sep), 3 * 5 * 5, 2, 5);
        track("separable_conv2d", nn::gradcheck(*m, random_input({2, 2, 5, 5}, 6), {0, 1}));
    }
    {
        auto m = head(std::make_unique<nn::MaxPool2d<double>>(2, 2), 2 * 3 * 3, 2, 7);
        Tensor<double> x({1, 2, 6, 6});
        for (std::size_t i = 0; i < x.v.size(); ++i)
            x.v[i] = static_cast<double>((i * 37) % 71) + 0.01 * static_cast<double>(i);
        track("maxpool2d", nn::gradcheck(*m, x, {1}));
    }
    {
        auto m = head(std::make_unique<nn::GlobalAvgPool<double>>(), 3, 2, 8);
        track("global_avg_pool", nn::gradcheck(*m, random_input({2, 3, 4, 4}, 9), {0, 1}));
    }
    {
        auto m = head(std::make_unique<nn::ReLU<double>>(), 6, 2, 10);
        Tensor<double> x = random_input({2, 6}, 11);
        for (double& v : x.v)
            v += v > 0 ? 0.5 : -0.5;
        track("relu", nn::gradcheck(*m, x, {0, 1}));
    }
    {
        auto m = std::make_unique<nn::Model<double>>();
        m->add(std::make_unique<nn::Linear<double>>("fc", 5, 3));
        Rng r2(12);
        m->init_weights(r2);
        track("linear", nn::gradcheck(*m, random_input({3, 5}, 13), {0, 1, 2}));
    }

    // full mini-models, double precision, at a reduced input size
    for (const auto family :
         {models::Family::Proposed, models::Family::Bayar2016, models::Family::XceptionMini}) {
        models::ModelConfig cfg;
        cfg.family = family;
        cfg.input_size = family == models::Family::Bayar2016 ? 44 : 32;
        cfg.labels = {"a", "b", "c", "d"};
        cfg.normalize();
        auto model = models::build_model<double>(cfg, 21);
        Tensor<double> x =
            random_input({1, cfg.input_channels, cfg.input_size, cfg.input_size}, 22);
        track(models::family_name(family), nn::gradcheck(*model, x, {2}, 8));
    }

    const double elapsed = seconds_since(start);
    report(1, worst < 1e-4 && elapsed < 120,
           fmt("gradcheck max rel err %.3g (worst: %s) in %.0fs (< 1e-4, < 120s)", worst,
               worst_at.c_str(), elapsed));
}

// ---- criterion 2: constraint invariant under training ----

void criterion_constraint() {
    auto model = std::make_unique<nn::Model<float>>();
    model->add(std::make_unique<nn::ConstrainedConv2d<float>>("c1", 3, 4));
    model->add(std::make_unique<nn::ReLU<float>>());
    model->add(std::make_unique<nn::GlobalAvgPool<float>>());
    model->add(std::make_unique<nn::Linear<float>>("fc", 4, 3));
    Rng rng(31);
    model->init_weights(rng);

    nn::TrainConfig cfg;
    cfg.momentum = 0.9;
    Rng data_rng(32);
    bool held = true;
    int failed_step = -1;
    const auto params = model->params();
    for (int step = 0; step < 1000 && held; ++step) {
        nn::Tensor<float> x({4, 3, 16, 16});
        for (float& v : x.v)
            v = static_cast<float>(data_rng.normal());
        std::vector<int> labels(4);
        for (int& l : labels)
            l = static_cast<int>(data_rng.uniform_below(3));
        model->zero_grad();
        auto res = nn::softmax_cross_entropy(model->forward(x, true), labels);
        model->backward(res.dlogits);
        nn::sgd_step(params, cfg, 0.01);
        model->project_constrained();
        if (!model->constrained_satisfied(1e-6)) {
            held = false;
            failed_step = step;
        }
    }

    // idempotence: a second projection must not move the weights
    auto* layer = static_cast<nn::ConstrainedConv2d<float>*>(model->layers()[0].get());
    const std::vector<float> before = layer->weight().w;
    layer->project();
    double drift = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i)
        drift = std::max(drift, std::abs(static_cast<double>(before[i]) - layer->weight().w[i]));

    report(2, held && drift <= 1e-6,
           held ? fmt("constraint held for 1000 optimizer steps; reprojection drift %.2g", drift)
                : fmt("constraint broke at step %d", failed_step));
}

// ---- criterion 3: manipulation oracles ----

void criterion_manipulations() {
    bool ok = true;
    std::string detail;

    // median vs brute force on 100 random images
    for (std::uint64_t seed = 0; seed < 100 && ok; ++seed) {
        Rng rng(seed);
        imaging::ImageBuffer img(16, 16, 1);
        for (auto& b : img.data)
            b = static_cast<std::uint8_t>(rng.uniform_below(256));
        const imaging::ImageBuffer got = manip::apply_median_filter(img, 5);
        for (int r = 0; r < 16 && ok; ++r)
            for (int c = 0; c < 16 && ok; ++c) {
                std::vector<std::uint8_t> window;
                for (int kr = -2; kr <= 2; ++kr)
                    for (int kc = -2; kc <= 2; ++kc)
                        window.push_back(
                            img.at(std::clamp(r + kr, 0, 15), std::clamp(c + kc, 0, 15), 0));
                std::sort(window.begin(), window.end());
                if (got.at(r, c, 0) != window[12]) {
                    ok = false;
                    detail = "median filter disagrees with the brute-force oracle";
                }
            }
    }

    // blur impulse response vs the kernel formula
    if (ok) {
        imaging::ImageBuffer img(11, 11, 1, 0);
        img.at(5, 5, 0) = 255;
        const auto out = manip::apply_gaussian_blur(img, 5, 1.1);
        const auto kernel = manip::gaussian_kernel(5, 1.1);
        for (int r = 0; r < 11 && ok; ++r)
            for (int c = 0; c < 11 && ok; ++c) {
                double expected = 0.0;
                if (std::abs(r - 5) <= 2 && std::abs(c - 5) <= 2)
                    expected = 255.0 * kernel[static_cast<std::size_t>((r - 3) * 5 + (c - 3))];
                if (out.at(r, c, 0) != static_cast<int>(std::floor(expected + 0.5))) {
                    ok = false;
                    detail = "blur impulse response deviates from the kernel";
                }
            }
    }

    // awgn sample statistics on >= 1e5 mid-gray pixels
    double mean = 0.0, std_dev = 0.0;
    if (ok) {
        const imaging::ImageBuffer img(400, 300, 1, 128);
        const auto noisy = manip::apply_awgn(img, 2.0, 7);
        double sum = 0, sq = 0;
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            const double d = double(noisy.data[i]) - 128.0;
            sum += d;
            sq += d * d;
        }
        mean = sum / double(img.data.size());
        std_dev = std::sqrt(sq / double(img.data.size()) - mean * mean);
        if (std::abs(mean) >= 0.1 || std_dev <= 1.8 || std_dev >= 2.2) {
            ok = false;
            detail = fmt("awgn stats out of bounds: mean %.3f std %.3f", mean, std_dev);
        }
    }

    // jpeg distortion monotone in quality
    if (ok) {
        Rng rng(11);
        const auto img = harness::synth_image(96, 120, rng);
        double prev = 1e30;
        for (int q : {10, 30, 50, 70, 90}) {
            const auto out = manip::jpeg_roundtrip(img, q);
            double mse = 0;
            for (std::size_t i = 0; i < img.data.size(); ++i) {
                const double d = double(img.data[i]) - double(out.data[i]);
                mse += d * d;
            }
            mse /= double(img.data.size());
            if (mse > prev) {
                ok = false;
                detail = fmt("jpeg mse not non-increasing at q=%d", q);
            }
            prev = mse;
        }
    }

    report(3, ok,
           ok ? fmt("median==oracle on 100 images; blur impulse exact; awgn mean %.3f std %.3f; "
                    "jpeg mse monotone",
                    mean, std_dev)
              : detail);
}

// ---- criteria 4..10: the experiment grid ----

struct Experiments {
    fs::path dir;
    harness::AppConfig app = harness::AppConfig::defaults();
    harness::DatasetManifest original, xerox1, dell, xerox2_pr;
    std::string clean_ckpt;
    harness::TrainOutcome clean_outcome;
    double clean_acc = 0.0;

    static constexpr int kParents = 216;
    static constexpr std::uint64_t kSeed = 20240814;

    explicit Experiments(fs::path work) : dir(std::move(work)) {}

    void prepare_datasets() {
        const auto corpus = dir / "corpus";
        if (!fs::exists(corpus / "img0000.png"))
            harness::generate_synth_corpus(corpus.string(), kParents, 192, 256, kSeed);
        const auto orig_manifest = dir / "original" / "manifest.txt";
        if (fs::exists(orig_manifest)) {
            original = harness::DatasetManifest::load(orig_manifest.string());
        } else {
            original = harness::generate_dataset(
                corpus.string(), false, 64, harness::BlockSelectionSpec::parse("all"),
                (dir / "original").string(), kSeed, app.manip_params);
        }

        auto chain = [&](const char* profile, const char* name,
                         const harness::DatasetManifest& src) {
            const auto manifest_path = dir / name / "manifest.txt";
            if (fs::exists(manifest_path))
                return harness::DatasetManifest::load(manifest_path.string());
            return harness::printscan_dataset(src, app.profile(profile), (dir / name).string(),
                                              kSeed);
        };
        xerox1 = chain("sim-xerox1", "sim-xerox1", original);
        dell = chain("sim-dell", "sim-dell", original);

        // printer-id needs only the pristine class from the third chain
        harness::DatasetManifest pr_only = original;
        pr_only.records.clear();
        for (const auto& r : original.records)
            if (r.label == "pr")
                pr_only.records.push_back(r);
        xerox2_pr = chain("sim-xerox2", "sim-xerox2-pr", pr_only);
    }

    nn::TrainConfig train_cfg(models::Family family, int epochs) const {
        nn::TrainConfig tc = models::family_train_defaults(family);
        tc.epochs = epochs;
        tc.seed = kSeed;
        return tc;
    }

    harness::TrainOutcome train_clean(const std::string& ckpt) {
        models::ModelConfig mc;
        mc.family = models::Family::Proposed;
        mc.input_size = 64;
        mc.normalize();
        return harness::train(mc, original, train_cfg(mc.family, 8), ckpt);
    }
};

void run_experiments(Experiments& ex) {
    // criterion 4: baseline detection
    {
        const auto start = Clock::now();
        ex.prepare_datasets();
        ex.clean_ckpt = (ex.dir / "proposed-clean.ckpt").string();
        ex.clean_outcome = ex.train_clean(ex.clean_ckpt);
        ex.clean_acc = ex.clean_outcome.best_val_acc;
        const double elapsed = seconds_since(start);
        report(4, ex.clean_acc >= 0.85 && elapsed < 900,
               fmt("proposed-mini on clean 4c: val accuracy %.4f in %.0fs "
                   "(>= 0.85, < 900s; %d parents, %zu blocks)",
                   ex.clean_acc, elapsed, Experiments::kParents, ex.original.records.size()));
    }

    std::vector<harness::EvalReport> reports;

    // criterion 5: print/scan attack (the harshest chain)
    {
        const auto rep = harness::evaluate(ex.clean_ckpt, ex.dell, "sim-dell attack");
        reports.push_back(rep);
        const double drop = ex.clean_acc - rep.accuracy;
        report(5, rep.accuracy <= 0.40 && drop >= 0.35,
               fmt("print/scan attack: accuracy %.4f (<= 0.40), drop %.1f points (>= 35)",
                   rep.accuracy, drop * 100));

        // criterion 6: jpeg attack sits between
        const auto jpeg_dir = ex.dir / "jpeg80";
        harness::DatasetManifest jq;
        if (fs::exists(jpeg_dir / "manifest.txt"))
            jq = harness::DatasetManifest::load((jpeg_dir / "manifest.txt").string());
        else
            jq = harness::printscan_dataset(ex.original, ex.app.profile("jpeg:80"),
                                            jpeg_dir.string(), Experiments::kSeed);
        const auto jrep = harness::evaluate(ex.clean_ckpt, jq, "jpeg80 attack");
        reports.push_back(jrep);
        report(6, rep.accuracy < jrep.accuracy && jrep.accuracy < ex.clean_acc,
               fmt("jpeg-80 attack accuracy %.4f strictly between print/scan %.4f and clean %.4f",
                   jrep.accuracy, rep.accuracy, ex.clean_acc));
    }

    // criterion 7: defense by retraining, proposed vs bayar
    double own_acc = 0.0;
    const std::string defense_ckpt = (ex.dir / "proposed-xerox1.ckpt").string();
    {
        models::ModelConfig mp;
        mp.family = models::Family::Proposed;
        mp.input_size = 64;
        mp.normalize();
        const auto prop = harness::train(mp, ex.xerox1, ex.train_cfg(mp.family, 28), defense_ckpt);

        models::ModelConfig mb;
        mb.family = models::Family::Bayar2016;
        mb.input_size = 64;
        mb.normalize();
        const auto bayar = harness::train(mb, ex.xerox1, ex.train_cfg(mb.family, 28),
                                          (ex.dir / "bayar-xerox1.ckpt").string());

        own_acc = prop.best_val_acc;
        const auto own_rep = harness::evaluate(defense_ckpt, ex.xerox1, "sim-xerox1 retrained");
        reports.push_back(own_rep);
        report(7, own_acc >= 0.60 && own_acc >= bayar.best_val_acc - 0.02,
               fmt("retrained on sim-xerox1: proposed %.4f (>= 0.60), bayar2016 %.4f "
                   "(proposed >= bayar - 2 points)",
                   own_acc, bayar.best_val_acc));
    }

    // criterion 8: cross-printer gap
    {
        const auto cross = harness::evaluate(defense_ckpt, ex.dell, "sim-dell cross");
        reports.push_back(cross);
        const double gap = own_acc - cross.accuracy;
        report(8, gap >= 0.10,
               fmt("cross-printer: sim-xerox1 %.4f vs sim-dell %.4f, gap %.1f points (>= 10)",
                   own_acc, cross.accuracy, gap * 100));
    }

    // criterion 9: printer identification
    {
        const auto start = Clock::now();
        models::ModelConfig mc;
        mc.family = models::Family::Proposed;
        mc.input_size = 64;
        mc.normalize();
        nn::TrainConfig tc = ex.train_cfg(mc.family, 24);
        tc.lr0 = 0.005;  // the three-screen task needs the gentler rate
        tc.patience = 8;
        const auto result = harness::printer_id_experiment(
            {ex.xerox1, ex.dell, ex.xerox2_pr}, mc, tc,
            (ex.dir / "printer-id.ckpt").string());
        reports.push_back(result.report);
        const double elapsed = seconds_since(start);
        report(9, result.report.accuracy >= 0.90 && elapsed < 900,
               fmt("printer identification: val accuracy %.4f in %.0fs (>= 0.90, < 900s)",
                   result.report.accuracy, elapsed));
    }

    // criterion 10: bit-exact reproducibility of (4)
    {
        const auto outcome2 = ex.train_clean((ex.dir / "proposed-clean-repeat.ckpt").string());
        bool identical = outcome2.history.size() == ex.clean_outcome.history.size();
        for (std::size_t i = 0; identical && i < outcome2.history.size(); ++i)
            identical = outcome2.history[i] == ex.clean_outcome.history[i];
        const bool csv_match = harness::history_csv_string(outcome2.history) ==
                               harness::history_csv_string(ex.clean_outcome.history);
        report(10, identical && csv_match,
               identical ? "repeat run reproduced the accuracy history bit-exactly"
                         : "repeat run diverged from the first history");
    }

    harness::emit_report(reports, (ex.dir / "reports").string());
}

} // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    const char* env_dir = std::getenv("PSF_ACCEPT_DIR");
    fs::path work;
    if (env_dir && *env_dir) {
        work = fs::path(env_dir);
    } else {
        work = fs::temp_directory_path() / ("psf-acceptance-" + std::to_string(::getpid()));
    }
    fs::create_directories(work);
    std::printf("work dir: %s\n", work.string().c_str());

    try {
        criterion_gradients();
        criterion_constraint();
        criterion_manipulations();
        Experiments ex(work);
        run_experiments(ex);
    } catch (const std::exception& e) {
        std::printf("FAIL suite aborted: %s\n", e.what());
        ++g_failures;
    }

    if (!env_dir) {
        std::error_code ec;
        fs::remove_all(work, ec);
    }
    std::printf("================\n%s (%d failure%s)\n",
                g_failures ? "FAILED" : "all criteria passed", g_failures,
                g_failures == 1 ? "" : "s");
    return g_failures ? 1 : 0;
}
