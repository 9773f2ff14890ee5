// psf — print/scan forensics workbench CLI.
//
// Subcommands: synth, dataset gen|printscan|composite, train, eval,
// cross-eval, printer-id, report. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psf/config.hpp"
#include "psf/dataset.hpp"
#include "psf/error.hpp"
#include "psf/models.hpp"
#include "psf/trainer.hpp"

namespace fs = std::filesystem;
using namespace psf;

namespace {

harness::AppConfig load_app_config(const std::string& path) {
    return path.empty() ? harness::AppConfig::defaults() : harness::AppConfig::from_file(path);
}

std::vector<harness::DatasetManifest> load_manifests(const std::vector<std::string>& paths) {
    std::vector<harness::DatasetManifest> out;
    out.reserve(paths.size());
    for (const auto& p : paths)
        out.push_back(harness::DatasetManifest::load(p));
    return out;
}

std::string manifest_display_name(const std::string& path) {
    const fs::path dir = fs::absolute(fs::path(path)).parent_path();
    return dir.filename().string();
}

nn::TrainConfig train_flags_to_config(const harness::AppConfig& app, models::Family family,
                                      int epochs, int batch, double lr, double momentum,
                                      double weight_decay, const std::string& schedule,
                                      int patience, std::uint64_t seed) {
    nn::TrainConfig cfg = app.train_for(family);
    if (epochs > 0) cfg.epochs = epochs;
    if (batch > 0) cfg.batch_size = batch;
    if (lr > 0) cfg.lr0 = lr;
    if (momentum >= 0) cfg.momentum = momentum;
    if (weight_decay >= 0) cfg.weight_decay = weight_decay;
    if (patience > 0) cfg.patience = patience;
    if (!schedule.empty()) {
        if (schedule == "step") {
            cfg.schedule = nn::ScheduleKind::Step;
        } else if (schedule == "poly") {
            cfg.schedule = nn::ScheduleKind::Polynomial;
        } else if (schedule.rfind("step:", 0) == 0) {
            cfg.schedule = nn::ScheduleKind::Step;
            const auto rest = schedule.substr(5);
            const auto colon = rest.find(':');
            if (colon == std::string::npos)
                throw UsageError("schedule step:<gamma>:<step_size>");
            cfg.step_gamma = std::stod(rest.substr(0, colon));
            cfg.step_size = std::stoi(rest.substr(colon + 1));
        } else if (schedule.rfind("poly:", 0) == 0) {
            cfg.schedule = nn::ScheduleKind::Polynomial;
            cfg.poly_power = std::stod(schedule.substr(5));
        } else {
            throw UsageError("unknown schedule: " + schedule);
        }
    }
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"print/scan attack workbench for image manipulation detectors"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key-value config file (defaults built in)");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic source image corpus");
    std::string synth_out;
    int synth_count = 16, synth_h = 192, synth_w = 256;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--count", synth_count, "number of images");
    synth->add_option("--height", synth_h, "image height");
    synth->add_option("--width", synth_w, "image width");
    synth->add_option("--seed", synth_seed, "RNG seed");

    // ---- dataset ----
    auto* dataset = app.add_subcommand("dataset", "dataset generation commands");
    dataset->require_subcommand(1);

    auto* gen = dataset->add_subcommand("gen", "manipulate and block a source corpus");
    std::string gen_source, gen_out, gen_classes = "4c", gen_selection = "all";
    int gen_block = 64;
    std::uint64_t gen_seed = 0;
    bool gen_no_full = false;
    gen->add_option("--source", gen_source, "source image directory")->required();
    gen->add_option("--out", gen_out, "output dataset directory")->required();
    gen->add_option("--classes", gen_classes, "4c or 6c")->check(CLI::IsMember({"4c", "6c"}));
    gen->add_option("--block-size", gen_block, "block size in pixels");
    gen->add_option("--selection", gen_selection, "all or central:<k>");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_flag("--no-full", gen_no_full, "do not keep full manipulated images");

    auto* pscan = dataset->add_subcommand("printscan", "send a dataset through a printer chain");
    std::string pscan_manifest, pscan_profile, pscan_out;
    std::uint64_t pscan_seed = 0;
    pscan->add_option("--manifest", pscan_manifest, "input manifest")->required();
    pscan->add_option("--profile", pscan_profile, "profile name or jpeg:<quality>")->required();
    pscan->add_option("--out", pscan_out, "output dataset directory")->required();
    pscan->add_option("--seed", pscan_seed, "RNG seed");

    auto* comp = dataset->add_subcommand("composite", "combine printer datasets");
    std::vector<std::string> comp_manifests;
    std::string comp_out, comp_original;
    std::uint64_t comp_seed = 0;
    comp->add_option("--manifests", comp_manifests, "input manifests")->required()->delimiter(',');
    comp->add_option("--out", comp_out, "output directory")->required();
    comp->add_option("--original", comp_original,
                     "original dataset manifest; adds one printer's worth of original blocks");
    comp->add_option("--seed", comp_seed, "RNG seed");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a detector on a dataset");
    std::string train_manifest, train_model = "proposed", train_ckpt, train_history;
    int train_epochs = 0, train_batch = 0, train_patience = 0;
    double train_lr = 0, train_momentum = -1, train_wd = -1;
    double train_depth = 0.25, train_width = 0.25;
    std::string train_schedule;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train_cmd->add_option("--model", train_model, "bayar2016 | xception_mini | proposed");
    train_cmd->add_option("--out", train_ckpt, "output checkpoint path")->required();
    train_cmd->add_option("--history", train_history, "per-epoch history CSV path");
    train_cmd->add_option("--epochs", train_epochs, "max epochs");
    train_cmd->add_option("--batch", train_batch, "batch size");
    train_cmd->add_option("--lr", train_lr, "initial learning rate");
    train_cmd->add_option("--momentum", train_momentum, "SGD momentum");
    train_cmd->add_option("--weight-decay", train_wd, "weight decay");
    train_cmd->add_option("--schedule", train_schedule,
                          "step | poly | step:<gamma>:<size> | poly:<power>");
    train_cmd->add_option("--patience", train_patience, "early-stop patience, epochs");
    train_cmd->add_option("--depth-scale", train_depth, "fraction of full depth");
    train_cmd->add_option("--width-scale", train_width, "fraction of full width");
    train_cmd->add_option("--seed", train_seed, "RNG seed");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_manifest, eval_name, eval_out;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval_cmd->add_option("--name", eval_name, "dataset display name");
    eval_cmd->add_option("--out", eval_out, "write the eval report to this path");

    // ---- cross-eval ----
    auto* cross = app.add_subcommand("cross-eval", "evaluate one checkpoint on several datasets");
    std::string cross_ckpt, cross_out;
    std::vector<std::string> cross_manifests, cross_names;
    cross->add_option("--checkpoint", cross_ckpt, "checkpoint path")->required();
    cross->add_option("--manifests", cross_manifests, "dataset manifests")->required()->delimiter(',');
    cross->add_option("--names", cross_names, "display names, one per manifest")->delimiter(',');
    cross->add_option("--out", cross_out, "directory for CSV tables and heat maps");

    // ---- printer-id ----
    auto* pid = app.add_subcommand("printer-id", "train printer identification on pristine blocks");
    std::vector<std::string> pid_manifests;
    std::string pid_model = "proposed", pid_ckpt, pid_report_dir, pid_history;
    int pid_epochs = 0, pid_batch = 0, pid_patience = 0;
    double pid_lr = 0;
    std::uint64_t pid_seed = 0;
    pid->add_option("--manifests", pid_manifests, "one printed-and-scanned dataset per printer")
        ->required()
        ->delimiter(',');
    pid->add_option("--model", pid_model, "model family");
    pid->add_option("--out", pid_ckpt, "output checkpoint path")->required();
    pid->add_option("--report", pid_report_dir, "directory for the evaluation report");
    pid->add_option("--history", pid_history, "per-epoch history CSV path");
    pid->add_option("--epochs", pid_epochs, "max epochs");
    pid->add_option("--batch", pid_batch, "batch size");
    pid->add_option("--lr", pid_lr, "initial learning rate");
    pid->add_option("--patience", pid_patience, "early-stop patience");
    pid->add_option("--seed", pid_seed, "RNG seed");

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "render saved eval reports to CSV + heat maps");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report_cmd->add_option("--reports", report_inputs, "saved report files")->required()->delimiter(',');
    report_cmd->add_option("--out", report_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const harness::AppConfig cfg = load_app_config(config_path);

    if (*synth) {
        harness::generate_synth_corpus(synth_out, synth_count, synth_h, synth_w, synth_seed);
        std::printf("wrote %d images to %s\n", synth_count, synth_out.c_str());
        return 0;
    }

    if (*gen) {
        const auto manifest = harness::generate_dataset(
            gen_source, gen_classes == "6c", gen_block,
            harness::BlockSelectionSpec::parse(gen_selection), gen_out, gen_seed,
            cfg.manip_params, !gen_no_full);
        std::printf("dataset: %zu blocks, %zu labels -> %s\n", manifest.records.size(),
                    manifest.distinct_labels().size(), gen_out.c_str());
        return 0;
    }

    if (*pscan) {
        const auto input = harness::DatasetManifest::load(pscan_manifest);
        const auto manifest =
            harness::printscan_dataset(input, cfg.profile(pscan_profile), pscan_out, pscan_seed);
        std::printf("printscan dataset: %zu blocks -> %s\n", manifest.records.size(),
                    pscan_out.c_str());
        return 0;
    }

    if (*comp) {
        std::optional<harness::DatasetManifest> original;
        if (!comp_original.empty())
            original = harness::DatasetManifest::load(comp_original);
        const auto manifest = harness::build_composite(load_manifests(comp_manifests), original,
                                                       comp_out, comp_seed);
        std::printf("composite dataset: %zu blocks -> %s\n", manifest.records.size(),
                    comp_out.c_str());
        return 0;
    }

    if (*train_cmd) {
        const auto manifest = harness::DatasetManifest::load(train_manifest);
        models::ModelConfig mc;
        mc.family = models::family_from_name(train_model);
        mc.input_size = manifest.block_size;
        mc.depth_scale = train_depth;
        mc.width_scale = train_width;
        mc.normalize();
        const nn::TrainConfig tc =
            train_flags_to_config(cfg, mc.family, train_epochs, train_batch, train_lr,
                                  train_momentum, train_wd, train_schedule, train_patience,
                                  train_seed);
        const auto outcome = harness::train(mc, manifest, tc, train_ckpt, train_history);
        std::printf("trained %s: best val accuracy %.4f at epoch %d (%zu epochs run)\n",
                    train_model.c_str(), outcome.best_val_acc, outcome.best_epoch,
                    outcome.history.size());
        return 0;
    }

    if (*eval_cmd) {
        const auto manifest = harness::DatasetManifest::load(eval_manifest);
        const std::string name =
            eval_name.empty() ? manifest_display_name(eval_manifest) : eval_name;
        const auto report = harness::evaluate(eval_ckpt, manifest, name);
        std::printf("%s: accuracy %.4f over %ld blocks\n", name.c_str(), report.accuracy,
                    report.total());
        if (!eval_out.empty())
            report.save(eval_out);
        return 0;
    }

    if (*cross) {
        if (cross_names.empty())
            for (const auto& m : cross_manifests)
                cross_names.push_back(manifest_display_name(m));
        const auto result =
            harness::cross_eval(cross_ckpt, load_manifests(cross_manifests), cross_names);
        for (const auto& [name, acc] : result.rows)
            std::printf("%-24s %.4f\n", name.c_str(), acc);
        if (!cross_out.empty())
            harness::emit_report(result.reports, cross_out);
        return 0;
    }

    if (*pid) {
        models::ModelConfig mc;
        mc.family = models::family_from_name(pid_model);
        const auto manifests = load_manifests(pid_manifests);
        mc.input_size = manifests.empty() ? 64 : manifests[0].block_size;
        mc.normalize();
        const nn::TrainConfig tc = train_flags_to_config(cfg, mc.family, pid_epochs, pid_batch,
                                                         pid_lr, -1, -1, "", pid_patience,
                                                         pid_seed);
        const auto result =
            harness::printer_id_experiment(manifests, mc, tc, pid_ckpt, pid_history);
        std::printf("printer-id: val accuracy %.4f\n", result.report.accuracy);
        if (!pid_report_dir.empty())
            harness::emit_report({result.report}, pid_report_dir);
        return 0;
    }

    if (*report_cmd) {
        std::vector<harness::EvalReport> reports;
        for (const auto& path : report_inputs)
            reports.push_back(harness::EvalReport::load(path));
        harness::emit_report(reports, report_out);
        std::printf("wrote %zu reports to %s\n", reports.size(), report_out.c_str());
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
