#include "psf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "psf/error.hpp"

namespace fs = std::filesystem;

namespace psf::harness {

using models::ModelConfig;
using nn::Tensor;
using nn::TrainConfig;

namespace {

struct LoadedSplit {
    std::vector<imaging::ImageBuffer> blocks;
    std::vector<int> labels;
};

struct LoadedData {
    std::vector<std::string> labels;  // sorted distinct label names
    LoadedSplit train;
    LoadedSplit val;
};

LoadedData load_blocks(const DatasetManifest& manifest) {
    LoadedData data;
    data.labels = manifest.distinct_labels();
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        index[data.labels[i]] = static_cast<int>(i);

    for (const auto& r : manifest.records) {
        LoadedSplit& split = r.split == "train" ? data.train : data.val;
        split.blocks.push_back(imaging::load_image(manifest.resolve(r.block_path)));
        split.labels.push_back(index.at(r.label));
        const auto& b = split.blocks.back();
        if (b.height != manifest.block_size || b.width != manifest.block_size)
            throw DataError("block does not match manifest block_size: " + r.block_path);
    }
    return data;
}

// Batch of blocks -> (B,C,S,S) in [0,1]; 3-channel blocks feeding a
// 1-channel model are reduced to the green layer.
Tensor<float> make_batch(const std::vector<imaging::ImageBuffer>& blocks,
                         const std::vector<std::size_t>& ids, const ModelConfig& cfg) {
    const int s = cfg.input_size;
    const int ch = cfg.input_channels;
    Tensor<float> x({static_cast<int>(ids.size()), ch, s, s});
    const std::size_t hw = static_cast<std::size_t>(s) * s;
    for (std::size_t bi = 0; bi < ids.size(); ++bi) {
        const imaging::ImageBuffer& img = blocks[ids[bi]];
        float* dst = &x.v[bi * ch * hw];
        if (img.channels == ch) {
            for (std::size_t i = 0; i < hw; ++i)
                for (int c = 0; c < ch; ++c)
                    dst[static_cast<std::size_t>(c) * hw + i] =
                        models::normalize_sample(img.data[i * ch + c]);
        } else if (img.channels == 3 && ch == 1) {
            for (std::size_t i = 0; i < hw; ++i)
                dst[i] = models::normalize_sample(img.data[i * 3 + 1]);
        } else {
            throw DataError("block channels do not match model input");
        }
    }
    return x;
}

double eval_accuracy(nn::Model<float>& model, const ModelConfig& cfg, const LoadedSplit& split,
                     int batch_size, std::vector<int>* predictions = nullptr) {
    long correct = 0;
    std::vector<std::size_t> ids;
    if (predictions)
        predictions->clear();
    for (std::size_t start = 0; start < split.blocks.size(); start += static_cast<std::size_t>(batch_size)) {
        ids.clear();
        for (std::size_t i = start; i < std::min(split.blocks.size(), start + batch_size); ++i)
            ids.push_back(i);
        Tensor<float> logits = model.forward(make_batch(split.blocks, ids, cfg), false);
        const int k = logits.dim(1);
        for (std::size_t bi = 0; bi < ids.size(); ++bi) {
            const float* row = &logits.v[bi * static_cast<std::size_t>(k)];
            int arg = 0;
            for (int i = 1; i < k; ++i)
                if (row[i] > row[arg])
                    arg = i;
            if (predictions)
                predictions->push_back(arg);
            correct += arg == split.labels[ids[bi]];
        }
    }
    return split.blocks.empty() ? 0.0 : static_cast<double>(correct) / split.blocks.size();
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name)
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
    return out;
}

// Four-stop color ramp for the confusion heat maps.
void ramp_color(double t, std::uint8_t rgb[3]) {
    static const double stops[4][3] = {
        {15, 15, 60}, {120, 40, 110}, {235, 105, 40}, {252, 250, 160}};
    t = std::clamp(t, 0.0, 1.0) * 3.0;
    const int i = std::min(2, static_cast<int>(t));
    const double f = t - i;
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<std::uint8_t>(
            std::lround(stops[i][c] * (1.0 - f) + stops[i + 1][c] * f));
}

void write_heatmap(const EvalReport& report, const std::string& path) {
    const int n = static_cast<int>(report.labels.size());
    const int cell = 48;
    imaging::ImageBuffer img(n * cell, n * cell, 3);
    long max_count = 1;
    for (const auto& row : report.confusion)
        for (long v : row)
            max_count = std::max(max_count, v);
    for (int tr = 0; tr < n; ++tr) {
        for (int pc = 0; pc < n; ++pc) {
            std::uint8_t rgb[3];
            ramp_color(static_cast<double>(report.confusion[tr][pc]) / max_count, rgb);
            for (int r = 0; r < cell; ++r)
                for (int c = 0; c < cell; ++c)
                    for (int ch = 0; ch < 3; ++ch)
                        img.at(tr * cell + r, pc * cell + c, ch) = rgb[ch];
        }
    }
    imaging::save_image(img, path);
}

std::string format_csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---- EvalReport ----

long EvalReport::total() const {
    long t = 0;
    for (const auto& row : confusion)
        for (long v : row)
            t += v;
    return t;
}

void EvalReport::finalize() {
    long trace = 0;
    per_class_recall.assign(labels.size(), 0.0);
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        long row_sum = 0;
        for (long v : confusion[i])
            row_sum += v;
        trace += confusion[i][i];
        per_class_recall[i] = row_sum > 0 ? static_cast<double>(confusion[i][i]) / row_sum : 0.0;
    }
    const long t = total();
    accuracy = t > 0 ? static_cast<double>(trace) / t : 0.0;
}

std::string EvalReport::serialize() const {
    std::ostringstream out;
    out << "psf-report 1\n";
    out << "dataset=" << dataset_name << "\n";
    out << "model=" << model_name << "\n";
    out << "labels=";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << (i ? "," : "") << labels[i];
    out << "\n";
    out << "accuracy=" << format_csv_double(accuracy) << "\n";
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        out << "confusion " << labels[i];
        for (long v : confusion[i])
            out << " " << v;
        out << "\n";
    }
    return out.str();
}

void EvalReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DataError("report: cannot write " + path);
    out << serialize();
}

EvalReport EvalReport::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError("report: cannot open " + path);
    EvalReport rep;
    std::string line;
    if (!std::getline(in, line) || line != "psf-report 1")
        throw CorruptStreamError("report: bad header in " + path);
    while (std::getline(in, line)) {
        if (line.rfind("dataset=", 0) == 0) {
            rep.dataset_name = line.substr(8);
        } else if (line.rfind("model=", 0) == 0) {
            rep.model_name = line.substr(6);
        } else if (line.rfind("labels=", 0) == 0) {
            std::istringstream ls(line.substr(7));
            std::string label;
            while (std::getline(ls, label, ','))
                rep.labels.push_back(label);
        } else if (line.rfind("confusion ", 0) == 0) {
            std::istringstream cs(line.substr(10));
            std::string label;
            cs >> label;
            std::vector<long> row;
            long v;
            while (cs >> v)
                row.push_back(v);
            rep.confusion.push_back(std::move(row));
        }
    }
    if (rep.confusion.size() != rep.labels.size())
        throw CorruptStreamError("report: confusion rows do not match labels in " + path);
    rep.finalize();
    return rep;
}

// ---- training ----

TrainOutcome train(ModelConfig model_cfg, const DatasetManifest& manifest,
                   TrainConfig train_cfg, const std::string& ckpt_path,
                   const std::string& history_csv_path) {
    train_cfg.validate();
    if (model_cfg.labels.empty())
        model_cfg.labels = manifest.distinct_labels();
    else if (model_cfg.labels != manifest.distinct_labels())
        throw DataError("train: model labels do not match manifest labels");
    model_cfg.normalize();
    if (model_cfg.input_size != manifest.block_size)
        throw DataError("train: model input_size does not match manifest block_size");
    model_cfg.validate();

    const LoadedData data = load_blocks(manifest);
    if (data.train.blocks.empty())
        throw DataError("train: manifest has no training records");
    if (data.val.blocks.empty())
        throw DataError("train: manifest has no validation records");

    auto model = models::build_model<float>(model_cfg, train_cfg.seed);

    const long iters_per_epoch =
        (static_cast<long>(data.train.blocks.size()) + train_cfg.batch_size - 1) /
        train_cfg.batch_size;
    if (train_cfg.poly_max_iter <= 0)
        train_cfg.poly_max_iter = iters_per_epoch * train_cfg.epochs;

    TrainOutcome outcome;
    outcome.config = model_cfg;
    std::vector<std::vector<float>> best_params;
    long iter = 0;

    std::vector<std::size_t> order(data.train.blocks.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(train_cfg.seed, 0xe90c + static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        long correct = 0;
        double epoch_lr = lr_schedule(train_cfg, epoch);

        std::vector<std::size_t> ids;
        std::vector<int> batch_labels;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(train_cfg.batch_size)) {
            ids.clear();
            batch_labels.clear();
            for (std::size_t i = start;
                 i < std::min(order.size(), start + train_cfg.batch_size); ++i) {
                ids.push_back(order[i]);
                batch_labels.push_back(data.train.labels[order[i]]);
            }

            const double lr = train_cfg.schedule == nn::ScheduleKind::Polynomial
                                  ? lr_schedule(train_cfg, iter)
                                  : epoch_lr;
            try {
                Tensor<float> logits =
                    model->forward(make_batch(data.train.blocks, ids, model_cfg), true);
                nn::LossResult<float> res = nn::softmax_cross_entropy(logits, batch_labels);
                model->zero_grad();
                model->backward(res.dlogits);
                nn::sgd_step(model->params(), train_cfg, lr);
                model->project_constrained();

                loss_sum += res.loss * static_cast<double>(ids.size());
                for (std::size_t bi = 0; bi < ids.size(); ++bi)
                    correct += res.predictions[bi] == batch_labels[bi];
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", iteration " + std::to_string(iter) + ": " + e.what());
            }
            ++iter;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = train_cfg.schedule == nn::ScheduleKind::Polynomial
                       ? lr_schedule(train_cfg, iter - 1)
                       : epoch_lr;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.val_acc = eval_accuracy(*model, model_cfg, data.val, train_cfg.batch_size);
        outcome.history.push_back(stats);

        if (stats.val_acc > outcome.best_val_acc || outcome.best_epoch < 0) {
            outcome.best_val_acc = stats.val_acc;
            outcome.best_epoch = epoch;
            best_params.clear();
            for (nn::Param<float>* p : model->params())
                best_params.push_back(p->w);
        }
        if (epoch - outcome.best_epoch >= train_cfg.patience)
            break;
    }

    // Restore the best-validation weights before saving.
    const auto params = model->params();
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i]->w = best_params[i];

    if (!ckpt_path.empty())
        models::save_checkpoint(ckpt_path, model_cfg, *model);
    if (!history_csv_path.empty())
        write_history_csv(outcome.history, history_csv_path);
    return outcome;
}

EvalReport evaluate_model(nn::Model<float>& model, const ModelConfig& cfg,
                          const DatasetManifest& manifest, const std::string& dataset_name) {
    const auto manifest_labels = manifest.distinct_labels();
    if (manifest_labels != cfg.labels)
        throw DataError("evaluate: manifest labels do not match checkpoint labels");
    if (cfg.input_size != manifest.block_size)
        throw DataError("evaluate: block geometry does not match checkpoint");

    const LoadedData data = load_blocks(manifest);
    if (data.val.blocks.empty())
        throw DataError("evaluate: manifest has no validation records");

    std::vector<int> predictions;
    eval_accuracy(model, cfg, data.val, 32, &predictions);

    EvalReport report;
    report.dataset_name = dataset_name;
    report.model_name = family_name(cfg.family);
    report.labels = cfg.labels;
    report.confusion.assign(cfg.labels.size(), std::vector<long>(cfg.labels.size(), 0));
    for (std::size_t i = 0; i < predictions.size(); ++i)
        ++report.confusion[static_cast<std::size_t>(data.val.labels[i])]
                          [static_cast<std::size_t>(predictions[i])];
    report.finalize();
    return report;
}

EvalReport evaluate(const std::string& ckpt_path, const DatasetManifest& manifest,
                    const std::string& dataset_name) {
    models::Checkpoint ckpt = models::load_checkpoint(ckpt_path);
    return evaluate_model(*ckpt.model, ckpt.config, manifest, dataset_name);
}

CrossEvalResult cross_eval(const std::string& ckpt_path,
                           const std::vector<DatasetManifest>& manifests,
                           const std::vector<std::string>& names) {
    if (manifests.size() != names.size())
        throw UsageError("cross_eval: one name per manifest required");
    models::Checkpoint ckpt = models::load_checkpoint(ckpt_path);
    CrossEvalResult result;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        EvalReport rep = evaluate_model(*ckpt.model, ckpt.config, manifests[i], names[i]);
        result.rows.emplace_back(names[i], rep.accuracy);
        result.reports.push_back(std::move(rep));
    }
    return result;
}

PrinterIdResult printer_id_experiment(const std::vector<DatasetManifest>& per_profile,
                                      ModelConfig model_cfg, TrainConfig train_cfg,
                                      const std::string& ckpt_path,
                                      const std::string& history_csv_path) {
    if (per_profile.size() < 2)
        throw UsageError("printer-id: need at least 2 profile datasets");

    DatasetManifest combined;
    combined.seed = train_cfg.seed;
    combined.class_set = "printer-id";
    combined.block_size = per_profile[0].block_size;
    combined.selection = per_profile[0].selection;
    combined.dir = per_profile[0].dir;

    for (const auto& m : per_profile) {
        if (m.block_size != combined.block_size)
            throw DataError("printer-id: block sizes differ between datasets");
        std::size_t pristine = 0;
        for (const auto& r : m.records) {
            if (r.label != "pr")
                continue;
            if (r.source == "original")
                throw DataError("printer-id: dataset '" + m.dir + "' is not printed-and-scanned");
            ManifestRecord nr = r;
            nr.label = r.source;  // classify by printer, not by manipulation
            nr.block_path = m.resolve(r.block_path);
            combined.records.push_back(std::move(nr));
            ++pristine;
        }
        if (pristine == 0)
            throw DataError("printer-id: dataset under '" + m.dir + "' has no pristine blocks");
    }

    PrinterIdResult result;
    result.outcome = train(model_cfg, combined, train_cfg, ckpt_path, history_csv_path);

    models::Checkpoint ckpt = models::load_checkpoint(ckpt_path);
    result.report = evaluate_model(*ckpt.model, ckpt.config, combined, "printer-id");
    return result;
}

void emit_report(const std::vector<EvalReport>& reports, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream acc((fs::path(out_dir) / "accuracy.csv").string(), std::ios::trunc);
    if (!acc)
        throw DataError("report: cannot write accuracy.csv");
    acc << "dataset,model,accuracy\n";
    for (const auto& rep : reports) {
        acc << rep.dataset_name << "," << rep.model_name << ","
            << format_csv_double(rep.accuracy) << "\n";

        const std::string stem = sanitize(rep.dataset_name) + "_" + sanitize(rep.model_name);
        std::ofstream conf((fs::path(out_dir) / ("confusion_" + stem + ".csv")).string(),
                           std::ios::trunc);
        conf << "true\\pred";
        for (const auto& label : rep.labels)
            conf << "," << label;
        conf << "\n";
        for (std::size_t i = 0; i < rep.confusion.size(); ++i) {
            conf << rep.labels[i];
            for (long v : rep.confusion[i])
                conf << "," << v;
            conf << "\n";
        }
        write_heatmap(rep, (fs::path(out_dir) / ("heatmap_" + stem + ".png")).string());
    }
}

std::string history_csv_string(const std::vector<EpochStats>& history) {
    std::ostringstream out;
    out << "epoch,lr,train_loss,train_acc,val_acc\n";
    for (const auto& s : history) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", s.epoch, s.lr,
                      s.train_loss, s.train_acc, s.val_acc);
        out << buf;
    }
    return out.str();
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw DataError("history: cannot write " + path);
    out << history_csv_string(history);
}

} // namespace psf::harness
