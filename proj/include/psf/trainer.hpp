#ifndef PSF_TRAINER_HPP
#define PSF_TRAINER_HPP

#include <string>
#include <vector>

#include "psf/dataset.hpp"
#include "psf/models.hpp"
#include "psf/nn/optim.hpp"

namespace psf::harness {

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;

    bool operator==(const EpochStats&) const = default;
};

struct TrainOutcome {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    models::ModelConfig config;
};

struct EvalReport {
    std::string dataset_name;
    std::string model_name;
    std::vector<std::string> labels;
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    double accuracy = 0.0;
    std::vector<double> per_class_recall;

    long total() const;
    // Recomputes accuracy and recall from the confusion counts.
    void finalize();

    std::string serialize() const;
    void save(const std::string& path) const;
    static EvalReport load(const std::string& path);
};

// Trains on split=train, evaluates split=val each epoch, stops early when
// validation accuracy has not improved for `patience` epochs, and writes the
// best-validation checkpoint to ckpt_path. Deterministic per seed.
TrainOutcome train(models::ModelConfig model_cfg, const DatasetManifest& manifest,
                   nn::TrainConfig train_cfg, const std::string& ckpt_path,
                   const std::string& history_csv_path = "");

// Validation-split evaluation of a saved checkpoint.
EvalReport evaluate(const std::string& ckpt_path, const DatasetManifest& manifest,
                    const std::string& dataset_name);

EvalReport evaluate_model(nn::Model<float>& model, const models::ModelConfig& cfg,
                          const DatasetManifest& manifest, const std::string& dataset_name);

// One evaluation per manifest; returns (dataset_name, accuracy) rows plus
// the full reports.
struct CrossEvalResult {
    std::vector<std::pair<std::string, double>> rows;
    std::vector<EvalReport> reports;
};
CrossEvalResult cross_eval(const std::string& ckpt_path,
                           const std::vector<DatasetManifest>& manifests,
                           const std::vector<std::string>& names);

// Relabels pristine blocks by their source profile and trains a classifier
// to identify the printer. Requires >= 2 source profiles.
struct PrinterIdResult {
    TrainOutcome outcome;
    EvalReport report;
};
PrinterIdResult printer_id_experiment(const std::vector<DatasetManifest>& per_profile,
                                      models::ModelConfig model_cfg, nn::TrainConfig train_cfg,
                                      const std::string& ckpt_path,
                                      const std::string& history_csv_path = "");

// Writes accuracy.csv plus one confusion CSV and one heat-map PNG per report.
void emit_report(const std::vector<EvalReport>& reports, const std::string& out_dir);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);
std::string history_csv_string(const std::vector<EpochStats>& history);

} // namespace psf::harness

#endif
