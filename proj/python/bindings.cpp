#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "psf/config.hpp"
#include "psf/dataset.hpp"
#include "psf/error.hpp"
#include "psf/manipulations.hpp"
#include "psf/models.hpp"
#include "psf/printscan.hpp"
#include "psf/trainer.hpp"

namespace py = pybind11;
using namespace psf;

namespace {

imaging::ImageBuffer from_numpy(const py::array_t<std::uint8_t>& arr) {
    const py::buffer_info info = arr.request();
    int channels = 1;
    if (info.ndim == 3) {
        channels = static_cast<int>(info.shape[2]);
        if (channels != 1 && channels != 3)
            throw DataError("array must have 1 or 3 channels");
    } else if (info.ndim != 2) {
        throw DataError("array must be (H,W) or (H,W,C)");
    }
    imaging::ImageBuffer img(static_cast<int>(info.shape[0]), static_cast<int>(info.shape[1]),
                             channels);
    const auto contiguous = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>(arr);
    std::memcpy(img.data.data(), contiguous.request().ptr, img.data.size());
    return img;
}

py::array_t<std::uint8_t> to_numpy(const imaging::ImageBuffer& img) {
    py::array_t<std::uint8_t> arr(
        img.channels == 1 ? std::vector<py::ssize_t>{img.height, img.width}
                          : std::vector<py::ssize_t>{img.height, img.width, img.channels});
    std::memcpy(arr.request().ptr, img.data.data(), img.data.size());
    return arr;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "print/scan attack workbench: imaging, manipulations, printer chain, detectors";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    // imaging
    m.def("load_image", [](const std::string& path) { return to_numpy(imaging::load_image(path)); },
          py::arg("path"));
    m.def("save_image",
          [](const py::array_t<std::uint8_t>& img, const std::string& path) {
              imaging::save_image(from_numpy(img), path);
          },
          py::arg("image"), py::arg("path"));
    m.def("center_crop",
          [](const py::array_t<std::uint8_t>& img, int h, int w) {
              return to_numpy(imaging::center_crop(from_numpy(img), h, w));
          },
          py::arg("image"), py::arg("height"), py::arg("width"));
    m.def("green_channel",
          [](const py::array_t<std::uint8_t>& img) {
              return to_numpy(imaging::green_channel(from_numpy(img)));
          },
          py::arg("image"));
    m.def("extract_blocks",
          [](const py::array_t<std::uint8_t>& img, int block_size, const std::string& selection) {
              const auto spec = harness::BlockSelectionSpec::parse(selection);
              const auto blocks = imaging::extract_blocks(from_numpy(img), block_size, spec.mode,
                                                          spec.central_k);
              py::list out;
              for (const auto& b : blocks)
                  out.append(py::make_tuple(to_numpy(b.pixels), b.origin_row, b.origin_col));
              return out;
          },
          py::arg("image"), py::arg("block_size"), py::arg("selection") = "all");

    // manipulations
    m.def("apply_awgn",
          [](const py::array_t<std::uint8_t>& img, double sigma, std::uint64_t seed) {
              return to_numpy(manip::apply_awgn(from_numpy(img), sigma, seed));
          },
          py::arg("image"), py::arg("sigma") = 2.0, py::arg("seed") = 0);
    m.def("gaussian_kernel",
          [](int size, double sigma) {
              const auto k = manip::gaussian_kernel(size, sigma);
              py::array_t<double> arr({size, size});
              std::memcpy(arr.request().ptr, k.data(), k.size() * sizeof(double));
              return arr;
          },
          py::arg("size") = 5, py::arg("sigma") = 1.1);
    m.def("apply_gaussian_blur",
          [](const py::array_t<std::uint8_t>& img, int size, double sigma) {
              return to_numpy(manip::apply_gaussian_blur(from_numpy(img), size, sigma));
          },
          py::arg("image"), py::arg("size") = 5, py::arg("sigma") = 1.1);
    m.def("apply_median_filter",
          [](const py::array_t<std::uint8_t>& img, int size) {
              return to_numpy(manip::apply_median_filter(from_numpy(img), size));
          },
          py::arg("image"), py::arg("size") = 5);
    m.def("apply_resample",
          [](const py::array_t<std::uint8_t>& img, double ratio) {
              return to_numpy(manip::apply_resample(from_numpy(img), ratio));
          },
          py::arg("image"), py::arg("ratio") = 1.5);
    m.def("jpeg_roundtrip",
          [](const py::array_t<std::uint8_t>& img, int quality) {
              return to_numpy(manip::jpeg_roundtrip(from_numpy(img), quality));
          },
          py::arg("image"), py::arg("quality") = 70);
    m.def("apply_manipulation",
          [](const py::array_t<std::uint8_t>& img, const std::string& tag, std::uint64_t seed) {
              return to_numpy(manip::apply_manipulation(from_numpy(img), manip::kind_from_tag(tag),
                                                        manip::Params{}, seed));
          },
          py::arg("image"), py::arg("kind"), py::arg("seed") = 0);
    m.def("manipulation_tags", [](bool six) {
              std::vector<std::string> tags;
              for (auto kind : manip::class_set(six))
                  tags.push_back(manip::tag(kind));
              return tags;
          },
          py::arg("six_classes") = false);

    // print-scan chain
    py::class_<printscan::PrinterProfile>(m, "PrinterProfile")
        .def(py::init<>())
        .def_readwrite("name", &printscan::PrinterProfile::name)
        .def_readwrite("color_matrix", &printscan::PrinterProfile::color_matrix)
        .def_readwrite("color_offset", &printscan::PrinterProfile::color_offset)
        .def_readwrite("halftone_amplitude", &printscan::PrinterProfile::halftone_amplitude)
        .def_readwrite("halftone_cell", &printscan::PrinterProfile::halftone_cell)
        .def_readwrite("blur_sigma", &printscan::PrinterProfile::blur_sigma)
        .def_readwrite("noise_sigma", &printscan::PrinterProfile::noise_sigma)
        .def_readwrite("gain_field_amplitude", &printscan::PrinterProfile::gain_field_amplitude)
        .def_readwrite("geometric_jitter", &printscan::PrinterProfile::geometric_jitter)
        .def_readwrite("requant_quality", &printscan::PrinterProfile::requant_quality)
        .def("__repr__", [](const printscan::PrinterProfile& p) {
            return "<PrinterProfile '" + p.name + "'>";
        });
    m.def("default_profiles", &printscan::default_profiles);
    m.def("jpeg_attack_profile", &printscan::jpeg_attack_profile, py::arg("quality"));
    m.def("simulate_printscan",
          [](const py::array_t<std::uint8_t>& img, const printscan::PrinterProfile& profile,
             std::uint64_t seed) {
              return to_numpy(printscan::simulate_printscan(from_numpy(img), profile, seed));
          },
          py::arg("image"), py::arg("profile"), py::arg("seed") = 0);

    // dataset + experiment harness
    m.def("synth_image",
          [](int height, int width, std::uint64_t seed) {
              Rng rng(seed);
              return to_numpy(harness::synth_image(height, width, rng));
          },
          py::arg("height") = 192, py::arg("width") = 256, py::arg("seed") = 0);
    m.def("generate_synth_corpus", &harness::generate_synth_corpus, py::arg("dir"),
          py::arg("count"), py::arg("height") = 192, py::arg("width") = 256, py::arg("seed") = 0);
    m.def("generate_dataset",
          [](const std::string& source_dir, const std::string& classes, int block_size,
             const std::string& selection, const std::string& out_dir, std::uint64_t seed) {
              const auto manifest = harness::generate_dataset(
                  source_dir, classes == "6c", block_size,
                  harness::BlockSelectionSpec::parse(selection), out_dir, seed, manip::Params{});
              return manifest.records.size();
          },
          py::arg("source_dir"), py::arg("classes") = "4c", py::arg("block_size") = 64,
          py::arg("selection") = "all", py::arg("out_dir") = "dataset", py::arg("seed") = 0);
    m.def("printscan_dataset",
          [](const std::string& manifest_path, const printscan::PrinterProfile& profile,
             const std::string& out_dir, std::uint64_t seed) {
              const auto input = harness::DatasetManifest::load(manifest_path);
              return harness::printscan_dataset(input, profile, out_dir, seed).records.size();
          },
          py::arg("manifest"), py::arg("profile"), py::arg("out_dir"), py::arg("seed") = 0);

    m.def("train",
          [](const std::string& manifest_path, const std::string& family,
             const std::string& ckpt_out, int epochs, int batch_size, double lr,
             std::uint64_t seed) {
              const auto manifest = harness::DatasetManifest::load(manifest_path);
              models::ModelConfig mc;
              mc.family = models::family_from_name(family);
              mc.input_size = manifest.block_size;
              mc.normalize();
              nn::TrainConfig tc = models::family_train_defaults(mc.family);
              tc.epochs = epochs;
              tc.batch_size = batch_size;
              tc.lr0 = lr;
              tc.seed = seed;
              const auto outcome = harness::train(mc, manifest, tc, ckpt_out);
              py::dict out;
              out["best_val_acc"] = outcome.best_val_acc;
              out["best_epoch"] = outcome.best_epoch;
              out["epochs_run"] = outcome.history.size();
              return out;
          },
          py::arg("manifest"), py::arg("family") = "proposed", py::arg("checkpoint") = "model.ckpt",
          py::arg("epochs") = 10, py::arg("batch_size") = 8, py::arg("lr") = 0.01,
          py::arg("seed") = 0);
    m.def("evaluate",
          [](const std::string& ckpt_path, const std::string& manifest_path) {
              const auto manifest = harness::DatasetManifest::load(manifest_path);
              const auto report = harness::evaluate(ckpt_path, manifest, "dataset");
              const py::ssize_t n = static_cast<py::ssize_t>(report.labels.size());
              py::array_t<long> confusion({n, n});
              auto* ptr = static_cast<long*>(confusion.request().ptr);
              for (py::ssize_t i = 0; i < n; ++i)
                  for (py::ssize_t j = 0; j < n; ++j)
                      ptr[i * n + j] = report.confusion[static_cast<std::size_t>(i)]
                                                       [static_cast<std::size_t>(j)];
              py::dict out;
              out["accuracy"] = report.accuracy;
              out["labels"] = report.labels;
              out["confusion"] = confusion;
              return out;
          },
          py::arg("checkpoint"), py::arg("manifest"));
    m.def("predict_block",
          [](const std::string& ckpt_path, const py::array_t<std::uint8_t>& block) {
              auto ckpt = models::load_checkpoint(ckpt_path);
              const auto pred = models::predict(*ckpt.model, ckpt.config, from_numpy(block));
              return py::make_tuple(pred.label, pred.probabilities);
          },
          py::arg("checkpoint"), py::arg("block"));

    m.attr("__version__") = "1.0.0";
}
