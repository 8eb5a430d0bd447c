#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "uwmark/enhance.hpp"
#include "uwmark/harness.hpp"
#include "uwmark/markers.hpp"
#include "uwmark/simulate.hpp"

namespace py = pybind11;
using namespace uwmark;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) interleaved -> planar Image
Image to_image(const F64Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorCode::InvalidArgument, "expected an (H, W) or (H, W, C) array");
    const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
    const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
    std::vector<double> samples(static_cast<std::size_t>(w) * h * c);
    const double* src = a.data();
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    for (std::size_t i = 0; i < plane; ++i)
        for (int k = 0; k < c; ++k) samples[k * plane + i] = src[i * c + k];
    return Image(w, h, c, std::move(samples));
}

py::array_t<double> from_image(const Image& img) {
    const std::size_t plane = img.plane_size();
    const int c = img.channels();
    std::vector<py::ssize_t> shape{img.height(), img.width()};
    if (c > 1) shape.push_back(c);
    py::array_t<double> out(shape);
    double* dst = out.mutable_data();
    const auto s = img.samples();
    for (std::size_t i = 0; i < plane; ++i)
        for (int k = 0; k < c; ++k) dst[i * c + k] = s[k * plane + i];
    return out;
}

GrayU8 to_gray(const U8Array& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::InvalidArgument, "expected an (H, W) uint8 array");
    GrayU8 g(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + g.data.size(), g.data.begin());
    return g;
}

py::array_t<std::uint8_t> from_gray(const GrayU8& g) {
    py::array_t<std::uint8_t> out({g.height, g.width});
    std::copy(g.data.begin(), g.data.end(), out.mutable_data());
    return out;
}

py::dict marker_dict(const markers::DetectedMarker& m) {
    py::array_t<double> corners({4, 2});
    auto c = corners.mutable_unchecked<2>();
    for (int i = 0; i < 4; ++i) {
        c(i, 0) = m.corners[i].x;
        c(i, 1) = m.corners[i].y;
    }
    py::dict d;
    d["id"] = m.id;
    d["corners"] = corners;
    d["rotation"] = m.rotation;
    d["hamming_errors"] = m.hamming_errors;
    return d;
}

py::list marker_list(const std::vector<markers::DetectedMarker>& ms) {
    py::list out;
    for (const auto& m : ms) out.append(marker_dict(m));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fiducial marker detection and enhancement for degraded underwater imagery";

    static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("load_image", [](const std::filesystem::path& p) { return from_image(load_image(p)); }, py::arg("path"),
          "Loads PGM/PPM/YUV as a float array in [0,1], shape (H, W) or (H, W, 3).");
    m.def("save_image", [](const F64Array& a, const std::filesystem::path& p) { save_image(to_image(a), p); },
          py::arg("image"), py::arg("path"));
    m.def("luma_u8", [](const F64Array& a) { return from_gray(luma_u8(to_image(a))); }, py::arg("image"));

    py::class_<markers::MarkerDictionary>(m, "MarkerDictionary")
        .def_readonly("codes", &markers::MarkerDictionary::codes)
        .def_readonly("tau", &markers::MarkerDictionary::tau)
        .def_readonly("max_correction_bits", &markers::MarkerDictionary::max_correction_bits)
        .def("min_distance", &markers::MarkerDictionary::min_distance)
        .def("__len__", &markers::MarkerDictionary::size)
        .def("save", [](const markers::MarkerDictionary& d, const std::filesystem::path& p) { markers::save_dictionary(d, p); });

    m.def("generate_dictionary", &markers::generate_dictionary, py::arg("count"), py::arg("tau"), py::arg("seed"));
    m.def("load_dictionary", &markers::load_dictionary, py::arg("path"));
    m.def("rotate_code", &markers::rotate_code, py::arg("code"), py::arg("quarter_turns") = 1);

    m.def(
        "detect",
        [](const U8Array& gray, const markers::MarkerDictionary& dict, bool underwater, const std::string& params) {
            const auto j = nlohmann::json::parse(params);
            const auto dp = harness::detector_params_from_json(j.value("detector", nlohmann::json::object()));
            const GrayU8 g = to_gray(gray);
            py::gil_scoped_release release;
            auto found = underwater
                             ? markers::detect_uw(g, dict, dp, harness::mask_params_from_json(j.value("mask", nlohmann::json::object()))).markers
                             : markers::detect(g, dict, dp);
            py::gil_scoped_acquire acquire;
            return marker_list(found);
        },
        py::arg("gray"), py::arg("dictionary"), py::arg("underwater") = false, py::arg("params_json") = "{}");

    m.def(
        "enhance",
        [](const F64Array& image, const std::string& spec_json) {
            const auto spec = enhance::parse_filter_spec(nlohmann::json::parse(spec_json));
            const Image img = to_image(image);
            Image out;
            {
                py::gil_scoped_release release;
                out = enhance::enhance_dispatch(img, spec);
            }
            return from_image(out);
        },
        py::arg("image"), py::arg("spec_json"));

    m.def(
        "simulate",
        [](const std::string& config_json, const std::filesystem::path& out_dir, std::uint64_t seed) {
            const auto cfg = sim::DatasetConfig::from_json(nlohmann::json::parse(config_json));
            return sim::generate_dataset(cfg, out_dir, seed).to_json().dump();
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("seed"));

    m.def(
        "run_grid",
        [](const std::string& config_json, const std::filesystem::path& base_dir) {
            const auto cfg = harness::RunConfig::from_json(nlohmann::json::parse(config_json), base_dir);
            harness::GridResult result;
            {
                py::gil_scoped_release release;
                result = harness::run_grid(cfg);
            }
            std::ostringstream csv;
            harness::write_csv(csv, result.records);
            return py::make_tuple(csv.str(), harness::to_json(harness::summarize(result.records)).dump());
        },
        py::arg("config_json"), py::arg("base_dir") = std::filesystem::path{});
}
