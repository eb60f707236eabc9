#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "jad/attacks.hpp"
#include "jad/checkpoint.hpp"
#include "jad/detect.hpp"
#include "jad/error.hpp"
#include "jad/jad_score.hpp"
#include "jad/jpeg.hpp"
#include "jad/network.hpp"
#include "jad/spectral.hpp"

namespace py = pybind11;
using namespace jad;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor::input(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Head parse_head(const std::string& s) {
    if (s == "logits") return Head::Logits;
    if (s == "softmax") return Head::Softmax;
    throw ParameterError("head must be 'logits' or 'softmax', got '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "JPEG amplification detector core";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());

    py::class_<Network>(m, "Network")
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def_static("mlp", [](std::vector<std::size_t> dims, double alpha,
                              std::uint64_t seed) { return init_mlp(dims, alpha, seed); },
                    py::arg("dims"), py::arg("alpha") = 0.01, py::arg("seed") = 0)
        .def("save", [](const Network& n, const std::filesystem::path& p) { save_checkpoint(n, p); })
        .def_property_readonly("depth", &Network::depth)
        .def_property_readonly("dims", [](const Network& n) {
            std::vector<std::size_t> d{n.input_dim()};
            for (const auto& l : n.layers()) d.push_back(l.spec.out_dim);
            return d;
        })
        .def("forward", [](const Network& n, const Array& x) { return to_array(forward(n, to_tensor(x))); })
        .def("predict", [](const Network& n, const Array& x) { return predict(n, to_tensor(x)); })
        .def("weight", [](const Network& n, std::size_t i) {
            const auto& l = n.layer(i);
            Array w({l.spec.out_dim, l.spec.in_dim});
            std::copy(l.weight.begin(), l.weight.end(), w.mutable_data());
            return w;
        })
        .def("bias", [](const Network& n, std::size_t i) { return n.layer(i).bias; })
        .def("alpha", [](const Network& n, std::size_t i) {
            const auto& s = n.layer(i).spec;
            return s.activation == Activation::LeakyReLU ? s.alpha : 1.0;
        });

    m.def("certify_beta", [](const Network& net) {
        const auto r = certify_beta(net);
        py::list layers;
        for (const auto& l : r.per_layer)
            layers.append(py::dict(py::arg("layer") = l.layer, py::arg("sigma_min") = l.sigma_min,
                                   py::arg("thin_sigma_min") = l.thin_sigma_min, py::arg("sigma_max") = l.sigma_max,
                                   py::arg("lipschitz_lower") = l.lipschitz_lower,
                                   py::arg("cumulative_beta") = l.cumulative_beta));
        return py::dict(py::arg("beta") = r.beta, py::arg("amplifying") = r.amplifying, py::arg("layers") = layers);
    });

    m.def("jpeg_roundtrip", [](const Array& img, int q) { return to_array(jpeg_roundtrip(to_tensor(img), q)); },
          py::arg("image"), py::arg("quality"));
    m.def("quant_tables", [](int q) {
        const auto t = quality_to_tables(q);
        return py::make_tuple(std::vector<int>(t.luma.begin(), t.luma.end()),
                              std::vector<int>(t.chroma.begin(), t.chroma.end()));
    });

    m.def(
        "jad_score",
        [](const Network& net, const Array& img, int quality, const std::string& head, std::size_t first,
           std::size_t last) {
            DetectorConfig cfg;
            cfg.quality = quality;
            cfg.head = parse_head(head);
            cfg.first_layer = first;
            cfg.last_layer = last;
            cfg.validate(net);
            const auto s = jad_score(net, to_tensor(img), cfg);
            return py::dict(py::arg("score") = s.score, py::arg("d_first") = s.d_first, py::arg("d_last") = s.d_last,
                            py::arg("quality") = s.quality, py::arg("degenerate") = s.degenerate);
        },
        py::arg("net"), py::arg("image"), py::arg("quality") = 75, py::arg("head") = "logits",
        py::arg("first_layer") = 1, py::arg("last_layer") = 0);

    m.def(
        "pgd",
        [](const Network& net, const Array& x, std::size_t label, double eps, double step, std::size_t steps,
           const std::string& norm, bool rand_init, std::uint64_t seed) {
            AttackConfig cfg;
            cfg.eps = eps;
            cfg.step = step;
            cfg.steps = steps;
            if (norm == "l2") cfg.norm = Norm::L2;
            else if (norm != "linf") throw ParameterError("norm must be 'linf' or 'l2'");
            cfg.rand_init = rand_init;
            cfg.seed = seed;
            return to_array(pgd(net, to_tensor(x), label, cfg).x_adv);
        },
        py::arg("net"), py::arg("image"), py::arg("label"), py::arg("eps") = 8.0 / 255.0,
        py::arg("step") = 2.0 / 255.0, py::arg("steps") = 10, py::arg("norm") = "linf", py::arg("rand_init") = true,
        py::arg("seed") = 0);

    m.def("auroc", [](std::vector<double> neg, std::vector<double> pos) { return auroc(neg, pos); },
          py::arg("negatives"), py::arg("positives"));
    m.def("calibrate_threshold",
          [](std::vector<double> clean, double fpr) { return calibrate_threshold(clean, fpr); },
          py::arg("clean_scores"), py::arg("target_fpr"));
}
