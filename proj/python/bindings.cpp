#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctts/inventory.hpp"
#include "ctts/modelfile.hpp"
#include "ctts/pipeline.hpp"
#include "ctts/vocoder.hpp"
#include "ctts/wav.hpp"

namespace py = pybind11;

namespace {

size_t init_random(const std::string& path, const std::string& preset, const std::string& dims,
                   uint64_t seed) {
    if (preset != "baseline" && preset != "optimized")
        throw ctts::ArgumentError("preset must be baseline or optimized");
    if (dims != "release" && dims != "tiny")
        throw ctts::ArgumentError("dims must be release or tiny");
    ctts::pipe::BuildOptions b;
    b.optimized = preset == "optimized";
    b.tiny = dims == "tiny";
    b.seed = seed;
    return ctts::save(ctts::pipe::build_model(b), path);
}

py::dict synth(const std::string& model_path, const std::string& text, uint64_t seed) {
    const ctts::TtsModel model = ctts::load(model_path);
    const ctts::pipe::SynthResult r = ctts::pipe::synth(model, text, seed);
    const std::vector<uint8_t> pcm = ctts::pcm_bytes(r.wav);
    py::dict d;
    d["sample_rate"] = r.wav.sample_rate;
    d["pcm"] = py::bytes(reinterpret_cast<const char*>(pcm.data()), pcm.size());
    d["phonemes"] = r.phonemes;
    d["frames"] = r.mel.frames.shape[0];
    return d;
}

py::dict footprint(const std::string& model_path) {
    const ctts::TtsModel model = ctts::load(model_path);
    const ctts::FootprintReport rep = ctts::footprint_report(model);
    py::dict d;
    d["header_bytes"] = rep.header_bytes;
    d["manifest_bytes"] = rep.manifest_bytes;
    d["total_bytes"] = rep.total_bytes;
    d["per_voice_bytes"] = rep.per_voice_bytes;
    py::list comps;
    for (const auto& c : rep.components) {
        py::dict e;
        e["name"] = c.name;
        e["bytes"] = c.bytes;
        e["stored_bytes"] = c.stored_bytes;
        e["logical_bytes"] = c.logical_bytes;
        e["physical_params"] = c.physical_params;
        e["blobs"] = c.blobs;
        e["slots"] = c.slots;
        comps.append(e);
    }
    d["components"] = comps;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "compact neural text-to-speech inference core";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ctts::ArgumentError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ctts::InputError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ctts::LoadError& e) {
            PyErr_SetString(PyExc_IOError, e.what());
        } catch (const ctts::IoError& e) {
            PyErr_SetString(PyExc_IOError, e.what());
        } catch (const ctts::Error& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        }
    });

    m.def("init_random", &init_random, py::arg("path"), py::arg("preset") = "baseline",
          py::arg("dims") = "release", py::arg("seed") = 0,
          "Create a random-weight model file; returns bytes written.");
    m.def("synth", &synth, py::arg("path"), py::arg("text"), py::arg("seed") = 0,
          "Synthesize text; returns sample_rate, pcm bytes, phonemes and frame count.");
    m.def("footprint", &footprint, py::arg("path"),
          "Storage breakdown of a model file, additive to its exact size.");
    m.def("mu_law_encode", &ctts::vo::mu_law_encode, py::arg("x"));
    m.def("mu_law_decode", &ctts::vo::mu_law_decode, py::arg("c"));
    m.def(
        "tokenize",
        [](const std::string& text, int32_t grapheme_vocab) {
            return ctts::tokenize(text, ctts::make_grapheme_inventory(grapheme_vocab));
        },
        py::arg("text"), py::arg("grapheme_vocab") = 28672,
        "Character ids wrapped in BOS/EOS under the default grapheme inventory.");
}
