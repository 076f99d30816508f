#include "crdnn/nn/serialize.hpp"

#include "crdnn/errors.hpp"
#include "crdnn/util/bytes.hpp"

namespace crdnn::nn {

namespace {
constexpr std::string_view kMagic = "CRDNNMOD";
}

nlohmann::json layer_spec_to_json(const LayerSpec& spec) {
    nlohmann::json j{{"kind", to_string(spec.kind)}};
    switch (spec.kind) {
    case LayerKind::Conv1D:
        j["filters"] = spec.filters;
        j["kernel"] = spec.kernel;
        break;
    case LayerKind::DensePerStep:
    case LayerKind::DenseHead: j["units"] = spec.units; break;
    case LayerKind::Lstm:
    case LayerKind::BiLstm:
        j["units"] = spec.units;
        j["return_sequences"] = spec.return_sequences;
        break;
    case LayerKind::Dropout: j["rate"] = spec.rate; break;
    case LayerKind::Relu:
    case LayerKind::Softmax: break;
    }
    return j;
}

LayerSpec layer_spec_from_json(const nlohmann::json& j) {
    try {
        LayerSpec s;
        s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
        s.filters = j.value("filters", 0);
        s.kernel = j.value("kernel", 0);
        s.units = j.value("units", 0);
        s.rate = j.value("rate", 0.0);
        s.return_sequences = j.value("return_sequences", true);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model header: bad layer spec: ") + e.what());
    }
}

std::vector<std::uint8_t> encode_model(const Model& model, const nlohmann::json& metadata) {
    nlohmann::json header;
    header["format"] = "crdnn-model";
    header["version"] = kModelFormatVersion;
    header["input_channels"] = model.input_channels();
    header["layers"] = nlohmann::json::array();
    for (const auto& s : model.specs()) header["layers"].push_back(layer_spec_to_json(s));
    header["parameters"] = nlohmann::json::array();
    const auto names = model.parameter_names();
    const auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        header["parameters"].push_back({{"name", names[i]}, {"rows", params[i]->rows()}, {"cols", params[i]->cols()}});
    }
    header["parameter_count"] = model.parameter_scalar_count();
    header["metadata"] = metadata;

    const std::string text = header.dump(1);
    util::ByteWriter w;
    w.raw(kMagic);
    w.u32(kModelFormatVersion);
    w.u64(text.size());
    w.raw(text);
    for (const Matrix* p : params) {
        for (Index i = 0; i < p->size(); ++i) w.f64(p->data()[i]);
    }
    return w.take();
}

ModelFile decode_model(std::span<const std::uint8_t> bytes) {
    util::ByteReader r(bytes);
    if (r.remaining() < kMagic.size() || r.raw(kMagic.size()) != kMagic) {
        throw IoError("not a model file (bad magic)");
    }
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw VersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                           std::to_string(kModelFormatVersion) + ")");
    }
    const std::uint64_t header_len = r.u64();
    if (header_len > r.remaining()) throw IoError("model header length exceeds file size");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.raw(static_cast<std::size_t>(header_len)));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model header is not valid JSON: ") + e.what());
    }

    std::vector<LayerSpec> specs;
    for (const auto& l : header.at("layers")) specs.push_back(layer_spec_from_json(l));
    ModelFile file{Model(header.at("input_channels").get<Index>(), specs), header.value("metadata", nlohmann::json::object())};

    const auto& shapes = header.at("parameters");
    auto params = file.model.parameters();
    if (shapes.size() != params.size()) throw IoError("model header parameter list does not match layer specs");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (shapes[i].at("rows").get<Index>() != params[i]->rows() ||
            shapes[i].at("cols").get<Index>() != params[i]->cols()) {
            throw IoError("model header: shape mismatch for parameter " + shapes[i].value("name", std::to_string(i)));
        }
        for (Index k = 0; k < params[i]->size(); ++k) params[i]->data()[k] = r.f64();
    }
    if (r.remaining() != 0) throw IoError("model file has trailing bytes");
    return file;
}

void save_model(const std::filesystem::path& path, const Model& model, const nlohmann::json& metadata) {
    util::write_file(path, encode_model(model, metadata));
}

ModelFile load_model(const std::filesystem::path& path) {
    const auto bytes = util::read_file(path);
    try {
        return decode_model(bytes);
    } catch (const VersionError& e) {
        throw VersionError(path.string() + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace crdnn::nn
