#pragma once

#include "crdnn/nn/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace crdnn::nn {

// Model container layout (all integers little-endian):
//   [0, 8)        magic "CRDNNMOD"
//   [8, 12)       u32 format version (kModelFormatVersion)
//   [12, 20)      u64 header length N
//   [20, 20 + N)  UTF-8 JSON header: input channels, layer specs, parameter
//                 shapes, free-form metadata
//   [20 + N, ...) every parameter matrix in Model::parameters() order, each
//                 row-major, as IEEE-754 binary64 little-endian
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelFile {
    Model model;
    nlohmann::json metadata = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_model(const Model& model, const nlohmann::json& metadata);
ModelFile decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Model& model, const nlohmann::json& metadata);
ModelFile load_model(const std::filesystem::path& path);

nlohmann::json layer_spec_to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

} // namespace crdnn::nn
