#pragma once

#include "nngpiu/dataset.hpp"
#include "nngpiu/gp.hpp"
#include "nngpiu/input_noise.hpp"
#include "nngpiu/kernel.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nngpiu {

enum class ModelKind { Linear, ShallowGP, NNGP, KALE, NNGPIU };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);  // throws ConfigError

/// A named model recipe. input_dim of the kernel is taken from the data at
/// fit time.
struct ModelConfig {
  ModelKind kind = ModelKind::NNGPIU;
  KernelSpec kernel;
  std::optional<NoiseSpec> noise;
  OptConfig opt;
  std::string label;  // defaults to the kind name

  std::string display_name() const;
  /// Throws ConfigError when the kernel family, noise block or trend do not
  /// fit the model kind.
  void validate() const;
};

struct FittedModel {
  ModelConfig config;
  TrainedModel model;

  std::vector<Prediction> predict(const PointSet& Xstar) const { return nngpiu::predict(model, Xstar); }
};

FittedModel build_and_fit(const ModelConfig& config, const Dataset& data);

/// Config documents. Unknown keys are rejected with ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& config);

/// Kernel blocks of config documents: family plus that family's
/// hyperparameters. kernel_from_json throws ConfigError on unknown keys.
nlohmann::json kernel_to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const nlohmann::json& j);

/// Checks that every key of `j` is in `allowed`; `where` names the block in
/// the error message.
void require_known_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        std::string_view where);

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON model document: config, fitted hyperparameters, noise
/// seed and sample size, standardization, training data and a CRC-32 of
/// the training data block.
std::string serialize(const FittedModel& fitted);
/// Throws FormatError on a version or checksum mismatch.
FittedModel deserialize(std::string_view text);

void save_model(const std::string& path, const FittedModel& fitted);
FittedModel load_model(const std::string& path);

/// CRC-32 (IEEE) of a byte string, as 8 lowercase hex digits.
std::string crc32_hex(std::string_view bytes);

}  // namespace nngpiu
