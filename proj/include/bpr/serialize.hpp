#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "bpr/bagging.hpp"

namespace bpr {

inline constexpr int kModelFormatVersion = 1;

using AnyModel = std::variant<BprModel, OvrModel>;

/// JSON text holding every sub-model with its seeds and sample indices.
/// Doubles are written in shortest round-trip form, so a reloaded model
/// predicts bit-for-bit like the original.
std::string model_to_json(const AnyModel& model, int indent = -1);
AnyModel model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace bpr
