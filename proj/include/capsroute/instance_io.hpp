#pragma once

#include <filesystem>
#include <string>

#include "capsroute/types.hpp"

namespace capsroute {

// Instance JSON:
//   {"num_input": M, "num_output": N, "dims": [D_1, ...],
//    "predictions": [ [[row 0 of U_1], [row 1 of U_1], ...], ... ]}
// Each U_j is stored row-major as D_j rows of M numbers.

std::string instance_to_json(const PredictionSet& preds);
PredictionSet instance_from_json(const std::string& text);

PredictionSet load_instance(const std::filesystem::path& path);
void save_instance(const PredictionSet& preds, const std::filesystem::path& path);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string content_digest(const std::string& bytes);

}  // namespace capsroute
