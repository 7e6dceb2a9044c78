#include "capsroute/instance_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace capsroute {

using nlohmann::json;

std::string instance_to_json(const PredictionSet& preds) {
  json doc;
  doc["num_input"] = preds.num_input();
  doc["num_output"] = preds.num_output();
  doc["dims"] = preds.dims();
  json all = json::array();
  for (const Matrix& u : preds.predictions()) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < u.cols(); ++c) row.push_back(u(r, c));
      rows.push_back(std::move(row));
    }
    all.push_back(std::move(rows));
  }
  doc["predictions"] = std::move(all);
  // nlohmann emits the shortest decimal that round-trips each double.
  return doc.dump() + "\n";
}

namespace {

std::size_t read_count(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_unsigned()) {
    throw Error(ErrorKind::kParse, std::string("missing or non-integer field '") + key + "'");
  }
  return doc[key].get<std::size_t>();
}

}  // namespace

PredictionSet instance_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "instance must be a JSON object");

  RawPredictionSet raw;
  raw.num_input = read_count(doc, "num_input");
  raw.num_output = read_count(doc, "num_output");
  if (!doc.contains("dims") || !doc["dims"].is_array()) {
    throw Error(ErrorKind::kParse, "missing array field 'dims'");
  }
  for (const auto& d : doc["dims"]) {
    if (!d.is_number_unsigned()) throw Error(ErrorKind::kParse, "dims entries must be counts");
    raw.dims.push_back(d.get<std::size_t>());
  }
  if (!doc.contains("predictions") || !doc["predictions"].is_array()) {
    throw Error(ErrorKind::kParse, "missing array field 'predictions'");
  }
  std::size_t j = 0;
  for (const auto& rows : doc["predictions"]) {
    if (!rows.is_array()) {
      throw Error(ErrorKind::kParse, "predictions[" + std::to_string(j) + "] is not an array", j);
    }
    const auto n_rows = static_cast<Eigen::Index>(rows.size());
    const auto n_cols = n_rows == 0 ? 0 : static_cast<Eigen::Index>(rows[0].size());
    Matrix u(n_rows, n_cols);
    for (Eigen::Index r = 0; r < n_rows; ++r) {
      const auto& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n_cols) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "capsule " + std::to_string(j) + ": ragged rows", j);
      }
      for (Eigen::Index c = 0; c < n_cols; ++c) {
        const auto& x = row[static_cast<std::size_t>(c)];
        if (!x.is_number()) {
          throw Error(ErrorKind::kNonFinite,
                      "capsule " + std::to_string(j) + ": entry is not a finite number", j);
        }
        u(r, c) = x.get<double>();
      }
    }
    raw.predictions.push_back(std::move(u));
    ++j;
  }
  return validate_prediction_set(std::move(raw));
}

PredictionSet load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

void save_instance(const PredictionSet& preds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << instance_to_json(preds);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace capsroute
