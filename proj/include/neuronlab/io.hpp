#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "neuronlab/distributions.hpp"

namespace neuronlab {

using json = nlohmann::ordered_json;

/// Column table stored as little-endian float64 columns:
///   "NLCB" | u32 version | u64 rows | u64 cols | cols x rows doubles
/// with metadata in a JSON sidecar at <path>.json.
struct ColumnTable {
  Eigen::MatrixXd data;
  std::vector<std::string> names;
  json meta = json::object();
};

inline constexpr std::uint32_t kColumnarVersion = 1;

void write_columnar(const std::filesystem::path& path, const ColumnTable& table);
ColumnTable read_columnar(const std::filesystem::path& path);

/// Inputs x_1..x_d, then y, then xi.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& doc);
json read_json(const std::filesystem::path& path);

/// Shortest text that round-trips the double; "nan"/"inf" for non-finite values.
std::string format_double(double x);

json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const json& j);

}  // namespace neuronlab
