#include "neuronlab/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "neuronlab/error.hpp"

namespace neuronlab {

namespace {

static_assert(std::endian::native == std::endian::little, "columnar I/O assumes a little-endian host");

constexpr char kMagic[4] = {'N', 'L', 'C', 'B'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

}  // namespace

void write_columnar(const std::filesystem::path& path, const ColumnTable& table) {
  if (!table.names.empty() && table.names.size() != static_cast<std::size_t>(table.data.cols())) {
    throw Error(Errc::invalid_argument, "column name count does not match the table");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open " + path.string());
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kColumnarVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(table.data.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(table.data.cols()));
  // Eigen's default storage is column-major, which is the file layout.
  os.write(reinterpret_cast<const char*>(table.data.data()),
           static_cast<std::streamsize>(sizeof(double) * table.data.size()));
  if (!os) throw Error(Errc::io_error, "write failed: " + path.string());

  json meta = table.meta;
  meta["format"] = "NLCB";
  meta["version"] = kColumnarVersion;
  meta["rows"] = table.data.rows();
  meta["columns"] = table.names;
  write_json(sidecar(path), meta);
}

ColumnTable read_columnar(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error(Errc::io_error, "bad magic in " + path.string());
  const auto version = get<std::uint32_t>(is);
  if (version != kColumnarVersion) throw Error(Errc::io_error, "unsupported columnar version " + std::to_string(version));
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  ColumnTable table;
  table.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  is.read(reinterpret_cast<char*>(table.data.data()),
          static_cast<std::streamsize>(sizeof(double) * table.data.size()));
  if (!is) throw Error(Errc::io_error, "truncated columnar file " + path.string());
  if (std::filesystem::exists(sidecar(path))) {
    table.meta = read_json(sidecar(path));
    if (table.meta.contains("columns")) table.names = table.meta["columns"].get<std::vector<std::string>>();
  }
  return table;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  const Eigen::Index d = data.dim();
  ColumnTable t;
  t.data.resize(data.n(), d + 2);
  t.data.leftCols(d) = data.X;
  t.data.col(d) = data.y;
  t.data.col(d + 1) = data.xi.size() == data.n() ? data.xi : Eigen::VectorXd::Zero(data.n());
  for (Eigen::Index j = 0; j < d; ++j) t.names.push_back("x" + std::to_string(j + 1));
  t.names.push_back("y");
  t.names.push_back("xi");
  t.meta["kind"] = "dataset";
  t.meta["bound_x"] = data.bound_x;
  t.meta["bound_y"] = data.bound_y ? json(*data.bound_y) : json(nullptr);
  t.meta["seed"] = data.seed;
  t.meta["stream"] = data.stream;
  t.meta["label_model"] = data.descriptor;
  write_columnar(path, t);
}

Dataset read_dataset(const std::filesystem::path& path) {
  ColumnTable t = read_columnar(path);
  if (t.data.cols() < 3) throw Error(Errc::io_error, "dataset needs at least x1, y, xi columns");
  const Eigen::Index d = t.data.cols() - 2;
  Dataset data;
  data.X = t.data.leftCols(d);
  data.y = t.data.col(d);
  data.xi = t.data.col(d + 1);
  data.bound_x = t.meta.value("bound_x", 1.0);
  if (t.meta.contains("bound_y") && !t.meta["bound_y"].is_null()) data.bound_y = t.meta["bound_y"].get<double>();
  data.seed = t.meta.value("seed", std::uint64_t{0});
  data.stream = t.meta.value("stream", std::uint64_t{0});
  data.descriptor = t.meta.value("label_model", std::string{});
  return data;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(Errc::io_error, "cannot open " + path.string());
  os << text;
  if (!os) throw Error(Errc::io_error, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_invalid, path.string() + ": " + e.what());
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, end);
}

json to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::config_invalid, "expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(Errc::config_invalid, "expected a numeric array");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace neuronlab
