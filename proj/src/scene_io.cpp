#include "punch/scene_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "punch/error.hpp"
#include "punch/hash.hpp"

namespace punch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
T decode_le(const char* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

template <typename T>
void encode_le(T value, std::vector<char>& out) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

int positive_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() <= 0) {
    throw DataError(std::string("header field '") + key + "' must be a positive integer");
  }
  return j[key].get<int>();
}

ClassGrid decode_gt(const std::vector<char>& bytes, int rows, int cols, const fs::path& path) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != n * 2) {
    throw DataError("size mismatch: " + path.string() + " holds " + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(n * 2));
  }
  ClassGrid gt{rows, cols, std::vector<std::uint16_t>(n)};
  for (std::size_t i = 0; i < n; ++i) gt.ids[i] = decode_le<std::uint16_t>(bytes.data() + 2 * i);
  return gt;
}

}  // namespace

Scene load_scene(const fs::path& header_path) {
  json header;
  {
    std::ifstream in(header_path);
    if (!in) throw DataError("cannot open scene header " + header_path.string());
    try {
      in >> header;
    } catch (const json::exception& e) {
      throw DataError("malformed scene header " + header_path.string() + ": " + e.what());
    }
  }
  if (header.value("version", std::string{}) != "hscn-1") {
    throw DataError("unsupported scene version tag '" + header.value("version", std::string{}) + "'");
  }
  if (header.value("dtype", std::string{"f32le"}) != "f32le") {
    throw DataError("unsupported dtype '" + header.value("dtype", std::string{}) + "'");
  }
  const int rows = positive_field(header, "rows");
  const int cols = positive_field(header, "cols");
  const int channels = positive_field(header, "channels");
  const fs::path base = header_path.parent_path();
  if (!header.contains("data_file")) throw DataError("scene header lacks data_file");

  const fs::path data_path = base / header["data_file"].get<std::string>();
  const auto bytes = read_bytes(data_path);
  const std::size_t n = static_cast<std::size_t>(rows) * cols * channels;
  if (bytes.size() != n * 4) {
    throw DataError("size mismatch: header declares " + std::to_string(rows) + "x" +
                    std::to_string(cols) + "x" + std::to_string(channels) + " = " +
                    std::to_string(n) + " values but " + data_path.string() + " holds " +
                    std::to_string(bytes.size()) + " bytes");
  }
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = decode_le<float>(bytes.data() + 4 * i);

  Scene scene{HsiCube(rows, cols, channels, std::move(values)), std::nullopt, {}};
  if (header.contains("gt_file") && !header["gt_file"].is_null()) {
    if (header.value("gt_dtype", std::string{"u16le"}) != "u16le") {
      throw DataError("unsupported gt_dtype '" + header.value("gt_dtype", std::string{}) + "'");
    }
    const fs::path gt_path = base / header["gt_file"].get<std::string>();
    scene.ground_truth = decode_gt(read_bytes(gt_path), rows, cols, gt_path);
  }
  if (header.contains("band_names")) {
    scene.band_names = header["band_names"].get<std::vector<std::string>>();
  }
  return scene;
}

void save_scene(const fs::path& header_path, const Scene& scene) {
  const auto& cube = scene.cube;
  const std::string stem = header_path.stem().string();
  const fs::path base = header_path.parent_path();
  if (!base.empty()) fs::create_directories(base);

  std::vector<char> bytes;
  bytes.reserve(cube.data().size() * 4);
  for (double v : cube.data()) encode_le(static_cast<float>(v), bytes);
  write_bytes(base / (stem + ".f32"), bytes);

  json header = {{"version", "hscn-1"},         {"rows", cube.rows()},
                 {"cols", cube.cols()},         {"channels", cube.channels()},
                 {"dtype", "f32le"},            {"data_file", stem + ".f32"}};
  if (scene.ground_truth) {
    const auto& gt = *scene.ground_truth;
    if (gt.rows != cube.rows() || gt.cols != cube.cols()) {
      throw DataError("ground truth grid does not match cube dimensions");
    }
    std::vector<char> gt_bytes;
    gt_bytes.reserve(gt.ids.size() * 2);
    for (auto id : gt.ids) encode_le(id, gt_bytes);
    write_bytes(base / (stem + ".gt.u16"), gt_bytes);
    header["gt_file"] = stem + ".gt.u16";
    header["gt_dtype"] = "u16le";
  }
  if (!scene.band_names.empty()) header["band_names"] = scene.band_names;
  std::ofstream out(header_path);
  if (!out) throw DataError("cannot write " + header_path.string());
  out << header.dump(2) << "\n";
}

Scene convert_dense(const fs::path& raw_path, const fs::path& sidecar_path,
                    const std::optional<fs::path>& gt_path) {
  json sidecar;
  {
    std::ifstream in(sidecar_path);
    if (!in) throw DataError("cannot open sidecar " + sidecar_path.string());
    try {
      in >> sidecar;
    } catch (const json::exception& e) {
      throw DataError("malformed sidecar: " + std::string(e.what()));
    }
  }
  const auto shape = sidecar.at("shape").get<std::vector<int>>();
  if (shape.size() != 3 || shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) {
    throw DataError("sidecar shape must be [rows, cols, channels] with positive entries");
  }
  const int rows = shape[0], cols = shape[1], channels = shape[2];
  const std::string dtype = sidecar.value("dtype", std::string{"f32le"});
  const std::string interleave = sidecar.value("interleave", std::string{"bip"});
  if (interleave != "bip" && interleave != "bsq") {
    throw DataError("unsupported interleave '" + interleave + "'");
  }

  std::size_t width = 0;
  double (*decode)(const char*) = nullptr;
  if (dtype == "f32le") {
    width = 4;
    decode = [](const char* p) { return static_cast<double>(decode_le<float>(p)); };
  } else if (dtype == "f64le") {
    width = 8;
    decode = [](const char* p) { return decode_le<double>(p); };
  } else if (dtype == "u16le") {
    width = 2;
    decode = [](const char* p) { return static_cast<double>(decode_le<std::uint16_t>(p)); };
  } else if (dtype == "i16le") {
    width = 2;
    decode = [](const char* p) { return static_cast<double>(decode_le<std::int16_t>(p)); };
  } else {
    throw DataError("unsupported dtype '" + dtype + "'");
  }

  const auto bytes = read_bytes(raw_path);
  const std::size_t n = static_cast<std::size_t>(rows) * cols * channels;
  if (bytes.size() != n * width) {
    throw DataError("size mismatch: sidecar declares " + std::to_string(n) + " values of " +
                    std::to_string(width) + " bytes but " + raw_path.string() + " holds " +
                    std::to_string(bytes.size()) + " bytes");
  }
  std::vector<double> values(n);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = decode(bytes.data() + i * width);
    if (interleave == "bip") {
      values[i] = v;
    } else {
      const std::size_t ch = i / plane, px = i % plane;
      values[px * channels + ch] = v;
    }
  }
  Scene scene{HsiCube(rows, cols, channels, std::move(values)), std::nullopt, {}};
  if (gt_path) scene.ground_truth = decode_gt(read_bytes(*gt_path), rows, cols, *gt_path);
  if (sidecar.contains("band_names")) {
    scene.band_names = sidecar["band_names"].get<std::vector<std::string>>();
  }
  return scene;
}

std::string scene_hash(const HsiCube& cube) {
  Fnv1a h;
  h.update_value(cube.rows());
  h.update_value(cube.cols());
  h.update_value(cube.channels());
  h.update(std::as_bytes(cube.data()));
  return h.hex();
}

}  // namespace punch
