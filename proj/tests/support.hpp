#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "punch/cube.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("punch-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline std::vector<unsigned char> f32le(const std::vector<float>& values) {
  std::vector<unsigned char> out;
  for (float v : values) {
    unsigned char b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
  }
  return out;
}

inline std::vector<unsigned char> u16le(const std::vector<std::uint16_t>& values) {
  std::vector<unsigned char> out;
  for (auto v : values) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
  }
  return out;
}

inline punch::ClassGrid grid(int rows, int cols, std::vector<std::uint16_t> ids) { return {rows, cols, std::move(ids)}; }

// Class grid drawn from strings: '.' is class 0, digits are class ids.
inline punch::ClassGrid draw(const std::vector<std::string>& lines) {
  punch::ClassGrid g{static_cast<int>(lines.size()), static_cast<int>(lines.front().size()), {}};
  for (const auto& l : lines) {
    for (char ch : l) g.ids.push_back(ch == '.' ? 0 : static_cast<std::uint16_t>(ch - '0'));
  }
  return g;
}

// Concordant-pair probability with ties counted as one half, as an exact
// fraction numerator over 2 * P * N.
inline double brute_force_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  long long twice = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!truth[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (truth[j]) continue;
      ++pairs;
      twice += scores[i] > scores[j] ? 2 : scores[i] == scores[j] ? 1 : 0;
    }
  }
  return static_cast<double>(twice) / static_cast<double>(2 * pairs);
}

}  // namespace testing
