#pragma once

#include "vsraug/core.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

namespace testing_util {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string &tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("vsraug-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }
  fs::path operator/(const std::string &name) const { return path_ / name; }

private:
  fs::path path_;
};

inline std::string slurp(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const fs::path &p, const std::string &bytes) {
  std::ofstream f(p, std::ios::binary);
  f << bytes;
}

/// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const fs::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  return out;
}

inline vsraug::Frame random_frame(std::size_t c, std::size_t h, std::size_t w, vsraug::RngStream &rng) {
  vsraug::Frame f(c, h, w);
  for (double &v : f.values()) v = rng.next_uniform();
  return f;
}

inline vsraug::VideoSequence random_video(std::size_t n, std::size_t c, std::size_t h, std::size_t w,
                                          vsraug::RngStream &rng) {
  std::vector<vsraug::Frame> frames;
  for (std::size_t i = 0; i < n; ++i) frames.push_back(random_frame(c, h, w, rng));
  return vsraug::VideoSequence(std::move(frames));
}

} // namespace testing_util
