#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "mpscene/core.hpp"

namespace testing_support {

inline mpscene::Points2 random_pixels(std::mt19937_64& rng, std::size_t joints) {
  std::uniform_real_distribution<double> u(0.0, 1920.0), v(0.0, 1080.0);
  mpscene::Points2 p(static_cast<Eigen::Index>(joints), 2);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) << u(rng), v(rng);
  return p;
}

inline mpscene::Points3 random_points(std::mt19937_64& rng, std::size_t joints, double spread = 1.0) {
  std::normal_distribution<double> n(0.0, spread);
  mpscene::Points3 p(static_cast<Eigen::Index>(joints), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) << n(rng), n(rng), n(rng);
  return p;
}

/// Random scene whose root offsets track joint `root` of every pose.
inline mpscene::Scene3D random_scene(std::mt19937_64& rng, std::size_t poses, std::size_t joints,
                                     std::size_t root = 0) {
  mpscene::Scene3D s;
  std::normal_distribution<double> shift(0.0, 2.0);
  for (std::size_t p = 0; p < poses; ++p) {
    mpscene::Points3 pts = random_points(rng, joints);
    pts.rowwise() += Eigen::RowVector3d(shift(rng), shift(rng), shift(rng));
    s.root_offsets.push_back(pts.row(static_cast<Eigen::Index>(root)).transpose());
    s.poses.push_back({pts});
  }
  return s;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mpscene_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every regular file below `dir`, keyed by its relative path.
inline std::map<std::string, std::string> tree_bytes(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).generic_string()] = slurp(e.path());
  return out;
}

}  // namespace testing_support

#define EXPECT_MPSCENE_ERROR(stmt, expected_code)                                   \
  do {                                                                              \
    try {                                                                           \
      stmt;                                                                         \
      ADD_FAILURE() << "expected " << mpscene::to_string(expected_code);            \
    } catch (const mpscene::Error& e) {                                             \
      EXPECT_EQ(e.code(), expected_code) << e.what();                               \
    }                                                                               \
  } while (0)
