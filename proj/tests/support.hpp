// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 bumphunt contributors

#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bumphunt/light_curve.hpp"
#include "bumphunt/wavelet_basis.hpp"

namespace testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("bumphunt_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Sorted distinct uniform times on [0, length], endpoints included.
inline std::vector<double> random_times(std::mt19937_64& rng, int n, double length) {
  std::uniform_real_distribution<double> u(0.0, length);
  std::vector<double> t{0.0, length};
  while (static_cast<int>(t.size()) < n) t.push_back(u(rng));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Basis with M = 16 and k_l = 4: scaling functions at level 2, wavelets at levels 2 and 3.
inline bumphunt::BasisSpec small_basis() {
  bumphunt::BasisSpec spec;
  spec.total_components = 16;
  spec.trend_components = 4;
  return spec;
}

inline bumphunt::LightCurve make_curve(std::string id, std::vector<double> t, std::vector<double> y,
                                       std::string field = "F1") {
  bumphunt::LightCurve c;
  c.source_id = std::move(id);
  c.field_id = std::move(field);
  c.times = std::move(t);
  c.values = std::move(y);
  return c;
}

}  // namespace testing
