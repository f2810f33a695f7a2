#pragma once

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <string>

#include "aesust/tensor.hpp"

namespace testing_support {

using aesust::Index;
using aesust::Shape;
using aesust::Tensor;

template <typename T = double>
Tensor<T> randn(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor<T> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<T>(d(rng));
  return t;
}

inline Tensor<float> uniform_image(const Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  Tensor<float> t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

template <typename T>
bool bits_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.raw(), b.raw(), sizeof(T) * static_cast<std::size_t>(a.size())) == 0;
}

template <typename T>
double max_diff(const Tensor<T>& a, const Tensor<T>& b) {
  EXPECT_EQ(a.shape(), b.shape());
  double m = 0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = "aesust-test-";
    if (info) name += std::string(info->test_suite_name()) + "-" + info->name();
    path_ = std::filesystem::temp_directory_path() / (name + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
