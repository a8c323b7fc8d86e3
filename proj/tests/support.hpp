#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testing {

inline double chi_square(const std::vector<std::uint64_t>& observed, double expected_each) {
  double stat = 0.0;
  for (auto o : observed) {
    const double d = static_cast<double>(o) - expected_each;
    stat += d * d / expected_each;
  }
  return stat;
}

inline double chi_square_critical(std::size_t df, double quantile = 0.999) {
  boost::math::chi_squared dist(static_cast<double>(df));
  return boost::math::quantile(dist, quantile);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("picap-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Settable clock for services under test.
struct FakeClock {
  std::chrono::system_clock::time_point now = std::chrono::system_clock::time_point{} + std::chrono::hours(1000);
  void advance(std::chrono::seconds s) { now += s; }
};

}  // namespace testing
