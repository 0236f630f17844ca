#pragma once

#include <cstdint>
#include <string>

#include "delaycast/ingest.hpp"
#include "delaycast/matrix.hpp"

namespace testsupport {

struct Dataset {
  delaycast::Matrix x;
  delaycast::Labels y;
};

// Random BTS-like flights spread evenly over `months` consecutive months
// starting January 2018. Delays depend on departure hour, carrier and month
// so models have something to learn.
delaycast::ingest::FlightTable random_flights(std::size_t n, std::uint64_t seed, int months = 27);

// Exactly `per_month` flights in each of `months` consecutive months.
delaycast::ingest::FlightTable monthly_table(int months, int per_month, std::uint64_t seed);

// BTS-header CSV text for a table.
std::string to_csv(const delaycast::ingest::FlightTable& table);

// Writes to_csv(table) to `path`.
void write_csv(const std::string& path, const delaycast::ingest::FlightTable& table);

// Two noisy concentric rings (radius 1 for class 0, `factor` for class 1)
// plus `extra` pure-noise columns.
Dataset concentric_circles(std::size_t n, double noise, double factor, std::size_t extra, std::uint64_t seed);

// Two features, label = x0 + x1 > 0 with a margin around the boundary.
Dataset linearly_separable(std::size_t n, std::uint64_t seed);

// Gaussian blobs at +-1 in every coordinate.
Dataset blobs(std::size_t n, std::size_t width, double spread, std::uint64_t seed);

// Fresh directory under the system temp dir; removed by the destructor.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

std::string read_file(const std::string& path);

}  // namespace testsupport
