#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "delaycast/fcnn.hpp"
#include "delaycast/gbm.hpp"
#include "delaycast/rng.hpp"
#include "delaycast/ingest.hpp"
#include "delaycast/matrix.hpp"

// Slow, obviously-correct reference implementations used to check the fast
// code paths.
namespace testsupport {

// Fraction of (positive, negative) pairs ordered correctly, ties count 1/2.
double mann_whitney(const std::vector<double>& scores, const delaycast::Labels& labels);

struct OracleSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;
};

// Every (feature, midpoint) pair; each candidate partition is rebuilt from
// scratch by comparing every row against the threshold.
std::optional<OracleSplit> brute_gini_split(const delaycast::Matrix& x, const delaycast::Labels& y,
                                            const std::vector<std::size_t>& rows,
                                            const std::vector<std::size_t>& features, std::size_t min_leaf = 1);

std::optional<OracleSplit> brute_gbm_split(const delaycast::Matrix& x, const std::vector<double>& grad,
                                           const std::vector<double>& hess, const std::vector<std::size_t>& rows,
                                           const delaycast::gbm::GbmParams& params);

// distance_group by repeated subtraction.
int slow_distance_group(double miles);

struct GroupCount {
  std::size_t flights = 0;
  std::size_t delayed = 0;
};

// One pass over the table keyed by the grouping value, with the delay
// condition evaluated from raw minutes.
std::vector<std::pair<std::string, GroupCount>> brute_group_counts(const delaycast::ingest::FlightTable& table,
                                                                   delaycast::ingest::GroupKey key, int threshold,
                                                                   delaycast::ingest::Task task);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst;  // parameter name and element index
  std::size_t checked = 0;
};

// Central differences of bce_loss for every trainable scalar. Every forward
// pass draws its dropout masks from Rng(mask_seed), so all passes see the
// same masks. Relative error is |a - n| / max(|a| + |n|, 1e-6); the floor
// keeps elements whose true gradient is zero (e.g. a dense bias feeding
// batch norm) from dividing rounding noise by zero.
GradientCheck check_gradients(const delaycast::fcnn::Network& net, const delaycast::Matrix& x,
                              const delaycast::Labels& y, std::uint64_t mask_seed, double step = 1e-5);

struct SmallNetCase {
  delaycast::fcnn::Network net;
  delaycast::Matrix x;
  delaycast::Labels y;
};

// 1..3 hidden layers of width 2..16, batch 4..16, batch norm and dropout
// switched on at random.
SmallNetCase random_small_network(delaycast::Rng& rng);

}  // namespace testsupport
