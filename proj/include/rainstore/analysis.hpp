#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/sampler.hpp"
#include "rainstore/store.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

// 1-based ranks; ties share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, Student-t with n-2 degrees of freedom
  std::size_t n = 0;     // pairs used after dropping NaN
};

SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> vars;
  std::vector<double> rho;      // row-major, size vars^2
  std::vector<double> p_value;  // row-major
  std::vector<std::uint8_t> significant;
  std::size_t n_points = 0;
  double alpha = 0.05;

  std::size_t size() const { return vars.size(); }
  double at(std::size_t i, std::size_t j) const { return rho[i * vars.size() + j]; }
  double p_at(std::size_t i, std::size_t j) const { return p_value[i * vars.size() + j]; }
};

// Pairwise Spearman correlation over n (time, pixel) points drawn uniformly
// without replacement from the rows whose centers lie in [lat_min, lat_max].
// Times are those present in every store holding one of the temporal vars.
CorrelationMatrix correlation_matrix(std::span<const Datastore> stores, const std::vector<std::string>& vars,
                                     double lat_min, double lat_max, const TimeRange& range, std::size_t n,
                                     std::uint64_t seed);

struct PrecipHistogram {
  std::vector<double> edges;           // bins are [edges[b], edges[b+1]); the last one is closed
  std::vector<std::uint64_t> counts;
  std::uint64_t zero_count = 0;        // includes clipped negatives
  std::uint64_t clipped_negative = 0;
  std::uint64_t nan_count = 0;
  double max_value = 0.0;
  std::array<double, 3> class_markers{};
  std::array<std::uint64_t, kNumClasses> class_counts{};  // derived from bins
};

// Log-spaced bins from the smallest positive value to the maximum, with the
// class boundaries inserted as extra edges so every bin lies in one class.
PrecipHistogram precip_histogram(const Datastore& store, std::string_view var, const TimeRange& range,
                                 int n_bins = 40, const ClassBinning& binning = {});

// Per pixel, percentage of valid frames in each class (one field per class).
std::vector<Field> class_frequency_map(const Datastore& store, std::string_view var,
                                       const ClassBinning& binning, const TimeRange& range);

nlohmann::json to_json(const CorrelationMatrix& m);
nlohmann::json to_json(const PrecipHistogram& h);
nlohmann::json class_maps_to_json(const std::vector<Field>& maps, const ClassBinning& binning);
std::string to_delimited(const CorrelationMatrix& m, char sep = ',');
std::string to_delimited(const PrecipHistogram& h, char sep = ',');

}  // namespace rainstore
