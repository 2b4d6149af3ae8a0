#include "rainstore/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"

namespace rainstore {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::invalid_argument, "spearman: input lengths differ");
  std::vector<double> xs, ys;
  xs.reserve(x.size());
  ys.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    xs.push_back(x[i]);
    ys.push_back(y[i]);
  }
  const std::size_t n = xs.size();
  if (n < 3) throw Error(ErrorCode::insufficient_data, "spearman: fewer than 3 valid pairs");

  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;  // average ranks keep this mean
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::invalid_argument, "spearman: constant input has no rank variance");
  }
  SpearmanResult r;
  r.n = n;
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(r.rho) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
    const boost::math::students_t dist(df);
    r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  }
  return r;
}

CorrelationMatrix correlation_matrix(std::span<const Datastore> stores, const std::vector<std::string>& vars,
                                     double lat_min, double lat_max, const TimeRange& range, std::size_t n,
                                     std::uint64_t seed) {
  if (vars.empty()) throw Error(ErrorCode::invalid_argument, "no variables to correlate");
  if (n < 3) throw Error(ErrorCode::invalid_argument, "need at least 3 sample points");
  if (stores.empty()) throw Error(ErrorCode::invalid_argument, "no stores given");

  struct Source {
    const Datastore* store;
    bool is_static;
  };
  std::vector<Source> sources;
  for (const auto& name : vars) {
    const Datastore* found = nullptr;
    for (const auto& s : stores) {
      if (s.has(name)) {
        found = &s;
        break;
      }
    }
    if (found == nullptr) throw Error(ErrorCode::unknown_variable, "variable '" + name + "' not found in any store");
    if (!(found->grid() == stores.front().grid())) {
      throw Error(ErrorCode::invalid_argument, "variable '" + name + "' lives on a different grid");
    }
    sources.push_back({found, found->variable(name).is_static()});
  }
  const GridSpec& grid = stores.front().grid();

  std::vector<int> rows;
  for (int i = 0; i < grid.n_lat; ++i) {
    if (grid.lat_centers[i] >= lat_min && grid.lat_centers[i] <= lat_max) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::insufficient_data, "no grid rows inside the latitude band");

  // common timestamps of the temporal sources
  std::vector<Timestamp> times;
  const Datastore* reference = nullptr;
  for (const auto& s : sources) {
    if (!s.is_static) {
      reference = s.store;
      break;
    }
  }
  if (reference == nullptr) {
    times.push_back(stores.front().header().time_start);
  } else {
    const auto [first, last] = reference->header().frames_in(range);
    for (std::int64_t t = first; t < last; ++t) {
      const Timestamp ts = reference->header().timestamp(t);
      const bool everywhere = std::all_of(sources.begin(), sources.end(), [&](const Source& s) {
        return s.is_static || s.store->header().frame_at(ts).has_value();
      });
      if (everywhere) times.push_back(ts);
    }
  }
  if (times.empty()) throw Error(ErrorCode::insufficient_data, "no common frames in the requested range");

  const std::uint64_t per_time = static_cast<std::uint64_t>(rows.size()) * grid.n_lon;
  const std::uint64_t population = per_time * times.size();
  const std::uint64_t draws = std::min<std::uint64_t>(n, population);
  Engine rng(derive_seed(seed, "correlation_matrix"));
  const auto picks = sample_without_replacement(population, draws, rng);

  std::vector<std::vector<double>> columns(vars.size(), std::vector<double>(draws));
  for (std::size_t k = 0; k < draws; ++k) {
    const std::uint64_t p = picks[k];
    const Timestamp ts = times[p / per_time];
    const std::uint64_t rem = p % per_time;
    const std::size_t cell = grid.index(rows[rem / grid.n_lon], static_cast<int>(rem % grid.n_lon));
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const Source& s = sources[v];
      const std::int64_t t = s.is_static ? 0 : *s.store->header().frame_at(ts);
      columns[v][k] = s.store->frame_view(vars[v], t)[cell];
    }
  }

  CorrelationMatrix m;
  m.vars = vars;
  m.n_points = draws;
  const std::size_t nv = vars.size();
  m.rho.assign(nv * nv, 1.0);
  m.p_value.assign(nv * nv, 0.0);
  m.significant.assign(nv * nv, 1);
  for (std::size_t i = 0; i < nv; ++i) {
    for (std::size_t j = i + 1; j < nv; ++j) {
      const SpearmanResult r = spearman(columns[i], columns[j]);
      for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
        m.rho[a * nv + b] = r.rho;
        m.p_value[a * nv + b] = r.p_value;
        m.significant[a * nv + b] = r.p_value < m.alpha ? 1 : 0;
      }
    }
  }
  return m;
}

PrecipHistogram precip_histogram(const Datastore& store, std::string_view var, const TimeRange& range,
                                 int n_bins, const ClassBinning& binning) {
  if (n_bins < 1) throw Error(ErrorCode::invalid_argument, "histogram needs at least one bin");
  const VariableSpec& spec = store.variable(var);
  std::int64_t first = 0, last = 1;
  if (!spec.is_static()) std::tie(first, last) = store.header().frames_in(range);

  PrecipHistogram h;
  h.class_markers = binning.edges;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::int64_t t = first; t < last; ++t) {
    for (float v : store.frame_view(var, t)) {
      if (std::isnan(v)) {
        ++h.nan_count;
      } else if (v <= 0.0f) {
        ++h.zero_count;
        if (v < 0.0f) ++h.clipped_negative;
      } else {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
      }
    }
  }
  h.max_value = hi;
  h.class_counts[static_cast<int>(PrecipClass::slight)] = h.zero_count;
  if (hi == 0.0) return h;  // nothing positive

  if (hi > lo) {
    const double ratio = std::log(hi / lo);
    for (int k = 0; k <= n_bins; ++k) h.edges.push_back(lo * std::exp(ratio * k / n_bins));
    h.edges.front() = lo;
    h.edges.back() = hi;
  } else {
    h.edges = {lo, hi};
  }
  for (double e : binning.edges) {
    if (e > lo && e < hi) h.edges.push_back(e);
  }
  std::sort(h.edges.begin(), h.edges.end());
  h.edges.erase(std::unique(h.edges.begin(), h.edges.end()), h.edges.end());
  if (h.edges.size() < 2) h.edges.push_back(hi);
  h.counts.assign(h.edges.size() - 1, 0);

  for (std::int64_t t = first; t < last; ++t) {
    for (float v : store.frame_view(var, t)) {
      if (!(v > 0.0f)) continue;
      const double x = v;
      auto b = static_cast<std::size_t>(std::upper_bound(h.edges.begin(), h.edges.end(), x) - h.edges.begin());
      b = std::min(b == 0 ? 0 : b - 1, h.counts.size() - 1);
      ++h.counts[b];
    }
  }
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    h.class_counts[static_cast<int>(binning.classify(h.edges[b]))] += h.counts[b];
  }
  return h;
}

std::vector<Field> class_frequency_map(const Datastore& store, std::string_view var,
                                       const ClassBinning& binning, const TimeRange& range) {
  const VariableSpec& spec = store.variable(var);
  std::int64_t first = 0, last = 1;
  if (!spec.is_static()) {
    if (range.empty()) throw Error(ErrorCode::invalid_argument, "empty class map range");
    std::tie(first, last) = store.header().frames_in(range);
  }
  const std::size_t cells = store.grid().cells();
  std::vector<std::array<std::uint64_t, kNumClasses>> counts(cells);
  std::vector<std::uint64_t> valid(cells, 0);
  for (std::int64_t t = first; t < last; ++t) {
    const auto frame = store.frame_view(var, t);
    for (std::size_t i = 0; i < cells; ++i) {
      if (std::isnan(frame[i])) continue;
      ++counts[i][static_cast<int>(binning.classify(std::max(0.0f, frame[i])))];
      ++valid[i];
    }
  }
  std::vector<Field> maps;
  for (int c = 0; c < kNumClasses; ++c) {
    Field f(store.grid(), std::numeric_limits<double>::quiet_NaN(), "%");
    for (std::size_t i = 0; i < cells; ++i) {
      if (valid[i] > 0) f.values[i] = 100.0 * static_cast<double>(counts[i][c]) / static_cast<double>(valid[i]);
    }
    maps.push_back(std::move(f));
  }
  return maps;
}

nlohmann::json to_json(const CorrelationMatrix& m) {
  const std::size_t nv = m.size();
  nlohmann::json rho = nlohmann::json::array(), p = nlohmann::json::array(), sig = nlohmann::json::array();
  for (std::size_t i = 0; i < nv; ++i) {
    nlohmann::json r1 = nlohmann::json::array(), p1 = nlohmann::json::array(), s1 = nlohmann::json::array();
    for (std::size_t j = 0; j < nv; ++j) {
      r1.push_back(m.at(i, j));
      p1.push_back(m.p_at(i, j));
      s1.push_back(m.significant[i * nv + j] != 0);
    }
    rho.push_back(r1);
    p.push_back(p1);
    sig.push_back(s1);
  }
  return {{"variables", m.vars}, {"rho", rho}, {"p_value", p}, {"significant", sig},
          {"alpha", m.alpha}, {"n_points", m.n_points}};
}

nlohmann::json to_json(const PrecipHistogram& h) {
  static const ClassBinning binning;
  nlohmann::json classes = nlohmann::json::object();
  for (int c = 0; c < kNumClasses; ++c) classes[binning.labels[c]] = h.class_counts[c];
  return {{"edges", h.edges},       {"counts", h.counts},
          {"zero_count", h.zero_count}, {"clipped_negative", h.clipped_negative},
          {"nan_count", h.nan_count}, {"max_value", h.max_value},
          {"class_markers", h.class_markers}, {"class_counts", classes}};
}

nlohmann::json class_maps_to_json(const std::vector<Field>& maps, const ClassBinning& binning) {
  nlohmann::json out = nlohmann::json::object();
  if (maps.empty()) return out;
  out["grid"] = {{"n_lat", maps.front().grid.n_lat}, {"n_lon", maps.front().grid.n_lon}};
  out["units"] = "% of events";
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < maps.size(); ++c) {
    nlohmann::json values = nlohmann::json::array();
    for (double v : maps[c].values) values.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    classes[binning.labels[c]] = values;
  }
  out["classes"] = classes;
  return out;
}

std::string to_delimited(const CorrelationMatrix& m, char sep) {
  std::ostringstream out;
  out.precision(17);
  out << "var";
  for (const auto& v : m.vars) out << sep << v;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.vars[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << sep << m.at(i, j);
    out << '\n';
  }
  return out.str();
}

std::string to_delimited(const PrecipHistogram& h, char sep) {
  std::ostringstream out;
  out.precision(17);
  out << "lower" << sep << "upper" << sep << "count\n";
  out << 0 << sep << 0 << sep << h.zero_count << '\n';
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << h.edges[b] << sep << h.edges[b + 1] << sep << h.counts[b] << '\n';
  }
  return out.str();
}

}  // namespace rainstore
