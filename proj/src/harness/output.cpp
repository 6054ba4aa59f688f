#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>

#include "credal/annotations.hpp"
#include "credal/harness.hpp"

namespace credal::harness {

std::optional<double> ResultRow::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  return std::nullopt;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  const double h = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0 || k > n) throw std::invalid_argument("wilson_interval needs 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

json summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize needs at least one row");
  const std::string& experiment = rows.front().experiment;
  // group -> (index, metric -> values)
  std::map<std::string, std::pair<std::size_t, std::map<std::string, std::vector<double>>>> groups;
  for (const auto& r : rows) {
    if (r.experiment != experiment) throw std::invalid_argument("summarize: rows from more than one experiment");
    auto& g = groups[r.group];
    g.first = r.group_index;
    for (const auto& [k, v] : r.metrics) g.second[k].push_back(v);
  }
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& [name, g] : groups) order.emplace_back(g.first, name);
  std::sort(order.begin(), order.end());

  json out = json::array();
  for (const auto& [idx, name] : order) {
    auto& g = groups[name];
    json metrics = json::object();
    std::size_t count = 0;
    for (auto& [metric, values] : g.second) {
      std::sort(values.begin(), values.end());
      count = std::max(count, values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      json m{{"count", values.size()},
             {"mean", sum / static_cast<double>(values.size())},
             {"median", quantile_sorted(values, 0.5)},
             {"q90", quantile_sorted(values, 0.90)},
             {"q95", quantile_sorted(values, 0.95)},
             {"q99", quantile_sorted(values, 0.99)},
             {"min", values.front()},
             {"max", values.back()}};
      const bool binary = std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
      if (binary) {
        const auto k = static_cast<std::size_t>(std::count(values.begin(), values.end(), 1.0));
        const auto [lo, hi] = wilson_interval(k, values.size());
        m["wilson_low"] = lo;
        m["wilson_high"] = hi;
      }
      metrics[metric] = std::move(m);
    }
    out.push_back({{"group", name}, {"rows", count}, {"metrics", std::move(metrics)}});
  }
  return {{"experiment", experiment}, {"groups", std::move(out)}};
}

void write_csv(const std::filesystem::path& path, std::vector<ResultRow> rows, const std::string& header_comment) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.group_index, a.replication) < std::tie(b.group_index, b.replication);
  });
  std::vector<std::string> names;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.metrics)
      if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "# " << header_comment << '\n';
  os << "experiment,config_hash,group,replication,seed";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  std::string line;
  for (const auto& r : rows) {
    line = r.experiment + ',' + r.config_hash + ',' + r.group + ',' + std::to_string(r.replication) + ',' +
           std::to_string(r.seed);
    for (const auto& n : names) {
      line += ',';
      if (const auto v = r.metric(n)) line += format_real(*v);
    }
    line += '\n';
    os << line;
  }
}

}  // namespace credal::harness
