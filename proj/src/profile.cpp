#include "gfp/profile.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>

#include "gfp/config.hpp"
#include "gfp/metrics.hpp"

namespace gfp {

std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scores csv: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("scores csv is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "task,algorithm,score") {
    throw ConfigError("scores csv must have header 'task,algorithm,score', got '" + line + "'");
  }
  std::vector<ScoreRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) {
      throw ConfigError("scores csv row must have 3 fields, got " + std::to_string(f.size()));
    }
    ScoreRecord r;
    r.task = f[0];
    r.algorithm = f[1];
    auto res = std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.score);
    if (res.ec != std::errc{} || res.ptr != f[2].data() + f[2].size()) {
      throw ConfigError("scores csv has a non-numeric score: '" + f[2] + "'");
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ConfigError("scores csv has no data rows: " + path.string());
  return records;
}

std::vector<ProfilePoint> performance_profile(const std::vector<ScoreRecord>& scores,
                                              const std::vector<double>& taus) {
  if (scores.empty()) throw ConfigError("performance profile needs at least one score");
  if (taus.empty()) throw ConfigError("performance profile needs at least one tau");
  std::map<std::string, std::vector<double>> by_algorithm;
  for (const ScoreRecord& r : scores) by_algorithm[r.algorithm].push_back(r.score);
  std::vector<ProfilePoint> points;
  for (const auto& [algorithm, values] : by_algorithm) {
    for (double tau : taus) {
      const auto above =
          std::count_if(values.begin(), values.end(), [tau](double v) { return v > tau; });
      points.push_back({algorithm, tau, double(above) / double(values.size())});
    }
  }
  return points;
}

void write_profile_csv(const std::filesystem::path& path,
                       const std::vector<ProfilePoint>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write profile csv: " + path.string());
  out << "algorithm,tau,fraction\n";
  for (const ProfilePoint& p : points) {
    out << csv_escape(p.algorithm) << ',' << format_double(p.tau) << ','
        << format_double(p.fraction) << "\n";
  }
}

}  // namespace gfp
