#pragma once
#include <filesystem>
#include <string>
#include <vector>

namespace gfp {

struct ScoreRecord {
  std::string task;
  std::string algorithm;
  double score = 0.0;
};

// Expects header "task,algorithm,score"; rejects an empty body.
std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path);

struct ProfilePoint {
  std::string algorithm;
  double tau = 0.0;
  double fraction = 0.0;  // fraction of that algorithm's tasks with score > tau
};

// One point per (algorithm, tau); algorithms sorted, taus in caller order.
std::vector<ProfilePoint> performance_profile(const std::vector<ScoreRecord>& scores,
                                              const std::vector<double>& taus);

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfilePoint>& points);

}  // namespace gfp
