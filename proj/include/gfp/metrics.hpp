#pragma once
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace gfp {

struct MetricsRecord {
  long long step = 0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double vabc_loss = 0.0;  // weighted flow-matching loss
  double lambda = 0.0;
  double mean_abs_q = 0.0;
  double g_mean = 0.0;
  // Fractions of guidance weights above 0.01, 0.1, 0.25, 0.5, 0.75.
  std::array<double, 5> g_above{};
  std::optional<double> eval_score_actor;
  std::optional<double> eval_score_vabc;
};

// Shortest round-trip decimal form (std::to_chars): parsing the text back
// recovers the exact double, which the tests rely on.
std::string format_double(double v);

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const MetricsRecord& rec);
  static std::string header();

 private:
  std::ofstream out_;
};

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

// Minimal RFC-4180 field splitter (handles quoted fields and embedded quotes).
std::vector<std::string> split_csv_line(const std::string& line);

// Quote a CSV field when it needs quoting (commas, quotes, newlines).
std::string csv_escape(const std::string& field);

}  // namespace gfp
