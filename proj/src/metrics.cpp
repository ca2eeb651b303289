#include "gfp/metrics.hpp"

#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace gfp {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

std::string MetricsWriter::header() {
  return "step,critic_loss,actor_loss,vabc_loss,lambda,mean_abs_q,g_mean,"
         "g_p_gt_0.01,g_p_gt_0.1,g_p_gt_0.25,g_p_gt_0.5,g_p_gt_0.75,"
         "eval_score_actor,eval_score_vabc";
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open metrics file for writing: " + path.string());
  out_ << header() << "\n";
}

void MetricsWriter::write(const MetricsRecord& rec) {
  out_ << rec.step << ',' << format_double(rec.critic_loss) << ',' << format_double(rec.actor_loss)
       << ',' << format_double(rec.vabc_loss) << ',' << format_double(rec.lambda) << ','
       << format_double(rec.mean_abs_q) << ',' << format_double(rec.g_mean);
  for (double f : rec.g_above) out_ << ',' << format_double(f);
  out_ << ',';
  if (rec.eval_score_actor) out_ << format_double(*rec.eval_score_actor);
  out_ << ',';
  if (rec.eval_score_vabc) out_ << format_double(*rec.eval_score_vabc);
  out_ << "\n";
  out_.flush();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

double parse_double_field(const std::string& s, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(std::string("metrics csv: bad ") + what + " value '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("metrics file is empty: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != MetricsWriter::header()) {
    throw std::runtime_error("metrics file has unexpected header: " + path.string());
  }
  std::vector<MetricsRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 14) {
      throw std::runtime_error("metrics csv: expected 14 fields, got " + std::to_string(f.size()));
    }
    MetricsRecord r;
    r.step = std::stoll(f[0]);
    r.critic_loss = parse_double_field(f[1], "critic_loss");
    r.actor_loss = parse_double_field(f[2], "actor_loss");
    r.vabc_loss = parse_double_field(f[3], "vabc_loss");
    r.lambda = parse_double_field(f[4], "lambda");
    r.mean_abs_q = parse_double_field(f[5], "mean_abs_q");
    r.g_mean = parse_double_field(f[6], "g_mean");
    for (int i = 0; i < 5; ++i) r.g_above[size_t(i)] = parse_double_field(f[size_t(7 + i)], "g fraction");
    if (!f[12].empty()) r.eval_score_actor = parse_double_field(f[12], "eval_score_actor");
    if (!f[13].empty()) r.eval_score_vabc = parse_double_field(f[13], "eval_score_vabc");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace gfp
