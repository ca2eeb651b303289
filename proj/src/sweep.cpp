#include "gfp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>
#include <tuple>

#include "gfp/trainer.hpp"

namespace gfp {

void SweepSpec::validate() const {
  if (axis != "eta" && axis != "alpha" && axis != "both") {
    throw ConfigError("sweep axis must be eta|alpha|both, got '" + axis + "'");
  }
  const bool needs_eta = axis == "eta" || axis == "both";
  const bool needs_alpha = axis == "alpha" || axis == "both";
  if (needs_eta) {
    if (eta_values.empty()) throw ConfigError("sweep needs at least one eta value");
    for (double v : eta_values) {
      if (!(v > 0.0)) throw ConfigError("sweep eta values must be > 0");
    }
  }
  if (needs_alpha) {
    if (alpha_values.empty()) throw ConfigError("sweep needs at least one alpha value");
    for (double v : alpha_values) {
      if (!(v > 0.0)) throw ConfigError("sweep alpha values must be > 0");
    }
  }
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (out_dir.empty()) throw ConfigError("sweep needs an output directory");
}

int sweep_worker_count(size_t n_runs) {
  int workers = 0;
  if (const char* env = std::getenv("GFP_THREADS")) {
    workers = std::atoi(env);
    if (workers < 1) throw ConfigError("GFP_THREADS must be a positive integer");
  } else {
    workers = int(std::max(1u, std::thread::hardware_concurrency()));
  }
  return int(std::min<size_t>(size_t(workers), std::max<size_t>(n_runs, 1)));
}

namespace {

std::string run_tag(double eta, double alpha, uint64_t seed) {
  return "eta" + format_double(eta) + "_alpha" + format_double(alpha) + "_seed" +
         std::to_string(seed);
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::ostream* log) {
  spec.validate();
  std::ifstream in(spec.base_config);
  if (!in) throw ConfigError("cannot open base config: " + spec.base_config.string());
  nlohmann::json base;
  try {
    in >> base;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("base config is not valid JSON: " + std::string(e.what()));
  }
  for (const std::string& kv : spec.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("override expects key=value, got '" + kv + "'");
    apply_override(base, kv.substr(0, eq), kv.substr(eq + 1));
  }
  TrainConfig base_cfg = TrainConfig::from_json(base);  // early validation

  // The cross product collapses to a single line when an axis is fixed at the
  // base config's value.
  std::vector<double> etas = spec.eta_values;
  std::vector<double> alphas = spec.alpha_values;
  if (spec.axis == "eta") alphas = {base_cfg.alpha};
  if (spec.axis == "alpha") etas = {base_cfg.guidance.eta};

  struct Job {
    double eta, alpha;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double eta : etas) {
    for (double alpha : alphas) {
      for (uint64_t seed : spec.seeds) jobs.push_back({eta, alpha, seed});
    }
  }

  OfflineDataset ds = load_dataset(base_cfg.dataset);
  std::filesystem::create_directories(spec.out_dir / "runs");

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& job = jobs[i];
      SweepRow& row = rows[i];
      row.eta = job.eta;
      row.alpha = job.alpha;
      row.seed = job.seed;
      const std::string tag = run_tag(job.eta, job.alpha, job.seed);
      try {
        nlohmann::json doc = base;
        apply_override(doc, "guidance.eta", format_double(job.eta));
        apply_override(doc, "alpha", format_double(job.alpha));
        apply_override(doc, "seed", std::to_string(job.seed));
        const auto run_dir = spec.out_dir / "runs" / tag;
        std::filesystem::create_directories(run_dir);
        apply_override(doc, "metrics_path", (run_dir / "metrics.csv").string());
        apply_override(doc, "checkpoint_path", (run_dir / "checkpoints").string());
        Trainer trainer(TrainConfig::from_json(doc), ds);
        RunResult res = trainer.train_run(nullptr);
        row.ok = true;
        row.actor_score = res.actor_score;
        row.vabc_score = res.vabc_score;
        row.final_record = res.final_record;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.ok = false;
        row.status = e.what();
      }
      if (log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *log << "sweep run " << tag << ": " << (row.ok ? "ok" : row.status) << "\n";
      }
    }
  };

  const int n_workers = sweep_worker_count(jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.eta, a.alpha, a.seed) < std::tie(b.eta, b.alpha, b.seed);
  });
  return rows;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sweep csv: " + path.string());
  out << "eta,alpha,seed,actor_score,vabc_score,g_mean,"
         "g_p_gt_0.01,g_p_gt_0.1,g_p_gt_0.25,g_p_gt_0.5,g_p_gt_0.75,status\n";
  for (const SweepRow& r : rows) {
    out << format_double(r.eta) << ',' << format_double(r.alpha) << ',' << r.seed << ',';
    if (r.ok) {
      out << format_double(r.actor_score) << ',' << format_double(r.vabc_score) << ','
          << format_double(r.final_record.g_mean);
      for (double f : r.final_record.g_above) out << ',' << format_double(f);
    } else {
      out << ",,,,,,,";
    }
    out << ',' << csv_escape(r.status) << "\n";
  }
}

}  // namespace gfp
