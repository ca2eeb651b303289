#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfp/config.hpp"
#include "gfp/dataset.hpp"
#include "gfp/gradcheck.hpp"
#include "gfp/metrics.hpp"
#include "gfp/profile.hpp"
#include "gfp/sweep.hpp"
#include "gfp/trainer.hpp"

namespace {

using gfp::ConfigError;
using nlohmann::json;

double parse_double_strict(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& p : split_list(s)) {
    if (p.empty()) throw ConfigError(what + ": empty entry in list '" + s + "'");
    out.push_back(parse_double_strict(p, what));
  }
  return out;
}

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  for (const std::string& p : split_list(s)) {
    uint64_t v = 0;
    auto res = std::from_chars(p.data(), p.data() + p.size(), v);
    if (res.ec != std::errc{} || res.ptr != p.data() + p.size()) {
      throw ConfigError("seeds: '" + p + "' is not a non-negative integer");
    }
    out.push_back(v);
  }
  return out;
}

gfp::BehaviorMix parse_mix(const std::string& s) {
  std::map<std::string, double> m;
  for (const std::string& part : split_list(s)) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("mix entry '" + part + "' must look like name=weight");
    }
    const std::string key = part.substr(0, eq);
    m[key] = parse_double_strict(part.substr(eq + 1), "mix weight for '" + key + "'");
  }
  return gfp::BehaviorMix::from_map(m);
}

json config_json_with_overrides(const std::string& config_path,
                                const std::vector<std::string>& sets) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
  }
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    gfp::apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return doc;
}

int cmd_gendata(const std::string& env_id, long long n, const std::string& mix_str, uint64_t seed,
                const std::string& out_dir) {
  gfp::EnvSpec spec = gfp::env_spec(env_id);
  gfp::BehaviorMix mix = parse_mix(mix_str);
  mix.validate(spec);
  gfp::OfflineDataset ds = gfp::generate_dataset(spec, n, mix, seed);
  gfp::save_dataset(ds, out_dir);
  json report;
  report["env_id"] = ds.env_id;
  report["n"] = ds.n;
  report["seed"] = ds.seed;
  json mix_json;
  for (const auto& [k, v] : mix.as_map()) mix_json[k] = v;
  report["mix"] = mix_json;
  report["out"] = out_dir;
  std::cout << report.dump(2) << "\n";
  std::cerr << "wrote " << ds.n << " transitions for " << ds.env_id << " to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets) {
  json doc = config_json_with_overrides(config_path, sets);
  gfp::TrainConfig cfg = gfp::TrainConfig::from_json(doc);
  gfp::OfflineDataset ds = gfp::load_dataset(cfg.dataset);
  gfp::Trainer trainer(cfg, std::move(ds));
  gfp::RunResult res = trainer.train_run(&std::cerr);
  json report;
  report["actor_score"] = res.actor_score;
  report["vabc_score"] = res.vabc_score;
  report["actor_return"] = res.actor_return;
  report["vabc_return"] = res.vabc_return;
  report["total_steps"] = cfg.total_steps;
  report["metrics_path"] = cfg.metrics_path;
  report["checkpoint_path"] = cfg.checkpoint_path;
  std::cout << report.dump(2) << "\n";
  std::cerr << "final scores  actor " << res.actor_score << "  vabc " << res.vabc_score << "\n";
  return 0;
}

int cmd_eval(const std::string& run_dir, const std::string& policy, int episodes, uint64_t seed) {
  gfp::PolicyKind kind;
  if (policy == "actor") {
    kind = gfp::PolicyKind::Actor;
  } else if (policy == "vabc") {
    kind = gfp::PolicyKind::Vabc;
  } else {
    throw ConfigError("--policy must be actor|vabc, got '" + policy + "'");
  }
  gfp::Trainer trainer = gfp::Trainer::from_checkpoint(run_dir);
  gfp::EvalReport rep = trainer.evaluate_seeded(kind, episodes, seed, 0);
  json report;
  report["policy"] = policy;
  report["episodes"] = episodes;
  report["mean_return"] = rep.mean_return;
  report["normalized_score"] = rep.score;
  std::cout << report.dump(2) << "\n";
  std::cerr << policy << " score " << rep.score << " over " << episodes << " episodes\n";
  return 0;
}

int cmd_sweep(const gfp::SweepSpec& spec) {
  std::vector<gfp::SweepRow> rows = gfp::run_sweep(spec, &std::cerr);
  std::filesystem::create_directories(spec.out_dir);
  const auto csv_path = spec.out_dir / "sweep.csv";
  gfp::write_sweep_csv(csv_path, rows);
  json report;
  report["rows"] = rows.size();
  report["failed"] = std::count_if(rows.begin(), rows.end(),
                                   [](const gfp::SweepRow& r) { return !r.ok; });
  report["csv"] = csv_path.string();
  std::cout << report.dump(2) << "\n";
  std::cerr << "sweep wrote " << rows.size() << " rows to " << csv_path.string() << "\n";
  return 0;
}

int cmd_profile(const std::string& scores_path, const std::string& taus_str,
                const std::string& out_path) {
  std::vector<gfp::ScoreRecord> scores = gfp::read_scores_csv(scores_path);
  std::vector<double> taus = parse_double_list(taus_str, "taus");
  std::vector<gfp::ProfilePoint> points = gfp::performance_profile(scores, taus);
  if (out_path.empty()) {
    std::cout << "algorithm,tau,fraction\n";
    for (const auto& p : points) {
      std::cout << gfp::csv_escape(p.algorithm) << ',' << gfp::format_double(p.tau) << ','
                << gfp::format_double(p.fraction) << "\n";
    }
  } else {
    gfp::write_profile_csv(out_path, points);
    std::cerr << "profile written to " << out_path << "\n";
  }
  return 0;
}

int cmd_gradcheck(double tolerance, uint64_t seed, bool corrupt) {
  if (!(tolerance > 0.0)) throw ConfigError("--tolerance must be > 0");
  std::vector<gfp::GradCheckProblem> problems = gfp::standard_gradcheck_problems(seed);
  if (corrupt && !problems.empty()) {
    // Deliberate fault injection: doubles the largest-magnitude entry of the
    // first problem's analytic gradient, which the checker must catch.
    auto original = problems[0].grad;
    problems[0].grad = [original](const gfp::ParamSet& p) {
      gfp::ParamSet g = original(p);
      double best = -1.0;
      double* target = nullptr;
      for (auto& layer : g.layers) {
        for (auto* block : {&layer.W}) {
          for (Eigen::Index i = 0; i < block->size(); ++i) {
            if (std::abs(block->data()[i]) > best) {
              best = std::abs(block->data()[i]);
              target = block->data() + i;
            }
          }
        }
        for (auto* vec : {&layer.b, &layer.ln_gain, &layer.ln_offset}) {
          for (Eigen::Index i = 0; i < vec->size(); ++i) {
            if (std::abs((*vec)[i]) > best) {
              best = std::abs((*vec)[i]);
              target = vec->data() + i;
            }
          }
        }
      }
      if (target) *target *= 2.0;
      return g;
    };
  }
  gfp::GradCheckReport report = gfp::grad_check(problems, tolerance);
  json out;
  out["tolerance"] = report.tolerance;
  out["passed"] = report.passed;
  out["max_rel_err"] = report.max_rel_err;
  json entries = json::array();
  for (const auto& e : report.entries) {
    json je;
    je["problem"] = e.problem;
    je["layer"] = e.layer;
    je["max_rel_err"] = e.max_rel_err;
    entries.push_back(je);
  }
  out["entries"] = entries;
  std::cout << out.dump(2) << "\n";
  for (const auto& e : report.entries) {
    std::cerr << (e.max_rel_err < tolerance ? "ok   " : "FAIL ") << e.problem << " " << e.layer
              << "  rel err " << e.max_rel_err << "\n";
  }
  std::cerr << (report.passed ? "gradient check passed" : "gradient check FAILED") << "\n";
  return report.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guided-flow offline RL engine"};
  app.require_subcommand(1);

  auto* gendata = app.add_subcommand("gendata", "Generate an offline dataset");
  std::string gd_env, gd_mix, gd_out;
  long long gd_n = 10000;
  uint64_t gd_seed = 0;
  gendata->add_option("--env", gd_env, "Environment id")->required();
  gendata->add_option("--n", gd_n, "Number of transitions")->required();
  gendata->add_option("--mix", gd_mix, "Behavior mix, e.g. expert=0.5,random=0.5")->required();
  gendata->add_option("--seed", gd_seed, "Generation seed");
  gendata->add_option("--out", gd_out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train from a JSON config");
  std::string tr_config;
  std::vector<std::string> tr_sets;
  train->add_option("--config", tr_config, "Config JSON path")->required();
  train->add_option("--set", tr_sets, "Override config field, key=value (repeatable)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ev_run, ev_policy = "actor";
  int ev_episodes = 100;
  uint64_t ev_seed = 0;
  eval->add_option("--run", ev_run, "Checkpoint directory")->required();
  eval->add_option("--policy", ev_policy, "actor|vabc");
  eval->add_option("--episodes", ev_episodes, "Number of evaluation episodes");
  eval->add_option("--seed", ev_seed, "Evaluation seed");

  auto* sweep = app.add_subcommand("sweep", "Hyperparameter sweep");
  std::string sw_config, sw_axis = "eta", sw_eta, sw_alpha, sw_seeds, sw_out;
  std::vector<std::string> sw_sets;
  sweep->add_option("--config", sw_config, "Base config JSON path")->required();
  sweep->add_option("--axis", sw_axis, "eta|alpha|both");
  sweep->add_option("--eta", sw_eta, "Comma list of eta values");
  sweep->add_option("--alpha", sw_alpha, "Comma list of alpha values");
  sweep->add_option("--seeds", sw_seeds, "Comma list of seeds")->required();
  sweep->add_option("--set", sw_sets, "Override base config field, key=value (repeatable)");
  sweep->add_option("--out", sw_out, "Output directory")->required();

  auto* profile = app.add_subcommand("profile", "Performance profile from a scores CSV");
  std::string pf_scores, pf_taus, pf_out;
  profile->add_option("--scores", pf_scores, "CSV with columns task,algorithm,score")->required();
  profile->add_option("--taus", pf_taus, "Comma list of thresholds")->required();
  profile->add_option("--out", pf_out, "Output CSV path (default: stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  double gc_tolerance = 1e-4;
  uint64_t gc_seed = 0;
  bool gc_corrupt = false;
  gradcheck->add_option("--tolerance", gc_tolerance, "Max allowed relative error");
  gradcheck->add_option("--seed", gc_seed, "Problem initialization seed");
  gradcheck->add_flag("--corrupt", gc_corrupt, "Inject a gradient fault (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  }

  try {
    if (gendata->parsed()) return cmd_gendata(gd_env, gd_n, gd_mix, gd_seed, gd_out);
    if (train->parsed()) return cmd_train(tr_config, tr_sets);
    if (eval->parsed()) return cmd_eval(ev_run, ev_policy, ev_episodes, ev_seed);
    if (sweep->parsed()) {
      gfp::SweepSpec spec;
      spec.base_config = sw_config;
      spec.axis = sw_axis;
      if (!sw_eta.empty()) spec.eta_values = parse_double_list(sw_eta, "eta values");
      if (!sw_alpha.empty()) spec.alpha_values = parse_double_list(sw_alpha, "alpha values");
      spec.seeds = parse_seed_list(sw_seeds);
      spec.overrides = sw_sets;
      spec.out_dir = sw_out;
      return cmd_sweep(spec);
    }
    if (profile->parsed()) return cmd_profile(pf_scores, pf_taus, pf_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_tolerance, gc_seed, gc_corrupt);
  } catch (const std::invalid_argument& e) {  // ConfigError included
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
