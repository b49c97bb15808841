/**
 * softseq batch front end.
 *
 * One experiment per invocation: a subcommand picks the task, a JSON config
 * supplies every parameter, and all artifacts land in one output directory
 * together with a manifest of content digests. Outputs are byte-identical
 * across repeated runs and across --workers values; wall-clock measurements
 * go to timing.json, which is exempt from that guarantee and carries a null
 * digest in the manifest.
 *
 * Exit codes: 0 success; 1 failed verification or failed run; 2 config or
 * usage error; 3 state budget exceeded; 4 I/O error.
 */
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <softseq/softseq.hpp>

namespace fs = std::filesystem;
using namespace softseq;

namespace {

// ---------------------------------------------------------------------------
// Artifact output: every emitted file is listed in manifest.json with an
// fnv1a64 content digest (null for files exempt from byte-identity).

struct ArtifactWriter {
  fs::path dir;
  Json files = Json::object();

  explicit ArtifactWriter(fs::path d) : dir(std::move(d)) { fs::create_directories(dir); }

  void write(const std::string& name, std::string_view content) {
    write_text_file(dir / name, content);
    files[name] = "fnv1a64:" + fnv1a64_hex(content);
  }

  void write_untracked(const std::string& name, std::string_view content) {
    write_text_file(dir / name, content);
    files[name] = nullptr;
  }

  void finish() {
    const Json manifest{{"files", files}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// Strict config accessors.

const Json& need(const Json& j, const std::string& key, const char* where) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(std::string(where) + " is missing field \"" + key + "\"");
  }
  return j.at(key);
}

std::int64_t int_of(const Json& v, const char* what) {
  if (!v.is_number_integer()) throw SchemaError(std::string(what) + " must be an integer");
  return v.get<std::int64_t>();
}

double num_of(const Json& v, const char* what) {
  if (!v.is_number()) throw SchemaError(std::string(what) + " must be a number");
  return v.get<double>();
}

std::string str_of(const Json& v, const char* what) {
  if (!v.is_string()) throw SchemaError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

/** NaN and +inf become JSON null (unmeasured / undefined summary cells). */
Json json_or_null(double v) {
  if (std::isnan(v) || v == kPosInf) return nullptr;
  return detail::value_to_json(v);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

// ---------------------------------------------------------------------------
// Input sources. Table-valued config fields accept either a path to a JSON
// document (resolved against the config file's directory) or an inline
// object; "random" objects generate a seeded table on the spot.

RewardTable load_reward_source(const Json& v, const fs::path& config_dir, std::int64_t budget,
                               std::uint64_t seed_offset = 0) {
  if (v.is_string()) {
    return reward_table_from_json(load_json_file(resolve(config_dir, v.get<std::string>())),
                                  budget);
  }
  if (v.is_object()) {
    const std::string kind = str_of(need(v, "kind", "reward source"), "reward source kind");
    if (kind == "reward") return reward_table_from_json(v, budget);
    if (kind == "random") {
      detail::require_keys(v, {"kind", "space", "seed"}, {"scale"}, "random reward source");
      const PrefixTree tree = build_tree(vocab_spec_from_json(v.at("space")), budget);
      const double scale = v.contains("scale") ? num_of(v.at("scale"), "scale") : 1.0;
      RandomStream rng(static_cast<std::uint64_t>(int_of(v.at("seed"), "seed")) + seed_offset);
      return random_reward_table(tree, rng, scale);
    }
    throw SchemaError("reward source kind must be \"reward\" or \"random\"");
  }
  throw SchemaError("reward source must be a file path or an inline object");
}

NextTokenPolicy load_policy_source(const Json& v, const fs::path& config_dir,
                                   std::int64_t budget) {
  const auto from_doc = [budget](const Json& doc) {
    const std::string kind = table_kind(doc);
    if (kind == "policy") return policy_from_json(doc, budget);
    if (kind == "logits") return policy_of(logit_table_from_json(doc, budget));
    if (kind == "reward") return policy_of(map_r_to_q(reward_table_from_json(doc, budget)));
    throw SchemaError("policy source kind must be \"policy\", \"logits\" or \"reward\"");
  };
  if (v.is_string()) {
    return from_doc(load_json_file(resolve(config_dir, v.get<std::string>())));
  }
  if (v.is_object()) {
    const std::string kind = str_of(need(v, "kind", "policy source"), "policy source kind");
    if (kind == "random") {
      return policy_of(map_r_to_q(load_reward_source(v, config_dir, budget)));
    }
    return from_doc(v);
  }
  throw SchemaError("policy source must be a file path or an inline object");
}

DataDistribution load_target(const Json& v, const VocabSpec& spec, const fs::path& config_dir,
                             std::int64_t budget) {
  const std::string kind = str_of(need(v, "kind", "target"), "target kind");
  if (kind == "zipfian") {
    detail::require_keys(v, {"kind", "exponent"}, {}, "zipfian target");
    return make_zipfian(spec, num_of(v.at("exponent"), "exponent"), budget);
  }
  if (kind == "normal_softargmax") {
    detail::require_keys(v, {"kind", "temperature", "seed"}, {}, "normal_softargmax target");
    const auto seed = static_cast<std::uint64_t>(int_of(v.at("seed"), "target seed"));
    return make_normal_softargmax(spec, num_of(v.at("temperature"), "temperature"),
                                  RandomStream(seed), budget);
  }
  if (kind == "explicit") {
    detail::require_keys(v, {"kind", "path"}, {}, "explicit target");
    SeqDistribution p = seq_distribution_from_json(
        load_json_file(resolve(config_dir, str_of(v.at("path"), "target path"))), budget);
    if (!(p.space == spec)) throw SchemaError("explicit target lives on a different space");
    return make_explicit(std::move(p));
  }
  throw SchemaError("target kind must be \"zipfian\", \"normal_softargmax\" or \"explicit\"");
}

// ---------------------------------------------------------------------------
// Task: convert. Maps a reward table to its logit table or back.

int run_convert(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir,
                std::int64_t budget) {
  detail::require_keys(cfg, {"task", "input"}, {"out_dir", "state_budget"}, "convert config");
  const Json& input = cfg.at("input");
  const Json doc = input.is_string()
                       ? load_json_file(resolve(config_dir, input.get<std::string>()))
                       : input;
  const std::string kind = table_kind(doc);
  Json converted;
  if (kind == "reward") {
    converted = to_json(map_r_to_q(reward_table_from_json(doc, budget)));
  } else if (kind == "logits") {
    converted = to_json(map_q_to_r(logit_table_from_json(doc, budget)));
  } else {
    throw SchemaError("convert input must be a reward or logits table");
  }
  ArtifactWriter out(out_dir);
  out.write("converted.json", converted.dump(2) + "\n");
  out.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// Task: partition. Soft values for every state plus the log-partition.

int run_partition(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir,
                  std::int64_t budget) {
  detail::require_keys(cfg, {"task", "rewards"}, {"out_dir", "state_budget"},
                       "partition config");
  const RewardTable r = load_reward_source(cfg.at("rewards"), config_dir, budget);
  const std::vector<double> values = log_partition_dp(r);

  std::ostringstream csv;
  csv << "state,value\n";
  for (StateId s = 0; s < r.tree.state_count(); ++s) {
    csv << s << ',' << detail::csv_double(values[static_cast<std::size_t>(s)]) << "\n";
  }

  const Json summary{
      {"log_partition", detail::value_to_json(values[static_cast<std::size_t>(r.tree.root())])},
      {"sequence_count", sequence_count(r.tree.spec(), budget)},
      {"space", to_json(r.tree.spec())}};

  ArtifactWriter out(out_dir);
  out.write("values.csv", csv.str());
  out.write("partition.json", summary.dump(2) + "\n");
  out.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// Task: sample. Ancestral samples as JSON-lines, one token-id array per line.

int run_sample(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir,
               std::int64_t budget, int workers) {
  detail::require_keys(cfg, {"task", "source", "count", "seed"},
                       {"stream_id", "out_dir", "state_budget"}, "sample config");
  const NextTokenPolicy pi = load_policy_source(cfg.at("source"), config_dir, budget);
  const std::int64_t n = int_of(cfg.at("count"), "count");
  if (n < 0) throw SchemaError("count must be >= 0");
  const auto seed = static_cast<std::uint64_t>(int_of(cfg.at("seed"), "seed"));
  const std::uint64_t stream =
      cfg.contains("stream_id")
          ? static_cast<std::uint64_t>(int_of(cfg.at("stream_id"), "stream_id"))
          : 0;

  const std::vector<Sequence> draws = sample(pi, RandomStream(seed, stream), n, workers);
  std::ostringstream lines;
  for (const Sequence& y : draws) lines << to_json(y).dump() << "\n";

  ArtifactWriter out(out_dir);
  out.write("samples.jsonl", lines.str());
  out.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// Task: train. Function-space gradient descent for the Gibbs and/or
// autoregressive parameterizations, with optional step-size sweep.

struct TrainPlan {
  TrainConfig base;
  std::vector<double> step_sizes;
};

TrainPlan load_train_plan(const Json& cfg) {
  TrainPlan plan;
  plan.step_sizes = {plan.base.step_size};
  if (!cfg.contains("train")) return plan;
  const Json& t = cfg.at("train");
  detail::require_keys(t, {}, {"step_size", "max_steps", "gap_tolerance", "eval_every", "init"},
                       "train block");
  if (t.contains("step_size")) {
    const Json& s = t.at("step_size");
    if (s.is_array()) {
      if (s.empty()) throw SchemaError("step_size list must be nonempty");
      plan.step_sizes.clear();
      for (const Json& v : s) plan.step_sizes.push_back(num_of(v, "step_size entry"));
    } else {
      plan.step_sizes = {num_of(s, "step_size")};
    }
  }
  if (t.contains("max_steps")) plan.base.max_steps = int_of(t.at("max_steps"), "max_steps");
  if (t.contains("gap_tolerance")) {
    plan.base.gap_tolerance = num_of(t.at("gap_tolerance"), "gap_tolerance");
  }
  if (t.contains("eval_every")) plan.base.eval_every = int_of(t.at("eval_every"), "eval_every");
  if (t.contains("init")) {
    const Json& init = t.at("init");
    const std::string kind = str_of(need(init, "kind", "init block"), "init kind");
    if (kind == "zeros") {
      detail::require_keys(init, {"kind"}, {}, "init block");
      plan.base.init = InitSpec{InitKind::kZeros, 0.0, 0};
    } else if (kind == "seeded") {
      detail::require_keys(init, {"kind", "scale", "seed"}, {}, "init block");
      plan.base.init =
          InitSpec{InitKind::kSeeded, num_of(init.at("scale"), "init scale"),
                   static_cast<std::uint64_t>(int_of(init.at("seed"), "init seed"))};
    } else {
      throw SchemaError("init kind must be \"zeros\" or \"seeded\"");
    }
  }
  return plan;
}

int run_train(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir,
              std::int64_t budget) {
  detail::require_keys(cfg, {"task", "space", "target"},
                       {"train", "models", "out_dir", "state_budget"}, "train config");
  const VocabSpec spec = vocab_spec_from_json(cfg.at("space"));
  const PrefixTree tree = build_tree(spec, budget);
  const DataDistribution rho = load_target(cfg.at("target"), spec, config_dir, budget);
  const TrainPlan plan = load_train_plan(cfg);

  bool do_ebm = true;
  bool do_arm = true;
  if (cfg.contains("models")) {
    const Json& models = cfg.at("models");
    if (!models.is_array() || models.empty()) {
      throw SchemaError("models must be a nonempty array");
    }
    do_ebm = do_arm = false;
    for (const Json& m : models) {
      const std::string name = str_of(m, "models entry");
      if (name == "ebm") {
        do_ebm = true;
      } else if (name == "arm") {
        do_arm = true;
      } else {
        throw SchemaError("models entries must be \"ebm\" or \"arm\"");
      }
    }
  }

  ArtifactWriter out(out_dir);
  Json runs = Json::array();
  Json timing = Json::object();
  const auto seconds_since = [](std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (std::size_t i = 0; i < plan.step_sizes.size(); ++i) {
    const std::string prefix =
        plan.step_sizes.size() > 1 ? ("s" + std::to_string(i) + "_") : "";
    TrainConfig c = plan.base;
    c.step_size = plan.step_sizes[i];
    Json run{{"step_size", c.step_size}};

    std::optional<EbmTrainResult> ebm;
    if (do_ebm) {
      const auto t0 = std::chrono::steady_clock::now();
      ebm = train_ebm(rho, c, tree, budget);
      timing[prefix + "ebm_run.csv"] = seconds_since(t0);
      out.write(prefix + "ebm_run.csv", run_record_to_csv(ebm->record));
      out.write(prefix + "reward.json", to_json(ebm->r).dump(2) + "\n");
      run["ebm"] = Json{{"final_risk", ebm->final_risk},
                        {"optimality_gap", ebm->optimality_gap},
                        {"steps", ebm->steps},
                        {"step_size_final", ebm->step_size_final}};
    }
    if (do_arm) {
      const RewardTable* reference = ebm ? &ebm->r : nullptr;
      const auto t0 = std::chrono::steady_clock::now();
      const ArmTrainResult arm = train_arm(rho, c, tree, reference, budget);
      timing[prefix + "arm_run.csv"] = seconds_since(t0);
      out.write(prefix + "arm_run.csv", run_record_to_csv(arm.record));
      out.write(prefix + "logits.json", to_json(arm.q).dump(2) + "\n");
      run["arm"] = Json{{"final_risk", arm.final_risk},
                        {"optimality_gap", arm.optimality_gap},
                        {"steps", arm.steps},
                        {"step_size_final", arm.step_size_final},
                        {"dist_before_final", json_or_null(arm.record.back().dist_before)},
                        {"dist_after_final", json_or_null(arm.record.back().dist_after)}};
    }
    runs.push_back(std::move(run));
  }

  const Json summary{{"space", to_json(spec)},
                     {"target", Json{{"kind", str_of(cfg.at("target").at("kind"), "kind")},
                                     {"param", rho.param}}},
                     {"min_risk", min_risk(rho)},
                     {"runs", std::move(runs)}};
  out.write("summary.json", summary.dump(2) + "\n");
  out.write_untracked("timing.json", timing.dump(2) + "\n");
  out.finish();
  return 0;
}

// ---------------------------------------------------------------------------
// Task: verify. Exactness report for the reward<->logit correspondence, with
// an optional perturbation bound check; exit 1 if anything fails.

int run_verify(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir,
               std::int64_t budget) {
  detail::require_keys(cfg, {"task", "rewards"},
                       {"trials", "tolerance", "kl_bound", "out_dir", "state_budget"},
                       "verify config");
  const std::int64_t trials =
      cfg.contains("trials") ? int_of(cfg.at("trials"), "trials") : 1;
  if (trials < 1) throw SchemaError("trials must be >= 1");
  const bool random_source = cfg.at("rewards").is_object() &&
                             cfg.at("rewards").contains("kind") &&
                             cfg.at("rewards").at("kind") == "random";
  if (trials > 1 && !random_source) {
    throw SchemaError("trials > 1 requires a random reward source");
  }
  const double tolerance =
      cfg.contains("tolerance") ? num_of(cfg.at("tolerance"), "tolerance") : 1e-9;
  if (!(tolerance > 0.0)) throw SchemaError("tolerance must be > 0");

  double epsilon = 0.0;
  std::uint64_t noise_seed = 0;
  const bool check_bound = cfg.contains("kl_bound");
  if (check_bound) {
    const Json& b = cfg.at("kl_bound");
    detail::require_keys(b, {"epsilon", "seed"}, {}, "kl_bound block");
    epsilon = num_of(b.at("epsilon"), "epsilon");
    if (!(epsilon > 0.0)) throw SchemaError("epsilon must be > 0");
    noise_seed = static_cast<std::uint64_t>(int_of(b.at("seed"), "kl_bound seed"));
  }

  bool all_pass = true;
  Json trial_rows = Json::array();
  Json bound_rows = Json::array();
  for (std::int64_t t = 0; t < trials; ++t) {
    const RewardTable r = load_reward_source(cfg.at("rewards"), config_dir, budget,
                                             static_cast<std::uint64_t>(t));
    const BijectionReport rep = verify_bijection(r, tolerance, budget);
    all_pass = all_pass && rep.pass;
    trial_rows.push_back(Json{{"trial", t},
                              {"max_prob_diff", rep.max_prob_diff},
                              {"log_partition_diff", rep.log_partition_diff},
                              {"roundtrip_r", rep.roundtrip_r},
                              {"roundtrip_q", rep.roundtrip_q},
                              {"pass", rep.pass}});
    if (check_bound) {
      // Perturb every live logit by uniform noise in [-epsilon, epsilon].
      LogitTable q = map_r_to_q(r);
      RandomStream noise(noise_seed, static_cast<std::uint64_t>(t));
      for (double& v : q.values) {
        if (v != kNegInf) v += epsilon * (2.0 * noise.next_unit() - 1.0);
      }
      const LemmaCheck check = kl_bound_check(r, q, budget);
      const bool ok = check.kl <= check.bound + 1e-12;
      all_pass = all_pass && ok;
      bound_rows.push_back(Json{{"trial", t},
                                {"kl", json_or_null(check.kl)},
                                {"bound", json_or_null(check.bound)},
                                {"pass", ok}});
    }
  }

  Json report{{"tolerance", tolerance}, {"trials", std::move(trial_rows)},
              {"pass", all_pass}};
  if (check_bound) {
    report["kl_bound"] = Json{{"epsilon", epsilon}, {"rows", std::move(bound_rows)}};
  }
  ArtifactWriter out(out_dir);
  out.write("report.json", report.dump(2) + "\n");
  out.finish();
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Task: report. Tabulates every run record CSV in a directory.

int run_report(const Json& cfg, const fs::path& config_dir, const fs::path& out_dir) {
  detail::require_keys(cfg, {"task", "run_dir"}, {"out_dir"}, "report config");
  const fs::path run_dir = resolve(config_dir, str_of(cfg.at("run_dir"), "run_dir"));
  if (!fs::is_directory(run_dir)) {
    throw IoError("run directory " + run_dir.string() + " does not exist");
  }

  std::vector<std::string> names;
  for (const fs::directory_entry& entry : fs::directory_iterator(run_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    if (entry.path().filename() == "summary.csv") continue;  // a prior report
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) {
    throw IoError("no run record CSVs in " + run_dir.string());
  }

  Json timing = Json::object();
  if (fs::exists(run_dir / "timing.json")) {
    try {
      timing = load_json_file(run_dir / "timing.json");
    } catch (const SchemaError& e) {
      throw IoError(std::string("garbled timing.json: ") + e.what());
    }
  }

  std::ostringstream csv;
  csv << "file,final_step,final_risk,final_gap,final_dist_before,final_dist_after,"
         "wall_seconds,risk_diff\n";
  double base_risk = kNaN;
  for (const std::string& name : names) {
    RunRecord record;
    try {
      record = run_record_from_csv(read_text_file(run_dir / name));
    } catch (const SchemaError& e) {
      throw IoError("garbled run record " + name + ": " + e.what());
    }
    if (record.empty()) throw IoError("run record " + name + " has no rows");
    const RunRow& last = record.back();
    const double wall = timing.contains(name) && timing.at(name).is_number()
                            ? timing.at(name).get<double>()
                            : kNaN;
    if (std::isnan(base_risk)) base_risk = last.risk;
    csv << name << ',' << last.step << ',' << detail::csv_double(last.risk) << ','
        << detail::csv_double(last.gap) << ',' << detail::csv_double(last.dist_before) << ','
        << detail::csv_double(last.dist_after) << ',' << detail::csv_double(wall) << ','
        << detail::csv_double(last.risk - base_risk) << "\n";
  }

  ArtifactWriter out(out_dir);
  out.write("summary.csv", csv.str());
  out.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact desk-scale laboratory for sequence EBMs and ARMs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::int64_t workers = 0;

  const std::vector<std::pair<const char*, const char*>> tasks{
      {"convert", "map a reward table to logits or logits back to rewards"},
      {"partition", "compute per-state soft values and the log-partition"},
      {"sample", "draw ancestral samples from a next-token policy"},
      {"train", "function-space training of Gibbs and autoregressive models"},
      {"verify", "check the reward<->logit correspondence on seeded tables"},
      {"report", "tabulate run record CSVs from a directory"}};
  for (const auto& [name, description] : tasks) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "experiment config JSON path")->required();
    sub->add_option("--workers", workers, "max worker threads (default: all cores)");
    sub->add_option("--out", out_override, "output directory (overrides config out_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors share the schema exit code
  }
  const std::string task = app.get_subcommands().front()->get_name();

  try {
    const fs::path cpath(config_path);
    const Json cfg = load_json_file(cpath);
    if (!cfg.is_object()) throw SchemaError("config must be a JSON object");
    const std::string cfg_task = str_of(need(cfg, "task", "config"), "task");
    if (cfg_task != task) {
      throw SchemaError("config task \"" + cfg_task + "\" does not match subcommand \"" +
                        task + "\"");
    }

    std::int64_t budget = default_state_budget();
    if (cfg.contains("state_budget")) {
      budget = int_of(cfg.at("state_budget"), "state_budget");
      if (budget < 1) throw SchemaError("state_budget must be >= 1");
    }

    std::string out_dir = out_override;
    if (out_dir.empty() && cfg.contains("out_dir")) {
      out_dir = str_of(cfg.at("out_dir"), "out_dir");
    }
    if (out_dir.empty()) {
      throw SchemaError("no output directory: set \"out_dir\" in the config or pass --out");
    }

    if (workers <= 0) {
      workers = std::max(1u, std::thread::hardware_concurrency());
    }
    const fs::path config_dir = cpath.has_parent_path() ? cpath.parent_path() : fs::path(".");

    if (task == "convert") return run_convert(cfg, config_dir, out_dir, budget);
    if (task == "partition") return run_partition(cfg, config_dir, out_dir, budget);
    if (task == "sample") {
      return run_sample(cfg, config_dir, out_dir, budget, static_cast<int>(workers));
    }
    if (task == "train") return run_train(cfg, config_dir, out_dir, budget);
    if (task == "verify") return run_verify(cfg, config_dir, out_dir, budget);
    if (task == "report") return run_report(cfg, config_dir, out_dir);
    throw SchemaError("unknown task " + task);
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CapacityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Json::exception& e) {
    std::fprintf(stderr, "error: config parse: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
