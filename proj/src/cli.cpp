#include "nwsd/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "nwsd/evaluate.hpp"
#include "nwsd/ingest.hpp"
#include "nwsd/postprocess.hpp"
#include "nwsd/synthgen.hpp"
#include "nwsd/trainer.hpp"

namespace nwsd {

namespace {

namespace fs = std::filesystem;

// Removes the artifacts a failed command would otherwise leave half-written.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (released_) return;
    std::error_code ec;
    for (const std::string& p : files_) fs::remove(p, ec);
    for (const std::string& d : dirs_) fs::remove_all(d, ec);
  }
  void file(const std::string& path) { files_.push_back(path); }
  void dir(const std::string& path) { dirs_.push_back(path); }
  void release() { released_ = true; }

 private:
  std::vector<std::string> files_;
  std::vector<std::string> dirs_;
  bool released_ = false;
};

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("NWSD_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n < 1) throw ConfigError("NWSD_THREADS must be >= 1");
      return n;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("NWSD_THREADS must be an integer >= 1");
    }
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; exceptions
// propagate. Results must be written to pre-sized slots so the output
// order stays deterministic.
template <typename Fn>
void parallel_for(long n, int threads, Fn&& fn) {
  threads = static_cast<int>(std::min<long>(threads, n));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

KeyValueConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides) {
  KeyValueConfig kv = path.empty() ? KeyValueConfig::parse_text("", "<defaults>")
                                   : KeyValueConfig::parse_file(path);
  for (const std::string& o : overrides) kv.apply_override(o);
  return kv;
}

std::string keys_footer(const std::vector<std::pair<std::string, std::string>>& keys) {
  std::string s = "Config keys (key = value file plus --set overrides):\n";
  for (const auto& [k, v] : keys) s += "  " + k + "  (default: " + v + ")\n";
  return s;
}

std::vector<std::string> list_feature_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("features directory not found: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".nwsd")
      out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no .nwsd feature files in " + dir);
  return out;
}

std::vector<HeadScores> infer_directory(const ModelParams& params,
                                        const std::string& features_dir,
                                        const std::vector<Modality>& modalities,
                                        int threads) {
  const std::vector<std::string> files = list_feature_files(features_dir);
  std::vector<HeadScores> scores(files.size());
  parallel_for(static_cast<long>(files.size()), threads, [&](long i) {
    FusedSequence fused = fuse(load_features(files[i]), modalities);
    if (fused.dim() != params.input_dim)
      throw ShapeError(files[i] + ": fused width " + std::to_string(fused.dim()) +
                       " does not match checkpoint input dim " +
                       std::to_string(params.input_dim));
    VideoScores vs = infer_scores(params, fused.data);
    scores[i] = {fused.video_id, fused.fps, std::move(vs.verb), std::move(vs.noun)};
  });
  return scores;
}

std::vector<Detection> postprocess_all(const std::vector<HeadScores>& scores,
                                       const PostprocessConfig& cfg, int threads) {
  std::vector<std::vector<Detection>> per_video(scores.size());
  parallel_for(static_cast<long>(scores.size()), threads,
               [&](long i) { per_video[i] = postprocess_video(scores[i], cfg); });
  std::vector<Detection> out;
  for (auto& v : per_video) out.insert(out.end(), v.begin(), v.end());
  return out;
}

PostprocessConfig postprocess_config(const KeyValueConfig& kv) {
  kv.reject_unknown_keys({"smooth_size", "thresholds", "nms_iou"});
  PostprocessConfig cfg = PostprocessConfig::defaults();
  cfg.smooth_size = static_cast<int>(kv.get_long("smooth_size", cfg.smooth_size));
  cfg.thresholds = kv.get_double_list("thresholds", cfg.thresholds);
  cfg.nms_iou = kv.get_double("nms_iou", cfg.nms_iou);
  cfg.validate();
  return cfg;
}

void print_report(std::ostream& os, const EvalReport& rep) {
  for (Task task : {Task::verb, Task::noun, Task::action}) {
    const TaskReport& tr = rep.task(task);
    os << task_name(task) << " mAP:";
    for (std::size_t t = 0; t < kIouThresholds.size(); ++t)
      os << " @" << format_double(kIouThresholds[t]) << "=" << format_double(tr.map_at[t]);
    os << " Avg=" << format_double(tr.avg) << "\n";
  }
}

int cmd_generate(const std::string& config_path,
                 const std::vector<std::string>& overrides, const std::string& out) {
  const SynthConfig cfg = SynthConfig::from_config(load_config(config_path, overrides));
  OutputGuard guard;
  guard.dir((fs::path(out) / "features").string());
  guard.file((fs::path(out) / "annotations.csv").string());
  guard.file((fs::path(out) / "ground_truth.csv").string());
  guard.file((fs::path(out) / "oracle_detections.jsonl").string());
  guard.file((fs::path(out) / "manifest.txt").string());
  const SynthDataset ds = generate(cfg, out);
  guard.release();
  std::cout << "generated " << ds.video_ids.size() << " videos, "
            << ds.total_instances << " instances under " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
  const TrainConfig cfg = TrainConfig::from_config(load_config(config_path, overrides));
  const TrainDataset ds = load_train_dataset(cfg.features_dir, cfg.annotations,
                                             cfg.ground_truth, cfg.modalities);
  fs::create_directories(cfg.out_dir);
  const std::string ckpt = (fs::path(cfg.out_dir) / "checkpoint.nwsm").string();
  const std::string log = (fs::path(cfg.out_dir) / "train_log.csv").string();
  OutputGuard guard;
  guard.file(ckpt);
  guard.file(log);
  const TrainResult res = train(ds, cfg);
  save_checkpoint(ckpt, res.params);
  write_train_log(log, res.log);
  guard.release();
  std::cout << "trained " << scheme_name(cfg.scheme) << " for " << cfg.max_steps
            << " steps";
  if (res.best_val_action_map >= 0.0)
    std::cout << "; best val action mAP Avg = " << format_double(res.best_val_action_map);
  std::cout << "\ncheckpoint: " << ckpt << "\n";
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& features_dir,
              const std::string& out, const std::string& modalities, int threads) {
  const ModelParams params = load_checkpoint(checkpoint);
  const std::vector<HeadScores> scores = infer_directory(
      params, features_dir, parse_modalities(modalities), resolve_threads(threads));
  OutputGuard guard;
  guard.file(out);
  write_scores(out, scores);
  guard.release();
  std::cout << "scored " << scores.size() << " videos -> " << out << "\n";
  return 0;
}

int cmd_postprocess(const std::string& scores_path, const std::string& out,
                    const std::string& config_path,
                    const std::vector<std::string>& overrides, int threads) {
  const PostprocessConfig cfg = postprocess_config(load_config(config_path, overrides));
  const std::vector<HeadScores> scores = load_scores(scores_path);
  const std::vector<Detection> dets =
      postprocess_all(scores, cfg, resolve_threads(threads));
  OutputGuard guard;
  guard.file(out);
  write_detections_jsonl(out, dets);
  guard.release();
  std::cout << dets.size() << " detections -> " << out << "\n";
  return 0;
}

int cmd_eval(const std::string& detections_path, const std::string& gt_path,
             const std::string& out_csv, const std::string& out_json) {
  const std::vector<Detection> dets = read_detections_jsonl(detections_path);
  const std::vector<GroundTruthInstance> gt = read_ground_truth_csv(gt_path);
  const EvalReport rep = evaluate(dets, gt);
  OutputGuard guard;
  if (!out_csv.empty()) {
    guard.file(out_csv);
    write_report_csv(out_csv, rep);
  }
  if (!out_json.empty()) {
    guard.file(out_json);
    write_report_json(out_json, rep);
  }
  guard.release();
  print_report(std::cout, rep);
  return 0;
}

int cmd_report(const std::vector<std::string>& checkpoints,
               const std::string& features_dir, const std::string& gt_path,
               const std::string& out_csv, const std::string& modalities,
               int threads) {
  const std::vector<GroundTruthInstance> gt = read_ground_truth_csv(gt_path);
  const std::vector<Modality> mods = parse_modalities(modalities);
  const PostprocessConfig pp = PostprocessConfig::defaults();
  const int n_threads = resolve_threads(threads);

  struct Row {
    std::string name;
    std::array<double, 5> map_at;
    double avg;
  };
  std::vector<Row> rows;
  for (const std::string& spec : checkpoints) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw ConfigError("--checkpoint wants name=path, got '" + spec + "'");
    const std::string name = spec.substr(0, eq);
    const ModelParams params = load_checkpoint(spec.substr(eq + 1));
    const std::vector<HeadScores> scores =
        infer_directory(params, features_dir, mods, n_threads);
    const EvalReport rep = evaluate(postprocess_all(scores, pp, n_threads), gt);
    rows.push_back({name, rep.action.map_at, rep.action.avg});
  }

  OutputGuard guard;
  guard.file(out_csv);
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw IoError("cannot open " + out_csv + " for writing");
  out << "method,@0.1,@0.2,@0.3,@0.4,@0.5,Avg\n";
  for (const Row& r : rows) {
    out << r.name;
    for (double m : r.map_at) out << ',' << format_double(m);
    out << ',' << format_double(r.avg) << '\n';
  }
  if (!out.good()) throw IoError("failed writing " + out_csv);
  out.close();
  guard.release();

  for (const Row& r : rows) {
    std::cout << r.name << " action mAP:";
    for (std::size_t t = 0; t < kIouThresholds.size(); ++t)
      std::cout << " @" << format_double(kIouThresholds[t]) << "="
                << format_double(r.map_at[t]);
    std::cout << " Avg=" << format_double(r.avg) << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Weakly-supervised temporal action detection from narrated video"};
  app.require_subcommand(1);

  std::string config_path, out, checkpoint, features_dir, scores_path;
  std::string detections_path, gt_path, out_csv, out_json;
  std::string modalities = "rgb,flow,audio";
  std::vector<std::string> overrides, checkpoints;
  int threads = 0;

  CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic dataset");
  generate->add_option("--config", config_path, "key = value config file");
  generate->add_option("--set", overrides, "override, key=value (repeatable)");
  generate->add_option("--out", out, "output dataset directory")->required();
  generate->footer(keys_footer(SynthConfig::key_help()));

  CLI::App* train = app.add_subcommand("train", "Train a model variant");
  train->add_option("--config", config_path, "key = value config file")->required();
  train->add_option("--set", overrides, "override, key=value (repeatable)");
  train->footer(keys_footer(TrainConfig::key_help()));

  CLI::App* infer = app.add_subcommand("infer", "Score videos with a checkpoint");
  infer->add_option("--checkpoint", checkpoint, "model checkpoint (.nwsm)")->required();
  infer->add_option("--features", features_dir, "directory of .nwsd files")->required();
  infer->add_option("--out", out, "output score dump (.nwss)")->required();
  infer->add_option("--modalities", modalities, "comma list (default rgb,flow,audio)");
  infer->add_option("--threads", threads, "worker cap (or env NWSD_THREADS)");

  CLI::App* post = app.add_subcommand("postprocess", "Turn score dumps into detections");
  post->add_option("--scores", scores_path, "score dump (.nwss)")->required();
  post->add_option("--out", out, "output detections (.jsonl)")->required();
  post->add_option("--config", config_path, "key = value config file");
  post->add_option("--set", overrides, "override, key=value (repeatable)");
  post->add_option("--threads", threads, "worker cap (or env NWSD_THREADS)");
  post->footer(keys_footer({{"smooth_size", "3"},
                            {"thresholds", "0.01..0.4, 40 evenly spaced"},
                            {"nms_iou", "0.4"}}));

  CLI::App* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--detections", detections_path, "detections (.jsonl)")->required();
  eval->add_option("--ground-truth", gt_path, "ground-truth CSV")->required();
  eval->add_option("--out-csv", out_csv, "report CSV path");
  eval->add_option("--out-json", out_json, "report JSON path");

  CLI::App* report = app.add_subcommand(
      "report", "Compare variant checkpoints on one dataset (action mAP table)");
  report->add_option("--checkpoint", checkpoints, "name=path (repeatable)")
      ->required();
  report->add_option("--features", features_dir, "directory of .nwsd files")->required();
  report->add_option("--ground-truth", gt_path, "ground-truth CSV")->required();
  report->add_option("--out", out_csv, "output comparison CSV")->required();
  report->add_option("--modalities", modalities, "comma list (default rgb,flow,audio)");
  report->add_option("--threads", threads, "worker cap (or env NWSD_THREADS)");

  try {
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::ParseError& e) {
      // --help lands here with ExitCodes::Success
      const int rc = app.exit(e);
      return rc == 0 ? 0 : 2;
    }
    if (generate->parsed()) return cmd_generate(config_path, overrides, out);
    if (train->parsed()) return cmd_train(config_path, overrides);
    if (infer->parsed())
      return cmd_infer(checkpoint, features_dir, out, modalities, threads);
    if (post->parsed())
      return cmd_postprocess(scores_path, out, config_path, overrides, threads);
    if (eval->parsed()) return cmd_eval(detections_path, gt_path, out_csv, out_json);
    if (report->parsed())
      return cmd_report(checkpoints, features_dir, gt_path, out_csv, modalities,
                        threads);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace nwsd
