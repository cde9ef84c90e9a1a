#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "olm/errors.hpp"
#include "olm/itemset_miner.hpp"
#include "olm/json_io.hpp"
#include "olm/metrics.hpp"
#include "olm/pgm.hpp"
#include "olm/pipeline.hpp"
#include "olm/tensor_store.hpp"

namespace olm::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kDataError = 3,
  kNoObject = 4,
};

// Raised for "no object found" under --strict.
class NoObjectFound : public Error {
 public:
  using Error::Error;
};

namespace fs = std::filesystem;

// Feature grids are at stride 16 of the input image.
inline constexpr std::size_t kGridStride = 16;

struct ImageSize {
  std::size_t height = 0;
  std::size_t width = 0;
};

inline ImageSize parse_size(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ArgumentError("--size must look like WxH, got '" + text + "'");
  const auto w = detail::parse_number<std::size_t>("size", text.substr(0, x));
  const auto h = detail::parse_number<std::size_t>("size", text.substr(x + 1));
  if (w == 0 || h == 0) throw ArgumentError("--size dimensions must be >= 1");
  return {h, w};
}

/// Pipeline flags shared by localize / saliency / parts. Values stay as text
/// until resolution so precedence flags > config file > defaults holds.
struct PipelineFlags {
  std::string features;
  std::string out;
  std::string config_file;
  std::string size;
  std::string image_name;
  std::size_t jobs = 1;
  bool strict = false;
  PipelineConfig defaults;
  std::vector<std::pair<std::string, CLI::Option*>> settings;
  std::vector<std::string> values = std::vector<std::string>(8);

  void add(CLI::App& app) {
    app.add_option("--features", features, "OLMF feature file or directory of .olmf files")
        ->required();
    app.add_option("--out", out, "output file (or directory in batch mode)");
    app.add_option("--config", config_file, "key=value config file");
    app.add_option("--size", size, "original image size WxH (default: grid size x 16)");
    app.add_option("--image-name", image_name, "image name recorded in the output");
    app.add_option("--jobs", jobs, "worker threads for directory input")->check(CLI::PositiveNumber);
    app.add_flag("--strict", strict, "exit with code 4 when no object is found");
    const char* names[] = {"alpha", "connectivity", "keep", "max-boxes", "k", "lambda", "seed", "layers"};
    for (std::size_t i = 0; i < 8; ++i) {
      auto* opt = app.add_option(std::string("--") + names[i], values[i]);
      std::string key = names[i];
      std::replace(key.begin(), key.end(), '-', '_');
      settings.emplace_back(key, opt);
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig config = defaults;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw ArgumentError("cannot open config file '" + config_file + "'");
      for (const auto& [key, value] : parse_config_text(in)) apply_setting(config, key, value);
    }
    for (std::size_t i = 0; i < settings.size(); ++i) {
      if (settings[i].second->count() > 0) apply_setting(config, settings[i].first, values[i]);
    }
    config.validate();
    return config;
  }
};

struct Job {
  fs::path features;
  fs::path out;  // empty: stdout
  std::string image_name;
};

inline std::vector<Job> plan_jobs(const PipelineFlags& flags, const std::string& extension) {
  const fs::path input(flags.features);
  if (!fs::exists(input)) throw IoError("features path '" + input.string() + "' does not exist");
  if (!fs::is_directory(input)) {
    std::string name = flags.image_name.empty() ? input.stem().string() : flags.image_name;
    return {{input, flags.out, name}};
  }
  if (flags.out.empty()) throw ArgumentError("--out directory is required for directory input");
  fs::create_directories(flags.out);
  std::vector<Job> jobs;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && entry.path().extension() == ".olmf") {
      const auto stem = entry.path().stem().string();
      jobs.push_back({entry.path(), fs::path(flags.out) / (stem + extension), stem});
    }
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.features < b.features; });
  return jobs;
}

// Runs fn over all jobs on up to `workers` threads; rethrows the first error.
template <typename Fn>
void run_jobs(const std::vector<Job>& jobs, std::size_t workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        fn(jobs[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct PreparedRun {
  LocalizationResult result;
  ImageSize size;
};

inline PreparedRun run_pipeline(const Job& job, const PipelineFlags& flags,
                                const PipelineConfig& config) {
  const auto tensors = read_olmf(job.features);
  const auto stack = prepare_stack(tensors, config.layers);
  ImageSize size{stack.height() * kGridStride, stack.width() * kGridStride};
  if (!flags.size.empty()) size = parse_size(flags.size);
  return {localize(stack, config, size.height, size.width), size};
}

inline void emit_text(const Job& job, const std::string& text, std::ostream& out) {
  if (job.out.empty()) {
    out << text;
  } else {
    write_text_atomic(job.out, text);
  }
}

inline int cmd_localize(const PipelineFlags& flags, const fs::path& support_out, std::ostream& out,
                        std::ostream& err) {
  const auto config = flags.resolve();
  const auto jobs = plan_jobs(flags, ".json");
  std::atomic<bool> missing{false};
  std::mutex out_mutex;
  run_jobs(jobs, flags.jobs, [&](const Job& job) {
    const auto run = run_pipeline(job, flags, config);
    auto record = box_record(job.image_name, run.result.boxes);
    record["no_object"] = run.result.no_object();
    record["image_width"] = run.size.width;
    record["image_height"] = run.size.height;
    record["config"] = to_json(config);
    if (run.result.no_object()) {
      missing = true;
      std::lock_guard lock(out_mutex);
      err << "warning: no object found in " << job.features.string() << "\n";
    }
    if (!support_out.empty() && jobs.size() == 1) {
      write_pgm(saliency_map(run.result), support_out);
    }
    std::lock_guard lock(out_mutex);
    emit_text(job, record.dump(2) + "\n", out);
  });
  if (missing && flags.strict) return kNoObject;
  return kSuccess;
}

inline int cmd_saliency(const PipelineFlags& flags, std::ostream& err) {
  const auto config = flags.resolve();
  if (flags.out.empty()) throw ArgumentError("--out is required for saliency output");
  const auto jobs = plan_jobs(flags, ".pgm");
  std::atomic<bool> missing{false};
  std::mutex err_mutex;
  run_jobs(jobs, flags.jobs, [&](const Job& job) {
    const auto run = run_pipeline(job, flags, config);
    if (run.result.no_object()) {
      missing = true;
      std::lock_guard lock(err_mutex);
      err << "warning: no object found in " << job.features.string() << "\n";
    }
    const auto bytes = encode_pgm(saliency_map(run.result));
    write_text_atomic(job.out, std::string(bytes.begin(), bytes.end()));
  });
  if (missing && flags.strict) return kNoObject;
  return kSuccess;
}

inline int cmd_parts(const PipelineFlags& flags, const std::string& mask_dir, std::ostream& out) {
  const auto config = flags.resolve();
  const auto jobs = plan_jobs(flags, ".json");
  std::mutex out_mutex;
  run_jobs(jobs, flags.jobs, [&](const Job& job) {
    const auto run = run_pipeline(job, flags, config);
    if (run.result.no_object()) throw InfeasibleError("no object found in " + job.features.string());
    const auto parts = localize_parts(run.result, config);
    auto record = parts_record(job.image_name, parts);
    record["config"] = to_json(config);
    if (!mask_dir.empty()) {
      fs::create_directories(mask_dir);
      for (const auto& p : parts) {
        const auto mask = part_mask({p.center_x, p.center_y}, p.side, run.size.height, run.size.width);
        write_pgm(mask_to_pgm_levels(mask),
                  fs::path(mask_dir) / (job.image_name + "_part" + std::to_string(p.index) + ".pgm"));
      }
    }
    std::lock_guard lock(out_mutex);
    emit_text(job, record.dump(2) + "\n", out);
  });
  return kSuccess;
}

inline std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct EvalFlags {
  std::string pred;
  std::string gt;
  std::string mode = "corloc";
  std::string out;
  std::string max_boxes;
  double threshold = 0.5;
};

inline json eval_report(const EvalFlags& flags) {
  std::optional<std::size_t> max_boxes;
  if (!flags.max_boxes.empty()) {
    max_boxes = detail::parse_number<std::size_t>("max_boxes", flags.max_boxes);
    if (*max_boxes == 0) throw ArgumentError("--max-boxes must be >= 1");
  }
  const bool corloc_mode = flags.mode == "corloc";
  const auto pred_files = list_files(flags.pred, corloc_mode ? ".json" : ".pgm");
  if (pred_files.empty()) throw ArgumentError("no prediction files in '" + flags.pred + "'");

  std::vector<fs::path> missing;
  for (const auto& p : pred_files) {
    if (!fs::exists(fs::path(flags.gt) / p.filename())) missing.push_back(fs::path(flags.gt) / p.filename());
  }
  if (!missing.empty()) {
    std::string msg = "missing ground truth for " + std::to_string(missing.size()) + " prediction(s):";
    for (const auto& m : missing) msg += "\n  " + m.string();
    throw IoError(msg);
  }

  json report;
  report["mode"] = flags.mode;
  json per_image = json::array();
  if (corloc_mode) {
    std::vector<EvalRecord> records;
    for (const auto& p : pred_files) {
      EvalRecord r;
      r.image_id = p.stem().string();
      r.predicted = box_record_from_json(read_json_file(p)).boxes;
      if (max_boxes && r.predicted.size() > *max_boxes) r.predicted.resize(*max_boxes);
      r.ground_truth = box_record_from_json(read_json_file(fs::path(flags.gt) / p.filename())).boxes;
      per_image.push_back({{"image", r.image_id},
                           {"best_iou", best_pair_iou(r)},
                           {"correct", is_correct_localization(r, flags.threshold)}});
      records.push_back(std::move(r));
    }
    report["corloc"] = corloc(records, flags.threshold);
    report["mae_mean"] = nullptr;
    report["max_f_mean"] = nullptr;
  } else {
    double mae_sum = 0.0;
    double f_sum = 0.0;
    for (const auto& p : pred_files) {
      const auto sal = read_pgm(p);
      const auto gt = to_binary_mask(read_pgm(fs::path(flags.gt) / p.filename()));
      const double m = mae(sal, gt);
      const auto best = max_f_measure(sal, gt);
      mae_sum += m;
      f_sum += best.f;
      per_image.push_back({{"image", p.stem().string()},
                           {"mae", m},
                           {"max_f", best.f},
                           {"threshold", best.threshold}});
    }
    const auto n = static_cast<double>(pred_files.size());
    report["corloc"] = nullptr;
    report["mae_mean"] = mae_sum / n;
    report["max_f_mean"] = f_sum / n;
  }
  report["per_image"] = per_image;
  report["config"] = {{"mode", flags.mode},
                      {"iou_threshold", flags.threshold},
                      {"max_boxes", max_boxes ? json(*max_boxes) : json(nullptr)},
                      {"beta2", kDefaultBeta2}};
  return report;
}

struct MineFlags {
  std::string transactions;
  double alpha = 0.06;
  std::string max_len;
  std::string out;
};

inline json mine_report(const MineFlags& flags) {
  std::ifstream in(flags.transactions);
  if (!in) throw IoError("cannot open '" + flags.transactions + "'");
  const auto db = parse_transactions(in);
  std::optional<std::size_t> max_len;
  if (!flags.max_len.empty()) max_len = detail::parse_number<std::size_t>("max_len", flags.max_len);
  const auto itemsets = mine_frequent(db, flags.alpha, max_len);
  json arr = json::array();
  for (const auto& s : itemsets) {
    arr.push_back({{"items", s.items}, {"support_count", s.support_count}, {"support", s.support_ratio}});
  }
  return {{"alpha", flags.alpha},
          {"max_len", max_len ? json(*max_len) : json(nullptr)},
          {"n_transactions", db.size()},
          {"itemsets", arr}};
}

/// Entry point shared by the olm binary and the tests. args excludes argv[0].
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Object location mining: frequent-pattern localization from CNN feature maps", "olm"};
  app.require_subcommand(1);

  PipelineFlags loc_flags, sal_flags, part_flags;
  part_flags.defaults.alpha = kPartAlpha;
  std::string support_out;
  std::string mask_dir;
  auto* localize_cmd = app.add_subcommand("localize", "emit object bounding boxes as JSON");
  loc_flags.add(*localize_cmd);
  localize_cmd->add_option("--support-out", support_out, "also write the saliency map as PGM");
  auto* saliency_cmd = app.add_subcommand("saliency", "emit an 8-bit PGM saliency map");
  sal_flags.add(*saliency_cmd);
  auto* parts_cmd = app.add_subcommand("parts", "emit K part locations as JSON");
  part_flags.add(*parts_cmd);
  parts_cmd->add_option("--mask-dir", mask_dir, "write one PGM mask per part here");

  EvalFlags eval_flags;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--pred", eval_flags.pred, "prediction directory")->required();
  eval_cmd->add_option("--gt", eval_flags.gt, "ground-truth directory")->required();
  eval_cmd->add_option("--mode", eval_flags.mode, "corloc | saliency")
      ->check(CLI::IsMember({"corloc", "saliency"}));
  eval_cmd->add_option("--out", eval_flags.out, "report path (default stdout)");
  eval_cmd->add_option("--max-boxes", eval_flags.max_boxes, "predicted boxes kept per image");
  eval_cmd->add_option("--iou-threshold", eval_flags.threshold, "CorLoc IoU threshold (strict)");

  MineFlags mine_flags;
  auto* mine_cmd = app.add_subcommand("mine", "run Apriori over a plain-text transaction file");
  mine_cmd->add_option("--transactions", mine_flags.transactions, "one transaction per line")->required();
  mine_cmd->add_option("--alpha", mine_flags.alpha, "minimum support ratio in (0, 1]");
  mine_cmd->add_option("--max-len", mine_flags.max_len, "maximum itemset size");
  mine_cmd->add_option("--out", mine_flags.out, "output path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsageError;
  }

  auto write_json = [&](const json& j, const std::string& path) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty()) {
      out << text;
    } else {
      write_text_atomic(path, text);
    }
  };

  try {
    if (*localize_cmd) return cmd_localize(loc_flags, support_out, out, err);
    if (*saliency_cmd) return cmd_saliency(sal_flags, err);
    if (*parts_cmd) return cmd_parts(part_flags, mask_dir, out);
    if (*eval_cmd) {
      write_json(eval_report(eval_flags), eval_flags.out);
      return kSuccess;
    }
    if (*mine_cmd) {
      write_json(mine_report(mine_flags), mine_flags.out);
      return kSuccess;
    }
  } catch (const ArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace olm::cli
