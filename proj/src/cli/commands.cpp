#include "gfss/cli/commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gfss/data/preview.hpp"
#include "gfss/eval/report.hpp"
#include "gfss/fewshot/augment.hpp"
#include "gfss/numcore/checkpoint.hpp"
#include "gfss/numcore/rng.hpp"

namespace gfss::cli {

namespace fs = std::filesystem;

std::string table_file(std::size_t shots) { return fmt::format("table_{}shot.csv", shots); }
std::string class_file(std::size_t shots) { return fmt::format("classes_{}shot.csv", shots); }

namespace {

// Writes through a sibling temp file so a failed run never leaves a torn file.
void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct PreparedData {
  data::Dataset full;
  data::DataSplit parts;
  fewshot::ClassSplit classes;
};

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData p{{}, {}, config.class_split()};
  if (config.dataset_path.empty()) {
    p.full = data::generate(config.synth);
  } else {
    try {
      p.full = data::load_dataset(config.dataset_path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    for (const auto& s : p.full.samples) {
      if (s.height() != config.synth.image_size || s.width() != config.synth.image_size)
        throw ConfigError("dataset image size does not match [data] image_size");
      for (auto id : s.mask.ids)
        if (id != num::kIgnoreId && id > config.synth.class_count)
          throw ConfigError(fmt::format("dataset holds class id {} above class_count", id));
    }
  }
  try {
    p.parts = data::split(p.full, p.classes, config.split);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  spdlog::info("data: {} images (train {}, val {}, pool {})", p.full.size(), p.parts.train.size(),
               p.parts.val.size(), p.parts.pool.size());
  return p;
}

num::StateDict load_checked_checkpoint(const fs::path& path, const ExperimentConfig& config) {
  if (!fs::is_regular_file(path)) throw ConfigError("checkpoint '" + path.string() + "' does not exist");
  num::StateDict state;
  try {
    state = num::load_checkpoint(path);
    models::SegModel probe(config.base_model(), 0);
    probe.load_state_dict(state);
  } catch (const std::exception& e) {
    throw ConfigError("checkpoint '" + path.string() + "' does not fit the configured model: " + e.what());
  }
  return state;
}

}  // namespace

std::map<std::string, std::string> read_summary(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

void cmd_gen_data(const ExperimentConfig& config, const fs::path& out_path) {
  try {
    config.synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto t0 = std::chrono::steady_clock::now();
  data::Dataset dataset = data::generate(config.synth);
  write_file(out_path, data::serialize_dataset(dataset));
  spdlog::info("wrote {} images to {} ({:.1f}s)", dataset.size(), out_path.string(), seconds_since(t0));
}

void cmd_base_train(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  PreparedData d = prepare_data(config);
  auto t0 = std::chrono::steady_clock::now();

  models::SegModel model(config.base_model(), config.model_seed);
  double token_accuracy = -1.0;
  if (models::is_vit(config.model.encoder.kind) && config.pretrain_enabled) {
    data::Dataset full_train;
    for (auto i : d.parts.train_ids) full_train.samples.push_back(d.full.samples[i]);
    auto pre = fewshot::pretrain_encoder(model.encoder(), full_train, config.synth.class_count, config.pretrain,
                                         [](std::size_t epoch, double loss) {
                                           spdlog::info("pretrain epoch {} loss {:.4f}", epoch, loss);
                                         });
    token_accuracy = pre.token_accuracy;
    spdlog::info("pretrain token accuracy {:.4f} ({:.1f}s)", token_accuracy, seconds_since(t0));
  }
  fewshot::apply_base_training_freeze(model);

  fewshot::BaseTrainHooks hooks;
  hooks.on_epoch = [](const fewshot::EpochRecord& r) {
    spdlog::info("epoch {} loss {:.4f} val mIoU {:.4f}", r.epoch, r.loss, r.val_miou);
  };
  auto result = fewshot::base_train(model, d.parts.train, d.parts.val, d.classes, config.base_train, hooks);
  spdlog::info("best epoch {} val mIoU {:.4f} ({:.1f}s)", result.best_epoch, result.best_val_miou,
               seconds_since(t0));

  std::string summary = fmt::format(
      "encoder={}\ndecoder={}\nsplit={}\nepochs={}\nbest_epoch={}\nbest_val_miou={}\npretrain_token_accuracy={}\n"
      "seconds={:.1f}\n",
      models::to_string(config.model.encoder.kind), models::to_string(config.model.decoder.kind),
      config.split_index, config.base_train.epochs, result.best_epoch, result.best_val_miou, token_accuracy,
      seconds_since(t0));
  write_file(out_dir / kCheckpointFile, num::serialize_checkpoint(result.checkpoint));
  write_file(out_dir / kHistoryFile, eval::history_csv(result.history));
  write_file(out_dir / kSummaryFile, summary);
}

void cmd_adapt_eval(const ExperimentConfig& config, const fs::path& checkpoint, const fs::path& out_dir,
                    bool emit_pngs) {
  config.validate();
  num::StateDict state = load_checked_checkpoint(checkpoint, config);
  PreparedData d = prepare_data(config);
  auto t0 = std::chrono::steady_clock::now();

  models::SegModel base_model(config.base_model(), 0);
  base_model.load_state_dict(state);
  const double base_training = fewshot::validation_miou(base_model, d.parts.val, d.classes);
  spdlog::info("checkpoint val mIoU {:.4f}", base_training);

  struct Preview {
    std::size_t query;
    num::LabelMap predicted;
  };
  std::vector<Preview> previews;
  eval::EpisodeCallback on_episode = [&](std::size_t run, const eval::Episode& ep, const num::LabelMap& predicted) {
    spdlog::debug("run {} query {} done", run, ep.query_index);
    if (emit_pngs && run == 0) previews.push_back({ep.query_index, predicted});
  };
  auto result = eval::evaluate(state, config.base_model(), d.parts.pool, d.classes, config.eval, on_episode);
  const auto& rep = result.report;
  spdlog::info("{}-shot: base {:.4f} novel {:.4f} mean {:.4f} ({} episodes/run, {:.1f}s)", config.eval.adapt.shots,
               rep.base_miou, rep.novel_miou, rep.mean, result.episodes_per_run, seconds_since(t0));

  const std::string enc = models::to_string(config.model.encoder.kind);
  const std::string dec = models::to_string(config.model.decoder.kind);
  const std::size_t shots = config.eval.adapt.shots;
  write_file(out_dir / table_file(shots), eval::table_csv({eval::make_row(enc, dec, base_training, shots, rep)}));
  write_file(out_dir / class_file(shots), eval::class_csv(enc, dec, shots, rep, d.classes));

  if (emit_pngs) {
    std::sort(previews.begin(), previews.end(), [](const Preview& a, const Preview& b) { return a.query < b.query; });
    const fs::path dir = out_dir / fmt::format("previews_{}shot", shots);
    fs::create_directories(dir);
    for (const auto& p : previews) {
      const auto& sample = d.parts.pool.samples[p.query];
      const std::string stem = fmt::format("query{:04}", d.parts.pool_ids[p.query]);
      data::write_png(dir / (stem + "_image.png"), data::render_image(sample));
      data::write_png(dir / (stem + "_truth.png"), data::render_mask(sample.mask));
      data::write_png(dir / (stem + "_pred.png"), data::render_overlay(sample, p.predicted));
    }
    spdlog::info("wrote {} previews to {}", previews.size(), dir.string());
  }
}

std::string cmd_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  if (inputs.empty()) throw ConfigError("report needs at least one table CSV");
  std::vector<eval::TableRow> rows;
  for (const auto& path : inputs) {
    try {
      auto part = eval::parse_table_csv(read_file(path));
      rows.insert(rows.end(), part.begin(), part.end());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  if (rows.empty()) throw ConfigError("input tables hold no rows");
  std::string text = eval::table_text(rows);
  write_file(out_dir / kReportCsv, eval::table_csv(rows));
  write_file(out_dir / kReportText, text);
  return text;
}

namespace {

void init_logging() {
  auto level = spdlog::level::info;
  if (const char* env = std::getenv("GFSS_LOG")) {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::info;
  }
  spdlog::set_level(level);
  spdlog::set_pattern("[%H:%M:%S] %v");
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  init_logging();
  CLI::App app{"Generalized few-shot semantic segmentation on synthetic data", "gfss"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> workers;
  std::string checkpoint;
  bool emit_pngs = false;
  bool print_config = false;
  std::vector<std::string> inputs;

  auto add_config = [&](CLI::App* cmd) { cmd->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile); };

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  add_config(gen);
  gen->add_option("--out", out, "Dataset file (default: <output dir>/" + std::string(kDatasetFile) + ")");
  gen->add_option("--seed", seed, "Dataset seed");

  auto* train = app.add_subcommand("base-train", "Base-train a model and write a checkpoint");
  add_config(train);
  train->add_option("--out", out, "Output directory");
  train->add_option("--seed", seed, "Seed for initialization, pretraining and batch order");

  auto* adapt = app.add_subcommand("adapt-eval", "Few-shot adaptation and evaluation");
  add_config(adapt);
  adapt->add_option("--checkpoint", checkpoint, "Base-trained checkpoint (default: <out>/checkpoint.gfss)");
  adapt->add_option("--out", out, "Output directory");
  adapt->add_option("--seed", seed, "Evaluation seed");
  adapt->add_option("--shots", shots, "Shots per novel class")->check(CLI::IsMember({1, 5}));
  adapt->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  adapt->add_flag("--emit-pngs", emit_pngs, "Write query previews for the first run");

  auto* report = app.add_subcommand("report", "Merge table CSVs into one comparison table");
  report->add_option("inputs", inputs, "Table CSV files");
  report->add_option("--out", out, "Output directory")->required();

  auto* show = app.add_subcommand("config", "Print the default configuration");
  show->callback([&] { print_config = true; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (print_config) {
      std::cout << default_config_text();
      return kSuccess;
    }
    if (report->parsed()) {
      std::cout << cmd_report({inputs.begin(), inputs.end()}, out);
      return kSuccess;
    }
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    const fs::path out_dir = out.empty() ? config.output_dir : fs::path(out);
    if (gen->parsed()) {
      if (seed) config.synth.seed = *seed;
      cmd_gen_data(config, out.empty() ? config.output_dir / kDatasetFile : fs::path(out));
    } else if (train->parsed()) {
      if (seed) {
        config.model_seed = num::derive_seed(*seed, 0);
        config.pretrain.seed = num::derive_seed(*seed, 1);
        config.base_train.seed = num::derive_seed(*seed, 2);
      }
      cmd_base_train(config, out_dir);
    } else if (adapt->parsed()) {
      if (seed) config.eval.seed = *seed;
      if (shots) config.eval.adapt.shots = *shots;
      if (workers) config.eval.workers = *workers;
      cmd_adapt_eval(config, checkpoint.empty() ? out_dir / kCheckpointFile : fs::path(checkpoint), out_dir,
                     emit_pngs);
    }
    return kSuccess;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

}  // namespace gfss::cli
