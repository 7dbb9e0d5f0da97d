#include "gfss/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gfss::cli {

namespace pt = boost::property_tree;

namespace {

// Reads typed keys from one section and remembers which keys were used.
class Section {
 public:
  Section(const pt::ptree& root, std::string name, std::set<std::string>& seen) : name_(std::move(name)), seen_(seen) {
    if (auto child = root.get_child_optional(name_)) tree_ = &*child;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    auto v = raw(key);
    return v ? *v : fallback;
  }

  template <typename T>
  T number(const std::string& key, T fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    std::istringstream in(*v);
    T out{};
    if constexpr (std::is_unsigned_v<T>) {
      if (!v->empty() && v->front() == '-') fail(key, *v, "a non-negative integer");
      unsigned long long u = 0;
      in >> u;
      out = static_cast<T>(u);
    } else {
      in >> out;
    }
    if (in.fail() || !(in >> std::ws).eof()) fail(key, *v, std::is_integral_v<T> ? "an integer" : "a number");
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    fail(key, *v, "true or false");
  }

 private:
  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(name_ + "." + key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    std::string s = *v;
    s.erase(0, s.find_first_not_of(" \t"));
    s.erase(s.find_last_not_of(" \t") + 1);
    return s;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& value, const char* what) const {
    throw ConfigError(fmt::format("[{}] {} = '{}' is not {}", name_, key, value, what));
  }

  std::string name_;
  const pt::ptree* tree_ = nullptr;
  std::set<std::string>& seen_;
};

void check_unknown(const pt::ptree& root, const std::set<std::string>& seen) {
  for (const auto& [section, child] : root) {
    if (child.empty() && !child.data().empty())
      throw ConfigError("key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : child) {
      if (!seen.count(section + "." + key)) throw ConfigError(fmt::format("unknown key [{}] {}", section, key));
    }
  }
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

fewshot::ClassSplit ExperimentConfig::class_split() const {
  return fewshot::ClassSplit::fold(split_index, synth.class_count, fold_size);
}

models::ModelConfig ExperimentConfig::base_model() const {
  models::ModelConfig m = model;
  m.class_count = class_split().base_channels();
  return m;
}

void ExperimentConfig::validate() const {
  auto wrap = [](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  };
  wrap([&] { synth.validate(); });
  wrap([&] { class_split(); });
  wrap([&] { split.validate(); });
  wrap([&] { pretrain.validate(); });
  wrap([&] { base_train.validate(); });
  wrap([&] { eval.validate(); });
  if (model.encoder.image_size != synth.image_size)
    throw ConfigError("model image size must equal [data] image_size");
  if (!models::is_vit(model.encoder.kind) && model.decoder.kind == models::DecoderKind::mask_transformer_lite) {
    // allowed: the CNN's final map is flattened into tokens
  }
  if (models::is_vit(model.encoder.kind) && model.decoder.kind == models::DecoderKind::upernet_lite)
    throw ConfigError("upernet_lite requires multi-scale features (a tiny_cnn_* encoder)");
  wrap([&] {
    num::Rng rng(1);
    models::build_encoder(model.encoder, rng);  // geometry check
  });
  if (eval.adapt.shots != 1 && eval.adapt.shots != 5) throw ConfigError("shots must be 1 or 5");
  if (!dataset_path.empty() && !std::filesystem::is_regular_file(dataset_path))
    throw ConfigError("dataset file '" + dataset_path.string() + "' does not exist");
  if (output_dir.empty()) throw ConfigError("[output] dir must not be empty");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree root;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  std::set<std::string> seen;
  ExperimentConfig c;

  Section d(root, "data", seen);
  c.dataset_path = resolve(d.text("path", ""), base_dir);
  c.synth.image_size = d.number("image_size", c.synth.image_size);
  c.synth.class_count = d.number("class_count", c.synth.class_count);
  c.synth.images_per_class = d.number("images_per_class", c.synth.images_per_class);
  c.synth.min_shapes = d.number("min_shapes", c.synth.min_shapes);
  c.synth.max_shapes = d.number("max_shapes", c.synth.max_shapes);
  c.synth.noise_std = d.number("noise_std", c.synth.noise_std);
  c.synth.seed = d.number("seed", c.synth.seed);

  Section s(root, "split", seen);
  c.split_index = s.number("index", c.split_index);
  c.fold_size = s.number("fold_size", c.fold_size);
  c.split.holdout_fraction = s.number("holdout_fraction", c.split.holdout_fraction);
  c.split.val_fraction = s.number("val_fraction", c.split.val_fraction);
  c.split.seed = s.number("seed", c.split.seed);

  Section m(root, "model", seen);
  try {
    c.model.encoder.kind = models::parse_encoder_kind(m.text("encoder", models::to_string(c.model.encoder.kind)));
    c.model.decoder.kind = models::parse_decoder_kind(m.text("decoder", models::to_string(c.model.decoder.kind)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.model.encoder.image_size = c.synth.image_size;
  c.model.encoder.patch_size = m.number("patch_size", c.model.encoder.patch_size);
  c.model.encoder.depth = m.number("vit_depth", c.model.encoder.depth);
  c.model.encoder.heads = m.number("vit_heads", c.model.encoder.heads);
  c.model.encoder.dim = m.number("vit_dim", c.model.encoder.dim);
  c.model.decoder.dim = m.number("decoder_dim", c.model.decoder.dim);
  c.model.decoder.depth = m.number("decoder_depth", c.model.decoder.depth);
  c.model.decoder.heads = m.number("decoder_heads", c.model.decoder.heads);
  c.model.decoder.upernet_channels = m.number("upernet_channels", c.model.decoder.upernet_channels);
  c.model_seed = m.number("seed", c.model_seed);

  Section p(root, "pretrain", seen);
  c.pretrain_enabled = p.flag("enabled", c.pretrain_enabled);
  c.pretrain.epochs = p.number("epochs", c.pretrain.epochs);
  c.pretrain.batch_size = p.number("batch_size", c.pretrain.batch_size);
  c.pretrain.sgd.learning_rate = p.number("learning_rate", c.pretrain.sgd.learning_rate);
  c.pretrain.sgd.momentum = p.number("momentum", c.pretrain.sgd.momentum);
  c.pretrain.sgd.weight_decay = p.number("weight_decay", c.pretrain.sgd.weight_decay);
  c.pretrain.seed = p.number("seed", c.pretrain.seed);

  Section b(root, "base_train", seen);
  c.base_train.epochs = b.number("epochs", c.base_train.epochs);
  c.base_train.batch_size = b.number("batch_size", c.base_train.batch_size);
  c.base_train.sgd.learning_rate = b.number("learning_rate", c.base_train.sgd.learning_rate);
  c.base_train.sgd.momentum = b.number("momentum", c.base_train.sgd.momentum);
  c.base_train.sgd.weight_decay = b.number("weight_decay", c.base_train.sgd.weight_decay);
  c.base_train.seed = b.number("seed", c.base_train.seed);

  Section a(root, "adapt", seen);
  auto& ad = c.eval.adapt;
  ad.iterations = a.number("iterations", ad.iterations);
  ad.learning_rate = a.number("learning_rate", ad.learning_rate);
  ad.momentum = a.number("momentum", ad.momentum);
  ad.weight_decay = a.number("weight_decay", ad.weight_decay);
  ad.shots = a.number("shots", ad.shots);

  Section e(root, "eval", seen);
  c.eval.runs = e.number("runs", c.eval.runs);
  c.eval.max_queries = e.number("max_queries", c.eval.max_queries);
  c.eval.workers = e.number("workers", c.eval.workers);
  c.eval.seed = e.number("seed", c.eval.seed);

  Section o(root, "output", seen);
  c.output_dir = resolve(o.text("dir", c.output_dir.string()), base_dir);

  check_unknown(root, seen);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string default_config_text() {
  const ExperimentConfig c;
  const auto& ad = c.eval.adapt;
  return fmt::format(
      "[data]\nimage_size = {}\nclass_count = {}\nimages_per_class = {}\nmin_shapes = {}\nmax_shapes = {}\n"
      "noise_std = {}\nseed = {}\n\n"
      "[split]\nindex = {}\nfold_size = {}\nholdout_fraction = {}\nval_fraction = {}\nseed = {}\n\n"
      "[model]\nencoder = {}\ndecoder = {}\npatch_size = {}\nseed = {}\n\n"
      "[pretrain]\nenabled = {}\nepochs = {}\nbatch_size = {}\nlearning_rate = {}\nmomentum = {}\nweight_decay = {}\n"
      "seed = {}\n\n"
      "[base_train]\nepochs = {}\nbatch_size = {}\nlearning_rate = {}\nmomentum = {}\nweight_decay = {}\nseed = {}\n\n"
      "[adapt]\niterations = {}\nlearning_rate = {}\nmomentum = {}\nweight_decay = {}\nshots = {}\n\n"
      "[eval]\nruns = {}\nmax_queries = {}\nworkers = {}\nseed = {}\n\n"
      "[output]\ndir = {}\n",
      c.synth.image_size, c.synth.class_count, c.synth.images_per_class, c.synth.min_shapes, c.synth.max_shapes,
      c.synth.noise_std, c.synth.seed, c.split_index, c.fold_size, c.split.holdout_fraction, c.split.val_fraction,
      c.split.seed, models::to_string(c.model.encoder.kind), models::to_string(c.model.decoder.kind),
      c.model.encoder.patch_size, c.model_seed, c.pretrain_enabled, c.pretrain.epochs, c.pretrain.batch_size,
      c.pretrain.sgd.learning_rate, c.pretrain.sgd.momentum, c.pretrain.sgd.weight_decay, c.pretrain.seed,
      c.base_train.epochs, c.base_train.batch_size, c.base_train.sgd.learning_rate, c.base_train.sgd.momentum,
      c.base_train.sgd.weight_decay, c.base_train.seed, ad.iterations, ad.learning_rate, ad.momentum, ad.weight_decay,
      ad.shots, c.eval.runs, c.eval.max_queries, c.eval.workers, c.eval.seed, c.output_dir.string());
}

}  // namespace gfss::cli
