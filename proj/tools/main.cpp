#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tunnelpilot/config.hpp"
#include "tunnelpilot/dataset.hpp"
#include "tunnelpilot/datagen.hpp"
#include "tunnelpilot/evalreport.hpp"
#include "tunnelpilot/flight.hpp"
#include "tunnelpilot/model.hpp"
#include "tunnelpilot/train.hpp"
#include "tunnelpilot/tunnel.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts* opts, bool with_seed = true) {
  cmd->add_option("--config", opts->config_path, "key = value config file");
  cmd->add_option("--set", opts->overrides, "override a config key (key=value)");
  if (with_seed) cmd->add_option("--seed", opts->seed, "seed for this stage");
  cmd->add_option("--out", opts->out_dir, "output directory")->required();
}

tp::RunConfig resolve_config(const CommonOpts& opts, const char* seed_key) {
  tp::RunConfig cfg;
  if (!opts.config_path.empty()) cfg.load_file(opts.config_path);
  for (const auto& pair : opts.overrides) cfg.set_pair(pair);
  if (opts.seed && seed_key) cfg.set(seed_key, std::to_string(*opts.seed));
  return cfg;
}

fs::path prepare_out(const tp::RunConfig& cfg, const std::string& dir) {
  fs::path out(dir);
  fs::create_directories(out);
  cfg.write_echo(out / "effective_config.txt");
  return out;
}

std::string file_text(const tp::EvalReport& rep) { return tp::format_report_text(rep); }

void write_text(const fs::path& path, const std::string& text) {
  FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

int run_gen_tunnel(const CommonOpts& opts) {
  auto cfg = resolve_config(opts, "tunnel.seed");
  auto tunnel = tp::generate_tunnel(tp::tunnel_params_from(cfg));
  auto out = prepare_out(cfg, opts.out_dir);
  tunnel.save(out / "tunnel.txt");
  std::printf("tunnel: length %.1f m, width %.1f m, height %.1f m -> %s\n",
              tunnel.length(), tunnel.width(), tunnel.height(),
              (out / "tunnel.txt").string().c_str());
  return 0;
}

int run_gen_dataset(const CommonOpts& opts, const std::string& tunnel_path) {
  auto cfg = resolve_config(opts, "dataset.seed");
  auto tunnel = tp::TunnelMap::load(tunnel_path);
  auto samples = tp::generate_dataset(tunnel, tp::dataset_config_from(cfg));
  auto out = prepare_out(cfg, opts.out_dir);
  tp::write_dataset(out, samples);
  std::printf("dataset: %zu images (%d per class) -> %s\n", samples.size(),
              cfg.get_int("dataset.n_per_class"), out.string().c_str());
  return 0;
}

int run_train(const CommonOpts& opts, const std::string& dataset_dir) {
  auto cfg = resolve_config(opts, "train.seed");
  auto items = tp::load_labeled_dataset(dataset_dir);
  double ratio = 1.0 - cfg.get_double("train.holdout_ratio");
  std::vector<tp::LabeledImage> train_set, holdout;
  if (cfg.get_double("train.holdout_ratio") > 0.0) {
    std::tie(train_set, holdout) =
        tp::split_dataset(items, ratio, cfg.get_u64("train.split_seed"));
  } else {
    train_set = std::move(items);
  }

  auto result = tp::train(train_set, holdout, tp::train_config_from(cfg));
  auto out = prepare_out(cfg, opts.out_dir);
  tp::save_model(result.model, out / "model.tpcnn");
  tp::write_history_csv(out / "history.csv", result.history);

  const auto& last = result.history.back();
  if (last.holdout_accuracy)
    std::printf("train: %d epochs, final loss %.4f, holdout accuracy %.1f%% -> %s\n",
                last.epoch, last.mean_loss, 100.0 * *last.holdout_accuracy,
                out.string().c_str());
  else
    std::printf("train: %d epochs, final loss %.4f -> %s\n", last.epoch,
                last.mean_loss, out.string().c_str());
  return 0;
}

int run_eval(const CommonOpts& opts, const std::string& model_path,
             const std::vector<std::string>& dataset_specs) {
  auto cfg = resolve_config(opts, nullptr);
  auto model = tp::load_model(model_path);

  std::vector<tp::LabeledImage> items;
  std::vector<std::string> tags;
  for (const auto& spec : dataset_specs) {
    std::string tag, dir;
    size_t eq = spec.find('=');
    if (eq != std::string::npos) {
      tag = spec.substr(0, eq);
      dir = spec.substr(eq + 1);
    } else {
      dir = spec;
      tag = fs::path(spec).filename().string();
      if (tag.empty()) tag = spec;
    }
    auto part = tp::load_labeled_dataset(dir);
    for (auto& item : part) {
      items.push_back(std::move(item));
      tags.push_back(tag);
    }
  }

  auto report = tp::evaluate(model, items, tags);
  auto out = prepare_out(cfg, opts.out_dir);
  write_text(out / "report.txt", file_text(report));
  write_text(out / "report.csv", tp::format_report_csv(report));
  std::printf("%s", file_text(report).c_str());
  return 0;
}

int run_fly(const CommonOpts& opts, const std::string& tunnel_path,
            const std::string& model_path, const std::string& oracle,
            bool sweep) {
  auto cfg = resolve_config(opts, "fly.seed");
  auto tunnel = tp::TunnelMap::load(tunnel_path);

  tp::Classifier classifier;
  if (!oracle.empty()) {
    classifier = tp::constant_classifier(tp::label_from_name(oracle));
  } else if (!model_path.empty()) {
    classifier = tp::model_classifier(
        std::make_shared<tp::CnnModel>(tp::load_model(model_path)));
  } else {
    throw std::runtime_error("fly: need --model or --oracle");
  }

  auto out = prepare_out(cfg, opts.out_dir);
  std::vector<double> speeds;
  if (sweep)
    speeds = {0.1, 0.5, 1.0};
  else
    speeds = {cfg.get_double("control.v_dx")};

  for (double v : speeds) {
    tp::FlightConfig fc = tp::flight_config_from(cfg);
    fc.setpoints.v_dx = v;
    auto log = tp::run_closed_loop(tunnel, classifier, fc);
    char name[64];
    if (sweep)
      std::snprintf(name, sizeof(name), "flight_vx%.1f.csv", v);
    else
      std::snprintf(name, sizeof(name), "flight.csv");
    tp::write_flight_csv(out / name, log, fc);
    std::printf("fly: v_dx=%.2f outcome=%s t=%.1fs s=%.1fm -> %s\n", v,
                tp::outcome_name(log.outcome), log.end_time, log.end_s,
                (out / name).string().c_str());
  }
  return 0;
}

int run_classify(const std::string& model_path,
                 const std::vector<std::string>& images) {
  auto model = tp::load_model(model_path);
  for (const auto& path : images) {
    auto img = tp::load_pgm_file(path);
    auto pred = tp::predict(model, img);
    std::printf("%s %s %.6f %.6f %.6f\n", path.c_str(),
                tp::label_name(pred.label), pred.probabilities[0],
                pred.probabilities[1], pred.probabilities[2]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procedural tunnel navigation: data generation, training, "
               "evaluation and closed-loop flight"};
  app.require_subcommand(1);

  CommonOpts gt_opts;
  auto* gt = app.add_subcommand("gen-tunnel", "generate a procedural tunnel map");
  add_common(gt, &gt_opts);

  CommonOpts gd_opts;
  std::string gd_tunnel;
  auto* gd = app.add_subcommand("gen-dataset", "render a labeled image dataset");
  add_common(gd, &gd_opts);
  gd->add_option("--tunnel", gd_tunnel, "tunnel map file")->required();

  CommonOpts tr_opts;
  std::string tr_dataset;
  auto* tr = app.add_subcommand("train", "train the heading classifier");
  add_common(tr, &tr_opts);
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();

  CommonOpts ev_opts;
  std::string ev_model;
  std::vector<std::string> ev_datasets;
  auto* ev = app.add_subcommand("eval", "evaluate a model on labeled datasets");
  add_common(ev, &ev_opts, false);
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("datasets", ev_datasets, "dataset dirs, optionally TAG=DIR")
      ->required();

  CommonOpts fl_opts;
  std::string fl_tunnel, fl_model, fl_oracle;
  bool fl_sweep = false;
  auto* fl = app.add_subcommand("fly", "run the closed simulation loop");
  add_common(fl, &fl_opts);
  fl->add_option("--tunnel", fl_tunnel, "tunnel map file")->required();
  fl->add_option("--model", fl_model, "trained model file");
  fl->add_option("--oracle", fl_oracle,
                 "constant classifier instead of a model (left|center|right)");
  fl->add_flag("--sweep", fl_sweep, "run the forward velocity sweep 0.1/0.5/1.0");

  std::string cl_model;
  std::vector<std::string> cl_images;
  auto* cl = app.add_subcommand("classify", "classify PGM images");
  cl->add_option("--model", cl_model, "model file")->required();
  cl->add_option("images", cl_images, "PGM files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gt->parsed()) return run_gen_tunnel(gt_opts);
    if (gd->parsed()) return run_gen_dataset(gd_opts, gd_tunnel);
    if (tr->parsed()) return run_train(tr_opts, tr_dataset);
    if (ev->parsed()) return run_eval(ev_opts, ev_model, ev_datasets);
    if (fl->parsed()) return run_fly(fl_opts, fl_tunnel, fl_model, fl_oracle, fl_sweep);
    if (cl->parsed()) return run_classify(cl_model, cl_images);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
