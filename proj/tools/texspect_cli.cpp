// texspect: one-shot texture inspection from a single defect-free image.
//
// Subcommands:
//   train    train the generator/discriminator pyramid on one normal image
//   inspect  localize defects in a new image of the same texture
//   eval     score predictions against ground-truth masks (IoU / pixel acc)
//   synth    generate synthetic textures with injected defects

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "texspect/texspect.hpp"

namespace fs = std::filesystem;
using namespace texspect;

namespace {

int run_train(const std::string& image_path, const std::string& out_dir, int size,
              const std::string& config_path, TrainConfig cfg, const CLI::App& cmd) {
  if (!config_path.empty()) {
    // file values first, command-line flags win
    TrainConfig from_file = cfg;
    apply_config(from_file, parse_config_file(config_path));
    auto keep = [&](const char* flag) { return cmd.count(flag) > 0; };
    if (!keep("--iters")) cfg.iters_per_scale = from_file.iters_per_scale;
    if (!keep("--lr-g")) cfg.lr_g = from_file.lr_g;
    if (!keep("--lr-d")) cfg.lr_d = from_file.lr_d;
    if (!keep("--lambda")) cfg.lambda_recon = from_file.lambda_recon;
    if (!keep("--d-steps")) cfg.d_steps = from_file.d_steps;
    if (!keep("--g-steps")) cfg.g_steps = from_file.g_steps;
    if (!keep("--seed")) cfg.seed = from_file.seed;
    if (!keep("--r")) cfg.scale_factor = from_file.scale_factor;
    if (!keep("--min-dim")) cfg.min_dim = from_file.min_dim;
    if (!keep("--scales")) cfg.max_scales = from_file.max_scales;
    if (!keep("--gen-width")) cfg.gen_width = from_file.gen_width;
    if (!keep("--disc-width")) cfg.disc_width = from_file.disc_width;
    if (!keep("--branch-width")) cfg.branch_width = from_file.branch_width;
    if (!keep("--texture-module")) cfg.texture_module = from_file.texture_module;
  }

  fs::create_directories(out_dir);
  cfg.checkpoint_dir = out_dir;
  cfg.log_path = (fs::path(out_dir) / "train_log.jsonl").string();

  Image img = load_image(image_path, size);
  std::cout << "training on " << image_path << " (" << img.c << "x" << img.h << "x" << img.w
            << "), seed " << cfg.seed << "\n";
  TrainResult result = train_stack(img, cfg);
  std::cout << "trained " << result.stack.depth() << " scales; checkpoint in " << out_dir << "\n";
  return 0;
}

int run_inspect(const std::string& model_dir, const std::string& image_path,
                const std::string& out_dir, const std::string& threshold,
                const std::string& entropy_sign, bool per_scale) {
  ModelStack stack = load_checkpoint(model_dir);
  InspectOptions opt;
  opt.threshold = ThresholdPolicy::parse(threshold);
  opt.entropy_sign = entropy_sign_from_string(entropy_sign);

  Image img = load_image_native(image_path);
  InspectionResult res = inspect(stack, img, opt);

  fs::create_directories(out_dir);
  save_heatmap(res.fused, (fs::path(out_dir) / "heatmap.png").string());
  save_mask(res.mask, (fs::path(out_dir) / "mask.png").string());
  if (per_scale) {
    for (size_t n = 0; n < res.entropy_maps.size(); ++n)
      save_heatmap(res.entropy_maps[n],
                   (fs::path(out_dir) / ("entropy_scale_" + std::to_string(n) + ".png")).string());
  }
  std::cout << "defect pixels: " << res.mask.count() << " / " << res.mask.v.size() << "\n";
  return 0;
}

int run_eval(const std::string& model_dir, const std::string& image_dir,
             const std::string& mask_dir, const std::string& report_path,
             const std::string& threshold, const std::string& entropy_sign) {
  ModelStack stack = load_checkpoint(model_dir);
  InspectOptions opt;
  opt.threshold = ThresholdPolicy::parse(threshold);
  opt.entropy_sign = entropy_sign_from_string(entropy_sign);
  MetricsReport rep = evaluate_dataset(stack, image_dir, mask_dir, opt);
  write_report(rep, report_path);
  for (const auto& im : rep.per_image) {
    if (im.skipped)
      std::cout << im.name << "  skipped (" << im.skip_reason << ")\n";
    else
      std::cout << im.name << "  iou " << im.iou << "  pixel_acc " << im.pixel_acc << "\n";
  }
  std::cout << "mean over " << rep.evaluated << " images: iou " << rep.mean_iou << "  pixel_acc "
            << rep.mean_pixel_acc << "\n";
  return rep.evaluated == 0 ? 2 : 0;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  auto kv = parse_config_file(spec_path);
  SynthSpec spec;
  int count = 1;
  for (const auto& [key, val] : kv) {
    if (key == "family") spec.family = texture_family_from_string(val);
    else if (key == "size") spec.size = std::stoi(val);
    else if (key == "defect_shape") spec.defect_shape = defect_shape_from_string(val);
    else if (key == "defect_extent") spec.defect_extent = std::stoi(val);
    else if (key == "defect_offset") spec.defect_offset = std::stod(val);
    else if (key == "seed") spec.seed = std::stoull(val);
    else if (key == "count") count = std::stoi(val);
    else throw FormatError("unknown synth key: " + key);
  }
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    SynthSpec s = spec;
    s.seed = spec.seed + static_cast<uint64_t>(i);
    auto [img, mask] = synth_texture_sample(s);
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%03d", i);
    save_image(img, (fs::path(out_dir) / (std::string(name) + ".png")).string());
    save_mask(mask, (fs::path(out_dir) / (std::string(name) + "_mask.png")).string());
  }
  std::cout << "wrote " << count << " sample(s) to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-shot texture defect inspection"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train on a single normal image");
  std::string tr_image, tr_out, tr_config;
  int tr_size = 256;
  TrainConfig cfg;
  std::string tr_module = "full";
  train->add_option("--image", tr_image, "normal training image")->required();
  train->add_option("--out", tr_out, "output checkpoint directory")->required();
  train->add_option("--config", tr_config, "key = value config file");
  train->add_option("--size", tr_size, "training resolution (square)");
  train->add_option("--iters", cfg.iters_per_scale, "iterations per scale");
  train->add_option("--lr-g", cfg.lr_g, "generator learning rate");
  train->add_option("--lr-d", cfg.lr_d, "discriminator learning rate");
  train->add_option("--lambda", cfg.lambda_recon, "reconstruction weight");
  train->add_option("--d-steps", cfg.d_steps, "discriminator steps per iteration");
  train->add_option("--g-steps", cfg.g_steps, "generator steps per iteration");
  train->add_option("--seed", cfg.seed, "random seed");
  train->add_option("--r", cfg.scale_factor, "pyramid scale factor in (0,1)");
  train->add_option("--min-dim", cfg.min_dim, "smallest pyramid dimension");
  train->add_option("--scales", cfg.max_scales, "cap on the number of scales (0 = all)");
  train->add_option("--gen-width", cfg.gen_width, "generator channel width");
  train->add_option("--disc-width", cfg.disc_width, "discriminator stem width");
  train->add_option("--branch-width", cfg.branch_width, "directional branch width");
  train->add_option("--texture-module", tr_module, "full | shared | stem-only");

  // inspect
  auto* insp = app.add_subcommand("inspect", "localize defects in one image");
  std::string in_model, in_image, in_out, in_threshold = "otsu", in_sign = "saliency";
  bool in_per_scale = false;
  insp->add_option("--model", in_model, "checkpoint directory")->required();
  insp->add_option("--image", in_image, "test image")->required();
  insp->add_option("--out", in_out, "output directory")->required();
  insp->add_option("--threshold", in_threshold, "otsu | pXX (mark top (100-XX)%)");
  insp->add_option("--entropy-sign", in_sign, "saliency | literal");
  insp->add_flag("--per-scale", in_per_scale, "also write one entropy map per scale");

  // eval
  auto* eval = app.add_subcommand("eval", "score a directory of images against masks");
  std::string ev_model, ev_images, ev_masks, ev_report, ev_threshold = "otsu",
                                                        ev_sign = "saliency";
  eval->add_option("--model", ev_model, "checkpoint directory")->required();
  eval->add_option("--images", ev_images, "test image directory")->required();
  eval->add_option("--masks", ev_masks, "ground-truth mask directory")->required();
  eval->add_option("--report", ev_report, "report output path")->required();
  eval->add_option("--threshold", ev_threshold, "otsu | pXX");
  eval->add_option("--entropy-sign", ev_sign, "saliency | literal");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic texture samples");
  std::string sy_spec, sy_out;
  synth->add_option("--spec", sy_spec, "key = value synthesis spec")->required();
  synth->add_option("--out", sy_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      cfg.texture_module = texture_module_from_string(tr_module);
      return run_train(tr_image, tr_out, tr_size, tr_config, cfg, *train);
    }
    if (insp->parsed()) return run_inspect(in_model, in_image, in_out, in_threshold, in_sign, in_per_scale);
    if (eval->parsed()) return run_eval(ev_model, ev_images, ev_masks, ev_report, ev_threshold, ev_sign);
    if (synth->parsed()) return run_synth(sy_spec, sy_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
