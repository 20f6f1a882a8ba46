#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdsr/commands.hpp"
#include "tdsr/errors.hpp"

namespace {

struct Overrides {
    std::string config_path;

    // sampling / inference
    std::optional<int> steps;
    std::optional<uint64_t> seed;
    std::optional<double> w;
    std::optional<double> guidance_scale;
    std::optional<std::string> color;
    std::optional<bool> preclean;
    std::optional<int> tile_size;
    std::optional<int> tile_overlap;
    std::optional<double> tile_sigma;
    std::optional<int> scale;

    // schedule
    std::optional<int> T;
    std::optional<double> beta_start;
    std::optional<double> beta_end;

    // data / paths
    std::optional<std::string> data_dir;
    std::optional<int> data_count;
    std::optional<uint64_t> data_seed;
    std::optional<std::string> checkpoint_dir;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--T", o.T, "diffusion timestep count");
    cmd->add_option("--beta-start", o.beta_start, "schedule beta at t=1");
    cmd->add_option("--beta-end", o.beta_end, "schedule beta at t=T");
    cmd->add_option("--steps", o.steps, "reverse sampling steps");
    cmd->add_option("--seed", o.seed, "sampling seed");
    cmd->add_option("--data-dir", o.data_dir, "dataset directory");
    cmd->add_option("--checkpoint-dir", o.checkpoint_dir, "checkpoint directory");
}

void add_infer_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--w", o.w, "CFW coefficient in [0,1]");
    cmd->add_option("--guidance-scale", o.guidance_scale, "classifier-free guidance scale s");
    cmd->add_option("--color", o.color, "color correction: pixel|wavelet|none");
    cmd->add_flag("--preclean{true},--no-preclean{false}", o.preclean, "pre-cleaning pass");
    cmd->add_option("--tile-size", o.tile_size, "latent tile size");
    cmd->add_option("--tile-overlap", o.tile_overlap, "latent tile overlap");
    cmd->add_option("--tile-sigma", o.tile_sigma, "Gaussian weight sigma");
    cmd->add_option("--scale", o.scale, "bicubic pre-upsample factor");
}

tdsr::RunConfig resolve_config(const Overrides& o) {
    tdsr::RunConfig cfg =
        o.config_path.empty() ? tdsr::RunConfig{} : tdsr::load_config(o.config_path);
    if (o.T) cfg.schedule.T = *o.T;
    if (o.beta_start) cfg.schedule.beta_start = *o.beta_start;
    if (o.beta_end) cfg.schedule.beta_end = *o.beta_end;
    if (o.steps) cfg.sample.steps = *o.steps;
    if (o.seed) cfg.sample.seed = *o.seed;
    if (o.w) cfg.sample.w = *o.w;
    if (o.guidance_scale) cfg.sample.guidance_scale = *o.guidance_scale;
    if (o.color) cfg.sample.color = *o.color;
    if (o.preclean) cfg.sample.preclean = *o.preclean;
    if (o.tile_size) cfg.sample.tile_size = *o.tile_size;
    if (o.tile_overlap) cfg.sample.tile_overlap = *o.tile_overlap;
    if (o.tile_sigma) cfg.sample.tile_sigma = *o.tile_sigma;
    if (o.scale) cfg.sample.scale = *o.scale;
    if (o.data_dir) cfg.data.dir = *o.data_dir;
    if (o.data_count) cfg.data.count = *o.data_count;
    if (o.data_seed) cfg.data.seed = *o.data_seed;
    if (o.checkpoint_dir) cfg.checkpoint_dir = *o.checkpoint_dir;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toy diffusion-prior super-resolution"};
    app.require_subcommand(1);
    Overrides o;

    auto* gen = app.add_subcommand("gen-data", "generate a procedural LR/HR dataset");
    add_common_flags(gen, o);
    gen->add_option("--count", o.data_count, "number of image pairs");
    gen->add_option("--data-seed", o.data_seed, "dataset seed");

    std::string stage;
    auto* train = app.add_subcommand("train", "train one stage");
    add_common_flags(train, o);
    train->add_option("--stage", stage, "autoencoder|prior|encoder|cfw")->required();

    std::string in_png, out_png = "sr.png";
    auto* infer = app.add_subcommand("infer", "super-resolve one PNG");
    add_common_flags(infer, o);
    add_infer_flags(infer, o);
    infer->add_option("input", in_png, "input LR PNG")->required();
    infer->add_option("--out", out_png, "output PNG path");

    std::string eval_csv = "metrics.csv";
    std::vector<double> w_list{0.5};
    std::vector<double> s_list{1.0};
    std::vector<uint64_t> seed_list{0};
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM over a dataset");
    add_common_flags(eval, o);
    add_infer_flags(eval, o);
    eval->add_option("--out", eval_csv, "output CSV path");
    eval->add_option("--w-list", w_list, "CFW coefficients to sweep");
    eval->add_option("--s-list", s_list, "guidance scales to sweep");
    eval->add_option("--seed-list", seed_list, "sampling seeds to sweep");

    std::string probe_csv = "probe.csv";
    int pair_index = 0, num_t = 40;
    auto* probe = app.add_subcommand("probe", "cosine-similarity probe over timesteps");
    add_common_flags(probe, o);
    probe->add_option("--out", probe_csv, "output CSV path");
    probe->add_option("--pair", pair_index, "manifest pair index");
    probe->add_option("--num-t", num_t, "number of probed timesteps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        tdsr::RunConfig cfg = resolve_config(o);
        if (gen->parsed()) tdsr::cmd_gen_data(cfg);
        if (train->parsed()) tdsr::cmd_train(cfg, stage);
        if (infer->parsed()) tdsr::cmd_infer(cfg, in_png, out_png);
        if (eval->parsed())
            tdsr::cmd_eval(cfg, o.data_dir.value_or(cfg.data.dir), eval_csv, w_list, s_list,
                           seed_list);
        if (probe->parsed())
            tdsr::cmd_probe(cfg, o.data_dir.value_or(cfg.data.dir), pair_index, probe_csv, num_t);
        return 0;
    } catch (const tdsr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const tdsr::PrereqError& e) {
        std::fprintf(stderr, "prerequisite error: %s\n", e.what());
        return 3;
    } catch (const tdsr::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
