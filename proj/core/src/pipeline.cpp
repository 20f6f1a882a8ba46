#include "tdsr/pipeline.hpp"

#include <algorithm>
#include <filesystem>

#include "tdsr/checkpoint.hpp"
#include "tdsr/color.hpp"
#include "tdsr/degradation.hpp"
#include "tdsr/errors.hpp"

namespace tdsr {

PriorConfig prior_config(const ArchConfig& a) {
    PriorConfig c;
    c.channels = a.latent_channels;
    c.width1 = a.prior_width1;
    c.width2 = a.prior_width2;
    c.time_dim = a.time_dim;
    return c;
}

EncoderConfig encoder_config(const ArchConfig& a) {
    EncoderConfig c;
    c.channels = a.latent_channels;
    c.width1 = a.enc_width1;
    c.width2 = a.enc_width2;
    c.time_dim = a.time_dim;
    c.prior_width1 = a.prior_width1;
    c.prior_width2 = a.prior_width2;
    return c;
}

AeConfig ae_config(const ArchConfig& a) {
    AeConfig c;
    c.width1 = a.ae_width1;
    c.width2 = a.ae_width2;
    c.latent_channels = a.latent_channels;
    return c;
}

Models::Models(const ArchConfig& arch)
    : prior(prior_config(arch)),
      enc(encoder_config(arch)),
      ae(ae_config(arch)),
      cfw(ae_config(arch)) {}

namespace {

bool try_load(const std::string& path, const std::vector<ParamRef>& refs, bool required,
              const std::string& what) {
    if (!std::filesystem::exists(path)) {
        if (required) throw PrereqError("missing " + what + " checkpoint: " + path);
        return false;
    }
    apply_params(refs, load_checkpoint(path));
    return true;
}

}  // namespace

void load_models(Models& m, const std::string& dir, bool need_ae, bool need_prior, bool need_enc,
                 bool need_cfw) {
    m.has_ae = try_load(dir + "/ae.tdsr", m.ae.params(), need_ae, "autoencoder");
    m.has_prior = try_load(dir + "/prior.tdsr", m.prior.params(), need_prior, "prior");
    m.has_enc = try_load(dir + "/encoder.tdsr", m.enc.params(), need_enc, "encoder");
    m.has_cfw = try_load(dir + "/cfw.tdsr", m.cfw.params(), need_cfw, "cfw");
}

InferOptions infer_options(const RunConfig& cfg) {
    InferOptions o;
    o.steps = cfg.sample.steps;
    o.seed = cfg.sample.seed;
    o.guidance_scale = cfg.sample.guidance_scale;
    o.w = cfg.sample.w;
    o.color = cfg.sample.color;
    o.wavelet_levels = cfg.sample.wavelet_levels;
    o.preclean = cfg.sample.preclean;
    o.tile_size = cfg.sample.tile_size;
    o.tile_overlap = cfg.sample.tile_overlap;
    o.tile_sigma = cfg.sample.tile_sigma;
    o.scale = cfg.sample.scale;
    return o;
}

PatchPredictor make_guided_predictor(Models& m, const GuidanceConfig& guidance) {
    return [&m, guidance](const Tensor& z, const Tensor& cond, int t) {
        const double s = guidance.scale;
        if (s == 1.0)
            return conditioned_forward(m.prior, m.enc, z, cond, t, guidance.unconditioned_id);
        if (s == 0.0)
            return conditioned_forward(m.prior, m.enc, z, cond, t, guidance.conditioned_id);
        const Tensor eps_c =
            conditioned_forward(m.prior, m.enc, z, cond, t, guidance.conditioned_id);
        const Tensor eps_n =
            conditioned_forward(m.prior, m.enc, z, cond, t, guidance.unconditioned_id);
        return cfg_combine(eps_c, eps_n, s);
    };
}

Tensor infer_image(Models& m, const Tensor& lr_input, const InferOptions& opt,
                   const NoiseSchedule& sched) {
    Tensor img = lr_input;
    if (opt.scale > 1) img = resize_bicubic(img, img.h * opt.scale, img.w * opt.scale);
    if (opt.preclean) img = preclean(img);
    if (img.h % 4 != 0 || img.w % 4 != 0)
        throw ConfigError("input dims (after scaling) must be divisible by 4");

    auto [lr_latent, feats] = m.ae.encode(img);

    const int p = std::min({opt.tile_size, lr_latent.h, lr_latent.w});
    const int overlap = std::clamp(opt.tile_overlap, 1, p - 1);
    const PatchLayout layout = plan_patches(lr_latent.h, lr_latent.w, p, overlap);
    const WeightMaps weights = make_weight_maps(layout, opt.tile_sigma);

    GuidanceConfig guidance;
    guidance.scale = opt.guidance_scale;
    const PatchPredictor predictor = make_guided_predictor(m, guidance);

    const Tensor z0 =
        progressive_sample(predictor, lr_latent, layout, weights, sched, opt.steps, opt.seed);

    Tensor out = ae_decode_cfw(m.ae, m.has_cfw ? &m.cfw : nullptr, z0,
                               opt.w > 0.0 ? &feats : nullptr, opt.w);

    if (opt.color == "pixel") return pixel_color_correct(out, img);
    if (opt.color == "wavelet") return wavelet_color_correct(out, img, opt.wavelet_levels);
    return out;
}

}  // namespace tdsr
