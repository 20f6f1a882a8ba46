#include "tdsr/autoencoder.hpp"

#include <cmath>
#include <stdexcept>

#include "tdsr/encoder.hpp"

namespace tdsr {

CfwModule::CfwModule(const AeConfig& cfg)
    : s1_conv1_(cfg.width2 + cfg.width2, cfg.width2),
      s1_conv2_(cfg.width2, cfg.width2),
      s2_conv1_(cfg.width2 + cfg.width1, cfg.width1),
      s2_conv2_(cfg.width1, cfg.width1),
      e1_ch_(cfg.width2),
      e2_ch_(cfg.width2) {}

void CfwModule::init(uint64_t seed) {
    Rng rng(seed);
    s1_conv1_.init_he(rng);
    s1_conv2_.init_zero();  // training starts at identity decoding
    s2_conv1_.init_he(rng);
    s2_conv2_.init_zero();
}

Tensor CfwModule::inject(int scale_id, const Tensor& f_e, const Tensor& f_d, double w) {
    if (f_e.h != f_d.h || f_e.w != f_d.w)
        throw std::invalid_argument("CfwModule: encoder/decoder feature dims mismatch");
    Conv3x3& ca = scale_id == 1 ? s1_conv1_ : s2_conv1_;
    Conv3x3& cb = scale_id == 1 ? s1_conv2_ : s2_conv2_;
    Tensor& mid_pre = scale_id == 1 ? mid1_pre_ : mid2_pre_;
    mid_pre = ca.forward(concat_channels(f_e, f_d));
    const Tensor delta = cb.forward(silu(mid_pre));
    return axpy(f_d, w, delta);
}

Tensor CfwModule::inject_backward(int scale_id, const Tensor& g, double w) {
    Conv3x3& ca = scale_id == 1 ? s1_conv1_ : s2_conv1_;
    Conv3x3& cb = scale_id == 1 ? s1_conv2_ : s2_conv2_;
    Tensor& mid_pre = scale_id == 1 ? mid1_pre_ : mid2_pre_;
    const int e_ch = scale_id == 1 ? e1_ch_ : e2_ch_;
    Tensor gdelta = scale(g, w);
    Tensor gmid = silu_backward(mid_pre, cb.backward(gdelta));
    Tensor gcat = ca.backward(gmid);
    Tensor ge, gfd;
    split_channels(gcat, e_ch, ge, gfd);  // ge: frozen encoder context, dropped
    return add(g, gfd);
}

std::vector<ParamRef> CfwModule::params() {
    std::vector<ParamRef> out;
    out.push_back({"cfw.s1.conv1.w", &s1_conv1_.W, &s1_conv1_.gW});
    out.push_back({"cfw.s1.conv1.b", &s1_conv1_.b, &s1_conv1_.gb});
    out.push_back({"cfw.s1.conv2.w", &s1_conv2_.W, &s1_conv2_.gW});
    out.push_back({"cfw.s1.conv2.b", &s1_conv2_.b, &s1_conv2_.gb});
    out.push_back({"cfw.s2.conv1.w", &s2_conv1_.W, &s2_conv1_.gW});
    out.push_back({"cfw.s2.conv1.b", &s2_conv1_.b, &s2_conv1_.gb});
    out.push_back({"cfw.s2.conv2.w", &s2_conv2_.W, &s2_conv2_.gW});
    out.push_back({"cfw.s2.conv2.b", &s2_conv2_.b, &s2_conv2_.gb});
    return out;
}

void CfwModule::zero_grads() {
    s1_conv1_.zero_grads();
    s1_conv2_.zero_grads();
    s2_conv1_.zero_grads();
    s2_conv2_.zero_grads();
}

void CfwModule::set_requires_grad(bool rg) {
    s1_conv1_.requires_grad = rg;
    s1_conv2_.requires_grad = rg;
    s2_conv1_.requires_grad = rg;
    s2_conv2_.requires_grad = rg;
}

Autoencoder::Autoencoder(AeConfig cfg)
    : cfg_(cfg),
      e1_(cfg.in_channels, cfg.width1),
      e2_(cfg.width1, cfg.width2),
      e3_(cfg.width2, cfg.latent_channels),
      d1_(cfg.latent_channels, cfg.width2),
      d2_(cfg.width2, cfg.width1),
      d3_(cfg.width1, cfg.in_channels) {}

void Autoencoder::init(uint64_t seed) {
    Rng rng(seed);
    e1_.init_he(rng);
    e2_.init_he(rng);
    e3_.init_he(rng);
    d1_.init_he(rng);
    d2_.init_he(rng);
    d3_.init_he(rng);
}

std::pair<Tensor, EncoderFeatures> Autoencoder::encode(const Tensor& img) {
    if (img.c != cfg_.in_channels) throw std::invalid_argument("Autoencoder: channel mismatch");
    if (img.h % 4 != 0 || img.w % 4 != 0)
        throw std::invalid_argument("Autoencoder: image dims must be divisible by 4");
    t1p_ = e1_.forward(img);
    Tensor p1 = avgpool2(silu(t1p_));
    t2p_ = e2_.forward(p1);
    Tensor t2 = silu(t2p_);
    EncoderFeatures feats;
    feats.e2 = t2;
    Tensor p2 = avgpool2(t2);
    feats.e1 = p2;
    Tensor z = e3_.forward(p2);
    return {z, feats};
}

Tensor Autoencoder::encode_backward(const Tensor& gz) {
    Tensor gp2 = e3_.backward(gz);
    Tensor gt2 = avgpool2_backward(gp2);
    Tensor gp1 = e2_.backward(silu_backward(t2p_, gt2));
    Tensor gt1 = avgpool2_backward(gp1);
    return e1_.backward(silu_backward(t1p_, gt1));
}

Tensor Autoencoder::decode(const Tensor& z, CfwModule* cfw, const EncoderFeatures* features,
                           double w, DecodeTrace* trace, bool clamp) {
    if (z.c != cfg_.latent_channels) throw std::invalid_argument("decode: latent channel mismatch");
    w = std::clamp(w, 0.0, 1.0);
    const bool use_cfw = w > 0.0;
    if (use_cfw && features == nullptr)
        throw std::invalid_argument("decode: encoder features required when w > 0");
    if (use_cfw && cfw == nullptr)
        throw std::invalid_argument("decode: CFW module required when w > 0");
    decoded_with_cfw_ = use_cfw;

    d1p_ = d1_.forward(z);
    Tensor d1 = silu(d1p_);
    if (trace) trace->f_d.push_back(d1);
    if (use_cfw) d1 = cfw->inject(1, features->e1, d1, w);
    if (trace) trace->f_m.push_back(d1);

    d2p_ = d2_.forward(upsample2(d1));
    Tensor d2 = silu(d2p_);
    if (trace) trace->f_d.push_back(d2);
    if (use_cfw) d2 = cfw->inject(2, features->e2, d2, w);
    if (trace) trace->f_m.push_back(d2);

    Tensor out = d3_.forward(upsample2(d2));
    return clamp ? clamp01(out) : out;
}

Tensor Autoencoder::decode_backward(const Tensor& g_unclamped, CfwModule* cfw, double w) {
    w = std::clamp(w, 0.0, 1.0);
    if (decoded_with_cfw_ && cfw == nullptr)
        throw std::invalid_argument("decode_backward: CFW module required");
    Tensor g = upsample2_backward(d3_.backward(g_unclamped));
    if (decoded_with_cfw_) g = cfw->inject_backward(2, g, w);
    g = silu_backward(d2p_, g);
    g = upsample2_backward(d2_.backward(g));
    if (decoded_with_cfw_) g = cfw->inject_backward(1, g, w);
    g = silu_backward(d1p_, g);
    return d1_.backward(g);
}

std::vector<ParamRef> Autoencoder::params() {
    std::vector<ParamRef> out;
    out.push_back({"ae.e1.w", &e1_.W, &e1_.gW});
    out.push_back({"ae.e1.b", &e1_.b, &e1_.gb});
    out.push_back({"ae.e2.w", &e2_.W, &e2_.gW});
    out.push_back({"ae.e2.b", &e2_.b, &e2_.gb});
    out.push_back({"ae.e3.w", &e3_.W, &e3_.gW});
    out.push_back({"ae.e3.b", &e3_.b, &e3_.gb});
    out.push_back({"ae.d1.w", &d1_.W, &d1_.gW});
    out.push_back({"ae.d1.b", &d1_.b, &d1_.gb});
    out.push_back({"ae.d2.w", &d2_.W, &d2_.gW});
    out.push_back({"ae.d2.b", &d2_.b, &d2_.gb});
    out.push_back({"ae.d3.w", &d3_.W, &d3_.gW});
    out.push_back({"ae.d3.b", &d3_.b, &d3_.gb});
    return out;
}

void Autoencoder::zero_grads() {
    e1_.zero_grads();
    e2_.zero_grads();
    e3_.zero_grads();
    d1_.zero_grads();
    d2_.zero_grads();
    d3_.zero_grads();
}

void Autoencoder::set_requires_grad(bool rg) {
    e1_.requires_grad = rg;
    e2_.requires_grad = rg;
    e3_.requires_grad = rg;
    d1_.requires_grad = rg;
    d2_.requires_grad = rg;
    d3_.requires_grad = rg;
}

std::pair<Tensor, EncoderFeatures> ae_encode(Autoencoder& ae, const Tensor& img) {
    return ae.encode(img);
}

Tensor ae_decode_cfw(Autoencoder& ae, CfwModule* cfw, const Tensor& z,
                     const EncoderFeatures* features, double w, DecodeTrace* trace) {
    return ae.decode(z, cfw, features, w, trace, true);
}

ModelParams train_autoencoder(Autoencoder& ae, const std::vector<Tensor>& hr_images,
                              const TrainConfig& tc) {
    if (hr_images.empty()) throw std::invalid_argument("train_autoencoder: empty dataset");
    auto refs = ae.params();
    Adam adam(tc.adam);
    DivergenceGuard guard;
    Rng rng(tc.seed);

    for (int step = 1; step <= tc.steps; ++step) {
        ae.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < tc.batch; ++b) {
            const Tensor& img = hr_images[rng.below(hr_images.size())];
            auto [z, feats] = ae.encode(img);
            (void)feats;
            const Tensor rec = ae.decode(z, nullptr, nullptr, 0.0, nullptr, false);
            Tensor gl = Tensor::zeros_like(rec);
            const double inv_n = 1.0 / static_cast<double>(rec.size());
            double loss = 0.0;
            for (size_t i = 0; i < rec.v.size(); ++i) {
                const double d = rec.v[i] - img.v[i];
                loss += d * d * inv_n;
                gl.v[i] = 2.0 * d * inv_n;
            }
            loss_sum += loss;
            ae.encode_backward(ae.decode_backward(gl, nullptr, 0.0));
        }
        const double loss = loss_sum / tc.batch;
        guard.observe(loss);
        adam.step(refs, {}, 1.0 / tc.batch);
        if (tc.on_step) tc.on_step(step, loss);
    }
    return collect_params(refs);
}

ModelParams train_cfw(Autoencoder& ae, CfwModule& cfw, PriorNet& prior, EncoderNet& enc,
                      const std::vector<std::pair<Tensor, Tensor>>& lr_hr_images,
                      const NoiseSchedule& sched, const CfwTrainConfig& cc) {
    if (lr_hr_images.empty()) throw std::invalid_argument("train_cfw: empty dataset");

    // Z_0 latents from the frozen conditioned sampler, one per pair.
    struct Sample {
        Tensor z0;
        EncoderFeatures feats;
        const Tensor* hr;
    };
    std::vector<Sample> samples;
    samples.reserve(lr_hr_images.size());
    for (size_t i = 0; i < lr_hr_images.size(); ++i) {
        const auto& [lr, hr] = lr_hr_images[i];
        auto [lr_latent, feats] = ae.encode(lr);
        NoisePredictor pred = [&prior, &enc, &lr_latent](const Tensor& z, int t) {
            return conditioned_forward(prior, enc, z, lr_latent, t, 0);
        };
        Tensor z0 = sample(pred, sched, cc.sample_steps, mix_seed(cc.sample_seed, i), lr_latent.h,
                           lr_latent.w, lr_latent.c);
        samples.push_back({std::move(z0), std::move(feats), &hr});
    }

    auto cfw_refs = cfw.params();
    ae.set_requires_grad(false);
    Adam adam(cc.train.adam);
    DivergenceGuard guard;
    Rng rng(cc.train.seed);

    for (int step = 1; step <= cc.train.steps; ++step) {
        cfw.zero_grads();
        ae.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < cc.train.batch; ++b) {
            const Sample& s = samples[rng.below(samples.size())];
            const Tensor rec = ae.decode(s.z0, &cfw, &s.feats, cc.w, nullptr, false);
            Tensor gl = Tensor::zeros_like(rec);
            const double inv_n = 1.0 / static_cast<double>(rec.size());
            double loss = 0.0;
            for (size_t i = 0; i < rec.v.size(); ++i) {
                const double d = rec.v[i] - s.hr->v[i];
                loss += (std::fabs(d) + d * d) * inv_n;
                gl.v[i] = ((d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) + 2.0 * d) * inv_n;
            }
            loss_sum += loss;
            ae.decode_backward(gl, &cfw, cc.w);
        }
        const double loss = loss_sum / cc.train.batch;
        guard.observe(loss);
        adam.step(cfw_refs, {}, 1.0 / cc.train.batch);
        if (cc.train.on_step) cc.train.on_step(step, loss);
    }

    ae.set_requires_grad(true);
    return collect_params(cfw_refs);
}

}  // namespace tdsr
