#include "tdsr/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsr {

EncoderNet::EncoderNet(EncoderConfig cfg)
    : cfg_(cfg),
      conv_in_(cfg.channels, cfg.width1),
      conv_down_(cfg.width1, cfg.width2),
      rb1a_(cfg.width1, cfg.time_dim),
      rb1b_(cfg.width1, cfg.time_dim),
      rb2a_(cfg.width2, cfg.time_dim),
      rb2b_(cfg.width2, cfg.time_dim),
      head1_conv1_(cfg.width1, cfg.prior_width1),
      head1_conv2_(cfg.prior_width1, 2 * cfg.prior_width1),
      head2_conv1_(cfg.width2, cfg.prior_width2),
      head2_conv2_(cfg.prior_width2, 2 * cfg.prior_width2),
      cond_table_({static_cast<uint32_t>(cfg.cond_count), static_cast<uint32_t>(cfg.time_dim)}),
      g_cond_table_(cond_table_.dims) {}

void EncoderNet::init(uint64_t seed) {
    Rng rng(seed);
    conv_in_.init_he(rng);
    rb1a_.init(rng);
    rb1b_.init(rng);
    conv_down_.init_he(rng);
    rb2a_.init(rng);
    rb2b_.init(rng);
    head1_conv1_.init_he(rng);
    head1_conv2_.init_zero();  // fresh SFT heads emit alpha = beta = 0
    head2_conv1_.init_he(rng);
    head2_conv2_.init_zero();
    for (double& x : cond_table_.v) x = 0.02 * rng.normal();
}

std::pair<MultiScaleFeatures, SftTensors> EncoderNet::forward(const Tensor& lr_latent, int t,
                                                              int cond_id) {
    if (lr_latent.c != cfg_.channels)
        throw std::invalid_argument("EncoderNet: latent channel mismatch");
    if (cond_id < 0 || cond_id >= cfg_.cond_count)
        throw std::invalid_argument("EncoderNet: unknown condition id");
    cond_id_used_ = cond_id;

    std::vector<double> e = time_embed(cfg_.time_aware ? t : 0, cfg_.time_dim);
    const double* row = cond_table_.v.data() + static_cast<size_t>(cond_id) * cfg_.time_dim;
    for (int i = 0; i < cfg_.time_dim; ++i) e[i] += row[i];

    Tensor x = conv_in_.forward(lr_latent);
    x = rb1a_.forward(x, e);
    x = rb1b_.forward(x, e);
    MultiScaleFeatures feats;
    feats.f1 = x;

    Tensor y = conv_down_.forward(avgpool2(x));
    y = rb2a_.forward(y, e);
    y = rb2b_.forward(y, e);
    feats.f2 = y;

    h1_pre_ = head1_conv1_.forward(feats.f1);
    Tensor h1 = head1_conv2_.forward(silu(h1_pre_));
    h2_pre_ = head2_conv1_.forward(feats.f2);
    Tensor h2 = head2_conv2_.forward(silu(h2_pre_));

    SftTensors sft;
    split_channels(h1, cfg_.prior_width1, sft.alpha1, sft.beta1);
    split_channels(h2, cfg_.prior_width2, sft.alpha2, sft.beta2);
    return {feats, sft};
}

void EncoderNet::backward(const SftGrads& g) {
    std::vector<double> de(cfg_.time_dim, 0.0);

    Tensor gh1 = concat_channels(g.alpha1, g.beta1);
    Tensor gm1 = head1_conv2_.backward(gh1);
    Tensor gf1_head = head1_conv1_.backward(silu_backward(h1_pre_, gm1));

    Tensor gh2 = concat_channels(g.alpha2, g.beta2);
    Tensor gm2 = head2_conv2_.backward(gh2);
    Tensor gf2 = head2_conv1_.backward(silu_backward(h2_pre_, gm2));

    gf2 = rb2b_.backward(gf2, de);
    gf2 = rb2a_.backward(gf2, de);
    Tensor gp = conv_down_.backward(gf2);
    Tensor gf1 = add(gf1_head, avgpool2_backward(gp));

    gf1 = rb1b_.backward(gf1, de);
    gf1 = rb1a_.backward(gf1, de);
    conv_in_.backward(gf1);

    if (cond_requires_grad_) {
        double* grow = g_cond_table_.v.data() + static_cast<size_t>(cond_id_used_) * cfg_.time_dim;
        for (int i = 0; i < cfg_.time_dim; ++i) grow[i] += de[i];
    }
}

std::vector<ParamRef> EncoderNet::params() {
    std::vector<ParamRef> out;
    out.push_back({"enc.conv_in.w", &conv_in_.W, &conv_in_.gW});
    out.push_back({"enc.conv_in.b", &conv_in_.b, &conv_in_.gb});
    rb1a_.collect("enc.rb1a", out);
    rb1b_.collect("enc.rb1b", out);
    out.push_back({"enc.conv_down.w", &conv_down_.W, &conv_down_.gW});
    out.push_back({"enc.conv_down.b", &conv_down_.b, &conv_down_.gb});
    rb2a_.collect("enc.rb2a", out);
    rb2b_.collect("enc.rb2b", out);
    out.push_back({"enc.head1.conv1.w", &head1_conv1_.W, &head1_conv1_.gW});
    out.push_back({"enc.head1.conv1.b", &head1_conv1_.b, &head1_conv1_.gb});
    out.push_back({"enc.head1.conv2.w", &head1_conv2_.W, &head1_conv2_.gW});
    out.push_back({"enc.head1.conv2.b", &head1_conv2_.b, &head1_conv2_.gb});
    out.push_back({"enc.head2.conv1.w", &head2_conv1_.W, &head2_conv1_.gW});
    out.push_back({"enc.head2.conv1.b", &head2_conv1_.b, &head2_conv1_.gb});
    out.push_back({"enc.head2.conv2.w", &head2_conv2_.W, &head2_conv2_.gW});
    out.push_back({"enc.head2.conv2.b", &head2_conv2_.b, &head2_conv2_.gb});
    out.push_back({"enc.cond_table", &cond_table_, &g_cond_table_});
    return out;
}

void EncoderNet::zero_grads() {
    conv_in_.zero_grads();
    rb1a_.zero_grads();
    rb1b_.zero_grads();
    conv_down_.zero_grads();
    rb2a_.zero_grads();
    rb2b_.zero_grads();
    head1_conv1_.zero_grads();
    head1_conv2_.zero_grads();
    head2_conv1_.zero_grads();
    head2_conv2_.zero_grads();
    g_cond_table_.zero();
}

void EncoderNet::set_requires_grad(bool rg) {
    conv_in_.requires_grad = rg;
    rb1a_.set_requires_grad(rg);
    rb1b_.set_requires_grad(rg);
    conv_down_.requires_grad = rg;
    rb2a_.set_requires_grad(rg);
    rb2b_.set_requires_grad(rg);
    head1_conv1_.requires_grad = rg;
    head1_conv2_.requires_grad = rg;
    head2_conv1_.requires_grad = rg;
    head2_conv2_.requires_grad = rg;
    cond_requires_grad_ = rg;
}

Tensor conditioned_forward(PriorNet& prior, EncoderNet& enc, const Tensor& z_t,
                           const Tensor& lr_latent, int t, int cond_id, ModulationTrace* trace) {
    require_same_shape(z_t, lr_latent, "conditioned_forward");
    auto [feats, sft] = enc.forward(lr_latent, t, cond_id);
    (void)feats;
    return prior.forward(z_t, t, &sft, trace);
}

Tensor ConditionedPass::forward(PriorNet& prior, EncoderNet& enc, const Tensor& z_t,
                                const Tensor& lr_latent, int t, int cond_id) {
    require_same_shape(z_t, lr_latent, "ConditionedPass");
    auto [f, s] = enc.forward(lr_latent, t, cond_id);
    feats = std::move(f);
    sft = std::move(s);
    return prior.forward(z_t, t, &sft);
}

void ConditionedPass::backward(PriorNet& prior, EncoderNet& enc, const Tensor& gy) {
    SftGrads sg;
    prior.backward(gy, &sg);
    enc.backward(sg);
}

ModelParams finetune_encoder(PriorNet& prior, EncoderNet& enc,
                             const std::vector<std::pair<Tensor, Tensor>>& lr_hr_latents,
                             const NoiseSchedule& sched, const TrainConfig& tc) {
    if (lr_hr_latents.empty()) throw std::invalid_argument("finetune_encoder: empty dataset");
    auto enc_refs = enc.params();
    prior.set_requires_grad(false);  // gradients flow through, prior params untouched
    Adam adam(tc.adam);
    DivergenceGuard guard;
    Rng rng(tc.seed);
    ConditionedPass pass;

    for (int step = 1; step <= tc.steps; ++step) {
        enc.zero_grads();
        prior.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < tc.batch; ++b) {
            const auto& [lr_latent, hr_latent] = lr_hr_latents[rng.below(lr_hr_latents.size())];
            const int t = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(sched.T)));
            const Tensor eps = rng.normal_tensor(hr_latent.h, hr_latent.w, hr_latent.c);
            const Tensor z_t = q_sample(hr_latent, t, eps, sched);
            const Tensor pred = pass.forward(prior, enc, z_t, lr_latent, t, 0);
            Tensor gl = Tensor::zeros_like(pred);
            const double inv_n = 1.0 / static_cast<double>(pred.size());
            double loss = 0.0;
            for (size_t i = 0; i < pred.v.size(); ++i) {
                const double d = pred.v[i] - eps.v[i];
                loss += d * d * inv_n;
                gl.v[i] = 2.0 * d * inv_n;
            }
            loss_sum += loss;
            pass.backward(prior, enc, gl);
        }
        const double loss = loss_sum / tc.batch;
        guard.observe(loss);
        adam.step(enc_refs, {}, 1.0 / tc.batch);
        if (tc.on_step) tc.on_step(step, loss);
    }

    prior.set_requires_grad(true);
    ModelParams out = collect_params(enc_refs);
    return out;
}

std::vector<ProbePoint> cosine_probe(PriorNet& prior, EncoderNet& enc, const Tensor& hr_latent,
                                     const Tensor& lr_latent, const NoiseSchedule& sched,
                                     const std::vector<int>& t_list, uint64_t seed) {
    std::vector<ProbePoint> out;
    out.reserve(t_list.size());
    Rng rng(seed);
    for (int t : t_list) {
        const Tensor eps = rng.normal_tensor(hr_latent.h, hr_latent.w, hr_latent.c);
        const Tensor z_t = q_sample(hr_latent, t, eps, sched);
        ModulationTrace trace;
        conditioned_forward(prior, enc, z_t, lr_latent, t, 0, &trace);
        double mean_cos = 0.0;
        for (size_t a = 0; a < trace.pre.size(); ++a) {
            const Tensor& p = trace.pre[a];
            const Tensor& q = trace.post[a];
            double dot = 0.0, np = 0.0, nq = 0.0;
            for (size_t i = 0; i < p.v.size(); ++i) {
                dot += p.v[i] * q.v[i];
                np += p.v[i] * p.v[i];
                nq += q.v[i] * q.v[i];
            }
            const double denom = std::sqrt(np) * std::sqrt(nq);
            double c = denom > 0.0 ? dot / denom : 1.0;
            c = std::clamp(c, -1.0, 1.0);
            mean_cos += c;
        }
        mean_cos /= trace.pre.empty() ? 1.0 : static_cast<double>(trace.pre.size());
        out.push_back({t, snr(sched, t), mean_cos});
    }
    return out;
}

}  // namespace tdsr
