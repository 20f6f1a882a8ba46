#include "tdsr/prior.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsr {

std::vector<double> time_embed(int t, int dim) {
    if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("time_embed: dim must be even >= 2");
    if (t < 0) throw std::invalid_argument("time_embed: t must be >= 0");
    const int half = dim / 2;
    std::vector<double> e(dim);
    for (int k = 0; k < half; ++k) {
        const double freq =
            half == 1 ? 1.0 : std::pow(10000.0, -static_cast<double>(k) / (half - 1));
        const double a = t * freq;
        e[k] = std::sin(a);
        e[half + k] = std::cos(a);
    }
    return e;
}

Tensor sft_modulate(const Tensor& f, const Tensor& alpha, const Tensor& beta) {
    require_same_shape(f, alpha, "sft_modulate(alpha)");
    require_same_shape(f, beta, "sft_modulate(beta)");
    Tensor out = Tensor::zeros_like(f);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = (1.0 + alpha.v[i]) * f.v[i] + beta.v[i];
    return out;
}

ResBlock::ResBlock(int ch_, int time_dim)
    : ch(ch_), conv1(ch_, ch_), conv2(ch_, ch_), tproj(time_dim, ch_) {}

void ResBlock::init(Rng& rng) {
    conv1.init_he(rng);
    conv2.init_he(rng);
    tproj.init_he(rng);
}

Tensor ResBlock::forward(const Tensor& x, const std::vector<double>& e) {
    x_in = x;
    Tensor h = conv1.forward(silu(x));
    const std::vector<double> shift = tproj.forward(e);
    for (int c = 0; c < h.c; ++c) {
        double* p = h.plane(c);
        const double s = shift[c];
        for (int n = 0; n < h.h * h.w; ++n) p[n] += s;
    }
    h1 = h;
    Tensor h2 = conv2.forward(silu(h1));
    return add(x, h2);
}

Tensor ResBlock::backward(const Tensor& gy, std::vector<double>& de) {
    Tensor ga2 = conv2.backward(gy);
    Tensor gh1 = silu_backward(h1, ga2);
    std::vector<double> gshift(ch, 0.0);
    for (int c = 0; c < gh1.c; ++c) {
        const double* p = gh1.plane(c);
        double acc = 0.0;
        for (int n = 0; n < gh1.h * gh1.w; ++n) acc += p[n];
        gshift[c] = acc;
    }
    const std::vector<double> ge = tproj.backward(gshift);
    for (size_t i = 0; i < de.size(); ++i) de[i] += ge[i];
    Tensor ga1 = conv1.backward(gh1);
    Tensor gx = silu_backward(x_in, ga1);
    return add(gy, gx);
}

void ResBlock::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".conv1.w", &conv1.W, &conv1.gW});
    out.push_back({prefix + ".conv1.b", &conv1.b, &conv1.gb});
    out.push_back({prefix + ".conv2.w", &conv2.W, &conv2.gW});
    out.push_back({prefix + ".conv2.b", &conv2.b, &conv2.gb});
    out.push_back({prefix + ".tproj.w", &tproj.W, &tproj.gW});
    out.push_back({prefix + ".tproj.b", &tproj.b, &tproj.gb});
}

void ResBlock::zero_grads() {
    conv1.zero_grads();
    conv2.zero_grads();
    tproj.zero_grads();
}

void ResBlock::set_requires_grad(bool rg) {
    conv1.requires_grad = rg;
    conv2.requires_grad = rg;
    tproj.requires_grad = rg;
}

PriorNet::PriorNet(PriorConfig cfg)
    : cfg_(cfg),
      conv_in_(cfg.channels, cfg.width1),
      conv_down_(cfg.width1, cfg.width2),
      conv_up_(cfg.width2, cfg.width1),
      conv_out_(cfg.width1, cfg.channels),
      enc1a_(cfg.width1, cfg.time_dim),
      enc1b_(cfg.width1, cfg.time_dim),
      mid1_(cfg.width2, cfg.time_dim),
      mid2_(cfg.width2, cfg.time_dim),
      dec1a_(cfg.width1, cfg.time_dim),
      dec1b_(cfg.width1, cfg.time_dim) {}

void PriorNet::init(uint64_t seed) {
    Rng rng(seed);
    conv_in_.init_he(rng);
    enc1a_.init(rng);
    enc1b_.init(rng);
    conv_down_.init_he(rng);
    mid1_.init(rng);
    mid2_.init(rng);
    conv_up_.init_he(rng);
    dec1a_.init(rng);
    dec1b_.init(rng);
    if (cfg_.zero_init_out)
        conv_out_.init_zero();
    else
        conv_out_.init_he(rng);
}

void PriorNet::scale_dims(int h, int w, int& h2, int& w2) {
    h2 = h / 2;
    w2 = w / 2;
}

Tensor PriorNet::apply_sft(const Tensor& f, const Tensor& alpha, const Tensor& beta,
                           ModulationTrace* trace) {
    Tensor out = sft_modulate(f, alpha, beta);
    apps_.push_back({&alpha, f});
    if (trace) {
        trace->pre.push_back(f);
        trace->post.push_back(out);
    }
    return out;
}

Tensor PriorNet::forward(const Tensor& z, int t, const SftTensors* mod, ModulationTrace* trace) {
    if (z.c != cfg_.channels) throw std::invalid_argument("PriorNet: latent channel mismatch");
    if (z.h % 2 != 0 || z.w % 2 != 0)
        throw std::invalid_argument("PriorNet: spatial dims must be divisible by 2");

    modulated_ = mod != nullptr;
    apps_.clear();
    emb_ = time_embed(t, cfg_.time_dim);

    Tensor x = conv_in_.forward(z);
    x = enc1a_.forward(x, emb_);
    if (mod) x = apply_sft(x, mod->alpha1, mod->beta1, trace);
    x = enc1b_.forward(x, emb_);
    if (mod) x = apply_sft(x, mod->alpha1, mod->beta1, trace);
    b2m_ = x;

    Tensor d = conv_down_.forward(avgpool2(x));
    d = mid1_.forward(d, emb_);
    if (mod) d = apply_sft(d, mod->alpha2, mod->beta2, trace);
    d = mid2_.forward(d, emb_);
    if (mod) d = apply_sft(d, mod->alpha2, mod->beta2, trace);

    Tensor u = conv_up_.forward(upsample2(d));
    Tensor s = add(u, b2m_);
    s = dec1a_.forward(s, emb_);
    if (mod) s = apply_sft(s, mod->alpha1, mod->beta1, trace);
    s = dec1b_.forward(s, emb_);
    if (mod) s = apply_sft(s, mod->alpha1, mod->beta1, trace);
    b6m_ = s;

    return conv_out_.forward(silu(s));
}

Tensor PriorNet::sft_backward_app(size_t app_index, const Tensor& g, SftGrads& grads,
                                  bool scale1) {
    const SftApp& app = apps_[app_index];
    Tensor gf = Tensor::zeros_like(g);
    Tensor& ga = scale1 ? grads.alpha1 : grads.alpha2;
    Tensor& gb = scale1 ? grads.beta1 : grads.beta2;
    for (size_t i = 0; i < g.v.size(); ++i) {
        gf.v[i] = g.v[i] * (1.0 + app.alpha->v[i]);
        ga.v[i] += g.v[i] * app.f_pre.v[i];
        gb.v[i] += g.v[i];
    }
    return gf;
}

Tensor PriorNet::backward(const Tensor& gy, SftGrads* mod_grads) {
    if (modulated_ != (mod_grads != nullptr))
        throw std::invalid_argument("PriorNet::backward: modulation mismatch with forward");
    std::vector<double> de(cfg_.time_dim, 0.0);  // sinusoidal embedding: discarded

    if (mod_grads) {
        mod_grads->alpha1 = Tensor::zeros_like(*apps_[0].alpha);
        mod_grads->beta1 = Tensor::zeros_like(*apps_[0].alpha);
        mod_grads->alpha2 = Tensor::zeros_like(*apps_[2].alpha);
        mod_grads->beta2 = Tensor::zeros_like(*apps_[2].alpha);
    }

    Tensor g = conv_out_.backward(gy);
    g = silu_backward(b6m_, g);
    if (mod_grads) g = sft_backward_app(5, g, *mod_grads, true);
    g = dec1b_.backward(g, de);
    if (mod_grads) g = sft_backward_app(4, g, *mod_grads, true);
    g = dec1a_.backward(g, de);

    Tensor g_skip = g;  // the skip-add fans out
    Tensor gu = conv_up_.backward(g);
    Tensor gd = upsample2_backward(gu);
    if (mod_grads) gd = sft_backward_app(3, gd, *mod_grads, false);
    gd = mid2_.backward(gd, de);
    if (mod_grads) gd = sft_backward_app(2, gd, *mod_grads, false);
    gd = mid1_.backward(gd, de);
    Tensor gp = conv_down_.backward(gd);
    Tensor gx = add(avgpool2_backward(gp), g_skip);

    if (mod_grads) gx = sft_backward_app(1, gx, *mod_grads, true);
    gx = enc1b_.backward(gx, de);
    if (mod_grads) gx = sft_backward_app(0, gx, *mod_grads, true);
    gx = enc1a_.backward(gx, de);
    return conv_in_.backward(gx);
}

std::vector<ParamRef> PriorNet::params() {
    std::vector<ParamRef> out;
    out.push_back({"prior.conv_in.w", &conv_in_.W, &conv_in_.gW});
    out.push_back({"prior.conv_in.b", &conv_in_.b, &conv_in_.gb});
    enc1a_.collect("prior.enc1a", out);
    enc1b_.collect("prior.enc1b", out);
    out.push_back({"prior.conv_down.w", &conv_down_.W, &conv_down_.gW});
    out.push_back({"prior.conv_down.b", &conv_down_.b, &conv_down_.gb});
    mid1_.collect("prior.mid1", out);
    mid2_.collect("prior.mid2", out);
    out.push_back({"prior.conv_up.w", &conv_up_.W, &conv_up_.gW});
    out.push_back({"prior.conv_up.b", &conv_up_.b, &conv_up_.gb});
    dec1a_.collect("prior.dec1a", out);
    dec1b_.collect("prior.dec1b", out);
    out.push_back({"prior.conv_out.w", &conv_out_.W, &conv_out_.gW});
    out.push_back({"prior.conv_out.b", &conv_out_.b, &conv_out_.gb});
    return out;
}

void PriorNet::zero_grads() {
    conv_in_.zero_grads();
    enc1a_.zero_grads();
    enc1b_.zero_grads();
    conv_down_.zero_grads();
    mid1_.zero_grads();
    mid2_.zero_grads();
    conv_up_.zero_grads();
    dec1a_.zero_grads();
    dec1b_.zero_grads();
    conv_out_.zero_grads();
}

void PriorNet::set_requires_grad(bool rg) {
    conv_in_.requires_grad = rg;
    enc1a_.set_requires_grad(rg);
    enc1b_.set_requires_grad(rg);
    conv_down_.requires_grad = rg;
    mid1_.set_requires_grad(rg);
    mid2_.set_requires_grad(rg);
    conv_up_.requires_grad = rg;
    dec1a_.set_requires_grad(rg);
    dec1b_.set_requires_grad(rg);
    conv_out_.requires_grad = rg;
}

ModelParams train_prior(PriorNet& net, const std::set<std::string>& frozen,
                        const std::vector<Tensor>& hr_latents, const NoiseSchedule& sched,
                        const TrainConfig& tc) {
    if (hr_latents.empty()) throw std::invalid_argument("train_prior: empty dataset");
    auto refs = net.params();
    Adam adam(tc.adam);
    DivergenceGuard guard;
    Rng rng(tc.seed);

    for (int step = 1; step <= tc.steps; ++step) {
        net.zero_grads();
        double loss_sum = 0.0;
        for (int b = 0; b < tc.batch; ++b) {
            const Tensor& x0 = hr_latents[rng.below(hr_latents.size())];
            const int t = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(sched.T)));
            const Tensor eps = rng.normal_tensor(x0.h, x0.w, x0.c);
            const Tensor z_t = q_sample(x0, t, eps, sched);
            const Tensor pred = net.forward(z_t, t);
            Tensor gl = Tensor::zeros_like(pred);
            const double inv_n = 1.0 / static_cast<double>(pred.size());
            double loss = 0.0;
            for (size_t i = 0; i < pred.v.size(); ++i) {
                const double d = pred.v[i] - eps.v[i];
                loss += d * d * inv_n;
                gl.v[i] = 2.0 * d * inv_n;
            }
            loss_sum += loss;
            net.backward(gl);
        }
        const double loss = loss_sum / tc.batch;
        guard.observe(loss);
        adam.step(refs, frozen, 1.0 / tc.batch);
        if (tc.on_step) tc.on_step(step, loss);
    }

    ModelParams out = collect_params(refs);
    out.frozen = frozen;
    return out;
}

}  // namespace tdsr
