#include "tdsr/commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tdsr/checkpoint.hpp"
#include "tdsr/dataset.hpp"
#include "tdsr/errors.hpp"
#include "tdsr/metrics.hpp"
#include "tdsr/pipeline.hpp"
#include "tdsr/png_io.hpp"

namespace tdsr {

namespace {

std::ofstream open_loss_csv(const std::string& dir, const std::string& stage) {
    std::filesystem::create_directories(dir);
    std::ofstream f(dir + "/loss_" + stage + ".csv", std::ios::trunc);
    if (!f) throw IoError("cannot write loss CSV in " + dir);
    f << "step,loss\n";
    f.precision(17);
    return f;
}

void print_frozen_hash(const char* stage, const char* what, uint64_t before, uint64_t after) {
    std::printf("[train:%s] frozen[%s] before=%016" PRIx64 " after=%016" PRIx64 "%s\n", stage,
                what, before, after, before == after ? "" : "  MISMATCH");
}

std::vector<std::pair<Tensor, Tensor>> load_dataset_pairs(const RunConfig& cfg) {
    const Manifest m = read_manifest(cfg.data.dir + "/manifest.json");
    return load_pairs(cfg.data.dir, m);
}

NoiseSchedule schedule_of(const RunConfig& cfg) {
    return make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end);
}

TrainConfig to_train_config(const StageConfig& s, std::ofstream& csv) {
    TrainConfig tc;
    tc.adam.lr = s.lr;
    tc.steps = s.steps;
    tc.batch = s.batch;
    tc.seed = s.seed;
    tc.on_step = [&csv](int step, double loss) { csv << step << "," << loss << "\n"; };
    return tc;
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg) {
    const Manifest m = generate_dataset(cfg.data);
    double lo = 1e9, hi = -1e9;
    for (const auto& p : m.pairs) {
        lo = std::min(lo, p.psnr_lr);
        hi = std::max(hi, p.psnr_lr);
    }
    std::printf("[gen-data] wrote %d pairs to %s (input PSNR %.2f..%.2f dB)\n", m.count,
                cfg.data.dir.c_str(), lo, hi);
}

void cmd_train(const RunConfig& cfg, const std::string& stage) {
    const NoiseSchedule sched = schedule_of(cfg);
    const auto pairs = load_dataset_pairs(cfg);
    Models models(cfg.arch);
    const std::string dir = cfg.checkpoint_dir;

    if (stage == "autoencoder") {
        std::vector<Tensor> hr;
        hr.reserve(pairs.size());
        for (const auto& p : pairs) hr.push_back(p.second);
        models.ae.init(mix_seed(cfg.train_autoencoder.seed, 0xae));
        auto csv = open_loss_csv(dir, stage);
        const ModelParams out =
            train_autoencoder(models.ae, hr, to_train_config(cfg.train_autoencoder, csv));
        save_checkpoint(dir + "/ae.tdsr", out);
        std::printf("[train:autoencoder] saved %s/ae.tdsr\n", dir.c_str());
        return;
    }

    if (stage == "prior") {
        load_models(models, dir, true, false, false, false);
        const ModelParams ae_before = collect_params(models.ae.params());
        std::vector<Tensor> latents;
        latents.reserve(pairs.size());
        for (const auto& p : pairs) latents.push_back(models.ae.encode(p.second).first);
        models.prior.init(mix_seed(cfg.train_prior.seed, 0x9e10));
        auto csv = open_loss_csv(dir, stage);
        const ModelParams out =
            train_prior(models.prior, {}, latents, sched, to_train_config(cfg.train_prior, csv));
        save_checkpoint(dir + "/prior.tdsr", out);
        print_frozen_hash("prior", "ae", params_hash(ae_before),
                          params_hash(collect_params(models.ae.params())));
        std::printf("[train:prior] saved %s/prior.tdsr\n", dir.c_str());
        return;
    }

    if (stage == "encoder") {
        load_models(models, dir, true, true, false, false);
        const ModelParams prior_before = collect_params(models.prior.params());
        std::vector<std::pair<Tensor, Tensor>> latent_pairs;
        latent_pairs.reserve(pairs.size());
        for (const auto& p : pairs)
            latent_pairs.emplace_back(models.ae.encode(p.first).first,
                                      models.ae.encode(p.second).first);
        models.enc.init(mix_seed(cfg.train_encoder.seed, 0xe4c0));
        auto csv = open_loss_csv(dir, stage);
        const ModelParams out = finetune_encoder(models.prior, models.enc, latent_pairs, sched,
                                                 to_train_config(cfg.train_encoder, csv));
        save_checkpoint(dir + "/encoder.tdsr", out);
        print_frozen_hash("encoder", "prior", params_hash(prior_before),
                          params_hash(collect_params(models.prior.params())));
        std::printf("[train:encoder] saved %s/encoder.tdsr\n", dir.c_str());
        return;
    }

    if (stage == "cfw") {
        load_models(models, dir, true, true, true, false);
        const ModelParams frozen_before = collect_params(models.ae.params());
        const ModelParams prior_before = collect_params(models.prior.params());
        models.cfw.init(mix_seed(cfg.train_cfw.train.seed, 0xcf));
        auto csv = open_loss_csv(dir, stage);
        CfwTrainConfig cc;
        cc.train = to_train_config(cfg.train_cfw.train, csv);
        cc.sample_steps = cfg.train_cfw.sample_steps;
        cc.sample_seed = cfg.train_cfw.sample_seed;
        cc.w = cfg.train_cfw.w;
        const ModelParams out =
            train_cfw(models.ae, models.cfw, models.prior, models.enc, pairs, sched, cc);
        save_checkpoint(dir + "/cfw.tdsr", out);
        print_frozen_hash("cfw", "ae", params_hash(frozen_before),
                          params_hash(collect_params(models.ae.params())));
        print_frozen_hash("cfw", "prior", params_hash(prior_before),
                          params_hash(collect_params(models.prior.params())));
        std::printf("[train:cfw] saved %s/cfw.tdsr\n", dir.c_str());
        return;
    }

    throw ConfigError("unknown training stage '" + stage +
                      "' (expected autoencoder|prior|encoder|cfw)");
}

void cmd_infer(const RunConfig& cfg, const std::string& input_png, const std::string& output_png) {
    Models models(cfg.arch);
    load_models(models, cfg.checkpoint_dir, true, true, true, cfg.sample.w > 0.0);
    const Tensor lr = load_png(input_png);
    const Tensor out = infer_image(models, lr, infer_options(cfg), schedule_of(cfg));
    save_png(output_png, out);
    std::printf("[infer] %s -> %s (%dx%d)\n", input_png.c_str(), output_png.c_str(), out.w, out.h);
}

void cmd_eval(const RunConfig& cfg, const std::string& data_dir, const std::string& out_csv,
              const std::vector<double>& w_list, const std::vector<double>& s_list,
              const std::vector<uint64_t>& seeds) {
    if (w_list.empty() || s_list.empty() || seeds.empty())
        throw ConfigError("eval: need at least one w, s and seed");
    for (double w : w_list)
        if (w < 0.0 || w > 1.0) throw ConfigError("eval: w values must be in [0, 1]");
    for (double s : s_list)
        if (s < 0.0) throw ConfigError("eval: guidance scales must be >= 0");

    bool need_cfw = false;
    for (double w : w_list) need_cfw |= w > 0.0;
    Models models(cfg.arch);
    load_models(models, cfg.checkpoint_dir, true, true, true, need_cfw);

    const Manifest m = read_manifest(data_dir + "/manifest.json");
    const auto pairs = load_pairs(data_dir, m);
    const NoiseSchedule sched = schedule_of(cfg);

    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out_csv);
    f << "pair,w,s,seed,psnr,ssim\n";
    f.precision(10);

    InferOptions base = infer_options(cfg);
    for (uint64_t seed : seeds) {
        for (double w : w_list) {
            for (double s : s_list) {
                InferOptions opt = base;
                opt.w = w;
                opt.guidance_scale = s;
                double sum_psnr = 0.0, sum_ssim = 0.0;
                for (size_t i = 0; i < pairs.size(); ++i) {
                    opt.seed = mix_seed(seed, i);
                    const Tensor sr = infer_image(models, pairs[i].first, opt, sched);
                    const double pv = psnr(sr, pairs[i].second);
                    const double sv = ssim(sr, pairs[i].second);
                    sum_psnr += pv;
                    sum_ssim += sv;
                    f << i << "," << w << "," << s << "," << seed << "," << pv << "," << sv
                      << "\n";
                }
                f << "aggregate," << w << "," << s << "," << seed << ","
                  << sum_psnr / pairs.size() << "," << sum_ssim / pairs.size() << "\n";
            }
        }
    }
    std::printf("[eval] wrote %s\n", out_csv.c_str());
}

void cmd_probe(const RunConfig& cfg, const std::string& data_dir, int pair_index,
               const std::string& out_csv, int num_t) {
    if (num_t < 2) throw ConfigError("probe: num_t must be >= 2");
    Models models(cfg.arch);
    load_models(models, cfg.checkpoint_dir, true, true, true, false);

    const Manifest m = read_manifest(data_dir + "/manifest.json");
    if (pair_index < 0 || pair_index >= static_cast<int>(m.pairs.size()))
        throw ConfigError("probe: pair index out of range");
    const Tensor lr = load_png(data_dir + "/" + m.pairs[pair_index].lr);
    const Tensor hr = load_png(data_dir + "/" + m.pairs[pair_index].hr);
    const Tensor lr_latent = models.ae.encode(lr).first;
    const Tensor hr_latent = models.ae.encode(hr).first;

    const NoiseSchedule sched = schedule_of(cfg);
    std::vector<int> t_list;
    for (int i = 0; i < num_t; ++i) {
        const int t = 1 + static_cast<int>((static_cast<int64_t>(i) * (sched.T - 1)) / (num_t - 1));
        t_list.push_back(t);
    }
    const auto points = cosine_probe(models.prior, models.enc, hr_latent, lr_latent, sched, t_list,
                                     cfg.sample.seed);

    std::ofstream f(out_csv, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out_csv);
    f << "t,snr,cosine\n";
    f.precision(12);
    const ProbePoint* min_point = nullptr;
    for (const auto& p : points) {
        f << p.t << "," << p.snr << "," << p.cosine << "\n";
        if (!min_point || p.cosine < min_point->cosine) min_point = &p;
    }
    if (min_point)
        std::printf("[probe] wrote %s; cosine minimum %.6f at t=%d (snr %.5g)\n", out_csv.c_str(),
                    min_point->cosine, min_point->t, min_point->snr);
}

}  // namespace tdsr
