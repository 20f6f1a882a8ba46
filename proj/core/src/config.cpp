#include "tdsr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tdsr/errors.hpp"

namespace tdsr {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown config key '" + where + it.key() + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
        }
    }
}

void parse_stage(const json& j, const std::string& where, StageConfig& s) {
    reject_unknown(j, {"steps", "batch", "lr", "seed"}, where);
    get_if(j, "steps", s.steps);
    get_if(j, "batch", s.batch);
    get_if(j, "lr", s.lr);
    get_if(j, "seed", s.seed);
}

}  // namespace

void RunConfig::validate() const {
    if (schedule.T < 1) throw ConfigError("schedule.T must be >= 1");
    if (!(schedule.beta_start > 0.0) || !(schedule.beta_start <= schedule.beta_end) ||
        !(schedule.beta_end < 1.0))
        throw ConfigError("schedule betas must satisfy 0 < beta_start <= beta_end < 1");
    if (sample.steps < 1 || sample.steps > schedule.T)
        throw ConfigError("sample.steps must be in [1, schedule.T]");
    if (sample.w < 0.0 || sample.w > 1.0) throw ConfigError("sample.w must be in [0, 1]");
    if (sample.guidance_scale < 0.0) throw ConfigError("sample.guidance_scale must be >= 0");
    if (sample.color != "pixel" && sample.color != "wavelet" && sample.color != "none")
        throw ConfigError("sample.color must be one of pixel|wavelet|none");
    if (sample.wavelet_levels < 1) throw ConfigError("sample.wavelet_levels must be >= 1");
    if (sample.tile_size < 2) throw ConfigError("sample.tile_size must be >= 2");
    if (sample.tile_overlap <= 0 || sample.tile_overlap >= sample.tile_size)
        throw ConfigError("sample.tile_overlap must be in (0, tile_size)");
    if (!(sample.tile_sigma > 0.0)) throw ConfigError("sample.tile_sigma must be > 0");
    if (sample.scale < 1) throw ConfigError("sample.scale must be >= 1");
    if (data.count < 1) throw ConfigError("data.count must be >= 1");
    if (data.size < 8 || data.size % 4 != 0)
        throw ConfigError("data.size must be >= 8 and divisible by 4");
    try {
        data.degradation.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    for (const StageConfig* s :
         {&train_autoencoder, &train_prior, &train_encoder, &train_cfw.train}) {
        if (s->steps < 0) throw ConfigError("training steps must be >= 0");
        if (s->batch < 1) throw ConfigError("training batch must be >= 1");
        if (!(s->lr > 0.0)) throw ConfigError("training lr must be > 0");
    }
    if (train_cfw.sample_steps < 1 || train_cfw.sample_steps > schedule.T)
        throw ConfigError("train_cfw.sample_steps must be in [1, schedule.T]");
    if (train_cfw.w < 0.0 || train_cfw.w > 1.0) throw ConfigError("train_cfw.w must be in [0, 1]");
}

RunConfig parse_config_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    reject_unknown(j,
                   {"schedule", "sample", "arch", "data", "train_autoencoder", "train_prior",
                    "train_encoder", "train_cfw", "checkpoint_dir"},
                   "");

    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        reject_unknown(s, {"T", "beta_start", "beta_end"}, "schedule.");
        get_if(s, "T", c.schedule.T);
        get_if(s, "beta_start", c.schedule.beta_start);
        get_if(s, "beta_end", c.schedule.beta_end);
    }
    if (j.contains("sample")) {
        const json& s = j["sample"];
        reject_unknown(s,
                       {"steps", "seed", "guidance_scale", "w", "color", "wavelet_levels",
                        "preclean", "tile_size", "tile_overlap", "tile_sigma", "scale"},
                       "sample.");
        get_if(s, "steps", c.sample.steps);
        get_if(s, "seed", c.sample.seed);
        get_if(s, "guidance_scale", c.sample.guidance_scale);
        get_if(s, "w", c.sample.w);
        get_if(s, "color", c.sample.color);
        get_if(s, "wavelet_levels", c.sample.wavelet_levels);
        get_if(s, "preclean", c.sample.preclean);
        get_if(s, "tile_size", c.sample.tile_size);
        get_if(s, "tile_overlap", c.sample.tile_overlap);
        get_if(s, "tile_sigma", c.sample.tile_sigma);
        get_if(s, "scale", c.sample.scale);
    }
    if (j.contains("arch")) {
        const json& a = j["arch"];
        reject_unknown(a,
                       {"latent_channels", "prior_width1", "prior_width2", "enc_width1",
                        "enc_width2", "ae_width1", "ae_width2", "time_dim"},
                       "arch.");
        get_if(a, "latent_channels", c.arch.latent_channels);
        get_if(a, "prior_width1", c.arch.prior_width1);
        get_if(a, "prior_width2", c.arch.prior_width2);
        get_if(a, "enc_width1", c.arch.enc_width1);
        get_if(a, "enc_width2", c.arch.enc_width2);
        get_if(a, "ae_width1", c.arch.ae_width1);
        get_if(a, "ae_width2", c.arch.ae_width2);
        get_if(a, "time_dim", c.arch.time_dim);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        reject_unknown(d, {"dir", "count", "size", "seed", "degradation"}, "data.");
        get_if(d, "dir", c.data.dir);
        get_if(d, "count", c.data.count);
        get_if(d, "size", c.data.size);
        get_if(d, "seed", c.data.seed);
        if (d.contains("degradation")) {
            const json& g = d["degradation"];
            reject_unknown(g,
                           {"blur_sigma_min", "blur_sigma_max", "down_factor", "noise_sigma_min",
                            "noise_sigma_max", "quant_levels"},
                           "data.degradation.");
            get_if(g, "blur_sigma_min", c.data.degradation.blur_sigma_min);
            get_if(g, "blur_sigma_max", c.data.degradation.blur_sigma_max);
            get_if(g, "down_factor", c.data.degradation.down_factor);
            get_if(g, "noise_sigma_min", c.data.degradation.noise_sigma_min);
            get_if(g, "noise_sigma_max", c.data.degradation.noise_sigma_max);
            get_if(g, "quant_levels", c.data.degradation.quant_levels);
        }
    }
    if (j.contains("train_autoencoder"))
        parse_stage(j["train_autoencoder"], "train_autoencoder.", c.train_autoencoder);
    if (j.contains("train_prior")) parse_stage(j["train_prior"], "train_prior.", c.train_prior);
    if (j.contains("train_encoder"))
        parse_stage(j["train_encoder"], "train_encoder.", c.train_encoder);
    if (j.contains("train_cfw")) {
        const json& t = j["train_cfw"];
        reject_unknown(t, {"steps", "batch", "lr", "seed", "sample_steps", "sample_seed", "w"},
                       "train_cfw.");
        get_if(t, "steps", c.train_cfw.train.steps);
        get_if(t, "batch", c.train_cfw.train.batch);
        get_if(t, "lr", c.train_cfw.train.lr);
        get_if(t, "seed", c.train_cfw.train.seed);
        get_if(t, "sample_steps", c.train_cfw.sample_steps);
        get_if(t, "sample_seed", c.train_cfw.sample_seed);
        get_if(t, "w", c.train_cfw.w);
    }
    get_if(j, "checkpoint_dir", c.checkpoint_dir);

    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_json(ss.str());
}

}  // namespace tdsr
