#include "tdsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "tdsr/degradation.hpp"
#include "tdsr/errors.hpp"
#include "tdsr/metrics.hpp"
#include "tdsr/png_io.hpp"
#include "tdsr/rng.hpp"

namespace tdsr {

namespace {

void normalize_range(Tensor& t, double lo, double hi) {
    double mn = t.v[0], mx = t.v[0];
    for (double v : t.v) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx - mn < 1e-12) {
        std::fill(t.v.begin(), t.v.end(), 0.5 * (lo + hi));
        return;
    }
    const double g = (hi - lo) / (mx - mn);
    for (double& v : t.v) v = lo + (v - mn) * g;
}

Tensor sinusoid_mixture(int size, Rng& rng) {
    Tensor img(size, size, 3);
    const int waves = 3 + static_cast<int>(rng.below(3));
    for (int j = 0; j < waves; ++j) {
        const double fx = rng.uniform(0.5, 6.0);
        const double fy = rng.uniform(0.5, 6.0);
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        double amp[3];
        for (double& a : amp) a = rng.uniform(0.2, 1.0);
        for (int c = 0; c < 3; ++c) {
            double* p = img.plane(c);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    p[static_cast<size_t>(y) * size + x] +=
                        amp[c] * std::sin(2.0 * M_PI * (fx * x + fy * y) / size + phase);
        }
    }
    normalize_range(img, 0.05, 0.95);
    return img;
}

Tensor filtered_noise(int size, Rng& rng) {
    Tensor img = rng.normal_tensor(size, size, 3);
    img = gaussian_blur(img, rng.uniform(1.0, 2.5));
    normalize_range(img, 0.05, 0.95);
    return img;
}

Tensor random_polygons(int size, Rng& rng) {
    Tensor img(size, size, 3);
    for (int c = 0; c < 3; ++c) {
        const double bg = rng.uniform(0.1, 0.9);
        double* p = img.plane(c);
        std::fill(p, p + static_cast<size_t>(size) * size, bg);
    }
    const int shapes = 3 + static_cast<int>(rng.below(4));
    for (int s = 0; s < shapes; ++s) {
        double vx[3], vy[3], color[3];
        for (int k = 0; k < 3; ++k) {
            vx[k] = rng.uniform(0.0, size);
            vy[k] = rng.uniform(0.0, size);
            color[k] = rng.uniform(0.05, 0.95);
        }
        auto edge = [](double ax, double ay, double bx, double by, double px, double py) {
            return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        };
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                const double e0 = edge(vx[0], vy[0], vx[1], vy[1], px, py);
                const double e1 = edge(vx[1], vy[1], vx[2], vy[2], px, py);
                const double e2 = edge(vx[2], vy[2], vx[0], vy[0], px, py);
                const bool inside = (e0 >= 0 && e1 >= 0 && e2 >= 0) ||
                                    (e0 <= 0 && e1 <= 0 && e2 <= 0);
                if (inside)
                    for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
            }
    }
    return img;
}

}  // namespace

Tensor gen_texture(int size, uint64_t seed) {
    Rng rng(mix_seed(seed, 0xda7a));
    switch (seed % 3) {
        case 0: return sinusoid_mixture(size, rng);
        case 1: return filtered_noise(size, rng);
        default: return random_polygons(size, rng);
    }
}

Manifest generate_dataset(const DataConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.dir);

    Manifest m;
    m.seed = cfg.seed;
    m.count = cfg.count;
    m.size = cfg.size;
    m.degradation = cfg.degradation;

    char name[32];
    for (int i = 0; i < cfg.count; ++i) {
        const uint64_t pair_seed = mix_seed(cfg.seed, static_cast<uint64_t>(i));
        Tensor hr = gen_texture(cfg.size, pair_seed);
        // PNG round-trip so the in-memory pair matches the files exactly
        hr = quantize(hr, 256);
        Tensor lr = degrade(hr, cfg.degradation, mix_seed(pair_seed, 1));
        lr = quantize(lr, 256);

        PairEntry e;
        std::snprintf(name, sizeof(name), "hr_%04d.png", i);
        e.hr = name;
        std::snprintf(name, sizeof(name), "lr_%04d.png", i);
        e.lr = name;
        e.seed = pair_seed;
        e.psnr_lr = psnr(lr, hr);
        save_png(cfg.dir + "/" + e.hr, hr);
        save_png(cfg.dir + "/" + e.lr, lr);
        m.pairs.push_back(std::move(e));
    }
    write_manifest(cfg.dir + "/manifest.json", m);
    return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    j["count"] = m.count;
    j["size"] = m.size;
    j["degradation"] = {{"blur_sigma_min", m.degradation.blur_sigma_min},
                        {"blur_sigma_max", m.degradation.blur_sigma_max},
                        {"down_factor", m.degradation.down_factor},
                        {"noise_sigma_min", m.degradation.noise_sigma_min},
                        {"noise_sigma_max", m.degradation.noise_sigma_max},
                        {"quant_levels", m.degradation.quant_levels}};
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : m.pairs)
        pairs.push_back({{"hr", p.hr}, {"lr", p.lr}, {"seed", p.seed}, {"psnr_lr", p.psnr_lr}});
    j["pairs"] = pairs;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw IoError("cannot write manifest: " + tmp);
        f << j.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

Manifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw PrereqError("missing manifest: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest: " + path + " (" + e.what() + ")");
    }
    Manifest m;
    m.seed = j.at("seed").get<uint64_t>();
    m.count = j.at("count").get<int>();
    m.size = j.at("size").get<int>();
    const auto& d = j.at("degradation");
    m.degradation.blur_sigma_min = d.at("blur_sigma_min").get<double>();
    m.degradation.blur_sigma_max = d.at("blur_sigma_max").get<double>();
    m.degradation.down_factor = d.at("down_factor").get<int>();
    m.degradation.noise_sigma_min = d.at("noise_sigma_min").get<double>();
    m.degradation.noise_sigma_max = d.at("noise_sigma_max").get<double>();
    m.degradation.quant_levels = d.at("quant_levels").get<int>();
    for (const auto& p : j.at("pairs")) {
        PairEntry e;
        e.hr = p.at("hr").get<std::string>();
        e.lr = p.at("lr").get<std::string>();
        e.seed = p.at("seed").get<uint64_t>();
        e.psnr_lr = p.at("psnr_lr").get<double>();
        m.pairs.push_back(std::move(e));
    }
    if (static_cast<int>(m.pairs.size()) != m.count)
        throw IoError("manifest pair count mismatch: " + path);
    return m;
}

std::vector<std::pair<Tensor, Tensor>> load_pairs(const std::string& dir, const Manifest& m) {
    std::vector<std::pair<Tensor, Tensor>> out;
    out.reserve(m.pairs.size());
    for (const auto& p : m.pairs)
        out.emplace_back(load_png(dir + "/" + p.lr), load_png(dir + "/" + p.hr));
    return out;
}

}  // namespace tdsr
