#include <cmath>

#include "uwmark/enhance.hpp"
#include "uwmark/error.hpp"
#include "uwmark/rng.hpp"
#include "uwmark/simulate.hpp"

namespace uwmark::sim {

void DegradationModel::validate() const {
    for (int c = 0; c < 3; ++c) {
        if (!(atmospheric_light[c] >= 0 && atmospheric_light[c] <= 1))
            throw Error(ErrorCode::InvalidArgument, "atmospheric light must lie in [0,1]");
        if (!(beta[c] >= 0)) throw Error(ErrorCode::InvalidArgument, "beta must be non-negative");
    }
    if (!(beta[0] >= beta[1] && beta[1] >= beta[2]))
        throw Error(ErrorCode::InvalidArgument, "beta must satisfy red >= green >= blue");
    if (!(blur_sigma >= 0) || !(noise_sigma >= 0) || !(impulse_prob >= 0 && impulse_prob <= 1))
        throw Error(ErrorCode::InvalidArgument, "blur, noise and impulse parameters must be non-negative");
}

DegradationModel preset(const std::string& name) {
    DegradationModel m;
    if (name == "clean") return m;
    if (name == "low") {
        m.beta = {0.10, 0.06, 0.04};
        m.blur_sigma = 0.8;
        m.noise_sigma = 0.01;
    } else if (name == "moderate") {
        m.beta = {0.35, 0.20, 0.12};
        m.blur_sigma = 1.2;
        m.noise_sigma = 0.015;
        m.impulse_prob = 0.0005;
    } else if (name == "high") {
        m.beta = {0.8, 0.45, 0.30};
        m.blur_sigma = 1.6;
        m.noise_sigma = 0.02;
        m.impulse_prob = 0.001;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown degradation preset '" + name + "'");
    }
    return m;
}

Image apply_underwater(const Image& img, const DegradationModel& model, double distance, std::uint64_t seed) {
    model.validate();
    if (img.channels() != 3) throw Error(ErrorCode::WrongChannelCount, "underwater model needs an RGB image");
    if (!(distance >= 0)) throw Error(ErrorCode::InvalidArgument, "distance must be non-negative");
    Image out = img;
    for (int c = 0; c < 3; ++c) {
        const double t = std::exp(-model.beta[c] * distance);
        const double a = model.atmospheric_light[c] * (1 - t);
        for (double& v : out.plane(c)) v = v * t + a;
    }
    if (model.blur_sigma > 0) out = enhance::gaussian_filter(out, enhance::GaussianParams{model.blur_sigma, 0});
    Rng rng(seed);
    if (model.noise_sigma > 0)
        for (double& v : out.samples()) v = clamp01(v + model.noise_sigma * rng.normal());
    if (model.impulse_prob > 0) {
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                if (rng.uniform() >= model.impulse_prob) continue;
                const double v = rng.uniform() < 0.5 ? 0.0 : 1.0;
                for (int c = 0; c < 3; ++c) out.at(c, x, y) = v;
            }
        }
    }
    return out;
}

}  // namespace uwmark::sim
