#include "flowmotion/horn_schunck.hpp"

#include <algorithm>
#include <cmath>

#include "flowmotion/errors.hpp"

namespace flowmotion {

void HsConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ArgumentError("alpha must be positive and finite");
    }
    if (iterations < 1) {
        throw ArgumentError("iterations must be >= 1");
    }
    if (pyramid_levels < 1) {
        throw ArgumentError("pyramid_levels must be >= 1");
    }
}

namespace {

float sample_clamped(const GrayImage& img, float x, float y) {
    x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float tx = x - static_cast<float>(x0);
    const float ty = y - static_cast<float>(y0);
    const float top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * tx;
    const float bot = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * tx;
    return top + (bot - top) * ty;
}

GrayImage downsample2(const GrayImage& img) {
    const int w2 = img.width / 2;
    const int h2 = img.height / 2;
    GrayImage out(w2, h2);
    for (int y = 0; y < h2; ++y) {
        for (int x = 0; x < w2; ++x) {
            out.at(x, y) = 0.25f * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                                    img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
        }
    }
    return out;
}

GrayImage resize_gray(const GrayImage& img, int out_w, int out_h) {
    GrayImage out(out_w, out_h);
    const float sx = static_cast<float>(img.width) / static_cast<float>(out_w);
    const float sy = static_cast<float>(img.height) / static_cast<float>(out_h);
    for (int y = 0; y < out_h; ++y) {
        const float src_y = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
        for (int x = 0; x < out_w; ++x) {
            const float src_x = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            out.at(x, y) = sample_clamped(img, src_x, src_y);
        }
    }
    return out;
}

// In-bounds 4-neighbor mean.
void neighbor_means(const GrayImage& f, GrayImage& out) {
    const int w = f.width;
    const int h = f.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float sum = 0.0f;
            int count = 0;
            if (x > 0) { sum += f.at(x - 1, y); ++count; }
            if (x + 1 < w) { sum += f.at(x + 1, y); ++count; }
            if (y > 0) { sum += f.at(x, y - 1); ++count; }
            if (y + 1 < h) { sum += f.at(x, y + 1); ++count; }
            out.at(x, y) = sum / static_cast<float>(count);
        }
    }
}

}  // namespace

Gradients image_gradients(const GrayImage& img1, const GrayImage& img2) {
    if (img1.width != img2.width || img1.height != img2.height) {
        throw ArgumentError("gradient pair must share dimensions");
    }
    const int w = img1.width;
    const int h = img1.height;
    Gradients g{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h)};

    auto dx = [w](const GrayImage& img, int x, int y) {
        if (w == 1) return 0.0f;
        if (x == 0) return img.at(1, y) - img.at(0, y);
        if (x == w - 1) return img.at(w - 1, y) - img.at(w - 2, y);
        return 0.5f * (img.at(x + 1, y) - img.at(x - 1, y));
    };
    auto dy = [h](const GrayImage& img, int x, int y) {
        if (h == 1) return 0.0f;
        if (y == 0) return img.at(x, 1) - img.at(x, 0);
        if (y == h - 1) return img.at(x, h - 1) - img.at(x, h - 2);
        return 0.5f * (img.at(x, y + 1) - img.at(x, y - 1));
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            g.ix.at(x, y) = 0.5f * (dx(img1, x, y) + dx(img2, x, y));
            g.iy.at(x, y) = 0.5f * (dy(img1, x, y) + dy(img2, x, y));
            g.it.at(x, y) = img2.at(x, y) - img1.at(x, y);
        }
    }
    return g;
}

FlowField estimate_flow(const GrayImage& img1, const GrayImage& img2, const HsConfig& cfg) {
    cfg.validate();
    if (img1.width != img2.width || img1.height != img2.height) {
        throw ArgumentError("flow pair must share dimensions");
    }
    if (img1.width <= 0 || img1.height <= 0) {
        throw ArgumentError("flow pair must be non-empty");
    }

    // Work on the 0-255 scale so alpha keeps its conventional meaning.
    auto to_8bit_scale = [](const GrayImage& img) {
        GrayImage out(img.width, img.height);
        for (size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] * 255.0f;
        return out;
    };

    std::vector<GrayImage> pyr1{to_8bit_scale(img1)};
    std::vector<GrayImage> pyr2{to_8bit_scale(img2)};
    for (int level = 1; level < cfg.pyramid_levels; ++level) {
        if (std::min(pyr1.back().width, pyr1.back().height) < 8) break;
        pyr1.push_back(downsample2(pyr1.back()));
        pyr2.push_back(downsample2(pyr2.back()));
    }

    const double alpha2 = cfg.alpha * cfg.alpha;
    GrayImage u(pyr1.back().width, pyr1.back().height);
    GrayImage v(pyr1.back().width, pyr1.back().height);

    for (int level = static_cast<int>(pyr1.size()) - 1; level >= 0; --level) {
        const GrayImage& a = pyr1[level];
        const GrayImage& b = pyr2[level];

        if (u.width != a.width || u.height != a.height) {
            u = resize_gray(u, a.width, a.height);
            v = resize_gray(v, a.width, a.height);
            for (float& c : u.data) c *= 2.0f;
            for (float& c : v.data) c *= 2.0f;
        }

        // Warp the second image by the current estimate; the Jacobi sweeps
        // then solve for the residual flow of this level.
        GrayImage warped(a.width, a.height);
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                warped.at(x, y) = sample_clamped(b, static_cast<float>(x) + u.at(x, y),
                                                 static_cast<float>(y) + v.at(x, y));
            }
        }

        const Gradients g = image_gradients(a, warped);

        GrayImage du(a.width, a.height);
        GrayImage dv(a.width, a.height);
        GrayImage mu(a.width, a.height);
        GrayImage mv(a.width, a.height);
        GrayImage du_next(a.width, a.height);
        GrayImage dv_next(a.width, a.height);
        for (int iter = 0; iter < cfg.iterations; ++iter) {
            neighbor_means(du, mu);
            neighbor_means(dv, mv);
            for (size_t i = 0; i < du.data.size(); ++i) {
                const double ix = g.ix.data[i];
                const double iy = g.iy.data[i];
                const double shared = (ix * mu.data[i] + iy * mv.data[i] + g.it.data[i]) /
                                      (alpha2 + ix * ix + iy * iy);
                du_next.data[i] = static_cast<float>(mu.data[i] - ix * shared);
                dv_next.data[i] = static_cast<float>(mv.data[i] - iy * shared);
            }
            std::swap(du, du_next);
            std::swap(dv, dv_next);
        }

        for (size_t i = 0; i < u.data.size(); ++i) {
            u.data[i] += du.data[i];
            v.data[i] += dv.data[i];
        }
    }

    FlowField flow(img1.width, img1.height);
    for (size_t i = 0; i < u.data.size(); ++i) {
        if (!std::isfinite(u.data[i]) || !std::isfinite(v.data[i])) {
            throw NumericError("flow estimate diverged to a non-finite value");
        }
        flow.data[i * 2] = u.data[i];
        flow.data[i * 2 + 1] = v.data[i];
    }
    return flow;
}

}  // namespace flowmotion
